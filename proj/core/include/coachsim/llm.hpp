#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace coachsim::llm {

enum class ChatRole { System, User, Assistant };

[[nodiscard]] std::string_view to_string(ChatRole role) noexcept;

struct ChatMessage
{
    ChatRole role;
    std::string content;

    friend bool operator == (ChatMessage const &, ChatMessage const &) = default;
};

struct ChatRequest
{
    std::string model_id;
    std::optional<std::string> system_prompt;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 512;

    /// Throws ValidationError if messages is empty, temperature < 0 or max_tokens <= 0.
    void validate() const;
};

struct TokenUsage
{
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse
{
    std::string content;
    std::string model_id;
    std::optional<TokenUsage> usage; // only when the API reports it
    int attempts = 1;
};

struct RetryPolicy
{
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{500};
    std::chrono::milliseconds per_request_timeout{60'000};
};

/// Delay before retry number `attempt` (1-based count of failures so far):
/// base_backoff * 2^(attempt-1). Non-decreasing in `attempt`.
[[nodiscard]] std::chrono::milliseconds backoff_delay(RetryPolicy const & policy, int attempt);

/**
 * A chat-completion backend.
 *
 * `send` performs exactly one attempt. It throws TransportError for transient
 * failures (connection, timeout, 5xx, 429) and RequestError for everything the
 * caller must not retry. Implementations must be safe to call concurrently.
 */
class ChatProvider
{
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse send(ChatRequest const & request, std::chrono::milliseconds timeout) = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Sends `request`, retrying transient failures with exponential backoff.
/// Throws TransportError once max_attempts attempts have failed.
ChatResponse complete(ChatProvider & provider, ChatRequest const & request,
    RetryPolicy const & policy, Sleeper const & sleep = {});

/// Caps the number of concurrent `send` calls into the wrapped provider.
class BoundedProvider : public ChatProvider
{
public:
    static constexpr std::ptrdiff_t max_limit = 256;

    BoundedProvider(ChatProvider & inner, std::ptrdiff_t limit);

    ChatResponse send(ChatRequest const & request, std::chrono::milliseconds timeout) override;

private:
    ChatProvider & inner_;
    std::counting_semaphore<max_limit> slots_;
};

// ---------------------------------------------------------------------------
// Scripted mock

enum class MatchKind { Substring, Regex };
enum class FailureKind { Transient, Request };

struct ScriptedFailure
{
    FailureKind kind = FailureKind::Transient;
    std::string message = "scripted failure";
};

struct ScriptEntry
{
    std::string pattern;
    MatchKind kind = MatchKind::Substring;
    std::variant<std::string, ScriptedFailure> outcome;
    bool repeat = false;
};

/**
 * Deterministic stand-in for an LLM API.
 *
 * Each request is matched against the script in order, on the content of its
 * last message. A consume-once entry is used up by its first match; a repeat
 * entry answers every match. A request that matches nothing raises
 * RequestError("unscripted request ...") that quotes the request.
 */
class ScriptedMockProvider : public ChatProvider
{
public:
    explicit ScriptedMockProvider(std::vector<ScriptEntry> script);

    ChatResponse send(ChatRequest const & request, std::chrono::milliseconds timeout) override;

    [[nodiscard]] std::size_t call_count() const;
    [[nodiscard]] std::vector<ChatRequest> requests() const;
    [[nodiscard]] std::size_t remaining_once_entries() const;

private:
    struct Slot
    {
        ScriptEntry entry;
        std::optional<std::regex> regex;
        bool consumed = false;
    };

    mutable std::mutex mutex_;
    std::vector<Slot> slots_;
    std::vector<ChatRequest> log_;
};

[[nodiscard]] std::unique_ptr<ScriptedMockProvider> scripted_mock(std::vector<ScriptEntry> script);

/**
 * Loads a mock script from JSON: an array of
 * {"match": str, "regex": bool?, "reply": str} or
 * {"match": str, "fail": "transient"|"request", "message": str?},
 * each with an optional "repeat": bool.
 */
[[nodiscard]] std::vector<ScriptEntry> load_script(std::filesystem::path const & path);
[[nodiscard]] std::vector<ScriptEntry> parse_script(std::string_view json_text);

// ---------------------------------------------------------------------------
// HTTP

struct HttpProviderConfig
{
    /// Full chat-completions URL, e.g. "https://api.openai.com/v1/chat/completions".
    std::string endpoint;
    /// Name of the environment variable holding the API key.
    std::string credential_env = "OPENAI_API_KEY";
};

/**
 * OpenAI-compatible chat-completions adapter.
 *
 * Request body: {"model", "messages": [{"role","content"}...], "temperature",
 * "max_tokens"}; a system prompt becomes the first message with role "system".
 * Reply: choices[0].message.content, usage.{prompt_tokens,completion_tokens}.
 */
class HttpProvider : public ChatProvider
{
public:
    explicit HttpProvider(HttpProviderConfig config);

    ChatResponse send(ChatRequest const & request, std::chrono::milliseconds timeout) override;

    /// Exposed for testing the wire mapping without a network.
    [[nodiscard]] static std::string build_body(ChatRequest const & request);
    [[nodiscard]] static ChatResponse parse_body(std::string_view body, std::string const & fallback_model);

private:
    HttpProviderConfig config_;
    std::string origin_;
    std::string path_;
    std::string api_key_;
};

} // namespace coachsim::llm
