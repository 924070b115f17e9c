#include "coachsim/llm.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <thread>

namespace coachsim::llm {

std::string_view to_string(ChatRole role) noexcept
{
    switch (role) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

void ChatRequest::validate() const
{
    if (messages.empty()) {
        throw ValidationError("chat request has no messages");
    }
    if (!(temperature >= 0.0)) {
        throw ValidationError("chat request temperature must be >= 0");
    }
    if (max_tokens <= 0) {
        throw ValidationError("chat request max_tokens must be positive");
    }
}

std::chrono::milliseconds backoff_delay(RetryPolicy const & policy, int attempt)
{
    int const shift = std::clamp(attempt - 1, 0, 20);
    return policy.base_backoff * (1LL << shift);
}

ChatResponse complete(ChatProvider & provider, ChatRequest const & request,
    RetryPolicy const & policy, Sleeper const & sleep)
{
    request.validate();
    if (policy.max_attempts < 1) {
        throw ValidationError("retry policy max_attempts must be >= 1");
    }
    std::string last_error;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        try {
            ChatResponse response = provider.send(request, policy.per_request_timeout);
            response.attempts = attempt;
            return response;
        } catch (TransportError const & e) {
            last_error = e.what();
        }
        if (attempt < policy.max_attempts) {
            auto const delay = backoff_delay(policy, attempt);
            if (sleep) {
                sleep(delay);
            } else if (delay.count() > 0) {
                std::this_thread::sleep_for(delay);
            }
        }
    }
    throw TransportError("provider failed after " + std::to_string(policy.max_attempts)
        + " attempt(s): " + last_error);
}

BoundedProvider::BoundedProvider(ChatProvider & inner, std::ptrdiff_t limit)
: inner_(inner)
, slots_(std::clamp<std::ptrdiff_t>(limit, 1, max_limit))
{ }

ChatResponse BoundedProvider::send(ChatRequest const & request, std::chrono::milliseconds timeout)
{
    slots_.acquire();
    struct Release
    {
        std::counting_semaphore<max_limit> & s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_.send(request, timeout);
}

// ---------------------------------------------------------------------------

ScriptedMockProvider::ScriptedMockProvider(std::vector<ScriptEntry> script)
{
    if (script.empty()) {
        throw ValidationError("mock script is empty");
    }
    slots_.reserve(script.size());
    for (auto & entry : script) {
        Slot slot{std::move(entry), std::nullopt, false};
        if (slot.entry.kind == MatchKind::Regex) {
            try {
                slot.regex.emplace(slot.entry.pattern);
            } catch (std::regex_error const &) {
                throw ValidationError("invalid regex in mock script: " + slot.entry.pattern);
            }
        }
        slots_.push_back(std::move(slot));
    }
}

ChatResponse ScriptedMockProvider::send(ChatRequest const & request, std::chrono::milliseconds)
{
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    std::string const & last = request.messages.empty() ? std::string{} : request.messages.back().content;
    for (auto & slot : slots_) {
        if (slot.consumed) {
            continue;
        }
        bool const hit = slot.regex ? std::regex_search(last, *slot.regex)
                                    : last.find(slot.entry.pattern) != std::string::npos;
        if (!hit) {
            continue;
        }
        if (!slot.entry.repeat) {
            slot.consumed = true;
        }
        if (auto const * failure = std::get_if<ScriptedFailure>(&slot.entry.outcome)) {
            if (failure->kind == FailureKind::Transient) {
                throw TransportError(failure->message);
            }
            throw RequestError(failure->message);
        }
        return ChatResponse{std::get<std::string>(slot.entry.outcome), request.model_id, std::nullopt, 1};
    }
    std::string excerpt = last.size() > 200 ? last.substr(last.size() - 200) : last;
    throw RequestError("unscripted request (model '" + request.model_id + "', "
            + std::to_string(request.messages.size()) + " message(s)); last message: ..." + excerpt,
        last);
}

std::size_t ScriptedMockProvider::call_count() const
{
    std::lock_guard lock(mutex_);
    return log_.size();
}

std::vector<ChatRequest> ScriptedMockProvider::requests() const
{
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t ScriptedMockProvider::remaining_once_entries() const
{
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(slots_.begin(), slots_.end(),
        [](Slot const & s) { return !s.entry.repeat && !s.consumed; }));
}

std::unique_ptr<ScriptedMockProvider> scripted_mock(std::vector<ScriptEntry> script)
{
    return std::make_unique<ScriptedMockProvider>(std::move(script));
}

std::vector<ScriptEntry> parse_script(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (nlohmann::json::parse_error const & e) {
        throw ConfigError(std::string("mock script is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw ConfigError("mock script must be a JSON array");
    }
    std::vector<ScriptEntry> script;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        auto const & item = doc[i];
        auto const where = "mock script entry " + std::to_string(i);
        if (!item.is_object() || !item.contains("match") || !item["match"].is_string()) {
            throw ConfigError(where + ": missing string field 'match'");
        }
        ScriptEntry entry;
        entry.pattern = item["match"].get<std::string>();
        entry.kind = item.value("regex", false) ? MatchKind::Regex : MatchKind::Substring;
        entry.repeat = item.value("repeat", false);
        if (item.contains("reply") && item["reply"].is_string()) {
            entry.outcome = item["reply"].get<std::string>();
        } else if (item.contains("fail") && item["fail"].is_string()) {
            auto const kind = item["fail"].get<std::string>();
            if (kind != "transient" && kind != "request") {
                throw ConfigError(where + ": 'fail' must be \"transient\" or \"request\"");
            }
            entry.outcome = ScriptedFailure{kind == "transient" ? FailureKind::Transient : FailureKind::Request,
                item.value("message", std::string("scripted failure"))};
        } else {
            throw ConfigError(where + ": needs 'reply' or 'fail'");
        }
        script.push_back(std::move(entry));
    }
    return script;
}

std::vector<ScriptEntry> load_script(std::filesystem::path const & path)
{
    return parse_script(text::read_file(path));
}

} // namespace coachsim::llm
