#pragma once

#include "coachsim/config.hpp"
#include "coachsim/engine.hpp"
#include "coachsim/llm.hpp"
#include "coachsim/random.hpp"
#include "coachsim/time.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace coachsim::service {

/// HTTP status for each error code: 404, 409, 400, 502, 500.
[[nodiscard]] int http_status(ErrorCode code) noexcept;

/// {"error": {"code", "message", "detail"?}}
[[nodiscard]] std::string error_body(ErrorCode code, std::string const & message, std::string const & detail = {});

/// Provider chain described by the config: a scripted mock when mock_script
/// is set, otherwise the HTTP adapter; either way capped at max_in_flight.
class ProviderStack
{
public:
    explicit ProviderStack(ProviderSettings const & settings);

    [[nodiscard]] llm::ChatProvider & get() noexcept { return *bounded_; }
    [[nodiscard]] bool is_mock() const noexcept { return mock_; }

private:
    std::unique_ptr<llm::ChatProvider> base_;
    std::unique_ptr<llm::BoundedProvider> bounded_;
    bool mock_ = false;
};

/// Fails every call once cancelled, including calls already in flight when
/// their reply arrives, so no state change follows a cancelled request.
class CancellableProvider : public llm::ChatProvider
{
public:
    explicit CancellableProvider(llm::ChatProvider & inner) : inner_(inner) { }

    llm::ChatResponse send(llm::ChatRequest const & request, std::chrono::milliseconds timeout) override;
    void cancel() noexcept { cancelled_ = true; }
    [[nodiscard]] bool cancelled() const noexcept { return cancelled_; }

private:
    llm::ChatProvider & inner_;
    std::atomic<bool> cancelled_{false};
};

struct ServerOptions
{
    /// Persona sampling seed; drawn from std::random_device when absent.
    std::optional<std::uint64_t> seed;
    Clock clock = utc_now;
};

/**
 * Session endpoints over HTTP+JSON:
 *
 *   POST   /sessions                 create; returns id, persona_name, greeting, initial_question, session
 *   GET    /sessions                 {"sessions": [summary...]}
 *   GET    /sessions/{id}            session document
 *   POST   /sessions/{id}/turns      {"content"} -> {"expert_turn", "novice_turn"}; 409 while a turn is in flight
 *   POST   /sessions/{id}/complete   session document
 *   DELETE /sessions/{id}            discard; session document
 *   GET    /export/corpus            {"sessions": [...completed]}
 *   GET    /health                   {"status": "ok", "sessions": n}
 */
class Server
{
public:
    Server(AppConfig config, llm::ChatProvider & provider, ServerOptions options = {});
    ~Server();

    Server(Server const &) = delete;
    Server & operator = (Server const &) = delete;

    /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
    int bind();
    /// Serves until stop(). Requires bind().
    void listen();
    /// bind() + listen() on a background thread.
    int start();
    /// Cancels in-flight provider calls, stops accepting, and waits for handlers to finish.
    void stop();

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] dialogue::DialogueEngine & engine() noexcept { return *engine_; }

private:
    void install_routes();
    [[nodiscard]] bool try_begin_turn(std::string const & id);
    void end_turn(std::string const & id);

    AppConfig config_;
    CancellableProvider provider_;
    dialogue::SessionStore store_;
    std::unique_ptr<dialogue::DialogueEngine> engine_;
    std::unique_ptr<httplib::Server> http_;
    std::optional<std::string> bearer_token_;

    std::mutex rng_mutex_;
    Rng rng_;

    std::mutex busy_mutex_;
    std::set<std::string> busy_;

    std::thread thread_;
    int port_ = -1;
    std::atomic<bool> stopped_{false};
};

} // namespace coachsim::service
