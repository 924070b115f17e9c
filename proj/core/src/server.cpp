#include "coachsim/server.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <random>

namespace coachsim::service {

using nlohmann::json;
using nlohmann::ordered_json;

int http_status(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Validation: return 400;
    case ErrorCode::Upstream: return 502;
    case ErrorCode::Internal: return 500;
    }
    return 500;
}

std::string error_body(ErrorCode code, std::string const & message, std::string const & detail)
{
    ordered_json e;
    e["code"] = to_string(code);
    e["message"] = message;
    if (!detail.empty()) {
        e["detail"] = detail;
    }
    return ordered_json{{"error", e}}.dump();
}

ProviderStack::ProviderStack(ProviderSettings const & settings)
{
    if (settings.mock_script) {
        base_ = llm::scripted_mock(llm::load_script(*settings.mock_script));
        mock_ = true;
    } else {
        base_ = std::make_unique<llm::HttpProvider>(llm::HttpProviderConfig{settings.endpoint, settings.credential_env});
    }
    bounded_ = std::make_unique<llm::BoundedProvider>(*base_, settings.max_in_flight);
}

llm::ChatResponse CancellableProvider::send(llm::ChatRequest const & request, std::chrono::milliseconds timeout)
{
    if (cancelled_) {
        throw RequestError("request cancelled: service is shutting down");
    }
    auto response = inner_.send(request, timeout);
    if (cancelled_) {
        throw RequestError("request cancelled: service is shutting down");
    }
    return response;
}

namespace {

void reply_json(httplib::Response & res, int status, std::string body)
{
    res.status = status;
    res.set_content(std::move(body), "application/json");
}

void reply_error(httplib::Response & res, ErrorCode code, std::string const & message, std::string const & detail = {})
{
    reply_json(res, http_status(code), error_body(code, message, detail));
}

ordered_json turn_json(dialogue::Turn const & t)
{
    ordered_json j;
    j["role"] = dialogue::wire_role(t.role);
    j["content"] = t.content;
    j["index"] = t.index;
    j["created_at"] = format_iso8601(t.created_at);
    return j;
}

/// Runs `body`, mapping every failure onto the error taxonomy.
template <typename F>
void guarded(httplib::Response & res, F && body)
{
    try {
        body();
    } catch (Error const & e) {
        reply_error(res, e.code(), e.what(), e.detail());
    } catch (json::exception const & e) {
        reply_error(res, ErrorCode::Validation, std::string("malformed JSON: ") + e.what());
    } catch (std::exception const & e) {
        reply_error(res, ErrorCode::Internal, e.what());
    } catch (...) {
        reply_error(res, ErrorCode::Internal, "unknown failure");
    }
}

std::uint64_t entropy_seed()
{
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

} // namespace

Server::Server(AppConfig config, llm::ChatProvider & provider, ServerOptions options)
: config_(std::move(config))
, provider_(provider)
, store_((config_.validate(), config_.data_dir))
, rng_(options.seed.value_or(entropy_seed()))
{
    if (config_.bearer_token_env) {
        char const * token = std::getenv(config_.bearer_token_env->c_str());
        if (token == nullptr || *token == '\0') {
            throw ConfigError("auth.bearer_token_env names " + *config_.bearer_token_env + ", which is unset");
        }
        bearer_token_ = token;
    }
    engine_ = std::make_unique<dialogue::DialogueEngine>(
        load_persona_sources(config_), provider_, store_, engine_options(config_), std::move(options.clock));
    engine_->load_from_store();
    http_ = std::make_unique<httplib::Server>();
    install_routes();
}

Server::~Server()
{
    stop();
}

bool Server::try_begin_turn(std::string const & id)
{
    std::lock_guard lock(busy_mutex_);
    return busy_.insert(id).second;
}

void Server::end_turn(std::string const & id)
{
    std::lock_guard lock(busy_mutex_);
    busy_.erase(id);
}

void Server::install_routes()
{
    auto & svr = *http_;

    svr.set_pre_routing_handler([this](httplib::Request const & req, httplib::Response & res) {
        if (!bearer_token_ || req.path == "/health") {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        if (req.get_header_value("Authorization") != "Bearer " + *bearer_token_) {
            reply_json(res, 401, error_body(ErrorCode::Validation, "missing or invalid bearer token"));
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    svr.set_error_handler([](httplib::Request const & req, httplib::Response & res) {
        if (!res.body.empty()) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        auto const code = res.status == 404 ? ErrorCode::NotFound
            : res.status >= 500             ? ErrorCode::Internal
                                            : ErrorCode::Validation;
        auto const status = res.status;
        reply_error(res, code, "no route for " + req.method + " " + req.path);
        res.status = status;
        return httplib::Server::HandlerResponse::Handled;
    });

    svr.Get("/health", [this](httplib::Request const &, httplib::Response & res) {
        guarded(res, [&] {
            ordered_json j;
            j["status"] = "ok";
            j["sessions"] = engine_->list().size();
            reply_json(res, 200, j.dump());
        });
    });

    svr.Post("/sessions", [this](httplib::Request const &, httplib::Response & res) {
        guarded(res, [&] {
            std::shared_ptr<dialogue::DialogueSession const> session;
            {
                std::lock_guard lock(rng_mutex_);
                session = engine_->create_session(rng_);
            }
            ordered_json j;
            j["id"] = session->id;
            j["persona_name"] = session->persona->first_name + " " + session->persona->last_name;
            j["greeting"] = dialogue::greeting(*session->persona);
            j["initial_question"] = session->initial_question;
            j["session"] = dialogue::to_document(*session);
            reply_json(res, 201, j.dump());
        });
    });

    svr.Get("/sessions", [this](httplib::Request const &, httplib::Response & res) {
        guarded(res, [&] {
            auto list = ordered_json::array();
            for (auto const & s : engine_->list()) {
                ordered_json e;
                e["id"] = s.id;
                e["status"] = dialogue::to_string(s.status);
                e["persona_name"] = s.persona_name;
                e["turn_count"] = s.turn_count;
                e["updated_at"] = format_iso8601(s.updated_at);
                list.push_back(std::move(e));
            }
            reply_json(res, 200, ordered_json{{"sessions", list}}.dump());
        });
    });

    svr.Get(R"(/sessions/([^/]+))", [this](httplib::Request const & req, httplib::Response & res) {
        guarded(res, [&] { reply_json(res, 200, dialogue::to_document(*engine_->get(req.matches[1])).dump()); });
    });

    svr.Post(R"(/sessions/([^/]+)/turns)", [this](httplib::Request const & req, httplib::Response & res) {
        guarded(res, [&] {
            std::string const id = req.matches[1];
            auto const body = json::parse(req.body.empty() ? std::string("{}") : req.body);
            if (!body.is_object() || !body.contains("content") || !body["content"].is_string()) {
                throw ValidationError("request body must be {\"content\": string}");
            }
            (void)engine_->get(id); // 404 before busy
            if (!try_begin_turn(id)) {
                throw Error(ErrorCode::Conflict, "session " + id + " is busy: a turn is already in flight", "busy");
            }
            struct Release
            {
                Server * self;
                std::string id;
                ~Release() { self->end_turn(id); }
            } release{this, id};
            auto const [expert, novice] = engine_->post_expert_turn(id, body["content"].get<std::string>());
            ordered_json j;
            j["expert_turn"] = turn_json(expert);
            j["novice_turn"] = turn_json(novice);
            reply_json(res, 200, j.dump());
        });
    });

    svr.Post(R"(/sessions/([^/]+)/complete)", [this](httplib::Request const & req, httplib::Response & res) {
        guarded(res, [&] {
            reply_json(res, 200, dialogue::to_document(*engine_->complete_session(req.matches[1])).dump());
        });
    });

    svr.Delete(R"(/sessions/([^/]+))", [this](httplib::Request const & req, httplib::Response & res) {
        guarded(res, [&] {
            reply_json(res, 200, dialogue::to_document(*engine_->discard_session(req.matches[1])).dump());
        });
    });

    svr.Get("/export/corpus", [this](httplib::Request const &, httplib::Response & res) {
        guarded(res, [&] { reply_json(res, 200, engine_->export_corpus()); });
    });
}

int Server::bind()
{
    if (port_ >= 0) {
        return port_;
    }
    if (config_.port == 0) {
        port_ = http_->bind_to_any_port(config_.host);
    } else if (http_->bind_to_port(config_.host, config_.port)) {
        port_ = config_.port;
    }
    if (port_ < 0) {
        throw ConfigError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    return port_;
}

void Server::listen()
{
    if (port_ < 0) {
        throw StateError("listen() before bind()");
    }
    http_->listen_after_bind();
}

int Server::start()
{
    int const port = bind();
    thread_ = std::thread([this] { listen(); });
    http_->wait_until_ready();
    return port;
}

void Server::stop()
{
    if (stopped_.exchange(true)) {
        return;
    }
    provider_.cancel();
    if (http_) {
        http_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

} // namespace coachsim::service
