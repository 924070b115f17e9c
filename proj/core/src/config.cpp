#include "coachsim/config.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>

#ifndef COACHSIM_DEFAULT_DATA_DIR
#define COACHSIM_DEFAULT_DATA_DIR "data"
#endif

namespace coachsim::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(json const & obj, std::string const & where, std::set<std::string> const & allowed)
{
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (auto const & [key, value] : obj.items()) {
        auto const lower = text::to_lower(key);
        if (lower.find("api_key") != std::string::npos || lower == "token" || lower == "secret"
            || lower == "password" || lower == "bearer_token") {
            throw ConfigError(where + "." + key
                + ": credentials are read from environment variables only, never from the config file");
        }
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key " + where + "." + key);
        }
    }
}

template <typename T>
void read(json const & obj, char const * key, T & out, std::string const & where)
{
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (json::exception const &) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

fs::path resolve(fs::path const & base, std::string const & value)
{
    fs::path p(value);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

} // namespace

fs::path default_data_dir()
{
    if (char const * env = std::getenv("COACHSIM_DATA_DIR"); env && *env) {
        return env;
    }
    return COACHSIM_DEFAULT_DATA_DIR;
}

AppConfig default_config(fs::path data_dir)
{
    AppConfig c;
    c.data_dir = std::move(data_dir);
    auto const bundled = default_data_dir();
    c.files.pools = bundled / "pools.txt";
    c.files.challenges = bundled / "challenges.jsonl";
    c.files.coherence_rules = bundled / "coherence_rules.txt";
    c.files.rubric = bundled / "rubric.json";
    return c;
}

AppConfig parse_config(std::string_view json_text, fs::path const & base_dir)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (json::parse_error const & e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "config", {"data_dir", "listen", "provider", "session", "files", "auth"});

    AppConfig c = default_config({});
    std::string data_dir = "sessions-data";
    read(root, "data_dir", data_dir, "config");
    c.data_dir = resolve(base_dir, data_dir);

    if (root.contains("listen")) {
        auto const & l = root["listen"];
        check_keys(l, "listen", {"host", "port"});
        read(l, "host", c.host, "listen");
        read(l, "port", c.port, "listen");
        if (c.port < 0 || c.port > 65535) {
            throw ConfigError("listen.port must be in 0-65535");
        }
    }

    if (root.contains("provider")) {
        auto const & p = root["provider"];
        check_keys(p, "provider", {"endpoint", "credential_env", "model", "timeout_ms", "max_attempts",
            "base_backoff_ms", "max_in_flight", "mock_script"});
        auto & s = c.provider;
        read(p, "endpoint", s.endpoint, "provider");
        read(p, "credential_env", s.credential_env, "provider");
        if (s.credential_env.empty()) {
            throw ConfigError("provider.credential_env must name an environment variable");
        }
        if (p.contains("model")) {
            auto const & m = p["model"];
            check_keys(m, "provider.model", {"novice", "initial", "verify", "judge", "augment"});
            read(m, "novice", s.models.novice, "provider.model");
            read(m, "initial", s.models.initial_question, "provider.model");
            read(m, "verify", s.models.verify, "provider.model");
            read(m, "judge", s.judge_model, "provider.model");
            read(m, "augment", s.augment_model, "provider.model");
        }
        std::int64_t timeout = s.retry.per_request_timeout.count();
        std::int64_t backoff = s.retry.base_backoff.count();
        read(p, "timeout_ms", timeout, "provider");
        read(p, "base_backoff_ms", backoff, "provider");
        read(p, "max_attempts", s.retry.max_attempts, "provider");
        read(p, "max_in_flight", s.max_in_flight, "provider");
        if (timeout <= 0 || backoff < 0 || s.retry.max_attempts < 1) {
            throw ConfigError("provider timeout_ms must be > 0, base_backoff_ms >= 0, max_attempts >= 1");
        }
        if (s.max_in_flight < 1 || s.max_in_flight > llm::BoundedProvider::max_limit) {
            throw ConfigError("provider.max_in_flight must be in 1-256");
        }
        s.retry.per_request_timeout = std::chrono::milliseconds(timeout);
        s.retry.base_backoff = std::chrono::milliseconds(backoff);
        if (p.contains("mock_script")) {
            std::string script;
            read(p, "mock_script", script, "provider");
            s.mock_script = resolve(base_dir, script);
        }
    }

    if (root.contains("session")) {
        auto const & s = root["session"];
        check_keys(s, "session", {"soft_turn_cap", "verification"});
        read(s, "soft_turn_cap", c.soft_turn_cap, "session");
        std::string mode = "rules_then_llm";
        read(s, "verification", mode, "session");
        if (mode == "rules") {
            c.verification = persona::VerificationMode::Rules;
        } else if (mode == "rules_then_llm") {
            c.verification = persona::VerificationMode::RulesThenLlm;
        } else {
            throw ConfigError("session.verification must be \"rules\" or \"rules_then_llm\"");
        }
    }

    if (root.contains("files")) {
        auto const & f = root["files"];
        check_keys(f, "files", {"pools", "challenges", "coherence_rules", "rubric"});
        auto path_field = [&](char const * key, fs::path & out) {
            if (f.contains(key)) {
                std::string value;
                read(f, key, value, "files");
                out = resolve(base_dir, value);
            }
        };
        path_field("pools", c.files.pools);
        path_field("challenges", c.files.challenges);
        path_field("coherence_rules", c.files.coherence_rules);
        path_field("rubric", c.files.rubric);
    }

    if (root.contains("auth")) {
        auto const & a = root["auth"];
        check_keys(a, "auth", {"bearer_token_env"});
        std::string env;
        read(a, "bearer_token_env", env, "auth");
        if (!env.empty()) {
            c.bearer_token_env = env;
        }
    }
    return c;
}

AppConfig load_config(fs::path const & path)
{
    auto const base = path.has_parent_path() ? path.parent_path() : fs::current_path();
    return parse_config(text::read_file(path), base);
}

void AppConfig::validate() const
{
    for (auto const & [name, path] : {std::pair{"pools", files.pools}, std::pair{"challenges", files.challenges},
             std::pair{"coherence_rules", files.coherence_rules}, std::pair{"rubric", files.rubric}}) {
        if (!fs::is_regular_file(path)) {
            throw ConfigError(std::string("files.") + name + " does not exist: " + path.string());
        }
    }
    if (provider.mock_script && !fs::is_regular_file(*provider.mock_script)) {
        throw ConfigError("provider.mock_script does not exist: " + provider.mock_script->string());
    }
    if (data_dir.empty()) {
        throw ConfigError("data_dir is empty");
    }
    std::error_code ec;
    fs::create_directories(data_dir, ec);
    if (ec || !fs::is_directory(data_dir)) {
        throw ConfigError("data_dir cannot be created: " + data_dir.string());
    }
    auto const probe = data_dir / ".write-probe";
    {
        std::ofstream out(probe);
        if (!out || !(out << "ok")) {
            throw ConfigError("data_dir is not writable: " + data_dir.string());
        }
    }
    fs::remove(probe, ec);
}

dialogue::EngineOptions engine_options(AppConfig const & config)
{
    dialogue::EngineOptions o;
    o.verification = config.verification;
    o.soft_turn_cap = config.soft_turn_cap;
    o.models = config.provider.models;
    o.retry = config.provider.retry;
    return o;
}

dialogue::PersonaSources load_persona_sources(AppConfig const & config)
{
    return {persona::load_attribute_pools(config.files.pools), persona::load_challenge_bank(config.files.challenges),
        persona::load_coherence_rules(config.files.coherence_rules)};
}

} // namespace coachsim::service
