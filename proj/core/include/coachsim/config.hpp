#pragma once

#include "coachsim/engine.hpp"
#include "coachsim/llm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace coachsim::service {

struct ProviderSettings
{
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    /// Environment variable holding the API key. Keys never appear in the config file.
    std::string credential_env = "OPENAI_API_KEY";
    dialogue::ModelIds models;
    std::string judge_model = "gpt-4o";
    std::string augment_model = "gpt-4o-mini";
    llm::RetryPolicy retry;
    int max_in_flight = 4;
    /// Mock script; when set, the service never opens a network connection.
    std::optional<std::filesystem::path> mock_script;
};

struct DataFiles
{
    std::filesystem::path pools;
    std::filesystem::path challenges;
    std::filesystem::path coherence_rules;
    std::filesystem::path rubric;
};

struct AppConfig
{
    std::filesystem::path data_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    ProviderSettings provider;
    std::size_t soft_turn_cap = 60;
    persona::VerificationMode verification = persona::VerificationMode::RulesThenLlm;
    DataFiles files;
    /// Environment variable holding the shared bearer token; no auth when unset.
    std::optional<std::string> bearer_token_env;

    /// Throws ConfigError unless every referenced file exists and data_dir is writable.
    void validate() const;
};

/// Bundled data directory (pools, challenge bank, rules, rubric).
/// COACHSIM_DATA_DIR overrides the compiled-in default.
[[nodiscard]] std::filesystem::path default_data_dir();

/// Config whose file paths point at the bundled data and whose data_dir is `data_dir`.
[[nodiscard]] AppConfig default_config(std::filesystem::path data_dir);

/**
 * JSON config; relative paths resolve against `base_dir`. Unknown keys are
 * rejected, as is any key that looks like an inline credential.
 */
[[nodiscard]] AppConfig parse_config(std::string_view json_text, std::filesystem::path const & base_dir);
[[nodiscard]] AppConfig load_config(std::filesystem::path const & path);

[[nodiscard]] dialogue::EngineOptions engine_options(AppConfig const & config);
[[nodiscard]] dialogue::PersonaSources load_persona_sources(AppConfig const & config);

} // namespace coachsim::service
