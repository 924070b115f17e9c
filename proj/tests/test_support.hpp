#pragma once

#include "coachsim/dialogue.hpp"
#include "coachsim/engine.hpp"
#include "coachsim/llm.hpp"
#include "coachsim/persona.hpp"
#include "coachsim/text.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace coachsim::testing {

inline std::filesystem::path fixture(std::string const & name)
{
    return std::filesystem::path(COACHSIM_TEST_FIXTURES) / name;
}

inline std::filesystem::path data_file(std::string const & name)
{
    return std::filesystem::path(COACHSIM_TEST_DATA) / name;
}

inline std::string read_fixture(std::string const & name)
{
    return text::read_file(fixture(name));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    TempDir()
    {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path()
            / ("coachsim-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(TempDir const &) = delete;
    TempDir & operator = (TempDir const &) = delete;

    [[nodiscard]] std::filesystem::path const & path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline llm::ScriptEntry reply(std::string pattern, std::string text, bool repeat = false)
{
    return {std::move(pattern), llm::MatchKind::Substring, std::move(text), repeat};
}

inline llm::ScriptEntry fail(std::string pattern, llm::FailureKind kind, bool repeat = false)
{
    return {std::move(pattern), llm::MatchKind::Substring, llm::ScriptedFailure{kind, "scripted failure"}, repeat};
}

inline constexpr char const * kOpeningQuestion
    = "How can I get more of my students talking during discussions without putting anyone on the spot?";
inline constexpr char const * kNoviceReply = "That makes sense. I'll try it next week. What should I watch for?";

/// Coherence check, opening question and a catch-all novice reply.
inline std::vector<llm::ScriptEntry> session_script()
{
    return {
        reply("for logical coherence", "YES: the attributes are consistent.", true),
        reply("Generate a single, clear question", kOpeningQuestion, true),
        reply("", kNoviceReply, true),
    };
}

inline dialogue::PersonaSources bundled_sources()
{
    return {persona::load_attribute_pools(data_file("pools.txt")),
        persona::load_challenge_bank(data_file("challenges.jsonl")),
        persona::load_coherence_rules(data_file("coherence_rules.txt"))};
}

inline dialogue::EngineOptions fast_options()
{
    dialogue::EngineOptions o;
    o.retry.base_backoff = std::chrono::milliseconds(0);
    return o;
}

/// Deterministic clock advancing one second per call from 2025-01-01.
inline Clock stepping_clock()
{
    auto next = std::make_shared<Timestamp>(parse_iso8601("2025-01-01T00:00:00.000Z"));
    return [next] {
        auto now = *next;
        *next += std::chrono::seconds(1);
        return now;
    };
}

/// Completed session built from alternating contents, NOVICE first.
inline dialogue::DialogueSession make_dialogue(std::string id, std::vector<std::string> const & contents)
{
    dialogue::DialogueSession s;
    s.id = std::move(id);
    s.status = dialogue::SessionStatus::Completed;
    for (std::size_t i = 0; i < contents.size(); ++i) {
        s.turns.push_back({i % 2 == 0 ? dialogue::Speaker::Novice : dialogue::Speaker::Expert, contents[i], i, {}});
    }
    if (!contents.empty()) {
        s.initial_question = contents.front();
    }
    return s;
}

} // namespace coachsim::testing
