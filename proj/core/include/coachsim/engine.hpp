#pragma once

#include "coachsim/dialogue.hpp"
#include "coachsim/llm.hpp"
#include "coachsim/persona.hpp"
#include "coachsim/random.hpp"
#include "coachsim/time.hpp"

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace coachsim::dialogue {

/**
 * On-disk session storage.
 *
 * Layout under the data directory:
 *   sessions/<id>.json   one serialized session per file, replaced atomically
 *   index.jsonl          append-only {"id","status","updated_at"} records
 */
class SessionStore
{
public:
    explicit SessionStore(std::filesystem::path data_dir);

    void save(DialogueSession const & session);
    [[nodiscard]] std::vector<DialogueSession> load_all() const;
    [[nodiscard]] std::filesystem::path session_path(std::string const & id) const;
    [[nodiscard]] std::filesystem::path const & index_path() const noexcept { return index_path_; }

private:
    std::filesystem::path sessions_dir_;
    std::filesystem::path index_path_;
    std::mutex index_mutex_;
};

struct ModelIds
{
    std::string novice = "gpt-4-turbo-preview";
    std::string initial_question = "gpt-4";
    std::string verify = "gpt-4";
};

struct EngineOptions
{
    persona::VerificationMode verification = persona::VerificationMode::RulesThenLlm;
    int max_persona_attempts = 5;
    std::size_t soft_turn_cap = 60;
    ModelIds models;
    llm::RetryPolicy retry;
    double novice_temperature = 0.7;
    int max_tokens = 512;
};

struct PersonaSources
{
    persona::AttributePools pools;
    std::vector<persona::ChallengeItem> bank;
    persona::CoherenceRules rules;
};

struct SessionSummary
{
    std::string id;
    SessionStatus status;
    std::string persona_name;
    std::size_t turn_count;
    Timestamp updated_at;
};

/**
 * Owns session lifecycles.
 *
 * Mutations of one session are serialized in arrival order; different
 * sessions proceed in parallel. Reads return immutable snapshots. Every
 * mutation is written to the store before it becomes visible, and nothing is
 * written when the provider call behind it fails.
 */
class DialogueEngine
{
public:
    DialogueEngine(PersonaSources sources, llm::ChatProvider & provider, SessionStore & store,
        EngineOptions options = {}, Clock clock = utc_now);

    /// Reloads persisted sessions from the store.
    void load_from_store();

    /// Samples and verifies a persona (up to max_persona_attempts draws),
    /// generates the opening question (one retry on contract violation) and
    /// persists an ACTIVE session whose turns[0] is that question.
    std::shared_ptr<DialogueSession const> create_session(Rng & rng);

    /// Appends the expert turn and the novice's reply as one atomic update.
    std::pair<Turn, Turn> post_expert_turn(std::string const & session_id, std::string_view content);

    std::shared_ptr<DialogueSession const> complete_session(std::string const & session_id);

    /// Idempotent for sessions already discarded.
    std::shared_ptr<DialogueSession const> discard_session(std::string const & session_id);

    [[nodiscard]] std::shared_ptr<DialogueSession const> get(std::string const & session_id) const;
    [[nodiscard]] std::vector<SessionSummary> list() const;

    /// All COMPLETED sessions ordered by id.
    [[nodiscard]] std::vector<DialogueSession> completed_sessions() const;
    [[nodiscard]] std::string export_corpus() const;

    [[nodiscard]] EngineOptions const & options() const noexcept { return options_; }

private:
    /// FIFO mutex: waiters acquire in ticket order.
    class TicketLock
    {
    public:
        void lock();
        void unlock();

    private:
        std::mutex mutex_;
        std::condition_variable cv_;
        std::uint64_t next_ = 0;
        std::uint64_t serving_ = 0;
    };

    struct Slot
    {
        TicketLock writer;
        std::shared_ptr<DialogueSession const> snapshot;
    };

    std::shared_ptr<Slot> slot(std::string const & session_id) const;
    std::shared_ptr<DialogueSession const> snapshot(Slot const & s) const;
    void publish(Slot & s, DialogueSession next);
    std::string generate_initial_question(persona::PersonaProfile const & profile, std::set<std::string> & flags);
    std::string generate_followup(DialogueSession const & session, std::string const & expert_content,
        bool & over_length);

    PersonaSources sources_;
    llm::ChatProvider & provider_;
    SessionStore & store_;
    EngineOptions options_;
    Clock clock_;

    mutable std::mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

} // namespace coachsim::dialogue
