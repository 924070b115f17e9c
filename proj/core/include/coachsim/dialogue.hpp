#pragma once

#include "coachsim/persona.hpp"
#include "coachsim/time.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace coachsim::dialogue {

/// The simulated instructor is the NOVICE; the human coach is the EXPERT.
enum class Speaker { Novice, Expert };

/// Transcript wire role: NOVICE -> "assistant", EXPERT -> "user".
[[nodiscard]] std::string_view wire_role(Speaker speaker) noexcept;
[[nodiscard]] std::optional<Speaker> parse_wire_role(std::string_view role) noexcept;

struct Turn
{
    Speaker role = Speaker::Novice;
    std::string content;
    std::size_t index = 0;
    Timestamp created_at{};

    friend bool operator == (Turn const &, Turn const &) = default;
};

enum class SessionStatus { Active, Completed, Discarded };

[[nodiscard]] std::string_view to_string(SessionStatus status) noexcept;
[[nodiscard]] std::optional<SessionStatus> parse_status(std::string_view status) noexcept;

namespace flags {
inline constexpr std::string_view followup_over_5_sentences = "followup_over_5_sentences";
inline constexpr std::string_view initial_question_not_first_person = "initial_question_not_first_person";
inline constexpr std::string_view turn_soft_cap_exceeded = "turn_soft_cap_exceeded";
} // namespace flags

struct DialogueSession
{
    std::string id;
    /// Absent for transcripts imported from elsewhere (seed or synthetic corpora).
    std::optional<persona::PersonaProfile> persona;
    std::string initial_question;
    std::vector<Turn> turns;
    SessionStatus status = SessionStatus::Active;
    Timestamp created_at{};
    Timestamp updated_at{};
    std::set<std::string> flags;

    friend bool operator == (DialogueSession const &, DialogueSession const &) = default;

    [[nodiscard]] std::size_t expert_turn_count() const noexcept;
};

/// Throws FormatError at the first turn that breaks: turns[0] is NOVICE,
/// indices match positions, roles alternate, contents are non-empty.
void check_transcript_shape(std::vector<Turn> const & turns);

// ---------------------------------------------------------------------------
// Content contracts for generated novice text

enum class ContractKind { InitialQuestion, Followup };

struct ContractResult
{
    /// Human-readable rule text of every failed hard check.
    std::vector<std::string> violations;
    /// Session flags raised by soft checks.
    std::vector<std::string> warnings;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

inline constexpr std::size_t max_followup_sentences = 5;

/// Hard: non-empty, ends with '?', contains exactly one '?'. Soft: first person.
[[nodiscard]] ContractResult check_initial_question(std::string_view question);
/// Hard: at most five sentences (text::count_sentences).
[[nodiscard]] ContractResult check_followup(std::string_view reply);
[[nodiscard]] ContractResult check_contract(ContractKind kind, std::string_view text);

/// Trims whitespace and one layer of matching surrounding quotes.
[[nodiscard]] std::string clean_generated_text(std::string_view raw);

// ---------------------------------------------------------------------------
// Prompt templates

[[nodiscard]] std::string_view initial_question_template() noexcept;
[[nodiscard]] std::string_view followup_template() noexcept;

[[nodiscard]] std::string render_initial_question_prompt(persona::PersonaProfile const & profile);

/// Profile text plus the challenge and opening question the novice is pursuing.
[[nodiscard]] std::string render_conversation_profile(DialogueSession const & session);
[[nodiscard]] std::string render_followup_system_prompt(DialogueSession const & session);

/// "Hello, I'm {first_name} {last_name}!" shown before the initial question.
[[nodiscard]] std::string greeting(persona::PersonaProfile const & profile);

// ---------------------------------------------------------------------------
// Serialization

/**
 * JSON document, fields in this order: id, status, created_at, updated_at,
 * persona (or null), initial_question, flags, turns. Each turn is
 * {"role": "assistant"|"user", "content", "created_at"}.
 */
[[nodiscard]] nlohmann::ordered_json to_document(DialogueSession const & session);
[[nodiscard]] std::string serialize_session(DialogueSession const & session);

/**
 * Accepts a full session document or a bare array of {"role","content"}
 * entries (imported transcripts become COMPLETED sessions). Throws
 * FormatError naming the first offending turn index.
 */
[[nodiscard]] DialogueSession from_document(nlohmann::json const & doc);
[[nodiscard]] DialogueSession parse_session(std::string_view text);

/// Corpus documents: {"sessions": [...]} , a single session, or a bare transcript.
[[nodiscard]] std::vector<DialogueSession> parse_corpus(std::string_view text);
[[nodiscard]] std::vector<DialogueSession> load_corpus(std::filesystem::path const & path);
[[nodiscard]] std::string serialize_corpus(std::vector<DialogueSession> const & sessions);

} // namespace coachsim::dialogue
