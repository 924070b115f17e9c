#pragma once

#include "coachsim/dialogue.hpp"
#include "coachsim/llm.hpp"
#include "coachsim/random.hpp"

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coachsim::augment {

enum class RejectReason {
    Unparseable,
    WrongFirstRole,
    NonAlternating,
    NoTerminalQuestionMark,
    TooFewTurns,
    DuplicateOpener,
};

[[nodiscard]] std::string_view to_string(RejectReason reason) noexcept;

inline constexpr std::size_t min_turns = 3;

/// Role markers of the candidate text layout.
inline constexpr std::string_view novice_marker = "[INSTRUCTOR]";
inline constexpr std::string_view expert_marker = "[EXPERT]";

struct RawTurn
{
    dialogue::Speaker role;
    std::string content;
};

/**
 * Candidate layout: each turn starts with a line holding only a role marker
 * ("[INSTRUCTOR]" or "[EXPERT]", case-insensitive); the turn text follows on
 * the next lines, or on the marker line itself. Code fences are ignored.
 * Returns nullopt if there are no turns, text precedes the first marker, or a
 * turn is empty. Role order is not checked here.
 */
[[nodiscard]] std::optional<std::vector<RawTurn>> parse_candidate(std::string_view text);

/// Renders a transcript in the candidate layout.
[[nodiscard]] std::string render_candidate(dialogue::DialogueSession const & dialogue);

/// Normalized openers seen so far; safe for concurrent use.
class OpenerIndex
{
public:
    [[nodiscard]] bool contains(std::string_view opener) const;
    /// Returns false if already present.
    bool insert(std::string_view opener);
    [[nodiscard]] std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::set<std::string> openers_;
};

/**
 * Every failed format check, in check order: parseable, first role NOVICE,
 * roles alternate, first turn ends with '?', at least three turns, opener not
 * already in `openers`. Checks that depend on a parse are skipped when the
 * text does not parse.
 */
[[nodiscard]] std::vector<RejectReason> format_violations(std::string_view candidate, OpenerIndex const & openers);

struct FormatVerdict
{
    std::optional<RejectReason> reason; // empty: accepted
    std::vector<RawTurn> turns;

    [[nodiscard]] bool accepted() const noexcept { return !reason.has_value(); }
};

/// First failing check, or acceptance with the parsed turns.
[[nodiscard]] FormatVerdict validate_format(std::string_view candidate, OpenerIndex const & openers);

struct AugmentJob
{
    std::size_t target_count = 0;
    std::size_t exemplars_per_prompt = 3;
    std::uint64_t seed = 0;
    std::string model_id = "gpt-4o-mini";
    /// Maximum number of generation attempts; 0 means 3 x target_count.
    std::size_t budget = 0;
    double temperature = 0.7;
    int max_tokens = 2048;
    llm::RetryPolicy retry;
    /// Provider calls issued concurrently per round. Results are consumed in
    /// draw order, so the outcome does not depend on this value's timing.
    std::size_t parallelism = 1;
    std::string id_prefix = "synthetic-";

    [[nodiscard]] std::size_t effective_budget() const noexcept
    {
        return budget == 0 ? 3 * target_count : budget;
    }
};

struct Rejection
{
    std::string candidate_id;
    RejectReason reason;
};

struct FilterReport
{
    std::size_t generated = 0;
    std::size_t accepted = 0;
    std::vector<Rejection> rejected;
    std::size_t provider_failures = 0;
    bool budget_exhausted = false;

    /// "reason,count" rows for every reason plus "ACCEPTED" and "PROVIDER_FAILURE".
    [[nodiscard]] std::string to_csv() const;
};

struct AugmentResult
{
    std::vector<dialogue::DialogueSession> accepted;
    FilterReport report;
};

[[nodiscard]] std::string render_augment_prompt(std::span<dialogue::DialogueSession const * const> exemplars);

/**
 * Few-shot synthesis loop: each attempt samples `exemplars_per_prompt` seed
 * dialogues uniformly without replacement, asks the provider for a new
 * dialogue, and keeps it if validate_format accepts it. Stops at
 * target_count accepted or after the generation budget.
 */
[[nodiscard]] AugmentResult synthesize_batch(AugmentJob const & job,
    std::span<dialogue::DialogueSession const> seed_corpus, llm::ChatProvider & provider);

} // namespace coachsim::augment
