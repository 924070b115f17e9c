#pragma once

#include "coachsim/dialogue.hpp"
#include "coachsim/persona.hpp"
#include "coachsim/stats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coachsim::stats {

struct DialogueRecord
{
    std::string dialogue_id;
    std::int64_t turns = 0;
    std::int64_t words_novice = 0;
    std::int64_t words_expert = 0;
    std::optional<std::string> discipline;
    std::optional<persona::TraitAssignment> traits;
};

/// Mean and sample SD; sd is absent when fewer than two values exist.
struct Moments
{
    std::int64_t n = 0;
    double mean = 0.0;
    std::optional<double> sd;
};

/// Bins [start + i*width, start + (i+1)*width).
struct Histogram
{
    std::int64_t start = 0;
    std::int64_t width = 2;
    std::vector<std::int64_t> counts;

    /// "bin_low,bin_high,count" rows, bin_high exclusive.
    [[nodiscard]] std::string to_csv() const;
};

struct CorpusStats
{
    std::vector<DialogueRecord> records; // sorted by dialogue_id
    std::int64_t min_turns = 0;
    std::int64_t excluded_short = 0;
    std::int64_t excluded_status = 0;

    std::int64_t total_turns = 0;
    std::int64_t total_words_novice = 0;
    std::int64_t total_words_expert = 0;

    Moments turns;
    Moments words_novice;
    Moments words_expert;
    Moments words_total;

    Histogram turn_histogram;

    [[nodiscard]] std::string records_csv() const;
    [[nodiscard]] nlohmann::ordered_json summary_json() const;
};

/// Words in one turn: maximal whitespace-delimited tokens.
[[nodiscard]] DialogueRecord describe_dialogue(dialogue::DialogueSession const & session);

/**
 * Only COMPLETED sessions are counted; others are tallied in excluded_status.
 * Sessions with fewer than min_turns turns are dropped. Throws EmptyInputError
 * when nothing remains.
 */
[[nodiscard]] CorpusStats describe_corpus(
    std::vector<dialogue::DialogueSession> const & corpus, std::int64_t min_turns = 0, std::int64_t histogram_width = 2);

struct DisciplineRow
{
    std::string discipline;
    std::int64_t n = 0;
    double mean_turns = 0.0;
    double mean_words_novice = 0.0;
    double mean_words_expert = 0.0;
};

/// Dialogues without a discipline are grouped under "unknown".
[[nodiscard]] std::vector<DisciplineRow> discipline_table(CorpusStats const & stats);
[[nodiscard]] std::string discipline_csv(std::vector<DisciplineRow> const & rows);

enum class Metric { Turns, WordsNovice, WordsExpert };

[[nodiscard]] std::string_view to_string(Metric metric) noexcept;
[[nodiscard]] std::optional<Metric> parse_metric(std::string_view name) noexcept;
[[nodiscard]] double metric_value(DialogueRecord const & record, Metric metric) noexcept;

/// Either a trait (group a = LOW pole, b = HIGH) or two named disciplines.
struct GroupKey
{
    std::optional<persona::Trait> trait;
    std::string discipline_a;
    std::string discipline_b;

    [[nodiscard]] static GroupKey by_trait(persona::Trait trait) { return {trait, {}, {}}; }
    [[nodiscard]] static GroupKey by_discipline(std::string a, std::string b) { return {std::nullopt, std::move(a), std::move(b)}; }
};

struct GroupComparison
{
    SummaryStats a;
    SummaryStats b;
    WelchResult welch;
    Metric metric = Metric::Turns;
    std::string group_key;

    /// Plot-ready record: per-group mean, sd, n and the CI of the difference.
    [[nodiscard]] nlohmann::ordered_json plot_record() const;
};

/// Throws ValidationError naming any group with fewer than two dialogues.
[[nodiscard]] GroupComparison group_compare(
    CorpusStats const & stats, GroupKey const & key, Metric metric, double alpha = 0.05);

} // namespace coachsim::stats
