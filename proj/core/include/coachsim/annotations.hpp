#pragma once

#include "coachsim/error.hpp"
#include "coachsim/stats.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coachsim::stats {

/// Criteria of the human rubric for expert turns (1-3 scale).
enum class ExpertCriterion { ClarityOfExpression, SupportiveTone, ReflectivePrompting, AppropriatenessOfValidation };

inline constexpr std::array<ExpertCriterion, 4> all_expert_criteria{ExpertCriterion::ClarityOfExpression,
    ExpertCriterion::SupportiveTone, ExpertCriterion::ReflectivePrompting,
    ExpertCriterion::AppropriatenessOfValidation};

/// "CLARITY_OF_EXPRESSION", "SUPPORTIVE_TONE", ...
[[nodiscard]] std::string_view to_string(ExpertCriterion criterion) noexcept;
/// Display name, e.g. "Supportive & Appropriate Tone".
[[nodiscard]] std::string_view display_name(ExpertCriterion criterion) noexcept;
/// Accepts the id or the display name, case-insensitively.
[[nodiscard]] std::optional<ExpertCriterion> parse_expert_criterion(std::string_view text) noexcept;

/// Rejected annotation table. `row` is the 1-based line number (header = 1), 0 if not row-specific.
class AnnotationError : public ValidationError
{
public:
    AnnotationError(std::size_t row, std::string const & message)
    : ValidationError(row ? "row " + std::to_string(row) + ": " + message : message)
    , row_(row)
    { }

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

struct AnnotationRecord
{
    std::size_t row = 0;
    std::string dialogue_id;
    std::string model_label;
    std::string rater_id;
    ExpertCriterion criterion = ExpertCriterion::ClarityOfExpression;
    int score = 0;
};

/// An item rated by only one of the two raters.
struct UnmatchedItem
{
    std::string model_label;
    std::string dialogue_id;
    ExpertCriterion criterion = ExpertCriterion::ClarityOfExpression;
    std::string rater_id;
};

struct CriterionSummary
{
    ExpertCriterion criterion = ExpertCriterion::ClarityOfExpression;
    std::string rater_id; // empty: both raters pooled
    std::int64_t n = 0;
    double mean = 0.0;
    std::optional<double> sd;
};

struct ModelAgreement
{
    std::string model_label;
    /// Rows: rater 1 (lexicographically first rater id); columns: rater 2. Pooled across criteria.
    RatingMatrix pooled;
    /// Absent when the raters share no item for this model.
    std::optional<KappaResult> kappa;
    std::vector<UnmatchedItem> unmatched;
    std::vector<CriterionSummary> criteria;
};

struct AnnotationSet
{
    std::vector<AnnotationRecord> records;
    std::pair<std::string, std::string> raters;
    std::vector<ModelAgreement> models; // sorted by label

    [[nodiscard]] nlohmann::ordered_json summary_json() const;
    /// "model_label,criterion,rater_id,n,mean,sd"; rater_id "all" for the pooled row.
    [[nodiscard]] std::string criteria_csv() const;
};

/**
 * Delimited table with a header naming the columns dialogue_id, model_label,
 * rater_id, criterion and score (any order, extra columns ignored). Fields may
 * be double-quoted. Exactly two distinct rater ids are required.
 */
[[nodiscard]] AnnotationSet ingest_annotations(std::string_view table);
[[nodiscard]] AnnotationSet load_annotations(std::filesystem::path const & path);

/// Minimal CSV line splitter: commas, double-quoted fields with "" escapes.
/// Throws ValidationError on an unterminated quote.
[[nodiscard]] std::vector<std::string> split_csv_line(std::string_view line);

} // namespace coachsim::stats
