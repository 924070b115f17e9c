#pragma once

#include "coachsim/dialogue.hpp"
#include "coachsim/llm.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coachsim::judge {

enum class CriterionId {
    PedagogicalRelevance,
    CognitiveDepth,
    InstructionalContextualization,
    CoverageOfConcerns,
};

inline constexpr std::array<CriterionId, 4> all_criteria{CriterionId::PedagogicalRelevance,
    CriterionId::CognitiveDepth, CriterionId::InstructionalContextualization, CriterionId::CoverageOfConcerns};

/// "PEDAGOGICAL_RELEVANCE", ...
[[nodiscard]] std::string_view to_string(CriterionId id) noexcept;
[[nodiscard]] std::optional<CriterionId> parse_criterion_id(std::string_view name) noexcept;

struct RubricCriterion
{
    CriterionId id;
    std::string name;
    std::string guiding_question;
    std::map<int, std::string> level_descriptors; // keys 3, 2, 1
    std::string prompt_template;                   // exactly one "{conversation}"

    /// Throws ConfigError if a level is missing or the placeholder count is not one.
    void validate() const;
};

/// The four novice-question criteria with their verbatim judge prompts.
[[nodiscard]] std::vector<RubricCriterion> const & default_rubric();

/**
 * Rubric data file: JSON array of {"id", "name", "guiding_question",
 * "levels": {"3","2","1"}, "prompt_template"}. Must hold each criterion once.
 */
[[nodiscard]] std::vector<RubricCriterion> parse_rubric(std::string_view json_text);
[[nodiscard]] std::vector<RubricCriterion> load_rubric(std::filesystem::path const & path);
[[nodiscard]] std::string rubric_to_json(std::span<RubricCriterion const> rubric);

/// One line per turn: "Instructor: ..." for the novice, "Expert: ..." for the expert.
[[nodiscard]] std::string render_transcript(dialogue::DialogueSession const & dialogue);
[[nodiscard]] std::string render_judge_prompt(RubricCriterion const & criterion,
    dialogue::DialogueSession const & dialogue);

struct ParsedJudgeResponse
{
    int score = 0;
    std::string rationale;

    friend bool operator == (ParsedJudgeResponse const &, ParsedJudgeResponse const &) = default;
};

/**
 * Grammar: the first line whose text (after optional whitespace and markdown
 * emphasis) starts with "score:" case-insensitively carries an integer 1..3;
 * the rationale is everything after the first "rationale:" marker, trimmed.
 * Throws ParseError carrying the raw text on any deviation.
 */
[[nodiscard]] ParsedJudgeResponse parse_judge_response(std::string_view text);
[[nodiscard]] std::string format_judge_response(int score, std::string_view rationale);

struct JudgeVerdict
{
    CriterionId criterion_id;
    int score;
    std::string rationale;
    std::string raw_response;
    std::string model_id;
};

enum class EvaluationStatus { Success, Failed };

struct DialogueEvaluation
{
    std::string dialogue_id;
    std::string model_id;
    EvaluationStatus status = EvaluationStatus::Failed;
    std::vector<JudgeVerdict> verdicts; // criterion order
    std::optional<double> mean_score;   // only on success
    std::vector<std::string> errors;    // one per failed criterion
};

struct JudgeOptions
{
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
    int max_tokens = 256;
    llm::RetryPolicy retry;
    bool parallel = true;
};

/// SUCCESS iff there are exactly four verdicts with distinct criterion ids.
[[nodiscard]] bool is_complete(std::span<JudgeVerdict const> verdicts);

/**
 * Runs one judge call per criterion. A malformed reply is retried once; a
 * criterion that still fails (or whose provider call fails) is recorded in
 * `errors` and the evaluation is FAILED with the remaining verdicts kept.
 */
[[nodiscard]] DialogueEvaluation evaluate_dialogue(dialogue::DialogueSession const & dialogue,
    std::span<RubricCriterion const> criteria, llm::ChatProvider & provider, JudgeOptions const & options = {});

[[nodiscard]] nlohmann::ordered_json to_document(DialogueEvaluation const & evaluation);
[[nodiscard]] DialogueEvaluation evaluation_from_document(nlohmann::json const & doc);

/// Persists evaluations as <dir>/<dialogue_id>__<model_id>.json.
class EvaluationStore
{
public:
    explicit EvaluationStore(std::filesystem::path dir);
    void save(DialogueEvaluation const & evaluation);
    [[nodiscard]] std::optional<DialogueEvaluation> load(std::string const & dialogue_id,
        std::string const & model_id) const;

private:
    [[nodiscard]] std::filesystem::path path_for(std::string const & dialogue_id, std::string const & model_id) const;
    std::filesystem::path dir_;
};

struct EvaluationReport
{
    std::size_t n = 0;                 // successful evaluations
    std::size_t failed = 0;            // skipped FAILED evaluations
    double mean = 0.0;                 // of per-dialogue mean scores
    std::optional<double> sd;          // sample SD; absent when n < 2
    std::map<CriterionId, std::array<std::size_t, 3>> histograms; // [score-1] -> count
    std::map<CriterionId, double> criterion_means;

    /// "criterion,score,count" rows, criteria in canonical order, scores 1..3.
    [[nodiscard]] std::string histogram_csv() const;
    /// {"mean","sd","n","failed","criterion_means":{...}}
    [[nodiscard]] std::string summary_json() const;
};

/// Order-independent fold over SUCCESS evaluations. Throws EmptyInputError if there are none.
[[nodiscard]] EvaluationReport aggregate_evaluations(std::span<DialogueEvaluation const> evaluations);

} // namespace coachsim::judge
