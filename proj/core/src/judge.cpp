#include "coachsim/judge.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

namespace coachsim::judge {

namespace {

#include "judge_templates.inc"

constexpr std::string_view placeholder = "{conversation}";

bool is_emphasis(char c) noexcept
{
    return c == '*' || c == '_' || c == '#' || c == '`';
}

std::string_view skip_decoration(std::string_view s) noexcept
{
    while (!s.empty() && (is_emphasis(s.front()) || std::isspace(static_cast<unsigned char>(s.front())))) {
        s.remove_prefix(1);
    }
    return s;
}

/// If `s` (already decoration-stripped) begins with `keyword` then optional
/// decoration and a colon, returns the text after the colon.
std::optional<std::string_view> after_marker(std::string_view s, std::string_view keyword) noexcept
{
    if (!text::starts_with_icase(s, keyword)) {
        return std::nullopt;
    }
    s.remove_prefix(keyword.size());
    s = skip_decoration(s);
    if (s.empty() || s.front() != ':') {
        return std::nullopt;
    }
    s.remove_prefix(1);
    return s;
}

std::string_view find_rationale(std::string_view full) noexcept
{
    std::string const lower = text::to_lower(full);
    for (std::size_t pos = lower.find("rationale"); pos != std::string::npos;
         pos = lower.find("rationale", pos + 1)) {
        if (auto rest = after_marker(full.substr(pos), "rationale")) {
            auto body = skip_decoration(*rest);
            while (!body.empty() && is_emphasis(body.back())) {
                body.remove_suffix(1);
            }
            return text::trim(body);
        }
    }
    return {};
}

RubricCriterion make(CriterionId id, std::string name, std::string question, std::string three, std::string two,
    std::string one, std::string_view templ)
{
    return RubricCriterion{id, std::move(name), std::move(question),
        {{3, std::move(three)}, {2, std::move(two)}, {1, std::move(one)}}, std::string(templ)};
}

std::string file_safe(std::string_view s)
{
    std::string out;
    for (char c : s) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    }
    return out;
}

} // namespace

std::string_view to_string(CriterionId id) noexcept
{
    switch (id) {
    case CriterionId::PedagogicalRelevance: return "PEDAGOGICAL_RELEVANCE";
    case CriterionId::CognitiveDepth: return "COGNITIVE_DEPTH";
    case CriterionId::InstructionalContextualization: return "INSTRUCTIONAL_CONTEXTUALIZATION";
    case CriterionId::CoverageOfConcerns: return "COVERAGE_OF_CONCERNS";
    }
    return "PEDAGOGICAL_RELEVANCE";
}

std::optional<CriterionId> parse_criterion_id(std::string_view name) noexcept
{
    for (auto id : all_criteria) {
        if (text::iequals(name, to_string(id))) {
            return id;
        }
    }
    return std::nullopt;
}

void RubricCriterion::validate() const
{
    auto const where = "criterion " + std::string(to_string(id)) + ": ";
    for (int level : {1, 2, 3}) {
        auto it = level_descriptors.find(level);
        if (it == level_descriptors.end() || text::trim(it->second).empty()) {
            throw ConfigError(where + "missing level " + std::to_string(level) + " descriptor");
        }
    }
    if (level_descriptors.size() != 3) {
        throw ConfigError(where + "levels must be exactly 1, 2 and 3");
    }
    if (text::count_occurrences(prompt_template, placeholder) != 1) {
        throw ConfigError(where + "prompt template must contain exactly one {conversation} placeholder");
    }
}

std::vector<RubricCriterion> const & default_rubric()
{
    static std::vector<RubricCriterion> const rubric{
        make(CriterionId::PedagogicalRelevance, "Pedagogical Relevance",
            "Does the simulator ask questions that are appropriate for an instructor to ask when planning, "
            "reflecting on, or troubleshooting instruction?",
            "Question aligns with common instructional challenges, planning, or feedback needed.",
            "Question is tangentially related to instruction but lacks focus or depth.",
            "Question is unrelated to pedagogical practice or classroom concerns.", kPedagogicalRelevanceTemplate),
        make(CriterionId::CognitiveDepth, "Cognitive Depth of the Question",
            "Does the simulator’s question require the pedagogical expert to provide insight at an "
            "appropriate level of depth?",
            "Asks for reasoning, strategy, tradeoffs, or adaptation to context.",
            "Asks for clarification, examples, or basic explanation.",
            "Asks for trivial, obvious, or yes/no responses.", kCognitiveDepthTemplate),
        make(CriterionId::InstructionalContextualization, "Instructional Contextualization",
            "Is the question framed with enough instructional context (e.g., class type, learner profile, course "
            "goals) to allow the expert to respond meaningfully?",
            "Question includes enough information (e.g., setting, learners, challenge) for a targeted response.",
            "Context is vague or partial.", "Lacks context; the expert must guess or infer too much.",
            kInstructionalContextualizationTemplate),
        make(CriterionId::CoverageOfConcerns, "Coverage of Pedagogical Concerns",
            "Over time, does the simulator generate questions across a range of instructional areas (e.g., "
            "assessment, student engagement, scaffolding, feedback)?",
            "Addresses multiple aspects of teaching practice.", "Covers a few areas but not comprehensive.",
            "Focuses narrowly on one type of teaching concern.", kCoverageOfConcernsTemplate),
    };
    return rubric;
}

std::vector<RubricCriterion> parse_rubric(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (nlohmann::json::parse_error const & e) {
        throw ConfigError(std::string("rubric file is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw ConfigError("rubric file must be a JSON array of criteria");
    }
    std::vector<RubricCriterion> rubric;
    std::set<CriterionId> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        auto const & item = doc[i];
        auto const where = "rubric entry " + std::to_string(i) + ": ";
        try {
            auto const id = parse_criterion_id(item.at("id").get<std::string>());
            if (!id) {
                throw ConfigError(where + "unknown criterion id '" + item.at("id").get<std::string>() + "'");
            }
            if (!seen.insert(*id).second) {
                throw ConfigError(where + "duplicate criterion " + std::string(to_string(*id)));
            }
            RubricCriterion c{*id, item.at("name").get<std::string>(), item.at("guiding_question").get<std::string>(),
                {}, item.at("prompt_template").get<std::string>()};
            for (auto const & [key, value] : item.at("levels").items()) {
                int level = 0;
                try {
                    level = std::stoi(key);
                } catch (std::exception const &) {
                    throw ConfigError(where + "level key '" + key + "' is not 1, 2 or 3");
                }
                if (level < 1 || level > 3 || key.size() != 1) {
                    throw ConfigError(where + "level key '" + key + "' is not 1, 2 or 3");
                }
                c.level_descriptors[level] = value.get<std::string>();
            }
            c.validate();
            rubric.push_back(std::move(c));
        } catch (nlohmann::json::exception const & e) {
            throw ConfigError(where + e.what());
        }
    }
    if (rubric.size() != all_criteria.size()) {
        throw ConfigError("rubric must define all four criteria");
    }
    return rubric;
}

std::vector<RubricCriterion> load_rubric(std::filesystem::path const & path)
{
    try {
        return parse_rubric(text::read_file(path));
    } catch (ConfigError const & e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string rubric_to_json(std::span<RubricCriterion const> rubric)
{
    auto doc = nlohmann::ordered_json::array();
    for (auto const & c : rubric) {
        nlohmann::ordered_json item;
        item["id"] = std::string(to_string(c.id));
        item["name"] = c.name;
        item["guiding_question"] = c.guiding_question;
        nlohmann::ordered_json levels;
        for (int level : {3, 2, 1}) {
            levels[std::to_string(level)] = c.level_descriptors.at(level);
        }
        item["levels"] = levels;
        item["prompt_template"] = c.prompt_template;
        doc.push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

std::string render_transcript(dialogue::DialogueSession const & dialogue)
{
    std::string out;
    for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
        auto const & t = dialogue.turns[i];
        if (i > 0) {
            out += '\n';
        }
        out += t.role == dialogue::Speaker::Novice ? "Instructor: " : "Expert: ";
        out += t.content;
    }
    return out;
}

std::string render_judge_prompt(RubricCriterion const & criterion, dialogue::DialogueSession const & dialogue)
{
    return text::substitute(criterion.prompt_template, placeholder, render_transcript(dialogue));
}

ParsedJudgeResponse parse_judge_response(std::string_view full)
{
    std::optional<int> score;
    for (auto line : text::split_lines(full)) {
        auto const rest = after_marker(skip_decoration(line), "score");
        if (!rest) {
            continue;
        }
        auto digits = skip_decoration(*rest);
        std::size_t n = 0;
        while (n < digits.size() && std::isdigit(static_cast<unsigned char>(digits[n]))) {
            ++n;
        }
        if (n == 0 || n > 3) {
            throw ParseError("score line has no integer score", std::string(full));
        }
        if (n < digits.size() && digits[n] == '.' && n + 1 < digits.size()
            && std::isdigit(static_cast<unsigned char>(digits[n + 1]))) {
            throw ParseError("score must be an integer", std::string(full));
        }
        int const value = std::stoi(std::string(digits.substr(0, n)));
        if (value < 1 || value > 3) {
            throw ParseError("score " + std::to_string(value) + " is outside 1..3", std::string(full));
        }
        score = value;
        break;
    }
    if (!score) {
        throw ParseError("response has no 'Score:' line", std::string(full));
    }
    auto const rationale = find_rationale(full);
    if (rationale.empty()) {
        throw ParseError("response has no rationale", std::string(full));
    }
    return {*score, std::string(rationale)};
}

std::string format_judge_response(int score, std::string_view rationale)
{
    return "Score: " + std::to_string(score) + "\nRationale: " + std::string(rationale);
}

bool is_complete(std::span<JudgeVerdict const> verdicts)
{
    std::set<CriterionId> ids;
    for (auto const & v : verdicts) {
        ids.insert(v.criterion_id);
    }
    return verdicts.size() == all_criteria.size() && ids.size() == all_criteria.size();
}

DialogueEvaluation evaluate_dialogue(dialogue::DialogueSession const & dialogue,
    std::span<RubricCriterion const> criteria, llm::ChatProvider & provider, JudgeOptions const & options)
{
    if (dialogue.status != dialogue::SessionStatus::Completed) {
        throw StateError("only completed dialogues are judged; " + dialogue.id + " is "
            + std::string(dialogue::to_string(dialogue.status)));
    }

    struct Outcome
    {
        std::optional<JudgeVerdict> verdict;
        std::string error;
    };

    auto judge_one = [&](RubricCriterion const & criterion) -> Outcome {
        llm::ChatRequest request;
        request.model_id = options.model_id;
        request.temperature = options.temperature;
        request.max_tokens = options.max_tokens;
        request.messages.push_back({llm::ChatRole::User, render_judge_prompt(criterion, dialogue)});
        std::string last_error;
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                auto const response = llm::complete(provider, request, options.retry);
                auto const parsed = parse_judge_response(response.content);
                return {JudgeVerdict{criterion.id, parsed.score, parsed.rationale, response.content,
                            response.model_id.empty() ? options.model_id : response.model_id},
                    {}};
            } catch (ParseError const & e) {
                last_error = e.what();
            } catch (Error const & e) {
                return {std::nullopt, std::string(to_string(criterion.id)) + ": " + e.what()};
            }
        }
        return {std::nullopt, std::string(to_string(criterion.id)) + ": " + last_error};
    };

    std::vector<Outcome> outcomes;
    if (options.parallel && criteria.size() > 1) {
        std::vector<std::future<Outcome>> futures;
        for (auto const & c : criteria) {
            futures.push_back(std::async(std::launch::async, judge_one, std::cref(c)));
        }
        for (auto & f : futures) {
            outcomes.push_back(f.get());
        }
    } else {
        for (auto const & c : criteria) {
            outcomes.push_back(judge_one(c));
        }
    }

    DialogueEvaluation evaluation;
    evaluation.dialogue_id = dialogue.id;
    evaluation.model_id = options.model_id;
    for (auto & o : outcomes) {
        if (o.verdict) {
            evaluation.verdicts.push_back(std::move(*o.verdict));
        } else {
            evaluation.errors.push_back(std::move(o.error));
        }
    }
    if (evaluation.errors.empty() && is_complete(evaluation.verdicts)) {
        evaluation.status = EvaluationStatus::Success;
        int sum = 0;
        for (auto const & v : evaluation.verdicts) {
            sum += v.score;
        }
        evaluation.mean_score = static_cast<double>(sum) / static_cast<double>(evaluation.verdicts.size());
    }
    return evaluation;
}

nlohmann::ordered_json to_document(DialogueEvaluation const & evaluation)
{
    nlohmann::ordered_json doc;
    doc["dialogue_id"] = evaluation.dialogue_id;
    doc["model_id"] = evaluation.model_id;
    doc["status"] = evaluation.status == EvaluationStatus::Success ? "SUCCESS" : "FAILED";
    doc["mean_score"] = evaluation.mean_score ? nlohmann::ordered_json(*evaluation.mean_score) : nlohmann::ordered_json(nullptr);
    doc["verdicts"] = nlohmann::ordered_json::array();
    for (auto const & v : evaluation.verdicts) {
        doc["verdicts"].push_back({{"criterion_id", std::string(to_string(v.criterion_id))}, {"score", v.score},
            {"rationale", v.rationale}, {"raw_response", v.raw_response}, {"model_id", v.model_id}});
    }
    doc["errors"] = evaluation.errors;
    return doc;
}

DialogueEvaluation evaluation_from_document(nlohmann::json const & doc)
{
    try {
        DialogueEvaluation e;
        e.dialogue_id = doc.at("dialogue_id").get<std::string>();
        e.model_id = doc.at("model_id").get<std::string>();
        e.status = doc.at("status").get<std::string>() == "SUCCESS" ? EvaluationStatus::Success
                                                                     : EvaluationStatus::Failed;
        if (!doc.at("mean_score").is_null()) {
            e.mean_score = doc.at("mean_score").get<double>();
        }
        for (auto const & v : doc.at("verdicts")) {
            auto const id = parse_criterion_id(v.at("criterion_id").get<std::string>());
            if (!id) {
                throw FormatError("unknown criterion id in evaluation");
            }
            e.verdicts.push_back({*id, v.at("score").get<int>(), v.at("rationale").get<std::string>(),
                v.at("raw_response").get<std::string>(), v.at("model_id").get<std::string>()});
        }
        e.errors = doc.at("errors").get<std::vector<std::string>>();
        return e;
    } catch (nlohmann::json::exception const & ex) {
        throw FormatError(std::string("invalid evaluation document: ") + ex.what());
    }
}

EvaluationStore::EvaluationStore(std::filesystem::path dir)
: dir_(std::move(dir))
{
    std::filesystem::create_directories(dir_);
}

std::filesystem::path EvaluationStore::path_for(std::string const & dialogue_id, std::string const & model_id) const
{
    return dir_ / (file_safe(dialogue_id) + "__" + file_safe(model_id) + ".json");
}

void EvaluationStore::save(DialogueEvaluation const & evaluation)
{
    text::write_file_atomic(path_for(evaluation.dialogue_id, evaluation.model_id), to_document(evaluation).dump(2) + "\n");
}

std::optional<DialogueEvaluation> EvaluationStore::load(std::string const & dialogue_id,
    std::string const & model_id) const
{
    auto const path = path_for(dialogue_id, model_id);
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    return evaluation_from_document(nlohmann::json::parse(text::read_file(path)));
}

EvaluationReport aggregate_evaluations(std::span<DialogueEvaluation const> evaluations)
{
    EvaluationReport report;
    for (auto id : all_criteria) {
        report.histograms[id] = {0, 0, 0};
    }
    // Integer score totals keep the fold exact and therefore order-independent.
    long long sum_totals = 0;
    long long sum_totals_sq = 0;
    std::map<CriterionId, long long> criterion_sums;
    for (auto const & e : evaluations) {
        if (e.status != EvaluationStatus::Success || !is_complete(e.verdicts)) {
            ++report.failed;
            continue;
        }
        ++report.n;
        long long total = 0;
        for (auto const & v : e.verdicts) {
            total += v.score;
            ++report.histograms[v.criterion_id][static_cast<std::size_t>(v.score - 1)];
            criterion_sums[v.criterion_id] += v.score;
        }
        sum_totals += total;
        sum_totals_sq += total * total;
    }
    if (report.n == 0) {
        throw EmptyInputError("no successful evaluations to aggregate");
    }
    auto const n = static_cast<long long>(report.n);
    auto const k = static_cast<double>(all_criteria.size());
    report.mean = static_cast<double>(sum_totals) / (static_cast<double>(n) * k);
    if (n >= 2) {
        auto const numerator = static_cast<double>(n * sum_totals_sq - sum_totals * sum_totals);
        report.sd = std::sqrt(numerator / (static_cast<double>(n * (n - 1)) * k * k));
    }
    for (auto id : all_criteria) {
        report.criterion_means[id] = static_cast<double>(criterion_sums[id]) / static_cast<double>(n);
    }
    return report;
}

std::string EvaluationReport::histogram_csv() const
{
    std::ostringstream out;
    out << "criterion,score,count\n";
    for (auto id : all_criteria) {
        auto const & h = histograms.at(id);
        for (int score = 1; score <= 3; ++score) {
            out << to_string(id) << ',' << score << ',' << h[static_cast<std::size_t>(score - 1)] << '\n';
        }
    }
    return out.str();
}

std::string EvaluationReport::summary_json() const
{
    nlohmann::ordered_json doc;
    doc["mean"] = mean;
    doc["sd"] = sd ? nlohmann::ordered_json(*sd) : nlohmann::ordered_json(nullptr);
    doc["n"] = n;
    doc["failed"] = failed;
    nlohmann::ordered_json means;
    for (auto id : all_criteria) {
        auto it = criterion_means.find(id);
        means[std::string(to_string(id))] = it == criterion_means.end() ? 0.0 : it->second;
    }
    doc["criterion_means"] = means;
    return doc.dump(2) + "\n";
}

} // namespace coachsim::judge
