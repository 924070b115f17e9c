#include "coachsim/error.hpp"
#include "coachsim/judge.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace coachsim;
using namespace coachsim::judge;
using coachsim::testing::make_dialogue;
using coachsim::testing::read_fixture;
using coachsim::testing::reply;

namespace {

std::vector<llm::ScriptEntry> scores_3332()
{
    return {
        reply("focused on Pedagogical Relevance", "Score: 3\nRationale: relevant", true),
        reply("focused on Cognitive Depth", "Score: 3\nRationale: deep", true),
        reply("focused on Instructional Contextualization", "Score: 3\nRationale: contextual", true),
        reply("focused on Coverage", "Score: 2\nRationale: narrow", true),
    };
}

JudgeOptions sequential()
{
    JudgeOptions o;
    o.retry.base_backoff = std::chrono::milliseconds(0);
    o.parallel = false;
    return o;
}

DialogueEvaluation evaluation_with(std::string id, std::array<int, 4> scores)
{
    DialogueEvaluation e;
    e.dialogue_id = std::move(id);
    e.model_id = "judge";
    e.status = EvaluationStatus::Success;
    int sum = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        e.verdicts.push_back({all_criteria[i], scores[i], "r", "raw", "judge"});
        sum += scores[i];
    }
    e.mean_score = sum / 4.0;
    return e;
}

} // namespace

TEST(JudgeGrammar, WorkedExample)
{
    auto const raw = read_fixture("judge_worked_example.txt");
    auto const parsed = parse_judge_response(raw);
    EXPECT_EQ(parsed.score, 3);
    EXPECT_EQ(parsed.rationale.rfind("The simulator's question about over-efforting is highly relevant", 0), 0u);
    EXPECT_EQ(parsed.rationale.back(), '.');
}

TEST(JudgeGrammar, ToleratesCaseWhitespaceAndEmphasis)
{
    EXPECT_EQ(parse_judge_response("score: 2\n\nRationale:  vague context"), (ParsedJudgeResponse{2, "vague context"}));
    EXPECT_EQ(parse_judge_response("  **Score:** 1\n**Rationale:** off topic\n"), (ParsedJudgeResponse{1, "off topic"}));
    EXPECT_EQ(parse_judge_response("\n\nSCORE: 3  \nRATIONALE: fine"), (ParsedJudgeResponse{3, "fine"}));
    EXPECT_EQ(parse_judge_response("Preamble.\nScore: 2\nRationale: later\nScore: 3").score, 2);
}

TEST(JudgeGrammar, RejectsMalformedReplies)
{
    for (std::string bad : {"Score: 5\nRationale: x", "Score: 0\nRationale: x", "Score: 2.5\nRationale: x",
             "Score: two\nRationale: x", "Rationale: only", "Score: 2", "Score: 2\nRationale:   ", "", "garbage"}) {
        try {
            (void)parse_judge_response(bad);
            ADD_FAILURE() << "accepted: " << bad;
        } catch (ParseError const & e) {
            EXPECT_EQ(e.raw(), bad);
        }
    }
}

TEST(JudgeGrammar, FormatParseRoundTrip)
{
    for (int score = 1; score <= 3; ++score) {
        for (std::string rationale : {"short", "The question names the course level and the setting.", "a; b, c"}) {
            EXPECT_EQ(parse_judge_response(format_judge_response(score, rationale)),
                (ParsedJudgeResponse{score, rationale}));
        }
    }
}

TEST(JudgeGrammar, FuzzedInputsNeverEscapeTheParser)
{
    static constexpr std::array<std::string_view, 16> pieces{"Score", "score:", "Rationale:", ":", " ", "\n",
        "**", "1", "2", "3", "7", "-", ".", "\t", "x", "RATIONALE"};
    Rng rng(99);
    int accepted = 0;
    for (int i = 0; i < 10'000; ++i) {
        std::string s;
        auto const len = rng.uniform_index(24);
        for (std::size_t k = 0; k < len; ++k) {
            if (rng.uniform_index(5) == 0) {
                s.push_back(static_cast<char>(rng.uniform_index(256)));
            } else {
                s += pieces[rng.uniform_index(pieces.size())];
            }
        }
        try {
            auto const r = parse_judge_response(s);
            EXPECT_GE(r.score, 1);
            EXPECT_LE(r.score, 3);
            EXPECT_FALSE(r.rationale.empty());
            ++accepted;
        } catch (ParseError const &) {
        } catch (...) {
            ADD_FAILURE() << "unexpected exception for input of size " << s.size();
        }
    }
    EXPECT_GT(accepted, 0);
}

TEST(JudgePrompt, VerbatimTemplateAndTranscript)
{
    auto const d = make_dialogue("d", {"How do I start?"});
    auto const & rubric = default_rubric();
    ASSERT_EQ(rubric.size(), 4u);
    auto const prompt = render_judge_prompt(rubric[0], d);
    EXPECT_NE(prompt.find("Question aligns with common instructional challenges"), std::string::npos);
    EXPECT_NE(prompt.find("Conversation:\nInstructor: How do I start?\n"), std::string::npos);
    EXPECT_EQ(prompt.find("{conversation}"), std::string::npos);

    auto const sample = dialogue::parse_session(read_fixture("sample_transcript.json"));
    auto first3 = sample;
    first3.turns.resize(3);
    auto const transcript = render_transcript(first3);
    auto const lines = text::split_lines(transcript);
    ASSERT_GE(lines.size(), 3u);
    EXPECT_EQ(lines[0].rfind("Instructor: How can I effectively engage", 0), 0u);
    EXPECT_EQ(lines[1], "Expert: Hi Bob! What do you teach and what level are your students?");
    EXPECT_EQ(lines[2].rfind("Instructor: I teach advanced Biology", 0), 0u);
}

TEST(JudgeRubric, DataFileMatchesBuiltIn)
{
    auto const loaded = load_rubric(coachsim::testing::data_file("rubric.json"));
    ASSERT_EQ(loaded.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(loaded[i].id, default_rubric()[i].id);
        EXPECT_EQ(loaded[i].prompt_template, default_rubric()[i].prompt_template);
        EXPECT_EQ(loaded[i].level_descriptors.size(), 3u);
    }
    auto const again = parse_rubric(rubric_to_json(loaded));
    EXPECT_EQ(again.size(), 4u);
    auto broken = default_rubric()[0];
    broken.prompt_template = "no placeholder";
    EXPECT_THROW(broken.validate(), ConfigError);
    broken = default_rubric()[0];
    broken.level_descriptors.erase(2);
    EXPECT_THROW(broken.validate(), ConfigError);
}

TEST(JudgeEvaluate, ScriptedScoresGiveMean)
{
    auto mock = llm::scripted_mock(scores_3332());
    auto const d = make_dialogue("d1", {"How do I start?", "Ask them.", "Thanks?"});
    for (bool parallel : {false, true}) {
        auto options = sequential();
        options.parallel = parallel;
        auto const e = evaluate_dialogue(d, default_rubric(), *mock, options);
        EXPECT_EQ(e.status, EvaluationStatus::Success);
        ASSERT_EQ(e.verdicts.size(), 4u);
        ASSERT_TRUE(e.mean_score);
        EXPECT_DOUBLE_EQ(*e.mean_score, 2.75);
        EXPECT_EQ(e.verdicts[3].criterion_id, CriterionId::CoverageOfConcerns);
        EXPECT_EQ(e.verdicts[3].rationale, "narrow");
    }
    for (auto const & r : mock->requests()) {
        EXPECT_EQ(r.temperature, 0.0);
        EXPECT_EQ(r.model_id, "gpt-4o");
    }
}

TEST(JudgeEvaluate, AllThreesGiveThree)
{
    auto mock = llm::scripted_mock({reply("", "Score: 3\nRationale: r", true)});
    auto const e = evaluate_dialogue(make_dialogue("d", {"Q?"}), default_rubric(), *mock, sequential());
    EXPECT_DOUBLE_EQ(e.mean_score.value(), 3.0);
}

TEST(JudgeEvaluate, GarbageTwiceFailsOneCriterion)
{
    auto script = scores_3332();
    script.insert(script.begin(), reply("focused on Cognitive Depth", "I cannot rate this.", true));
    auto mock = llm::scripted_mock(script);
    auto const e = evaluate_dialogue(make_dialogue("d", {"Q?"}), default_rubric(), *mock, sequential());
    EXPECT_EQ(e.status, EvaluationStatus::Failed);
    EXPECT_EQ(e.verdicts.size(), 3u);
    ASSERT_EQ(e.errors.size(), 1u);
    EXPECT_EQ(e.errors[0].rfind("COGNITIVE_DEPTH", 0), 0u);
    EXPECT_FALSE(e.mean_score);
    EXPECT_EQ(mock->call_count(), 5u);
}

TEST(JudgeEvaluate, GarbageOnceIsRetried)
{
    auto script = scores_3332();
    script.insert(script.begin(), reply("focused on Cognitive Depth", "Hmm."));
    auto mock = llm::scripted_mock(script);
    auto const e = evaluate_dialogue(make_dialogue("d", {"Q?"}), default_rubric(), *mock, sequential());
    EXPECT_EQ(e.status, EvaluationStatus::Success);
    EXPECT_EQ(mock->call_count(), 5u);
}

TEST(JudgeEvaluate, OnlyCompletedDialogues)
{
    auto mock = llm::scripted_mock(scores_3332());
    auto d = make_dialogue("d", {"Q?"});
    d.status = dialogue::SessionStatus::Active;
    EXPECT_THROW((void)evaluate_dialogue(d, default_rubric(), *mock, sequential()), StateError);
}

TEST(JudgeEvaluate, CompletenessRequiresFourDistinctCriteria)
{
    auto e = evaluation_with("x", {3, 3, 3, 3});
    EXPECT_TRUE(is_complete(e.verdicts));
    e.verdicts[3].criterion_id = CriterionId::PedagogicalRelevance;
    EXPECT_FALSE(is_complete(e.verdicts));
    e.verdicts.pop_back();
    EXPECT_FALSE(is_complete(e.verdicts));
}

TEST(JudgeStore, PersistsByDialogueAndModel)
{
    coachsim::testing::TempDir dir;
    EvaluationStore store(dir.path());
    auto e = evaluation_with("dlg/1", {3, 2, 1, 3});
    e.model_id = "gpt-4o";
    store.save(e);
    auto const back = store.load("dlg/1", "gpt-4o");
    ASSERT_TRUE(back);
    EXPECT_EQ(to_document(*back), to_document(e));
    EXPECT_FALSE(store.load("dlg/1", "other"));
}

TEST(JudgeAggregate, TwoDialoguesMeanAndSampleSd)
{
    std::vector<DialogueEvaluation> evals{evaluation_with("a", {3, 3, 3, 3}), evaluation_with("b", {3, 2, 3, 2})};
    auto const r = aggregate_evaluations(evals);
    EXPECT_EQ(r.n, 2u);
    EXPECT_DOUBLE_EQ(r.mean, 2.75);
    ASSERT_TRUE(r.sd);
    EXPECT_NEAR(*r.sd, std::sqrt(0.125), 1e-12);
    EXPECT_NEAR(*r.sd, 0.3536, 5e-5);
    EXPECT_EQ(r.histograms.at(CriterionId::CognitiveDepth), (std::array<std::size_t, 3>{0, 1, 1}));
    EXPECT_NE(r.histogram_csv().find("COGNITIVE_DEPTH,2,1\n"), std::string::npos);
    EXPECT_EQ(r.histogram_csv().rfind("criterion,score,count\n", 0), 0u);
}

TEST(JudgeAggregate, AllThreesHaveZeroSpread)
{
    std::vector<DialogueEvaluation> evals{evaluation_with("a", {3, 3, 3, 3}), evaluation_with("b", {3, 3, 3, 3})};
    auto const r = aggregate_evaluations(evals);
    EXPECT_DOUBLE_EQ(r.mean, 3.0);
    EXPECT_DOUBLE_EQ(r.sd.value(), 0.0);
    for (auto id : all_criteria) {
        EXPECT_EQ(r.histograms.at(id), (std::array<std::size_t, 3>{0, 0, 2}));
    }
}

TEST(JudgeAggregate, SingleDialogueHasNoSd)
{
    std::vector<DialogueEvaluation> evals{evaluation_with("a", {3, 2, 3, 3})};
    auto const r = aggregate_evaluations(evals);
    EXPECT_FALSE(r.sd);
    EXPECT_NE(r.summary_json().find("\"sd\": null"), std::string::npos);
}

TEST(JudgeAggregate, FailedEvaluationsAreSkippedAndEmptyInputErrors)
{
    DialogueEvaluation failed;
    failed.status = EvaluationStatus::Failed;
    std::vector<DialogueEvaluation> only_failed{failed};
    EXPECT_THROW((void)aggregate_evaluations(only_failed), EmptyInputError);
    EXPECT_THROW((void)aggregate_evaluations({}), EmptyInputError);
    std::vector<DialogueEvaluation> mixed{failed, evaluation_with("a", {1, 2, 3, 2})};
    auto const r = aggregate_evaluations(mixed);
    EXPECT_EQ(r.n, 1u);
    EXPECT_EQ(r.failed, 1u);
}

TEST(JudgeAggregate, PermutationInvariant)
{
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<DialogueEvaluation> evals;
        auto const n = 2 + rng.uniform_index(15);
        for (std::size_t i = 0; i < n; ++i) {
            std::array<int, 4> s{};
            for (auto & v : s) {
                v = 1 + static_cast<int>(rng.uniform_index(3));
            }
            evals.push_back(evaluation_with("d" + std::to_string(i), s));
        }
        auto const base = aggregate_evaluations(evals);
        for (int p = 0; p < 5; ++p) {
            for (std::size_t i = evals.size() - 1; i > 0; --i) {
                std::swap(evals[i], evals[rng.uniform_index(i + 1)]);
            }
            auto const r = aggregate_evaluations(evals);
            EXPECT_EQ(r.mean, base.mean);
            EXPECT_EQ(r.sd, base.sd);
            EXPECT_EQ(r.histograms, base.histograms);
            EXPECT_EQ(r.summary_json(), base.summary_json());
        }
    }
}
