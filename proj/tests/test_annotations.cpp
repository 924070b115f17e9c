#include "coachsim/annotations.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace coachsim;
using namespace coachsim::stats;
using coachsim::testing::fixture;

namespace {

std::size_t error_row(std::string const & table)
{
    try {
        (void)ingest_annotations(table);
    } catch (AnnotationError const & e) {
        return e.row();
    }
    ADD_FAILURE() << "accepted: " << table;
    return 999;
}

std::string const kHeader = "dialogue_id,model_label,rater_id,criterion,score\n";

} // namespace

TEST(Annotations, PerfectAgreementOnOneDialogue)
{
    std::string table = kHeader;
    for (auto c : all_expert_criteria) {
        for (std::string rater : {"r1", "r2"}) {
            table += "d1,expert," + rater + "," + std::string(to_string(c)) + ",3\n";
        }
    }
    auto const set = ingest_annotations(table);
    ASSERT_EQ(set.models.size(), 1u);
    auto const & m = set.models[0];
    EXPECT_EQ(m.pooled.counts, (std::vector<std::vector<std::int64_t>>{{0, 0, 0}, {0, 0, 0}, {0, 0, 4}}));
    ASSERT_TRUE(m.kappa);
    EXPECT_DOUBLE_EQ(m.kappa->kappa, 1.0);
    EXPECT_TRUE(m.unmatched.empty());
    EXPECT_EQ(set.raters, std::make_pair(std::string("r1"), std::string("r2")));
}

TEST(Annotations, TenDialogueFixtureMatchesReference)
{
    // Matrices and kappas from sklearn.metrics.cohen_kappa_score(weights="quadratic").
    auto const set = load_annotations(fixture("annotations_10.csv"));
    EXPECT_EQ(set.records.size(), 160u);
    ASSERT_EQ(set.models.size(), 2u);
    EXPECT_EQ(set.raters, std::make_pair(std::string("rater_a"), std::string("rater_b")));

    auto const & sft = set.models[0];
    EXPECT_EQ(sft.model_label, "expert-sft");
    EXPECT_EQ(sft.pooled.counts, (std::vector<std::vector<std::int64_t>>{{3, 2, 0}, {2, 14, 3}, {1, 2, 13}}));
    EXPECT_NEAR(sft.kappa->kappa, 0.6533333333333333, 1e-12);

    auto const & gpt = set.models[1];
    EXPECT_EQ(gpt.model_label, "gpt-4o");
    EXPECT_EQ(gpt.pooled.counts, (std::vector<std::vector<std::int64_t>>{{7, 1, 0}, {2, 8, 2}, {3, 5, 12}}));
    EXPECT_NEAR(gpt.kappa->kappa, 0.5833333333333333, 1e-12);
}

TEST(Annotations, CriterionSummariesAgreeWithRecords)
{
    auto const set = load_annotations(fixture("annotations_10.csv"));
    for (auto const & m : set.models) {
        for (auto const & s : m.criteria) {
            std::vector<double> values;
            for (auto const & r : set.records) {
                if (r.model_label == m.model_label && r.criterion == s.criterion
                    && (s.rater_id.empty() || r.rater_id == s.rater_id)) {
                    values.push_back(r.score);
                }
            }
            ASSERT_EQ(static_cast<std::size_t>(s.n), values.size());
            auto const expected = summarize(values);
            EXPECT_NEAR(s.mean, expected.mean, 1e-12);
            EXPECT_NEAR(s.sd.value(), expected.sd, 1e-12);
        }
        EXPECT_EQ(m.criteria.size(), 12u);
    }
    auto const csv = set.criteria_csv();
    EXPECT_EQ(csv.rfind("model_label,criterion,rater_id,n,mean,sd\n", 0), 0u);
    EXPECT_NE(csv.find("expert-sft,CLARITY_OF_EXPRESSION,all,20,"), std::string::npos);
}

TEST(Annotations, UnmatchedItemsAreReported)
{
    auto const set = ingest_annotations(kHeader
        + "d1,m,r1,Reflective Prompting,2\n"
          "d1,m,r2,reflective_prompting,2\n"
          "d2,m,r1,SUPPORTIVE_TONE,1\n");
    auto const & m = set.models[0];
    EXPECT_EQ(m.pooled.total(), 1);
    ASSERT_EQ(m.unmatched.size(), 1u);
    EXPECT_EQ(m.unmatched[0].dialogue_id, "d2");
    EXPECT_EQ(m.unmatched[0].rater_id, "r1");
    EXPECT_EQ(set.summary_json()["models"][0]["unmatched"].size(), 1u);
}

TEST(Annotations, ErrorsCarryRowNumbers)
{
    EXPECT_EQ(error_row(kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,4\n"), 2u);
    EXPECT_EQ(error_row(kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,2\nd1,m,r2,CLARITY_OF_EXPRESSION,x\n"), 3u);
    EXPECT_EQ(error_row(kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,2\nd1,m,r1,CLARITY_OF_EXPRESSION,3\n"), 3u);
    EXPECT_NO_THROW((void)ingest_annotations(
        kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,2\nd1,other,r1,CLARITY_OF_EXPRESSION,3\n"
                  "d1,m,r2,CLARITY_OF_EXPRESSION,2\nd1,other,r2,CLARITY_OF_EXPRESSION,3\n"));
    EXPECT_EQ(error_row(kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,2\nd1,m,r2,CLARITY_OF_EXPRESSION,2\n"
                                  "d1,m,r3,CLARITY_OF_EXPRESSION,2\n"),
        4u);
    EXPECT_EQ(error_row(kHeader + "d1,m,r1,Humor,2\n"), 2u);
    EXPECT_EQ(error_row(kHeader + "d1,m,r1\n"), 2u);
    EXPECT_EQ(error_row(kHeader + ",m,r1,CLARITY_OF_EXPRESSION,2\n"), 2u);
    EXPECT_EQ(error_row("dialogue_id,model_label,rater_id,score\n"), 1u);
    EXPECT_EQ(error_row(kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,2\n"), 0u);
    EXPECT_EQ(error_row(""), 0u);
    try {
        (void)ingest_annotations(kHeader + "d1,m,r1,CLARITY_OF_EXPRESSION,0\n");
    } catch (AnnotationError const & e) {
        EXPECT_EQ(std::string(e.what()), "row 2: score 0 is outside 1-3");
    }
}

TEST(Annotations, CsvSplitting)
{
    EXPECT_EQ(split_csv_line(R"(a,"b, c","say ""hi""",)"),
        (std::vector<std::string>{"a", "b, c", "say \"hi\"", ""}));
    EXPECT_THROW((void)split_csv_line(R"(a,"open)"), ValidationError);
}

TEST(Annotations, CriterionNames)
{
    for (auto c : all_expert_criteria) {
        EXPECT_EQ(parse_expert_criterion(to_string(c)), c);
        EXPECT_EQ(parse_expert_criterion(display_name(c)), c);
    }
    EXPECT_EQ(display_name(ExpertCriterion::SupportiveTone), "Supportive & Appropriate Tone");
    EXPECT_FALSE(parse_expert_criterion("Tone"));
}
