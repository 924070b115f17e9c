#include "coachsim/random.hpp"
#include "coachsim/text.hpp"
#include "coachsim/time.hpp"
#include "coachsim/error.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <regex>
#include <set>

using namespace coachsim;

TEST(Text, CountWordsUsesWhitespaceRuns)
{
    EXPECT_EQ(text::count_words(""), 0u);
    EXPECT_EQ(text::count_words("   \t\n"), 0u);
    EXPECT_EQ(text::count_words("a b c"), 3u);
    EXPECT_EQ(text::count_words("  a\t\tb \n c  "), 3u);
    EXPECT_EQ(text::count_words("don't stop-now, ok?"), 3u);
}

TEST(Text, SentenceSplitterGolden)
{
    EXPECT_EQ(text::count_sentences("a. b. c."), 3u);
    EXPECT_EQ(text::count_sentences("One. Two! Three?"), 3u);
    EXPECT_EQ(text::count_sentences("No terminal punctuation"), 1u);
    EXPECT_EQ(text::count_sentences("Trailing words. after"), 2u);
    EXPECT_EQ(text::count_sentences(""), 0u);
    EXPECT_EQ(text::count_sentences("..."), 0u);
    EXPECT_EQ(text::count_sentences("Wait... what?"), 2u);
    EXPECT_EQ(text::count_sentences("Version 2.5 is out."), 1u);
    // No abbreviation handling: "e.g. x" splits after "e.g.".
    EXPECT_EQ(text::count_sentences("Use cues, e.g. names. Then wait."), 3u);
}

TEST(Text, NormalizeForDedup)
{
    EXPECT_EQ(text::normalize_for_dedup("  How   do I\tstart?? "), "how do i start");
    EXPECT_EQ(text::normalize_for_dedup("How do I start"), text::normalize_for_dedup("how do i START?"));
}

TEST(Text, Substitute)
{
    EXPECT_EQ(text::substitute("{x} and {x}", "{x}", "y"), "y and y");
    EXPECT_EQ(text::substitute("none", "{x}", "y"), "none");
    EXPECT_EQ(text::count_occurrences("{a}{a}{b}", "{a}"), 2u);
}

TEST(Text, WriteFileAtomicReplacesContents)
{
    coachsim::testing::TempDir dir;
    auto const p = dir.path() / "f.txt";
    text::write_file_atomic(p, "one");
    text::write_file_atomic(p, "two");
    EXPECT_EQ(text::read_file(p), "two");
    EXPECT_FALSE(std::filesystem::exists(p.string() + ".tmp"));
    EXPECT_THROW((void)text::read_file(dir.path() / "missing"), ConfigError);
}

TEST(Time, Iso8601RoundTrip)
{
    auto const ts = parse_iso8601("2025-03-14T09:26:53.589Z");
    EXPECT_EQ(format_iso8601(ts), "2025-03-14T09:26:53.589Z");
    EXPECT_EQ(format_iso8601(parse_iso8601("1970-01-01T00:00:00.000Z")), "1970-01-01T00:00:00.000Z");
    EXPECT_EQ(format_iso8601(parse_iso8601("2024-02-29T23:59:59.999Z")), "2024-02-29T23:59:59.999Z");
    EXPECT_THROW((void)parse_iso8601("2025-13-01T00:00:00.000Z"), FormatError);
    EXPECT_THROW((void)parse_iso8601("yesterday"), FormatError);
}

TEST(Time, UtcNowFormatsWithZuluSuffix)
{
    auto const s = format_iso8601(utc_now());
    EXPECT_TRUE(std::regex_match(s, std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\d\.\d{3}Z)"))) << s;
}

TEST(Random, SameSeedSameStream)
{
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) {
        ASSERT_EQ(a.next(), b.next());
    }
}

TEST(Random, UniformIndexStaysInRange)
{
    Rng rng(1);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        auto const v = rng.uniform_index(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) {
        EXPECT_GT(c, 800);
        EXPECT_LT(c, 1200);
    }
}

TEST(Random, SampleWithoutReplacementIsDistinct)
{
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto const picks = rng.sample_without_replacement(10, 3);
        ASSERT_EQ(picks.size(), 3u);
        std::set<std::size_t> unique(picks.begin(), picks.end());
        ASSERT_EQ(unique.size(), 3u);
        for (auto p : picks) {
            ASSERT_LT(p, 10u);
        }
    }
}

TEST(Random, Uuid4Shape)
{
    Rng rng(9);
    std::set<std::string> seen;
    for (int i = 0; i < 100; ++i) {
        auto const id = rng.uuid4();
        ASSERT_TRUE(std::regex_match(id, std::regex("[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}")))
            << id;
        seen.insert(id);
    }
    EXPECT_EQ(seen.size(), 100u);
}
