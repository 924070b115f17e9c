#include "coachsim/judge.hpp"
#include "coachsim/persona.hpp"
#include "coachsim/random.hpp"
#include "coachsim/stats.hpp"
#include "coachsim/text.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

using namespace coachsim;

namespace {

void BM_WelchTTest(benchmark::State & state)
{
    stats::SummaryStats const a{293.78, 181.20, 60, "a"};
    stats::SummaryStats const b{385.46, 276.28, 54, "b"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(stats::welch_t_test(a, b));
    }
}
BENCHMARK(BM_WelchTTest);

void BM_WeightedKappa(benchmark::State & state)
{
    auto const k = static_cast<std::size_t>(state.range(0));
    auto m = stats::RatingMatrix::zeros(k);
    Rng rng(1);
    for (auto & row : m.counts) {
        for (auto & c : row) {
            c = static_cast<std::int64_t>(rng.uniform_index(50));
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(stats::weighted_kappa(m));
    }
}
BENCHMARK(BM_WeightedKappa)->Arg(3)->Arg(5)->Arg(10);

void BM_ParseJudgeResponse(benchmark::State & state)
{
    std::string const reply = "Score: 3\nRationale: The question targets a common classroom challenge and asks for "
                              "concrete strategies the instructor can apply next week.";
    for (auto _ : state) {
        benchmark::DoNotOptimize(judge::parse_judge_response(reply));
    }
}
BENCHMARK(BM_ParseJudgeResponse);

void BM_CountSentences(benchmark::State & state)
{
    std::string text;
    for (int i = 0; i < state.range(0); ++i) {
        text += "Have you tried pairing students before the discussion starts? It often helps. ";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(text::count_sentences(text));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_CountSentences)->Arg(1)->Arg(16)->Arg(256);

void BM_SamplePersona(benchmark::State & state)
{
    std::filesystem::path const dir(COACHSIM_BENCH_DATA);
    auto const pools = persona::load_attribute_pools(dir / "pools.txt");
    auto const bank = persona::load_challenge_bank(dir / "challenges.jsonl");
    Rng rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(persona::sample_persona(pools, bank, rng));
    }
}
BENCHMARK(BM_SamplePersona);

} // namespace

BENCHMARK_MAIN();
