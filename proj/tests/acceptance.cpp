// Acceptance suite: one PASS/FAIL line per primary criterion; exits 1 if any fails.

#include "coachsim/augment.hpp"
#include "coachsim/corpus_stats.hpp"
#include "coachsim/dialogue.hpp"
#include "coachsim/engine.hpp"
#include "coachsim/error.hpp"
#include "coachsim/judge.hpp"
#include "coachsim/persona.hpp"
#include "coachsim/sft.hpp"
#include "coachsim/stats.hpp"

#include "synthetic_corpus.hpp"
#include "test_support.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace coachsim;
using namespace coachsim::testing;

namespace {

using SteadyClock = std::chrono::steady_clock;

/// Collects failures for one criterion.
class Check
{
public:
    void expect(bool ok, std::string const & what)
    {
        if (!ok && first_.empty()) {
            first_ = what;
        }
        failures_ += ok ? 0 : 1;
    }

    void near(double actual, double expected, double tol, std::string const & what)
    {
        std::ostringstream s;
        s << what << ": got " << actual << ", want " << expected << " +/- " << tol;
        expect(std::abs(actual - expected) <= tol, s.str());
    }

    [[nodiscard]] bool ok() const noexcept { return failures_ == 0; }
    [[nodiscard]] std::string const & first() const noexcept { return first_; }
    [[nodiscard]] int failures() const noexcept { return failures_; }

private:
    int failures_ = 0;
    std::string first_;
};

double ms_since(SteadyClock::time_point start)
{
    return std::chrono::duration<double, std::milli>(SteadyClock::now() - start).count();
}

int failed_criteria = 0;

void criterion(std::string const & name, std::function<void(Check &)> const & body)
{
    Check check;
    auto const start = SteadyClock::now();
    try {
        body(check);
    } catch (std::exception const & e) {
        check.expect(false, std::string("exception: ") + e.what());
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.1f ms", ms_since(start));
    if (check.ok()) {
        std::cout << "PASS " << name << " (" << timing << ")\n";
    } else {
        ++failed_criteria;
        std::cout << "FAIL " << name << " (" << timing << "): " << check.first() << " [" << check.failures()
                  << " failed check(s)]\n";
    }
}

std::string run_process(std::string const & command)
{
    std::string output;
    FILE * pipe = popen(command.c_str(), "r");
    if (!pipe) {
        throw std::runtime_error("popen failed: " + command);
    }
    std::array<char, 4096> buf{};
    while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) {
        output.append(buf.data(), n);
    }
    int const status = pclose(pipe);
    if (status != 0) {
        throw std::runtime_error("command exited with status " + std::to_string(status) + ": " + command);
    }
    return output;
}

/// Agreement-weight form of the quadratic kappa: (P_o - P_e) / (1 - P_e).
std::optional<double> kappa_by_definition(std::vector<std::vector<std::int64_t>> const & m)
{
    auto const k = m.size();
    long double n = 0;
    std::vector<long double> rows(k, 0), cols(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            n += m[i][j];
            rows[i] += m[i][j];
            cols[j] += m[i][j];
        }
    }
    long double po = 0;
    long double pe = 0;
    long double const span = static_cast<long double>((k - 1) * (k - 1));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            long double const d = static_cast<long double>(i) - static_cast<long double>(j);
            long double const w = 1 - d * d / span;
            po += w * m[i][j] / n;
            pe += w * (rows[i] / n) * (cols[j] / n);
        }
    }
    if (pe == 1) {
        return std::nullopt;
    }
    return static_cast<double>((po - pe) / (1 - pe));
}

std::string valid_candidate(std::size_t n)
{
    return "[INSTRUCTOR]\nHow should I structure review session number " + std::to_string(n)
        + " before the exam?\n[EXPERT]\nWhat do students struggle with most?\n[INSTRUCTOR]\nMostly the proofs.\n";
}

std::string invalid_candidate(std::size_t n)
{
    return "[INSTRUCTOR]\nShould I try variant " + std::to_string(n) + "?\n[EXPERT]\nMaybe.\n";
}

std::vector<dialogue::DialogueSession> augment_seeds()
{
    auto sample = dialogue::parse_session(read_fixture("sample_transcript.json"));
    sample.id = "sample-transcript";
    return {sample, make_dialogue("seed-2", {"How do I grade group projects fairly?", "Use peer evaluations.", "Thanks!"}),
        make_dialogue("seed-3", {"How do I start a lab session?", "With a safety check.", "Got it."}),
        make_dialogue("seed-4", {"How do I pace a seminar?", "Time-box each segment.", "Okay."})};
}

augment::AugmentJob quick_job(std::size_t target)
{
    augment::AugmentJob job;
    job.target_count = target;
    job.seed = 7;
    job.retry.base_backoff = std::chrono::milliseconds(0);
    job.retry.max_attempts = 1;
    return job;
}

std::vector<llm::ScriptEntry> judge_scores_3332()
{
    return {
        reply("focused on Pedagogical Relevance", "Score: 3\nRationale: relevant", true),
        reply("focused on Cognitive Depth", "Score: 3\nRationale: deep", true),
        reply("focused on Instructional Contextualization", "Score: 3\nRationale: contextual", true),
        reply("focused on Coverage", "Score: 2\nRationale: narrow", true),
    };
}

// ---------------------------------------------------------------------------

void welch_reproduction(Check & c)
{
    stats::SummaryStats const a{293.78, 181.20, 60, "introverted"};
    stats::SummaryStats const b{385.46, 276.28, 54, "extroverted"};
    auto const start = SteadyClock::now();
    auto const r = stats::welch_t_test(a, b);
    double const elapsed = ms_since(start);
    c.near(r.t, -2.07, 0.005, "t");
    c.near(r.df, 89.88, 0.05, "df");
    c.near(r.p_two_sided, 0.041, 0.001, "p");
    c.near(r.ci_low, -179.65, 0.05, "ci_low");
    c.near(r.ci_high, -3.71, 0.05, "ci_high");
    c.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + " ms >= 1 ms");
}

void kappa_oracle(Check & c)
{
    Rng rng(2024);
    std::vector<stats::RatingMatrix> matrices;
    for (int i = 0; i < 1000; ++i) {
        auto m = stats::RatingMatrix::zeros(3);
        do {
            for (auto & row : m.counts) {
                for (auto & cell : row) {
                    cell = rng.uniform_index(4) == 0 ? 0 : static_cast<std::int64_t>(rng.uniform_index(30));
                }
            }
        } while (m.total() == 0);
        matrices.push_back(std::move(m));
    }
    auto const start = SteadyClock::now();
    std::vector<stats::KappaResult> results;
    results.reserve(matrices.size());
    for (auto const & m : matrices) {
        results.push_back(stats::weighted_kappa(m));
    }
    double const elapsed = ms_since(start);
    for (std::size_t i = 0; i < matrices.size(); ++i) {
        auto const oracle = kappa_by_definition(matrices[i].counts);
        if (!oracle) {
            c.expect(results[i].degenerate, "matrix " + std::to_string(i) + " should be degenerate");
            continue;
        }
        c.near(results[i].kappa, *oracle, 1e-9, "matrix " + std::to_string(i));
    }
    auto identity = stats::RatingMatrix::zeros(3);
    identity.counts = {{5, 0, 0}, {0, 7, 0}, {0, 0, 4}};
    c.near(stats::weighted_kappa(identity).kappa, 1.0, 1e-12, "identity");
    auto uniform = stats::RatingMatrix::zeros(2);
    uniform.counts = {{1, 1}, {1, 1}};
    c.near(stats::weighted_kappa(uniform).kappa, 0.0, 1e-12, "uniform 2x2");
    c.expect(elapsed < 1000.0, "runtime " + std::to_string(elapsed) + " ms >= 1 s");
}

void judge_grammar(Check & c)
{
    auto const parsed = judge::parse_judge_response(read_fixture("judge_worked_example.txt"));
    c.expect(parsed.score == 3, "worked example score");
    c.expect(parsed.rationale.rfind("The simulator's question about over-efforting", 0) == 0,
        "worked example rationale");

    Rng rng(5);
    for (int i = 0; i < 10'000; ++i) {
        std::string s;
        auto const len = rng.uniform_index(40);
        for (std::size_t k = 0; k < len; ++k) {
            switch (rng.uniform_index(6)) {
            case 0: s += "Score:"; break;
            case 1: s += "Rationale:"; break;
            case 2: s += std::to_string(rng.uniform_index(5)); break;
            case 3: s += '\n'; break;
            default: s.push_back(static_cast<char>(rng.uniform_index(256)));
            }
        }
        try {
            auto const r = judge::parse_judge_response(s);
            c.expect(r.score >= 1 && r.score <= 3, "fuzz accepted out-of-range score");
        } catch (ParseError const &) {
        } catch (...) {
            c.expect(false, "fuzz input escaped with a non-ParseError exception");
        }
    }
    for (int score = 1; score <= 3; ++score) {
        auto const r = judge::parse_judge_response(judge::format_judge_response(score, "Because it fits."));
        c.expect(r.score == score && r.rationale == "Because it fits.", "round trip for score " + std::to_string(score));
    }
}

void persona_sampling(Check & c)
{
    std::string const cli = COACHSIM_CLI_PATH;
    std::string const cmd = "'" + cli + "' persona sample --seed 20240601 --count 25 --text";
    auto const first = run_process(cmd);
    auto const second = run_process(cmd);
    c.expect(!first.empty(), "CLI produced no output");
    c.expect(first == second, "two process runs differ");

    auto const sources = bundled_sources();
    Rng rng(77);
    std::map<persona::Trait, int> high;
    int constexpr draws = 10'000;
    for (int i = 0; i < draws; ++i) {
        auto const p = persona::sample_persona(sources.pools, sources.bank, rng);
        for (auto t : {persona::Trait::Openness, persona::Trait::Conscientiousness, persona::Trait::Extroversion,
                 persona::Trait::Agreeableness}) {
            high[t] += p.traits.get(t) == persona::Pole::High ? 1 : 0;
        }
    }
    for (auto const & [trait, count] : high) {
        double const f = static_cast<double>(count) / draws;
        c.expect(f >= 0.45 && f <= 0.55,
            std::string(persona::to_string(trait)) + " high-pole frequency " + std::to_string(f));
    }

    auto p = persona::sample_persona(sources.pools, sources.bank, rng);
    p.discipline = "Law";
    p.classroom_context = "laboratory";
    auto const verdict = persona::verify_coherence(p, sources.rules, persona::VerificationMode::Rules);
    c.expect(!verdict.coherent, "(Law, laboratory) accepted by the rule verifier");
}

void session_state_machine(Check & c)
{
    class Switchable : public llm::ChatProvider
    {
    public:
        llm::ChatProvider * inner = nullptr;
        llm::ChatResponse send(llm::ChatRequest const & request, std::chrono::milliseconds timeout) override
        {
            return inner->send(request, timeout);
        }
    };

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TempDir dir;
        dialogue::SessionStore store(dir.path());
        auto good = llm::scripted_mock(session_script());
        auto bad = llm::scripted_mock({fail("", llm::FailureKind::Transient, true)});
        Switchable provider;
        provider.inner = good.get();
        dialogue::DialogueEngine engine(bundled_sources(), provider, store, fast_options(), stepping_clock());
        Rng rng(seed);
        Rng ops(seed * 31);
        std::vector<std::string> ids;
        std::map<std::string, dialogue::SessionStatus> status;
        for (int step = 0; step < 40; ++step) {
            auto const op = ops.uniform_index(ids.empty() ? 1 : 5);
            if (op == 0) {
                auto const s = engine.create_session(rng);
                ids.push_back(s->id);
                status[s->id] = dialogue::SessionStatus::Active;
                continue;
            }
            auto const id = ids[ops.uniform_index(ids.size())];
            try {
                if (op == 1) {
                    (void)engine.post_expert_turn(id, "advice " + std::to_string(step));
                } else if (op == 2) {
                    provider.inner = bad.get();
                    auto const before = text::read_file(store.session_path(id));
                    try {
                        (void)engine.post_expert_turn(id, "lost");
                    } catch (Error const &) {
                    }
                    provider.inner = good.get();
                    c.expect(text::read_file(store.session_path(id)) == before, "failed turn changed persisted state");
                } else if (op == 3) {
                    (void)engine.complete_session(id);
                    status[id] = dialogue::SessionStatus::Completed;
                } else {
                    (void)engine.discard_session(id);
                    status[id] = dialogue::SessionStatus::Discarded;
                }
            } catch (StateError const &) {
            }
            auto const snap = engine.get(id);
            c.expect(snap->status == status[id], "status diverged for " + id);
            for (std::size_t i = 0; i < snap->turns.size(); ++i) {
                auto const want = i % 2 == 0 ? dialogue::Speaker::Novice : dialogue::Speaker::Expert;
                c.expect(snap->turns[i].role == want && snap->turns[i].index == i, "alternation violated in " + id);
            }
        }
        auto const exported = dialogue::parse_corpus(engine.export_corpus());
        for (auto const & s : exported) {
            c.expect(status[s.id] == dialogue::SessionStatus::Completed, "export contains non-completed " + s.id);
        }
    }

    auto const raw = read_fixture("sample_transcript.json");
    auto const sample = dialogue::parse_session(raw);
    c.expect(dialogue::parse_session(dialogue::serialize_session(sample)) == sample, "transcript round trip");
    std::vector<dialogue::DialogueSession> const corpus{sample};
    c.expect(sft::export_sft(corpus).size() == 8, "transcript should give 8 training examples");
}

void augmentation_filter(Check & c)
{
    augment::OpenerIndex openers;
    auto const seeds = augment_seeds();
    openers.insert(seeds.front().turns.front().content);
    std::vector<std::pair<std::string, augment::RejectReason>> const cases{
        {"unparseable.txt", augment::RejectReason::Unparseable},
        {"wrong_first_role.txt", augment::RejectReason::WrongFirstRole},
        {"non_alternating.txt", augment::RejectReason::NonAlternating},
        {"no_terminal_question_mark.txt", augment::RejectReason::NoTerminalQuestionMark},
        {"too_few_turns.txt", augment::RejectReason::TooFewTurns},
        {"duplicate_opener.txt", augment::RejectReason::DuplicateOpener},
    };
    for (auto const & [file, reason] : cases) {
        auto const v = augment::format_violations(read_fixture("augment/" + file), openers);
        c.expect(v == std::vector<augment::RejectReason>{reason}, file + " should trigger only its reason");
    }

    std::vector<llm::ScriptEntry> script;
    for (std::size_t i = 0; i < 20; ++i) {
        script.push_back(reply("Write one new", invalid_candidate(i)));
        script.push_back(reply("Write one new", valid_candidate(i)));
    }
    auto mock = llm::scripted_mock(script);
    auto const result = augment::synthesize_batch(quick_job(20), seeds, *mock);
    c.expect(result.report.accepted == 20, "accepted " + std::to_string(result.report.accepted) + ", want 20");
    c.expect(result.report.rejected.size() == 20,
        "rejected " + std::to_string(result.report.rejected.size()) + ", want 20");
}

void offline_end_to_end(Check & c)
{
    auto const start = SteadyClock::now();
    TempDir dir;
    dialogue::SessionStore store(dir.path() / "sessions");
    auto novice = llm::scripted_mock(session_script());
    dialogue::DialogueEngine engine(bundled_sources(), *novice, store, fast_options(), stepping_clock());
    Rng rng(99);
    for (int i = 0; i < 5; ++i) {
        auto const s = engine.create_session(rng);
        (void)engine.post_expert_turn(s->id, "Start by asking what they already tried.");
        (void)engine.complete_session(s->id);
    }
    auto const corpus = engine.completed_sessions();
    c.expect(corpus.size() == 5, "five completed sessions");

    auto judge_mock = llm::scripted_mock(judge_scores_3332());
    judge::JudgeOptions options;
    options.retry.base_backoff = std::chrono::milliseconds(0);
    std::vector<judge::DialogueEvaluation> evaluations;
    for (auto const & d : corpus) {
        evaluations.push_back(judge::evaluate_dialogue(d, judge::default_rubric(), *judge_mock, options));
        c.expect(evaluations.back().mean_score && *evaluations.back().mean_score == 2.75, "per-dialogue mean 2.75");
    }
    auto const report = judge::aggregate_evaluations(evaluations);
    c.near(report.mean, 2.75, 1e-12, "judge corpus mean");

    std::vector<llm::ScriptEntry> script;
    for (std::size_t i = 0; i < 10; ++i) {
        script.push_back(reply("Write one new", valid_candidate(100 + i)));
    }
    auto augment_mock = llm::scripted_mock(script);
    auto const augmented = augment::synthesize_batch(quick_job(10), corpus, *augment_mock);
    c.expect(augmented.accepted.size() == 10, "augmented to 10");

    auto all = corpus;
    all.insert(all.end(), augmented.accepted.begin(), augmented.accepted.end());
    auto const examples = sft::export_sft(all);
    auto const jsonl = sft::to_jsonl(examples);
    text::write_file_atomic(dir.path() / "sft.jsonl", jsonl);
    c.expect(examples.size() == 5 + 10, "one example per expert turn");

    auto const described = stats::describe_corpus(trait_split_corpus(), 3);
    c.expect(described.excluded_short == 1, "short dialogue filtered");
    auto const cmp = stats::group_compare(
        described, stats::GroupKey::by_trait(persona::Trait::Extroversion), stats::Metric::WordsExpert);
    c.near(cmp.welch.t, -2.07, 0.005, "trait-split t");
    c.near(cmp.welch.p_two_sided, 0.041, 0.001, "trait-split p");

    double const elapsed = ms_since(start);
    c.expect(elapsed < 5000.0, "pipeline took " + std::to_string(elapsed) + " ms");
}

void corpus_descriptive_stats(Check & c)
{
    auto const corpus = dialogue::parse_corpus(read_fixture("stats_corpus.json"));
    auto const s = stats::describe_corpus(corpus);
    c.expect(s.records.size() == 4, "four dialogues");
    c.expect(s.total_turns == 15, "total turns 15");
    c.expect(s.total_words_novice == 28, "novice words 28");
    c.expect(s.total_words_expert == 22, "expert words 22");
    c.near(s.turns.mean, 3.75, 1e-12, "mean turns");
    c.near(s.turns.sd.value_or(-1), 1.707825127659933, 1e-12, "turn SD");
    c.near(s.words_novice.sd.value_or(-1), 4.242640687119285, 1e-12, "novice word SD");
    c.near(s.words_expert.sd.value_or(-1), 4.041451884327381, 1e-12, "expert word SD");

    auto const filtered = stats::describe_corpus(corpus, 3);
    c.expect(filtered.records.size() == 3 && filtered.excluded_short == 1, "min_turns=3 drops the 2-turn dialogue");
    c.expect(filtered.total_turns == 13, "filtered total turns 13");
    c.near(filtered.turns.sd.value_or(-1), 1.5275252316519468, 1e-12, "filtered turn SD");
}

} // namespace

int main()
{
    criterion("welch-reproduction", welch_reproduction);
    criterion("kappa-oracle-equivalence", kappa_oracle);
    criterion("judge-grammar", judge_grammar);
    criterion("persona-sampling", persona_sampling);
    criterion("session-state-machine", session_state_machine);
    criterion("augmentation-filter", augmentation_filter);
    criterion("offline-end-to-end", offline_end_to_end);
    criterion("corpus-descriptive-stats", corpus_descriptive_stats);
    std::cout << (failed_criteria == 0 ? "ALL PASS" : std::to_string(failed_criteria) + " criteria failed") << '\n';
    return failed_criteria == 0 ? 0 : 1;
}
