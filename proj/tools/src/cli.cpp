#include "coachsim/cli.hpp"

#include "coachsim/annotations.hpp"
#include "coachsim/augment.hpp"
#include "coachsim/config.hpp"
#include "coachsim/corpus_stats.hpp"
#include "coachsim/dialogue.hpp"
#include "coachsim/error.hpp"
#include "coachsim/judge.hpp"
#include "coachsim/persona.hpp"
#include "coachsim/random.hpp"
#include "coachsim/server.hpp"
#include "coachsim/sft.hpp"
#include "coachsim/stats.hpp"
#include "coachsim/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <thread>

namespace coachsim::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int)
{
    g_stop_requested = true;
}

std::string one_line(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

std::string fixed(double value, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

/// Shared --config / --mock handling for commands that talk to a provider.
struct ProviderFlags
{
    std::string config;
    std::string mock;

    [[nodiscard]] service::ProviderSettings settings() const
    {
        auto s = config.empty() ? service::ProviderSettings{} : service::load_config(config).provider;
        if (!mock.empty()) {
            s.mock_script = mock;
        }
        return s;
    }
};

void add_provider_flags(CLI::App & cmd, ProviderFlags & flags)
{
    cmd.add_option("--config", flags.config, "Service config file (provider settings)")->check(CLI::ExistingFile);
    cmd.add_option("--mock", flags.mock, "Scripted mock provider file; no network access")->check(CLI::ExistingFile);
}

std::vector<dialogue::DialogueSession> completed_only(std::vector<dialogue::DialogueSession> corpus)
{
    std::erase_if(corpus, [](auto const & s) { return s.status != dialogue::SessionStatus::Completed; });
    return corpus;
}

void write_output(fs::path const & path, std::string_view contents)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    text::write_file_atomic(path, contents);
}

stats::RatingMatrix parse_matrix(std::string const & spec)
{
    std::vector<std::vector<std::int64_t>> rows;
    std::string row;
    std::vector<std::string> row_texts;
    for (char c : spec) {
        if (c == ';') {
            row_texts.push_back(row);
            row.clear();
        } else {
            row += c;
        }
    }
    row_texts.push_back(row);
    for (auto const & rt : row_texts) {
        std::vector<std::int64_t> values;
        for (auto const & cell : stats::split_csv_line(rt)) {
            try {
                std::size_t used = 0;
                values.push_back(std::stoll(cell, &used));
                if (used != cell.size()) {
                    throw std::invalid_argument(cell);
                }
            } catch (std::logic_error const &) {
                throw ValidationError("matrix cell '" + cell + "' is not an integer");
            }
        }
        rows.push_back(std::move(values));
    }
    stats::RatingMatrix m = stats::RatingMatrix::zeros(rows.size());
    m.counts = std::move(rows);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------

struct ServeArgs
{
    std::string config;
    std::string mock;
    std::optional<int> port;
    std::optional<std::uint64_t> seed;
};

int run_serve(ServeArgs const & a, std::ostream & out)
{
    auto config = a.config.empty() ? service::default_config("coachsim-data") : service::load_config(a.config);
    if (!a.mock.empty()) {
        config.provider.mock_script = a.mock;
    }
    if (a.port) {
        config.port = *a.port;
    }
    service::ProviderStack providers(config.provider);
    service::Server server(config, providers.get(), {a.seed, utc_now});
    int const port = server.start();
    out << "listening on http://" << config.host << ':' << port << (providers.is_mock() ? " (mock provider)" : "")
        << std::endl;
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    while (!g_stop_requested) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    out << "stopped" << std::endl;
    return exit_ok;
}

struct PersonaArgs
{
    std::uint64_t seed = 0;
    int count = 1;
    std::string data_dir;
    bool text = false;
};

int run_persona_sample(PersonaArgs const & a, std::ostream & out)
{
    if (a.count < 0) {
        throw ValidationError("--count must be >= 0");
    }
    auto const dir = a.data_dir.empty() ? service::default_data_dir() : fs::path(a.data_dir);
    auto const pools = persona::load_attribute_pools(dir / "pools.txt");
    auto const bank = persona::load_challenge_bank(dir / "challenges.jsonl");
    auto const rules = persona::load_coherence_rules(dir / "coherence_rules.txt");
    Rng rng(a.seed);
    constexpr int max_attempts = 5;
    for (int i = 0; i < a.count; ++i) {
        std::optional<persona::PersonaProfile> profile;
        for (int attempt = 0; attempt < max_attempts && !profile; ++attempt) {
            auto candidate = persona::sample_persona(pools, bank, rng);
            if (persona::verify_coherence(candidate, rules, persona::VerificationMode::Rules).coherent) {
                profile = std::move(candidate);
            }
        }
        if (!profile) {
            throw GenerationError("no coherent persona after " + std::to_string(max_attempts) + " attempts");
        }
        if (a.text) {
            out << (i ? "\n" : "") << persona::render_profile_text(*profile) << '\n';
        } else {
            out << nlohmann::json(*profile).dump() << '\n';
        }
    }
    return exit_ok;
}

struct JudgeArgs
{
    std::string corpus;
    std::string rubric;
    std::string out_dir;
    std::string model;
    ProviderFlags provider;
};

int run_judge(JudgeArgs const & a, std::ostream & out)
{
    auto const corpus = completed_only(dialogue::load_corpus(a.corpus));
    if (corpus.empty()) {
        throw EmptyInputError("corpus has no completed dialogues");
    }
    auto const rubric = a.rubric.empty() ? judge::default_rubric() : judge::load_rubric(a.rubric);
    auto const settings = a.provider.settings();
    service::ProviderStack providers(settings);
    judge::JudgeOptions options;
    options.model_id = a.model.empty() ? settings.judge_model : a.model;
    options.retry = settings.retry;

    std::optional<judge::EvaluationStore> store;
    if (!a.out_dir.empty()) {
        store.emplace(fs::path(a.out_dir) / "evaluations");
    }
    std::vector<judge::DialogueEvaluation> evaluations;
    for (auto const & d : corpus) {
        evaluations.push_back(judge::evaluate_dialogue(d, rubric, providers.get(), options));
        if (store) {
            store->save(evaluations.back());
        }
    }
    auto const report = judge::aggregate_evaluations(evaluations);
    if (!a.out_dir.empty()) {
        write_output(fs::path(a.out_dir) / "judge_histogram.csv", report.histogram_csv());
        write_output(fs::path(a.out_dir) / "judge_summary.json", report.summary_json());
    }
    out << report.summary_json() << '\n';
    return exit_ok;
}

struct AugmentArgs
{
    std::string seed_corpus;
    std::size_t target = 0;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::size_t exemplars = 3;
    std::size_t parallelism = 1;
    std::string model;
    std::string out;
    std::string report;
    ProviderFlags provider;
};

int run_augment(AugmentArgs const & a, std::ostream & out)
{
    auto const seeds = completed_only(dialogue::load_corpus(a.seed_corpus));
    auto const settings = a.provider.settings();
    service::ProviderStack providers(settings);
    augment::AugmentJob job;
    job.target_count = a.target;
    job.seed = a.seed;
    job.budget = a.budget;
    job.exemplars_per_prompt = a.exemplars;
    job.parallelism = a.parallelism;
    job.model_id = a.model.empty() ? settings.augment_model : a.model;
    job.retry = settings.retry;
    auto const result = augment::synthesize_batch(job, seeds, providers.get());
    if (!a.out.empty()) {
        write_output(a.out, dialogue::serialize_corpus(result.accepted));
    }
    if (!a.report.empty()) {
        write_output(a.report, result.report.to_csv());
    }
    auto const & r = result.report;
    out << "generated=" << r.generated << " accepted=" << r.accepted << " rejected=" << r.rejected.size()
        << " provider_failures=" << r.provider_failures << " budget_exhausted=" << (r.budget_exhausted ? 1 : 0)
        << '\n';
    return exit_ok;
}

struct DescribeArgs
{
    std::string corpus;
    std::int64_t min_turns = 0;
    std::int64_t bin_width = 2;
    std::string out_dir;
};

int run_describe(DescribeArgs const & a, std::ostream & out)
{
    auto const s = stats::describe_corpus(dialogue::load_corpus(a.corpus), a.min_turns, a.bin_width);
    if (!a.out_dir.empty()) {
        fs::path const dir(a.out_dir);
        write_output(dir / "dialogues.csv", s.records_csv());
        write_output(dir / "turn_histogram.csv", s.turn_histogram.to_csv());
        write_output(dir / "disciplines.csv", stats::discipline_csv(stats::discipline_table(s)));
        write_output(dir / "summary.json", s.summary_json().dump(2) + "\n");
    }
    out << s.summary_json().dump() << '\n';
    return exit_ok;
}

struct WelchArgs
{
    double mean_a = 0, sd_a = 0, mean_b = 0, sd_b = 0;
    std::int64_t n_a = 0, n_b = 0;
    double alpha = 0.05;
    std::string label_a = "a";
    std::string label_b = "b";
    bool json = false;
};

std::string welch_line(stats::WelchResult const & r)
{
    return "t=" + fixed(r.t, 2) + " df=" + fixed(r.df, 2) + " p=" + fixed(r.p_two_sided, 3) + " ci=["
        + fixed(r.ci_low, 2) + "," + fixed(r.ci_high, 2) + "]";
}

nlohmann::ordered_json welch_json(stats::WelchResult const & r)
{
    nlohmann::ordered_json j;
    j["group_order"] = {r.group_order.first, r.group_order.second};
    j["t"] = r.t;
    j["df"] = r.df;
    j["p_two_sided"] = r.p_two_sided;
    j["alpha"] = r.alpha;
    j["ci"] = {r.ci_low, r.ci_high};
    return j;
}

int run_welch(WelchArgs const & a, std::ostream & out)
{
    auto const r = stats::welch_t_test({a.mean_a, a.sd_a, a.n_a, a.label_a}, {a.mean_b, a.sd_b, a.n_b, a.label_b},
        a.alpha);
    out << (a.json ? welch_json(r).dump() : welch_line(r)) << '\n';
    return exit_ok;
}

struct KappaArgs
{
    std::string annotations;
    std::string matrix;
    std::string out_dir;
};

int run_kappa(KappaArgs const & a, std::ostream & out)
{
    if (a.annotations.empty() == a.matrix.empty()) {
        throw ValidationError("give exactly one of --annotations or --matrix");
    }
    if (!a.matrix.empty()) {
        auto const k = stats::weighted_kappa(parse_matrix(a.matrix));
        out << "kappa=" << fixed(k.kappa, 4) << " n=" << k.n_items << (k.degenerate ? " degenerate=1" : "") << '\n';
        return exit_ok;
    }
    auto const set = stats::load_annotations(a.annotations);
    for (auto const & m : set.models) {
        out << "model=" << m.model_label << " kappa=" << (m.kappa ? fixed(m.kappa->kappa, 4) : std::string("NA"))
            << " n=" << m.pooled.total() << " unmatched=" << m.unmatched.size() << '\n';
    }
    if (!a.out_dir.empty()) {
        fs::path const dir(a.out_dir);
        write_output(dir / "annotation_criteria.csv", set.criteria_csv());
        write_output(dir / "annotation_summary.json", set.summary_json().dump(2) + "\n");
        for (auto const & m : set.models) {
            write_output(dir / ("agreement_" + m.model_label + ".csv"), m.pooled.to_csv());
        }
    }
    return exit_ok;
}

struct CompareArgs
{
    std::string corpus;
    std::string by = "extroversion";
    std::string metric = "words_expert";
    std::string group_a;
    std::string group_b;
    std::int64_t min_turns = 3;
    double alpha = 0.05;
    std::string out;
};

int run_compare(CompareArgs const & a, std::ostream & out)
{
    auto const metric = stats::parse_metric(a.metric);
    if (!metric) {
        throw ValidationError("unknown metric '" + a.metric + "' (turns, words_novice, words_expert)");
    }
    stats::GroupKey key;
    if (text::iequals(a.by, "discipline")) {
        key = stats::GroupKey::by_discipline(a.group_a, a.group_b);
    } else if (auto trait = persona::parse_trait(a.by)) {
        key = stats::GroupKey::by_trait(*trait);
    } else {
        throw ValidationError("unknown grouping '" + a.by + "'");
    }
    auto const s = stats::describe_corpus(dialogue::load_corpus(a.corpus), a.min_turns);
    auto const c = stats::group_compare(s, key, *metric, a.alpha);
    if (!a.out.empty()) {
        write_output(a.out, c.plot_record().dump(2) + "\n");
    }
    out << c.a.label << ": M=" << fixed(c.a.mean, 2) << " SD=" << fixed(c.a.sd, 2) << " n=" << c.a.n << "; "
        << c.b.label << ": M=" << fixed(c.b.mean, 2) << " SD=" << fixed(c.b.sd, 2) << " n=" << c.b.n << '\n'
        << welch_line(c.welch) << '\n';
    return exit_ok;
}

} // namespace

int run_cli(std::vector<std::string> const & args, std::ostream & out, std::ostream & err)
{
    CLI::App app{"Expert-novice coaching dialogue collection and analysis", "coachsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "coachsim 0.1.0");

    std::function<int(std::ostream &)> action;
    auto bind = [&action]<typename A>(CLI::App * cmd, A const & a, int (*fn)(A const &, std::ostream &)) {
        cmd->callback([&action, &a, fn] { action = [&a, fn](std::ostream & o) { return fn(a, o); }; });
    };

    ServeArgs serve;
    auto * serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
    serve_cmd->add_option("--config", serve.config, "Config file")->check(CLI::ExistingFile);
    serve_cmd->add_option("--mock", serve.mock, "Scripted mock provider file")->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", serve.port, "Override the listen port (0 picks a free port)");
    serve_cmd->add_option("--seed", serve.seed, "Persona sampling seed");
    bind(serve_cmd, serve, &run_serve);

    auto * persona_cmd = app.add_subcommand("persona", "Persona utilities");
    persona_cmd->require_subcommand(1);
    PersonaArgs persona_args;
    auto * sample_cmd = persona_cmd->add_subcommand("sample", "Sample verified personas (rule checks only)");
    sample_cmd->add_option("--seed", persona_args.seed, "RNG seed")->required();
    sample_cmd->add_option("--count", persona_args.count, "Number of personas")->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--data-dir", persona_args.data_dir, "Directory with pools/challenges/rules")
        ->check(CLI::ExistingDirectory);
    sample_cmd->add_flag("--text", persona_args.text, "Print profile text instead of JSON lines");
    bind(sample_cmd, persona_args, &run_persona_sample);

    auto * judge_cmd = app.add_subcommand("judge", "LLM-as-judge evaluation");
    judge_cmd->require_subcommand(1);
    JudgeArgs judge_args;
    auto * judge_run = judge_cmd->add_subcommand("run", "Score every completed dialogue in a corpus");
    judge_run->add_option("--corpus", judge_args.corpus, "Corpus document")->required()->check(CLI::ExistingFile);
    judge_run->add_option("--rubric", judge_args.rubric, "Rubric JSON (default: built-in)")->check(CLI::ExistingFile);
    judge_run->add_option("--out-dir", judge_args.out_dir, "Write evaluations and reports here");
    judge_run->add_option("--model", judge_args.model, "Judge model id");
    add_provider_flags(*judge_run, judge_args.provider);
    bind(judge_run, judge_args, &run_judge);

    auto * augment_cmd = app.add_subcommand("augment", "Few-shot synthetic dialogue generation");
    augment_cmd->require_subcommand(1);
    AugmentArgs aug;
    auto * augment_run = augment_cmd->add_subcommand("run", "Generate and filter synthetic dialogues");
    augment_run->add_option("--seed-corpus", aug.seed_corpus, "Seed corpus")->required()->check(CLI::ExistingFile);
    augment_run->add_option("--target", aug.target, "Accepted dialogues wanted")->required();
    augment_run->add_option("--seed", aug.seed, "RNG seed for exemplar sampling");
    augment_run->add_option("--budget", aug.budget, "Max generation attempts (default 3x target)");
    augment_run->add_option("--exemplars", aug.exemplars, "Exemplars per prompt");
    augment_run->add_option("--parallel", aug.parallelism, "Concurrent provider calls");
    augment_run->add_option("--model", aug.model, "Generator model id");
    augment_run->add_option("--out", aug.out, "Write accepted dialogues as a corpus document");
    augment_run->add_option("--report", aug.report, "Write the filter report CSV");
    add_provider_flags(*augment_run, aug.provider);
    bind(augment_run, aug, &run_augment);

    auto * stats_cmd = app.add_subcommand("stats", "Corpus statistics");
    stats_cmd->require_subcommand(1);
    DescribeArgs describe;
    auto * describe_cmd = stats_cmd->add_subcommand("describe", "Descriptive statistics of a corpus");
    describe_cmd->add_option("--corpus", describe.corpus, "Corpus document")->required()->check(CLI::ExistingFile);
    describe_cmd->add_option("--min-turns", describe.min_turns, "Drop dialogues with fewer turns");
    describe_cmd->add_option("--bin-width", describe.bin_width, "Turn histogram bin width");
    describe_cmd->add_option("--out-dir", describe.out_dir, "Write CSV tables and summary.json here");
    bind(describe_cmd, describe, &run_describe);

    WelchArgs welch;
    auto * welch_cmd = stats_cmd->add_subcommand("welch", "Welch t-test from summary statistics");
    welch_cmd->add_option("--mean-a", welch.mean_a)->required();
    welch_cmd->add_option("--sd-a", welch.sd_a)->required();
    welch_cmd->add_option("--n-a", welch.n_a)->required();
    welch_cmd->add_option("--mean-b", welch.mean_b)->required();
    welch_cmd->add_option("--sd-b", welch.sd_b)->required();
    welch_cmd->add_option("--n-b", welch.n_b)->required();
    welch_cmd->add_option("--alpha", welch.alpha);
    welch_cmd->add_option("--label-a", welch.label_a);
    welch_cmd->add_option("--label-b", welch.label_b);
    welch_cmd->add_flag("--json", welch.json, "Full-precision JSON output");
    bind(welch_cmd, welch, &run_welch);

    KappaArgs kappa;
    auto * kappa_cmd = stats_cmd->add_subcommand("kappa", "Quadratically weighted Cohen's kappa");
    kappa_cmd->add_option("--annotations", kappa.annotations, "Annotation table (CSV)")->check(CLI::ExistingFile);
    kappa_cmd->add_option("--matrix", kappa.matrix, "Rating matrix, rows separated by ';', e.g. \"3,1;0,4\"");
    kappa_cmd->add_option("--out-dir", kappa.out_dir, "Write agreement matrices and criterion table here");
    bind(kappa_cmd, kappa, &run_kappa);

    CompareArgs compare;
    auto * compare_cmd = stats_cmd->add_subcommand("compare", "Welch comparison of two persona groups");
    compare_cmd->add_option("--corpus", compare.corpus, "Corpus document")->required()->check(CLI::ExistingFile);
    compare_cmd->add_option("--by", compare.by, "Trait name or 'discipline'");
    compare_cmd->add_option("--metric", compare.metric, "turns | words_novice | words_expert");
    compare_cmd->add_option("--group-a", compare.group_a, "First discipline (with --by discipline)");
    compare_cmd->add_option("--group-b", compare.group_b, "Second discipline (with --by discipline)");
    compare_cmd->add_option("--min-turns", compare.min_turns, "Drop dialogues with fewer turns");
    compare_cmd->add_option("--alpha", compare.alpha);
    compare_cmd->add_option("--out", compare.out, "Write the plot-ready record");
    bind(compare_cmd, compare, &run_compare);

    auto * export_cmd = app.add_subcommand("export", "Dataset exports");
    export_cmd->require_subcommand(1);
    std::string sft_corpus;
    std::string sft_out;
    auto * sft_cmd = export_cmd->add_subcommand("sft", "One training example per expert turn (JSONL)");
    sft_cmd->add_option("--corpus", sft_corpus, "Corpus document")->required()->check(CLI::ExistingFile);
    sft_cmd->add_option("--out", sft_out, "Output JSONL file")->required();
    std::string config_out;
    auto * training_cmd = export_cmd->add_subcommand("training-config", "Reference fine-tuning configuration");
    training_cmd->add_option("--out", config_out, "Output JSON file")->required();
    std::string rubric_out;
    auto * rubric_cmd = export_cmd->add_subcommand("rubric", "Built-in judge rubric as JSON");
    rubric_cmd->add_option("--out", rubric_out, "Output JSON file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (CLI::CallForHelp const & e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (CLI::CallForAllHelp const & e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (CLI::CallForVersion const & e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (CLI::ParseError const & e) {
        err << "error: USAGE: " << one_line(e.what()) << '\n';
        return exit_usage;
    }

    try {
        if (action) {
            return action(out);
        }
        if (sft_cmd->parsed()) {
            std::vector<std::string> warnings;
            auto const corpus = dialogue::load_corpus(sft_corpus);
            auto const examples = sft::export_sft(corpus, &warnings);
            write_output(sft_out, sft::to_jsonl(examples));
            for (auto const & w : warnings) {
                err << "warning: " << one_line(w) << '\n';
            }
            out << "examples=" << examples.size() << '\n';
        } else if (training_cmd->parsed()) {
            sft::export_training_config(config_out);
            out << "wrote " << config_out << '\n';
        } else if (rubric_cmd->parsed()) {
            write_output(rubric_out, judge::rubric_to_json(judge::default_rubric()));
            out << "wrote " << rubric_out << '\n';
        }
        return exit_ok;
    } catch (ConfigError const & e) {
        err << "error: USAGE: " << one_line(e.what()) << '\n';
        return exit_usage;
    } catch (Error const & e) {
        err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << '\n';
        return exit_failure;
    } catch (std::exception const & e) {
        err << "error: INTERNAL: " << one_line(e.what()) << '\n';
        return exit_failure;
    }
}

} // namespace coachsim::cli
