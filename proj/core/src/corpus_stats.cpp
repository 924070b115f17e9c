#include "coachsim/corpus_stats.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace coachsim::stats {

namespace {

Moments moments(std::vector<double> const & values)
{
    Moments m;
    m.n = static_cast<std::int64_t>(values.size());
    if (values.empty()) {
        return m;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    m.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - m.mean) * (v - m.mean);
        }
        m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

nlohmann::ordered_json moments_json(Moments const & m)
{
    nlohmann::ordered_json j;
    j["n"] = m.n;
    j["mean"] = m.mean;
    j["sd"] = m.sd ? nlohmann::ordered_json(*m.sd) : nlohmann::ordered_json(nullptr);
    return j;
}

std::string csv_field(std::string_view value)
{
    if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(value);
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::string Histogram::to_csv() const
{
    std::ostringstream out;
    out << "bin_low,bin_high,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        auto const low = start + static_cast<std::int64_t>(i) * width;
        out << low << ',' << low + width << ',' << counts[i] << '\n';
    }
    return out.str();
}

DialogueRecord describe_dialogue(dialogue::DialogueSession const & session)
{
    DialogueRecord r;
    r.dialogue_id = session.id;
    r.turns = static_cast<std::int64_t>(session.turns.size());
    for (auto const & turn : session.turns) {
        auto const words = static_cast<std::int64_t>(text::count_words(turn.content));
        if (turn.role == dialogue::Speaker::Novice) {
            r.words_novice += words;
        } else {
            r.words_expert += words;
        }
    }
    if (session.persona) {
        r.discipline = session.persona->discipline;
        r.traits = session.persona->traits;
    }
    return r;
}

CorpusStats describe_corpus(
    std::vector<dialogue::DialogueSession> const & corpus, std::int64_t min_turns, std::int64_t histogram_width)
{
    if (histogram_width < 1) {
        throw ValidationError("histogram width must be at least 1");
    }
    CorpusStats s;
    s.min_turns = min_turns;
    for (auto const & session : corpus) {
        if (session.status != dialogue::SessionStatus::Completed) {
            ++s.excluded_status;
            continue;
        }
        if (static_cast<std::int64_t>(session.turns.size()) < min_turns) {
            ++s.excluded_short;
            continue;
        }
        s.records.push_back(describe_dialogue(session));
    }
    if (s.records.empty()) {
        throw EmptyInputError("no completed dialogues with at least " + std::to_string(min_turns) + " turns");
    }
    std::sort(s.records.begin(), s.records.end(),
        [](auto const & x, auto const & y) { return x.dialogue_id < y.dialogue_id; });

    std::vector<double> turns;
    std::vector<double> novice;
    std::vector<double> expert;
    std::vector<double> total;
    std::int64_t max_turns = 0;
    for (auto const & r : s.records) {
        s.total_turns += r.turns;
        s.total_words_novice += r.words_novice;
        s.total_words_expert += r.words_expert;
        turns.push_back(static_cast<double>(r.turns));
        novice.push_back(static_cast<double>(r.words_novice));
        expert.push_back(static_cast<double>(r.words_expert));
        total.push_back(static_cast<double>(r.words_novice + r.words_expert));
        max_turns = std::max(max_turns, r.turns);
    }
    s.turns = moments(turns);
    s.words_novice = moments(novice);
    s.words_expert = moments(expert);
    s.words_total = moments(total);

    s.turn_histogram.start = 0;
    s.turn_histogram.width = histogram_width;
    s.turn_histogram.counts.assign(static_cast<std::size_t>(max_turns / histogram_width + 1), 0);
    for (auto const & r : s.records) {
        ++s.turn_histogram.counts[static_cast<std::size_t>(r.turns / histogram_width)];
    }
    return s;
}

std::string CorpusStats::records_csv() const
{
    std::ostringstream out;
    out << "dialogue_id,turns,words_novice,words_expert,discipline,openness,conscientiousness,extroversion,agreeableness\n";
    for (auto const & r : records) {
        out << csv_field(r.dialogue_id) << ',' << r.turns << ',' << r.words_novice << ',' << r.words_expert << ','
            << csv_field(r.discipline.value_or(""));
        for (auto trait : persona::all_traits) {
            out << ',';
            if (r.traits) {
                out << persona::to_string(r.traits->get(trait));
            }
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::ordered_json CorpusStats::summary_json() const
{
    nlohmann::ordered_json j;
    j["dialogues"] = records.size();
    j["min_turns"] = min_turns;
    j["excluded_short"] = excluded_short;
    j["excluded_not_completed"] = excluded_status;
    j["total_turns"] = total_turns;
    j["total_words_novice"] = total_words_novice;
    j["total_words_expert"] = total_words_expert;
    j["turns"] = moments_json(turns);
    j["words_novice"] = moments_json(words_novice);
    j["words_expert"] = moments_json(words_expert);
    j["words_total"] = moments_json(words_total);
    auto & h = j["turn_histogram"];
    h["start"] = turn_histogram.start;
    h["width"] = turn_histogram.width;
    h["counts"] = turn_histogram.counts;
    return j;
}

std::vector<DisciplineRow> discipline_table(CorpusStats const & stats)
{
    std::map<std::string, std::vector<DialogueRecord const *>> groups;
    for (auto const & r : stats.records) {
        groups[r.discipline.value_or("unknown")].push_back(&r);
    }
    std::vector<DisciplineRow> rows;
    for (auto const & [name, members] : groups) {
        DisciplineRow row;
        row.discipline = name;
        row.n = static_cast<std::int64_t>(members.size());
        for (auto const * r : members) {
            row.mean_turns += static_cast<double>(r->turns);
            row.mean_words_novice += static_cast<double>(r->words_novice);
            row.mean_words_expert += static_cast<double>(r->words_expert);
        }
        auto const n = static_cast<double>(row.n);
        row.mean_turns /= n;
        row.mean_words_novice /= n;
        row.mean_words_expert /= n;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string discipline_csv(std::vector<DisciplineRow> const & rows)
{
    std::ostringstream out;
    out.precision(10);
    out << "discipline,n,mean_turns,mean_words_novice,mean_words_expert\n";
    for (auto const & r : rows) {
        out << csv_field(r.discipline) << ',' << r.n << ',' << r.mean_turns << ',' << r.mean_words_novice << ','
            << r.mean_words_expert << '\n';
    }
    return out.str();
}

std::string_view to_string(Metric metric) noexcept
{
    switch (metric) {
    case Metric::Turns: return "turns";
    case Metric::WordsNovice: return "words_novice";
    case Metric::WordsExpert: return "words_expert";
    }
    return "turns";
}

std::optional<Metric> parse_metric(std::string_view name) noexcept
{
    for (auto m : {Metric::Turns, Metric::WordsNovice, Metric::WordsExpert}) {
        if (text::iequals(name, to_string(m))) {
            return m;
        }
    }
    return std::nullopt;
}

double metric_value(DialogueRecord const & record, Metric metric) noexcept
{
    switch (metric) {
    case Metric::Turns: return static_cast<double>(record.turns);
    case Metric::WordsNovice: return static_cast<double>(record.words_novice);
    case Metric::WordsExpert: return static_cast<double>(record.words_expert);
    }
    return 0.0;
}

GroupComparison group_compare(CorpusStats const & stats, GroupKey const & key, Metric metric, double alpha)
{
    std::vector<double> a;
    std::vector<double> b;
    std::string label_a;
    std::string label_b;
    std::string key_name;
    if (key.trait) {
        auto const trait = *key.trait;
        label_a = persona::trait_label(trait, persona::Pole::Low);
        label_b = persona::trait_label(trait, persona::Pole::High);
        key_name = persona::to_string(trait);
        for (auto const & r : stats.records) {
            if (!r.traits) {
                continue;
            }
            (r.traits->get(trait) == persona::Pole::Low ? a : b).push_back(metric_value(r, metric));
        }
    } else {
        if (key.discipline_a.empty() || key.discipline_b.empty() || key.discipline_a == key.discipline_b) {
            throw ValidationError("discipline comparison needs two distinct discipline names");
        }
        label_a = key.discipline_a;
        label_b = key.discipline_b;
        key_name = "discipline";
        for (auto const & r : stats.records) {
            if (r.discipline == key.discipline_a) {
                a.push_back(metric_value(r, metric));
            } else if (r.discipline == key.discipline_b) {
                b.push_back(metric_value(r, metric));
            }
        }
    }
    GroupComparison c;
    c.metric = metric;
    c.group_key = key_name;
    c.a = summarize(a, label_a);
    c.b = summarize(b, label_b);
    c.welch = welch_t_test(c.a, c.b, alpha);
    return c;
}

nlohmann::ordered_json GroupComparison::plot_record() const
{
    nlohmann::ordered_json j;
    j["group_key"] = group_key;
    j["metric"] = to_string(metric);
    auto group = [](SummaryStats const & s) {
        nlohmann::ordered_json g;
        g["label"] = s.label;
        g["mean"] = s.mean;
        g["sd"] = s.sd;
        g["n"] = s.n;
        return g;
    };
    j["groups"] = nlohmann::ordered_json::array({group(a), group(b)});
    j["difference"] = welch.mean_difference;
    j["t"] = welch.t;
    j["df"] = welch.df;
    j["p_two_sided"] = welch.p_two_sided;
    j["alpha"] = welch.alpha;
    j["ci"] = {welch.ci_low, welch.ci_high};
    return j;
}

} // namespace coachsim::stats
