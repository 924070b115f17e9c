#include "coachsim/annotations.hpp"

#include "coachsim/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace coachsim::stats {

namespace {

struct CriterionInfo
{
    ExpertCriterion criterion;
    std::string_view id;
    std::string_view name;
};

constexpr std::array<CriterionInfo, 4> criterion_table{{
    {ExpertCriterion::ClarityOfExpression, "CLARITY_OF_EXPRESSION", "Clarity of Expression"},
    {ExpertCriterion::SupportiveTone, "SUPPORTIVE_TONE", "Supportive & Appropriate Tone"},
    {ExpertCriterion::ReflectivePrompting, "REFLECTIVE_PROMPTING", "Reflective Prompting"},
    {ExpertCriterion::AppropriatenessOfValidation, "APPROPRIATENESS_OF_VALIDATION", "Appropriateness of Validation"},
}};

CriterionInfo const & info(ExpertCriterion c) noexcept
{
    return criterion_table[static_cast<std::size_t>(c)];
}

CriterionSummary summarize_scores(ExpertCriterion criterion, std::string rater, std::vector<int> const & scores)
{
    CriterionSummary s;
    s.criterion = criterion;
    s.rater_id = std::move(rater);
    s.n = static_cast<std::int64_t>(scores.size());
    if (scores.empty()) {
        return s;
    }
    double sum = 0.0;
    for (int v : scores) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(scores.size());
    if (scores.size() >= 2) {
        double ss = 0.0;
        for (int v : scores) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / static_cast<double>(scores.size() - 1));
    }
    return s;
}

} // namespace

std::string_view to_string(ExpertCriterion criterion) noexcept
{
    return info(criterion).id;
}

std::string_view display_name(ExpertCriterion criterion) noexcept
{
    return info(criterion).name;
}

std::optional<ExpertCriterion> parse_expert_criterion(std::string_view text) noexcept
{
    auto const t = text::trim(text);
    for (auto const & c : criterion_table) {
        if (text::iequals(t, c.id) || text::iequals(t, c.name)) {
            return c.criterion;
        }
    }
    return std::nullopt;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char const c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"' && text::trim(current).empty() && !was_quoted) {
            current.clear();
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? current : std::string(text::trim(current)));
            current.clear();
            was_quoted = false;
        } else if (!was_quoted) {
            current += c;
        }
    }
    if (quoted) {
        throw ValidationError("unterminated quoted field");
    }
    fields.push_back(was_quoted ? current : std::string(text::trim(current)));
    return fields;
}

AnnotationSet ingest_annotations(std::string_view table)
{
    auto const lines = text::split_lines(table);
    std::size_t header_row = 0;
    while (header_row < lines.size() && text::trim(lines[header_row]).empty()) {
        ++header_row;
    }
    if (header_row == lines.size()) {
        throw AnnotationError(0, "annotation table is empty");
    }

    constexpr std::array<std::string_view, 5> required{"dialogue_id", "model_label", "rater_id", "criterion", "score"};
    std::array<std::size_t, 5> column{};
    auto const header = split_csv_line(lines[header_row]);
    for (std::size_t r = 0; r < required.size(); ++r) {
        auto it = std::find_if(header.begin(), header.end(), [&](auto const & h) { return text::iequals(h, required[r]); });
        if (it == header.end()) {
            throw AnnotationError(header_row + 1, "missing column '" + std::string(required[r]) + "'");
        }
        column[r] = static_cast<std::size_t>(it - header.begin());
    }
    std::size_t const width = *std::max_element(column.begin(), column.end()) + 1;

    AnnotationSet set;
    std::set<std::string> raters;
    std::set<std::tuple<std::string, std::string, std::string, ExpertCriterion>> seen;
    for (std::size_t i = header_row + 1; i < lines.size(); ++i) {
        std::size_t const row = i + 1;
        if (text::trim(lines[i]).empty()) {
            continue;
        }
        std::vector<std::string> fields;
        try {
            fields = split_csv_line(lines[i]);
        } catch (ValidationError const & e) {
            throw AnnotationError(row, e.what());
        }
        if (fields.size() < width) {
            throw AnnotationError(row, "expected at least " + std::to_string(width) + " fields, found "
                + std::to_string(fields.size()));
        }
        AnnotationRecord rec;
        rec.row = row;
        rec.dialogue_id = fields[column[0]];
        rec.model_label = fields[column[1]];
        rec.rater_id = fields[column[2]];
        for (auto const * f : {&rec.dialogue_id, &rec.model_label, &rec.rater_id}) {
            if (f->empty()) {
                throw AnnotationError(row, "empty dialogue_id, model_label or rater_id");
            }
        }
        auto const criterion = parse_expert_criterion(fields[column[3]]);
        if (!criterion) {
            throw AnnotationError(row, "unknown criterion '" + fields[column[3]] + "'");
        }
        rec.criterion = *criterion;
        auto const & score_text = fields[column[4]];
        auto const [end, ec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), rec.score);
        if (ec != std::errc{} || end != score_text.data() + score_text.size()) {
            throw AnnotationError(row, "score '" + score_text + "' is not an integer");
        }
        if (rec.score < 1 || rec.score > 3) {
            throw AnnotationError(row, "score " + score_text + " is outside 1-3");
        }
        if (!seen.emplace(rec.dialogue_id, rec.model_label, rec.rater_id, rec.criterion).second) {
            throw AnnotationError(row, "duplicate rating for dialogue '" + rec.dialogue_id + "', model '"
                + rec.model_label + "', rater '" + rec.rater_id + "', criterion "
                + std::string(to_string(rec.criterion)));
        }
        raters.insert(rec.rater_id);
        if (raters.size() > 2) {
            throw AnnotationError(row, "third rater '" + rec.rater_id + "'; exactly 2 raters are supported");
        }
        set.records.push_back(std::move(rec));
    }
    if (raters.size() != 2) {
        throw AnnotationError(0, "annotation table needs exactly 2 raters, found " + std::to_string(raters.size()));
    }
    set.raters = {*raters.begin(), *raters.rbegin()};

    // model -> (dialogue, criterion) -> [rater1 score, rater2 score]
    using Item = std::pair<std::string, ExpertCriterion>;
    std::map<std::string, std::map<Item, std::array<int, 2>>> items;
    for (auto const & r : set.records) {
        auto & slot = items[r.model_label][{r.dialogue_id, r.criterion}];
        slot[r.rater_id == set.raters.first ? 0 : 1] = r.score;
    }
    for (auto const & [model, model_items] : items) {
        ModelAgreement m;
        m.model_label = model;
        m.pooled = RatingMatrix::zeros(3);
        std::map<ExpertCriterion, std::array<std::vector<int>, 2>> by_criterion;
        for (auto const & [item, scores] : model_items) {
            for (std::size_t r = 0; r < 2; ++r) {
                if (scores[r] != 0) {
                    by_criterion[item.second][r].push_back(scores[r]);
                }
            }
            if (scores[0] != 0 && scores[1] != 0) {
                ++m.pooled.counts[static_cast<std::size_t>(scores[0] - 1)][static_cast<std::size_t>(scores[1] - 1)];
            } else {
                m.unmatched.push_back({model, item.first, item.second,
                    scores[0] != 0 ? set.raters.first : set.raters.second});
            }
        }
        if (m.pooled.total() > 0) {
            m.kappa = weighted_kappa(m.pooled);
        }
        for (auto const & [criterion, per_rater] : by_criterion) {
            std::vector<int> both = per_rater[0];
            both.insert(both.end(), per_rater[1].begin(), per_rater[1].end());
            m.criteria.push_back(summarize_scores(criterion, {}, both));
            m.criteria.push_back(summarize_scores(criterion, set.raters.first, per_rater[0]));
            m.criteria.push_back(summarize_scores(criterion, set.raters.second, per_rater[1]));
        }
        set.models.push_back(std::move(m));
    }
    return set;
}

AnnotationSet load_annotations(std::filesystem::path const & path)
{
    return ingest_annotations(text::read_file(path));
}

std::string AnnotationSet::criteria_csv() const
{
    std::ostringstream out;
    out.precision(10);
    out << "model_label,criterion,rater_id,n,mean,sd\n";
    for (auto const & m : models) {
        for (auto const & c : m.criteria) {
            out << m.model_label << ',' << to_string(c.criterion) << ',' << (c.rater_id.empty() ? "all" : c.rater_id)
                << ',' << c.n << ',' << c.mean << ',';
            if (c.sd) {
                out << *c.sd;
            }
            out << '\n';
        }
    }
    return out.str();
}

nlohmann::ordered_json AnnotationSet::summary_json() const
{
    nlohmann::ordered_json j;
    j["raters"] = {raters.first, raters.second};
    j["records"] = records.size();
    auto & out = j["models"] = nlohmann::ordered_json::array();
    for (auto const & m : models) {
        nlohmann::ordered_json e;
        e["model_label"] = m.model_label;
        e["matrix"] = m.pooled.counts;
        e["n_items"] = m.pooled.total();
        if (m.kappa) {
            e["kappa"] = m.kappa->kappa;
            e["kappa_degenerate"] = m.kappa->degenerate;
        } else {
            e["kappa"] = nullptr;
        }
        auto & un = e["unmatched"] = nlohmann::ordered_json::array();
        for (auto const & u : m.unmatched) {
            un.push_back({{"dialogue_id", u.dialogue_id}, {"criterion", to_string(u.criterion)},
                {"rater_id", u.rater_id}});
        }
        out.push_back(std::move(e));
    }
    return j;
}

} // namespace coachsim::stats
