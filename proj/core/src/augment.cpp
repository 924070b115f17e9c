#include "coachsim/augment.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <cstdio>
#include <future>
#include <map>
#include <sstream>

namespace coachsim::augment {

namespace {

std::optional<dialogue::Speaker> marker_role(std::string_view & line)
{
    auto const trimmed = text::trim(line);
    for (auto [marker, role] : {std::pair{novice_marker, dialogue::Speaker::Novice},
             std::pair{expert_marker, dialogue::Speaker::Expert}}) {
        if (text::starts_with_icase(trimmed, marker)) {
            line = text::trim(trimmed.substr(marker.size()));
            return role;
        }
    }
    return std::nullopt;
}

} // namespace

std::string_view to_string(RejectReason reason) noexcept
{
    switch (reason) {
    case RejectReason::Unparseable: return "UNPARSEABLE";
    case RejectReason::WrongFirstRole: return "WRONG_FIRST_ROLE";
    case RejectReason::NonAlternating: return "NON_ALTERNATING";
    case RejectReason::NoTerminalQuestionMark: return "NO_TERMINAL_QUESTION_MARK";
    case RejectReason::TooFewTurns: return "TOO_FEW_TURNS";
    case RejectReason::DuplicateOpener: return "DUPLICATE_OPENER";
    }
    return "UNPARSEABLE";
}

std::optional<std::vector<RawTurn>> parse_candidate(std::string_view candidate)
{
    std::vector<RawTurn> turns;
    std::vector<std::string> lines_of_turn;
    auto flush = [&]() -> bool {
        if (turns.empty()) {
            return true;
        }
        std::string joined;
        for (auto const & l : lines_of_turn) {
            joined += (joined.empty() ? "" : "\n") + l;
        }
        turns.back().content = std::string(text::trim(joined));
        lines_of_turn.clear();
        return !turns.back().content.empty();
    };
    for (auto line : text::split_lines(candidate)) {
        if (text::trim(line).starts_with("```")) {
            continue;
        }
        if (auto role = marker_role(line)) {
            if (!flush()) {
                return std::nullopt;
            }
            turns.push_back({*role, {}});
            if (!line.empty()) {
                lines_of_turn.emplace_back(line);
            }
            continue;
        }
        if (turns.empty()) {
            if (!text::trim(line).empty()) {
                return std::nullopt;
            }
            continue;
        }
        lines_of_turn.emplace_back(line);
    }
    if (!flush() || turns.empty()) {
        return std::nullopt;
    }
    return turns;
}

std::string render_candidate(dialogue::DialogueSession const & d)
{
    std::string out;
    for (auto const & t : d.turns) {
        out += t.role == dialogue::Speaker::Novice ? novice_marker : expert_marker;
        out += '\n';
        out += t.content;
        out += '\n';
    }
    return out;
}

bool OpenerIndex::contains(std::string_view opener) const
{
    std::lock_guard lock(mutex_);
    return openers_.contains(text::normalize_for_dedup(opener));
}

bool OpenerIndex::insert(std::string_view opener)
{
    std::lock_guard lock(mutex_);
    return openers_.insert(text::normalize_for_dedup(opener)).second;
}

std::size_t OpenerIndex::size() const
{
    std::lock_guard lock(mutex_);
    return openers_.size();
}

std::vector<RejectReason> format_violations(std::string_view candidate, OpenerIndex const & openers)
{
    auto const turns = parse_candidate(candidate);
    if (!turns) {
        return {RejectReason::Unparseable};
    }
    std::vector<RejectReason> reasons;
    if (turns->front().role != dialogue::Speaker::Novice) {
        reasons.push_back(RejectReason::WrongFirstRole);
    }
    for (std::size_t i = 1; i < turns->size(); ++i) {
        if ((*turns)[i].role == (*turns)[i - 1].role) {
            reasons.push_back(RejectReason::NonAlternating);
            break;
        }
    }
    if (text::trim(turns->front().content).back() != '?') {
        reasons.push_back(RejectReason::NoTerminalQuestionMark);
    }
    if (turns->size() < min_turns) {
        reasons.push_back(RejectReason::TooFewTurns);
    }
    if (openers.contains(turns->front().content)) {
        reasons.push_back(RejectReason::DuplicateOpener);
    }
    return reasons;
}

FormatVerdict validate_format(std::string_view candidate, OpenerIndex const & openers)
{
    auto const reasons = format_violations(candidate, openers);
    if (!reasons.empty()) {
        return {reasons.front(), {}};
    }
    return {std::nullopt, std::move(*parse_candidate(candidate))};
}

std::string FilterReport::to_csv() const
{
    std::map<RejectReason, std::size_t> counts;
    for (auto const & r : rejected) {
        ++counts[r.reason];
    }
    std::ostringstream out;
    out << "reason,count\n"
        << "ACCEPTED," << accepted << '\n';
    for (auto reason : {RejectReason::Unparseable, RejectReason::WrongFirstRole, RejectReason::NonAlternating,
             RejectReason::NoTerminalQuestionMark, RejectReason::TooFewTurns, RejectReason::DuplicateOpener}) {
        out << to_string(reason) << ',' << counts[reason] << '\n';
    }
    out << "PROVIDER_FAILURE," << provider_failures << '\n';
    return out.str();
}

std::string render_augment_prompt(std::span<dialogue::DialogueSession const * const> exemplars)
{
    std::ostringstream out;
    out << "Below are " << exemplars.size()
        << " coaching dialogues between a novice college instructor (" << novice_marker
        << ") and a teaching expert (" << expert_marker << ").\n\n";
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        out << "Example " << (i + 1) << ":\n" << render_candidate(*exemplars[i]) << "\n";
    }
    out << "Write one new multi-turn dialogue in the same format and with a similar tone and style, "
           "but beginning with a different initial question.\n\n"
        << "Format rules:\n"
        << "- Begin every turn with a line containing only " << novice_marker << " or " << expert_marker
        << ", then the turn text on the following lines.\n"
        << "- The first turn is " << novice_marker
        << " and is a single question that ends with a question mark.\n"
        << "- Alternate strictly between " << novice_marker << " and " << expert_marker << ".\n"
        << "- Write at least " << min_turns << " turns.\n"
        << "- Output only the dialogue, nothing else.";
    return out.str();
}

AugmentResult synthesize_batch(AugmentJob const & job, std::span<dialogue::DialogueSession const> seed_corpus,
    llm::ChatProvider & provider)
{
    if (job.target_count == 0) {
        throw ValidationError("augmentation target must be positive");
    }
    if (job.exemplars_per_prompt == 0 || job.exemplars_per_prompt > seed_corpus.size()) {
        throw ValidationError("seed corpus has " + std::to_string(seed_corpus.size())
            + " dialogue(s); need at least exemplars_per_prompt = " + std::to_string(job.exemplars_per_prompt));
    }

    OpenerIndex openers;
    for (auto const & d : seed_corpus) {
        if (!d.turns.empty()) {
            openers.insert(d.turns.front().content);
        }
    }

    Rng rng(job.seed);
    AugmentResult result;
    std::size_t const budget = job.effective_budget();
    std::size_t const width = std::max<std::size_t>(1, job.parallelism);
    std::size_t attempts = 0;

    auto make_request = [&]() {
        auto const picks = rng.sample_without_replacement(seed_corpus.size(), job.exemplars_per_prompt);
        std::vector<dialogue::DialogueSession const *> exemplars;
        for (auto i : picks) {
            exemplars.push_back(&seed_corpus[i]);
        }
        llm::ChatRequest request;
        request.model_id = job.model_id;
        request.temperature = job.temperature;
        request.max_tokens = job.max_tokens;
        request.messages.push_back({llm::ChatRole::User, render_augment_prompt(exemplars)});
        return request;
    };

    while (result.report.accepted < job.target_count && attempts < budget) {
        std::size_t const round = std::min(width, budget - attempts);
        std::vector<llm::ChatRequest> requests;
        for (std::size_t i = 0; i < round; ++i) {
            requests.push_back(make_request());
        }
        std::vector<std::future<std::optional<std::string>>> replies;
        for (auto const & request : requests) {
            auto call = [&provider, &job, &request]() -> std::optional<std::string> {
                try {
                    return llm::complete(provider, request, job.retry).content;
                } catch (TransportError const &) {
                    return std::nullopt;
                } catch (RequestError const &) {
                    return std::nullopt;
                }
            };
            replies.push_back(std::async(round > 1 ? std::launch::async : std::launch::deferred, call));
        }
        for (auto & reply : replies) {
            auto content = reply.get();
            if (result.report.accepted >= job.target_count) {
                continue;
            }
            ++attempts;
            if (!content) {
                ++result.report.provider_failures;
                continue;
            }
            auto const candidate_id = "candidate-" + std::to_string(attempts);
            ++result.report.generated;
            auto verdict = validate_format(*content, openers);
            if (!verdict.accepted()) {
                result.report.rejected.push_back({candidate_id, *verdict.reason});
                continue;
            }
            openers.insert(verdict.turns.front().content);
            ++result.report.accepted;

            dialogue::DialogueSession session;
            char suffix[16];
            std::snprintf(suffix, sizeof suffix, "%04zu", result.report.accepted);
            session.id = job.id_prefix + suffix;
            session.status = dialogue::SessionStatus::Completed;
            for (std::size_t i = 0; i < verdict.turns.size(); ++i) {
                session.turns.push_back({verdict.turns[i].role, std::move(verdict.turns[i].content), i, {}});
            }
            session.initial_question = session.turns.front().content;
            result.accepted.push_back(std::move(session));
        }
    }
    result.report.budget_exhausted = result.report.accepted < job.target_count;
    return result;
}

} // namespace coachsim::augment
