#include "coachsim/engine.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <algorithm>

namespace coachsim::dialogue {

void DialogueEngine::TicketLock::lock()
{
    std::unique_lock lock(mutex_);
    auto const ticket = next_++;
    cv_.wait(lock, [&] { return serving_ == ticket; });
}

void DialogueEngine::TicketLock::unlock()
{
    {
        std::lock_guard lock(mutex_);
        ++serving_;
    }
    cv_.notify_all();
}

DialogueEngine::DialogueEngine(PersonaSources sources, llm::ChatProvider & provider, SessionStore & store,
    EngineOptions options, Clock clock)
: sources_(std::move(sources))
, provider_(provider)
, store_(store)
, options_(std::move(options))
, clock_(std::move(clock))
{
    sources_.pools.validate();
    if (sources_.bank.empty()) {
        throw ConfigError("challenge bank is empty");
    }
    if (options_.max_persona_attempts < 1) {
        throw ConfigError("max_persona_attempts must be >= 1");
    }
}

void DialogueEngine::load_from_store()
{
    auto sessions = store_.load_all();
    std::lock_guard lock(map_mutex_);
    for (auto & s : sessions) {
        auto slot = std::make_shared<Slot>();
        auto id = s.id;
        slot->snapshot = std::make_shared<DialogueSession const>(std::move(s));
        slots_[id] = std::move(slot);
    }
}

std::shared_ptr<DialogueEngine::Slot> DialogueEngine::slot(std::string const & session_id) const
{
    std::lock_guard lock(map_mutex_);
    auto it = slots_.find(session_id);
    if (it == slots_.end()) {
        throw NotFoundError("no session with id '" + session_id + "'");
    }
    return it->second;
}

std::shared_ptr<DialogueSession const> DialogueEngine::snapshot(Slot const & s) const
{
    std::lock_guard lock(map_mutex_);
    return s.snapshot;
}

void DialogueEngine::publish(Slot & s, DialogueSession next)
{
    store_.save(next);
    auto snap = std::make_shared<DialogueSession const>(std::move(next));
    std::lock_guard lock(map_mutex_);
    s.snapshot = std::move(snap);
}

std::string DialogueEngine::generate_initial_question(persona::PersonaProfile const & profile,
    std::set<std::string> & flags)
{
    llm::ChatRequest request;
    request.model_id = options_.models.initial_question;
    request.temperature = options_.novice_temperature;
    request.max_tokens = options_.max_tokens;
    request.messages.push_back({llm::ChatRole::User, render_initial_question_prompt(profile)});

    std::string candidate;
    ContractResult check;
    for (int attempt = 0; attempt < 2; ++attempt) {
        candidate = clean_generated_text(llm::complete(provider_, request, options_.retry).content);
        check = check_initial_question(candidate);
        if (check.ok()) {
            flags.insert(check.warnings.begin(), check.warnings.end());
            return candidate;
        }
    }
    std::string reasons;
    for (auto const & v : check.violations) {
        reasons += (reasons.empty() ? "" : "; ") + v;
    }
    throw GenerationError("initial question violates its contract: " + reasons, candidate);
}

std::string DialogueEngine::generate_followup(DialogueSession const & session, std::string const & expert_content,
    bool & over_length)
{
    llm::ChatRequest request;
    request.model_id = options_.models.novice;
    request.temperature = options_.novice_temperature;
    request.max_tokens = options_.max_tokens;
    request.system_prompt = render_followup_system_prompt(session);
    for (auto const & t : session.turns) {
        request.messages.push_back(
            {t.role == Speaker::Novice ? llm::ChatRole::Assistant : llm::ChatRole::User, t.content});
    }
    request.messages.push_back({llm::ChatRole::User, expert_content});

    std::string reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        reply = clean_generated_text(llm::complete(provider_, request, options_.retry).content);
        if (text::trim(reply).empty()) {
            continue;
        }
        if (check_followup(reply).ok()) {
            over_length = false;
            return reply;
        }
    }
    if (text::trim(reply).empty()) {
        throw GenerationError("novice reply is empty");
    }
    over_length = true;
    return reply;
}

std::shared_ptr<DialogueSession const> DialogueEngine::create_session(Rng & rng)
{
    persona::VerifierOptions verifier;
    verifier.model_id = options_.models.verify;
    verifier.retry = options_.retry;

    std::optional<persona::PersonaProfile> profile;
    for (int attempt = 0; attempt < options_.max_persona_attempts && !profile; ++attempt) {
        auto candidate = persona::sample_persona(sources_.pools, sources_.bank, rng);
        auto const verdict
            = persona::verify_coherence(candidate, sources_.rules, options_.verification, &provider_, verifier);
        if (verdict.coherent) {
            profile = std::move(candidate);
        }
    }
    if (!profile) {
        throw GenerationError("no coherent persona after " + std::to_string(options_.max_persona_attempts)
            + " attempts");
    }

    DialogueSession session;
    session.id = rng.uuid4();
    session.initial_question = generate_initial_question(*profile, session.flags);
    session.persona = std::move(profile);
    session.status = SessionStatus::Active;
    session.created_at = clock_();
    session.updated_at = session.created_at;
    session.turns.push_back(Turn{Speaker::Novice, session.initial_question, 0, session.created_at});

    auto s = std::make_shared<Slot>();
    {
        std::lock_guard lock(map_mutex_);
        if (slots_.contains(session.id)) {
            throw Error(ErrorCode::Internal, "session id collision: " + session.id);
        }
    }
    store_.save(session);
    s->snapshot = std::make_shared<DialogueSession const>(std::move(session));
    auto result = s->snapshot;
    std::lock_guard lock(map_mutex_);
    slots_[result->id] = std::move(s);
    return result;
}

std::pair<Turn, Turn> DialogueEngine::post_expert_turn(std::string const & session_id, std::string_view content)
{
    auto s = slot(session_id);
    std::lock_guard writer(s->writer);
    auto const current = snapshot(*s);
    if (current->status != SessionStatus::Active) {
        throw StateError("session " + session_id + " is " + std::string(to_string(current->status)));
    }
    if (current->turns.empty() || current->turns.back().role != Speaker::Novice) {
        throw StateError("session " + session_id + " is waiting for a novice reply");
    }
    std::string const expert_text(text::trim(content));
    if (expert_text.empty()) {
        throw ValidationError("expert turn content is empty");
    }

    bool over_length = false;
    std::string const reply = generate_followup(*current, expert_text, over_length);

    DialogueSession next = *current;
    auto const now = clock_();
    Turn expert{Speaker::Expert, expert_text, next.turns.size(), now};
    Turn novice{Speaker::Novice, reply, next.turns.size() + 1, now};
    next.turns.push_back(expert);
    next.turns.push_back(novice);
    next.updated_at = now;
    if (over_length) {
        next.flags.emplace(flags::followup_over_5_sentences);
    }
    if (next.turns.size() > options_.soft_turn_cap) {
        next.flags.emplace(flags::turn_soft_cap_exceeded);
    }
    publish(*s, std::move(next));
    return {expert, novice};
}

std::shared_ptr<DialogueSession const> DialogueEngine::complete_session(std::string const & session_id)
{
    auto s = slot(session_id);
    std::lock_guard writer(s->writer);
    auto const current = snapshot(*s);
    if (current->status != SessionStatus::Active) {
        throw StateError("cannot complete session " + session_id + ": it is "
            + std::string(to_string(current->status)));
    }
    DialogueSession next = *current;
    next.status = SessionStatus::Completed;
    next.updated_at = clock_();
    publish(*s, std::move(next));
    return snapshot(*s);
}

std::shared_ptr<DialogueSession const> DialogueEngine::discard_session(std::string const & session_id)
{
    auto s = slot(session_id);
    std::lock_guard writer(s->writer);
    auto const current = snapshot(*s);
    if (current->status == SessionStatus::Discarded) {
        return current;
    }
    if (current->status != SessionStatus::Active) {
        throw StateError("cannot discard session " + session_id + ": it is "
            + std::string(to_string(current->status)));
    }
    DialogueSession next = *current;
    next.status = SessionStatus::Discarded;
    next.updated_at = clock_();
    publish(*s, std::move(next));
    return snapshot(*s);
}

std::shared_ptr<DialogueSession const> DialogueEngine::get(std::string const & session_id) const
{
    return snapshot(*slot(session_id));
}

std::vector<SessionSummary> DialogueEngine::list() const
{
    std::vector<SessionSummary> out;
    std::lock_guard lock(map_mutex_);
    for (auto const & [id, s] : slots_) {
        auto const & snap = *s->snapshot;
        std::string name = snap.persona ? snap.persona->first_name + " " + snap.persona->last_name : std::string{};
        out.push_back({id, snap.status, std::move(name), snap.turns.size(), snap.updated_at});
    }
    return out;
}

std::vector<DialogueSession> DialogueEngine::completed_sessions() const
{
    std::vector<DialogueSession> out;
    std::lock_guard lock(map_mutex_);
    for (auto const & [id, s] : slots_) {
        if (s->snapshot->status == SessionStatus::Completed) {
            out.push_back(*s->snapshot);
        }
    }
    return out;
}

std::string DialogueEngine::export_corpus() const
{
    return serialize_corpus(completed_sessions());
}

} // namespace coachsim::dialogue
