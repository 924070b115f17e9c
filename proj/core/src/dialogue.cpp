#include "coachsim/dialogue.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <algorithm>
#include <sstream>

namespace coachsim::dialogue {

namespace {

#include "prompt_templates.inc"

bool mentions_first_person(std::string_view s)
{
    auto const lower = " " + text::to_lower(s);
    for (std::string_view marker : {" i ", " i'", " my ", " me ", " i’"}) {
        if (lower.find(marker) != std::string::npos) {
            return true;
        }
    }
    return false;
}

nlohmann::json const * find_member(nlohmann::json const & obj, char const * key)
{
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

Timestamp optional_time(nlohmann::json const & obj, char const * key)
{
    auto const * v = find_member(obj, key);
    if (v == nullptr || v->is_null()) {
        return Timestamp{};
    }
    if (!v->is_string()) {
        throw FormatError(std::string("field '") + key + "' must be an ISO-8601 string");
    }
    return parse_iso8601(v->get<std::string>());
}

std::vector<Turn> parse_turns(nlohmann::json const & entries)
{
    if (!entries.is_array()) {
        throw FormatError("'turns' must be an array");
    }
    if (entries.empty()) {
        throw FormatError("transcript has no turns; turns[0] is required", 0);
    }
    std::vector<Turn> turns;
    turns.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto const & e = entries[i];
        auto const where = "turn " + std::to_string(i) + ": ";
        if (!e.is_object()) {
            throw FormatError(where + "entry is not an object", i);
        }
        auto const * role = find_member(e, "role");
        auto const * content = find_member(e, "content");
        if (role == nullptr || !role->is_string()) {
            throw FormatError(where + "missing string field 'role'", i);
        }
        auto const speaker = parse_wire_role(role->get<std::string>());
        if (!speaker) {
            throw FormatError(where + "unknown role '" + role->get<std::string>() + "'", i);
        }
        if (content == nullptr || !content->is_string()) {
            throw FormatError(where + "missing string field 'content'", i);
        }
        Turn turn;
        turn.role = *speaker;
        turn.content = content->get<std::string>();
        turn.index = i;
        try {
            turn.created_at = optional_time(e, "created_at");
        } catch (FormatError const & err) {
            throw FormatError(where + err.what(), i);
        }
        turns.push_back(std::move(turn));
    }
    check_transcript_shape(turns);
    return turns;
}

} // namespace

std::string_view wire_role(Speaker speaker) noexcept
{
    return speaker == Speaker::Novice ? "assistant" : "user";
}

std::optional<Speaker> parse_wire_role(std::string_view role) noexcept
{
    if (role == "assistant") {
        return Speaker::Novice;
    }
    if (role == "user") {
        return Speaker::Expert;
    }
    return std::nullopt;
}

std::string_view to_string(SessionStatus status) noexcept
{
    switch (status) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Completed: return "completed";
    case SessionStatus::Discarded: return "discarded";
    }
    return "active";
}

std::optional<SessionStatus> parse_status(std::string_view status) noexcept
{
    for (auto s : {SessionStatus::Active, SessionStatus::Completed, SessionStatus::Discarded}) {
        if (text::iequals(status, to_string(s))) {
            return s;
        }
    }
    return std::nullopt;
}

std::size_t DialogueSession::expert_turn_count() const noexcept
{
    return static_cast<std::size_t>(std::count_if(turns.begin(), turns.end(),
        [](Turn const & t) { return t.role == Speaker::Expert; }));
}

void check_transcript_shape(std::vector<Turn> const & turns)
{
    if (turns.empty()) {
        throw FormatError("transcript has no turns; turns[0] is required", 0);
    }
    for (std::size_t i = 0; i < turns.size(); ++i) {
        auto const where = "turn " + std::to_string(i) + ": ";
        if (turns[i].index != i) {
            throw FormatError(where + "index does not match position", i);
        }
        if (text::trim(turns[i].content).empty()) {
            throw FormatError(where + "empty content", i);
        }
        if (i == 0 && turns[i].role != Speaker::Novice) {
            throw FormatError(where + "first turn must be the novice (\"assistant\")", i);
        }
        if (i > 0 && turns[i].role == turns[i - 1].role) {
            throw FormatError(where + "roles do not alternate (two consecutive \""
                    + std::string(wire_role(turns[i].role)) + "\" entries)",
                i);
        }
    }
}

// ---------------------------------------------------------------------------

ContractResult check_initial_question(std::string_view question)
{
    ContractResult result;
    auto const q = text::trim(question);
    if (q.empty()) {
        result.violations.emplace_back("question must not be empty");
        return result;
    }
    if (q.back() != '?') {
        result.violations.emplace_back("It should end with a question mark");
    }
    if (std::count(q.begin(), q.end(), '?') > 1) {
        result.violations.emplace_back("It should be a single question, not multiple questions");
    }
    if (!mentions_first_person(q)) {
        result.warnings.emplace_back(flags::initial_question_not_first_person);
    }
    return result;
}

ContractResult check_followup(std::string_view reply)
{
    ContractResult result;
    if (text::trim(reply).empty()) {
        result.violations.emplace_back("reply must not be empty");
    } else if (text::count_sentences(reply) > max_followup_sentences) {
        result.violations.emplace_back("Responses must not exceed 5 sentences");
    }
    return result;
}

ContractResult check_contract(ContractKind kind, std::string_view text)
{
    return kind == ContractKind::InitialQuestion ? check_initial_question(text) : check_followup(text);
}

std::string clean_generated_text(std::string_view raw)
{
    auto s = text::trim(raw);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = text::trim(s.substr(1, s.size() - 2));
    }
    return std::string(s);
}

// ---------------------------------------------------------------------------

std::string_view initial_question_template() noexcept
{
    return kInitialQuestionTemplate;
}

std::string_view followup_template() noexcept
{
    return kFollowupTemplate;
}

std::string render_initial_question_prompt(persona::PersonaProfile const & profile)
{
    std::string out = text::substitute(kInitialQuestionTemplate, "{profile_text}",
        persona::render_profile_text(profile));
    // Challenge fields last: they are free text and may contain braces.
    out = text::substitute(out, "{challenge}", profile.challenge.name);
    out = text::substitute(out, "{category}", profile.challenge.category);
    out = text::substitute(out, "{description}", profile.challenge.description);
    return text::substitute(out, "{sample_question}", profile.challenge.sample_question);
}

std::string render_conversation_profile(DialogueSession const & session)
{
    std::ostringstream out;
    if (session.persona) {
        auto const & p = *session.persona;
        out << persona::render_profile_text(p)
            << "Teaching challenge: " << p.challenge.name << " (" << p.challenge.category << ")\n"
            << "Challenge details: " << p.challenge.description << "\n";
    }
    out << "Your opening question to the expert: " << session.initial_question;
    return out.str();
}

std::string render_followup_system_prompt(DialogueSession const & session)
{
    return text::substitute(kFollowupTemplate, "{conversation_instructor_profile}",
        render_conversation_profile(session));
}

std::string greeting(persona::PersonaProfile const & profile)
{
    return "Hello, I'm " + profile.first_name + " " + profile.last_name + "!";
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_document(DialogueSession const & session)
{
    nlohmann::ordered_json doc;
    doc["id"] = session.id;
    doc["status"] = std::string(to_string(session.status));
    doc["created_at"] = format_iso8601(session.created_at);
    doc["updated_at"] = format_iso8601(session.updated_at);
    if (session.persona) {
        nlohmann::json persona_json = *session.persona;
        doc["persona"] = nlohmann::ordered_json::parse(persona_json.dump());
    } else {
        doc["persona"] = nullptr;
    }
    doc["initial_question"] = session.initial_question;
    doc["flags"] = nlohmann::ordered_json::array();
    for (auto const & f : session.flags) {
        doc["flags"].push_back(f);
    }
    auto turns = nlohmann::ordered_json::array();
    for (auto const & t : session.turns) {
        nlohmann::ordered_json entry;
        entry["role"] = std::string(wire_role(t.role));
        entry["content"] = t.content;
        entry["created_at"] = format_iso8601(t.created_at);
        turns.push_back(std::move(entry));
    }
    doc["turns"] = std::move(turns);
    return doc;
}

std::string serialize_session(DialogueSession const & session)
{
    return to_document(session).dump(2) + "\n";
}

DialogueSession from_document(nlohmann::json const & doc)
{
    DialogueSession session;
    if (doc.is_array()) {
        session.turns = parse_turns(doc);
        session.status = SessionStatus::Completed;
        session.initial_question = session.turns.front().content;
        return session;
    }
    if (!doc.is_object()) {
        throw FormatError("session document must be an object or a transcript array");
    }
    auto const * turns = find_member(doc, "turns");
    if (turns == nullptr) {
        throw FormatError("session document has no 'turns'; turns[0] is required", 0);
    }
    session.turns = parse_turns(*turns);

    if (auto const * id = find_member(doc, "id"); id != nullptr && id->is_string()) {
        session.id = id->get<std::string>();
    }
    session.status = SessionStatus::Completed;
    if (auto const * status = find_member(doc, "status"); status != nullptr) {
        auto const parsed = status->is_string() ? parse_status(status->get<std::string>()) : std::nullopt;
        if (!parsed) {
            throw FormatError("unknown session status");
        }
        session.status = *parsed;
    }
    session.created_at = optional_time(doc, "created_at");
    session.updated_at = optional_time(doc, "updated_at");
    if (auto const * p = find_member(doc, "persona"); p != nullptr && !p->is_null()) {
        try {
            session.persona = p->get<persona::PersonaProfile>();
        } catch (nlohmann::json::exception const & e) {
            throw FormatError(std::string("invalid persona: ") + e.what());
        }
    }
    if (auto const * q = find_member(doc, "initial_question"); q != nullptr && q->is_string()) {
        session.initial_question = q->get<std::string>();
    } else {
        session.initial_question = session.turns.front().content;
    }
    if (session.initial_question != session.turns.front().content) {
        throw FormatError("turn 0: content differs from initial_question", 0);
    }
    if (auto const * f = find_member(doc, "flags"); f != nullptr) {
        if (!f->is_array()) {
            throw FormatError("'flags' must be an array of strings");
        }
        for (auto const & flag : *f) {
            if (!flag.is_string()) {
                throw FormatError("'flags' must be an array of strings");
            }
            session.flags.insert(flag.get<std::string>());
        }
    }
    return session;
}

DialogueSession parse_session(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const & e) {
        throw FormatError(std::string("session document is not valid JSON: ") + e.what());
    }
    return from_document(doc);
}

std::vector<DialogueSession> parse_corpus(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const & e) {
        throw FormatError(std::string("corpus document is not valid JSON: ") + e.what());
    }
    std::vector<DialogueSession> sessions;
    auto add_all = [&](nlohmann::json const & list) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            try {
                sessions.push_back(from_document(list[i]));
            } catch (FormatError const & e) {
                throw FormatError("session " + std::to_string(i) + ": " + e.what(), e.index());
            }
        }
    };
    if (doc.is_object() && doc.contains("sessions")) {
        if (!doc["sessions"].is_array()) {
            throw FormatError("'sessions' must be an array");
        }
        add_all(doc["sessions"]);
    } else if (doc.is_array() && !doc.empty() && doc[0].is_object() && doc[0].contains("turns")) {
        add_all(doc);
    } else {
        sessions.push_back(from_document(doc));
    }
    return sessions;
}

std::vector<DialogueSession> load_corpus(std::filesystem::path const & path)
{
    try {
        return parse_corpus(text::read_file(path));
    } catch (FormatError const & e) {
        throw FormatError(path.string() + ": " + e.what(), e.index());
    }
}

std::string serialize_corpus(std::vector<DialogueSession> const & sessions)
{
    nlohmann::ordered_json doc;
    doc["sessions"] = nlohmann::ordered_json::array();
    for (auto const & s : sessions) {
        doc["sessions"].push_back(to_document(s));
    }
    return doc.dump(2) + "\n";
}

} // namespace coachsim::dialogue
