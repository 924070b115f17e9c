#include "coachsim/persona.hpp"

#include "coachsim/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace coachsim::persona {

namespace {

struct TraitInfo
{
    std::string_view name;
    std::string_view low_label;
    std::string_view high_label;
    std::string_view low_phrase;
    std::string_view high_phrase;
};

constexpr std::array<TraitInfo, 4> trait_table{{
    {"openness", "conventional", "open",
        "conventional: prefers familiar, proven teaching methods",
        "open: enjoys experimenting with new teaching methods"},
    {"conscientiousness", "easygoing", "conscientious",
        "easygoing: flexible and spontaneous, light on formal structure",
        "conscientious: highly structured, organized and detail-oriented"},
    {"extroversion", "introverted", "extroverted",
        "introverted: reserved, keeps answers brief and shares details only when asked",
        "extroverted: talkative and expressive, volunteers details and stories"},
    {"agreeableness", "critical", "agreeable",
        "critical: questions suggestions and pushes back before accepting them",
        "agreeable: warm, cooperative and receptive to suggestions"},
}};

TraitInfo const & info(Trait trait) noexcept
{
    return trait_table[static_cast<std::size_t>(trait)];
}

std::string llm_yes_no_strip(std::string_view s)
{
    s = text::trim(s);
    while (!s.empty() && (s.front() == '*' || s.front() == '"' || s.front() == '#' || s.front() == '_')) {
        s.remove_prefix(1);
    }
    return std::string(text::trim(s));
}

struct CoherenceAnswer
{
    bool coherent;
    std::string reason;
};

std::optional<CoherenceAnswer> parse_coherence_answer(std::string_view raw)
{
    std::string const s = llm_yes_no_strip(raw);
    auto word_then = [&](std::string_view word) {
        return text::starts_with_icase(s, word)
            && (s.size() == word.size() || !std::isalpha(static_cast<unsigned char>(s[word.size()])));
    };
    bool yes = word_then("yes");
    bool no = word_then("no");
    if (!yes && !no) {
        return std::nullopt;
    }
    std::string_view rest = std::string_view(s).substr(yes ? 3 : 2);
    while (!rest.empty() && (rest.front() == '*' || rest.front() == ':' || rest.front() == ',' || rest.front() == '.'
               || rest.front() == '-' || std::isspace(static_cast<unsigned char>(rest.front())))) {
        rest.remove_prefix(1);
    }
    return CoherenceAnswer{yes, std::string(text::trim(rest))};
}

std::string const & require_string(nlohmann::json const & obj, char const * key, std::size_t line)
{
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw ConfigError("line " + std::to_string(line) + ": missing string field '" + key + "'");
    }
    return obj[key].get_ref<std::string const &>();
}

} // namespace

std::string_view to_string(Trait trait) noexcept
{
    return info(trait).name;
}

std::string_view to_string(Pole pole) noexcept
{
    return pole == Pole::High ? "HIGH" : "LOW";
}

std::optional<Trait> parse_trait(std::string_view name) noexcept
{
    for (auto t : all_traits) {
        if (text::iequals(name, info(t).name)) {
            return t;
        }
    }
    if (text::iequals(name, "extraversion")) {
        return Trait::Extroversion;
    }
    return std::nullopt;
}

std::optional<Pole> parse_pole(std::string_view name) noexcept
{
    if (text::iequals(name, "high")) {
        return Pole::High;
    }
    if (text::iequals(name, "low")) {
        return Pole::Low;
    }
    return std::nullopt;
}

std::string_view trait_label(Trait trait, Pole pole) noexcept
{
    return pole == Pole::High ? info(trait).high_label : info(trait).low_label;
}

std::string_view trait_phrase(Trait trait, Pole pole) noexcept
{
    return pole == Pole::High ? info(trait).high_phrase : info(trait).low_phrase;
}

Pole TraitAssignment::get(Trait trait) const noexcept
{
    switch (trait) {
    case Trait::Openness: return openness;
    case Trait::Conscientiousness: return conscientiousness;
    case Trait::Extroversion: return extroversion;
    case Trait::Agreeableness: return agreeableness;
    }
    return openness;
}

void TraitAssignment::set(Trait trait, Pole pole) noexcept
{
    switch (trait) {
    case Trait::Openness: openness = pole; break;
    case Trait::Conscientiousness: conscientiousness = pole; break;
    case Trait::Extroversion: extroversion = pole; break;
    case Trait::Agreeableness: agreeableness = pole; break;
    }
}

std::string render_teaching_style(TraitAssignment const & traits)
{
    return std::string(trait_phrase(Trait::Openness, traits.openness)) + "; "
        + std::string(trait_phrase(Trait::Conscientiousness, traits.conscientiousness));
}

std::string render_conversation_style(TraitAssignment const & traits)
{
    return std::string(trait_phrase(Trait::Extroversion, traits.extroversion)) + "; "
        + std::string(trait_phrase(Trait::Agreeableness, traits.agreeableness));
}

std::array<std::pair<std::string_view, std::vector<std::string> const *>, 7> AttributePools::named() const
{
    return {{
        {"first_name", &first_name},
        {"last_name", &last_name},
        {"classroom_context", &classroom_context},
        {"teaching_experience", &teaching_experience},
        {"discipline", &discipline},
        {"course_level", &course_level},
        {"semester_context", &semester_context},
    }};
}

void AttributePools::validate() const
{
    for (auto const & [name, values] : named()) {
        if (values->empty()) {
            throw ConfigError("attribute pool '" + std::string(name) + "' is empty");
        }
        std::set<std::string> seen;
        for (auto const & v : *values) {
            if (!seen.insert(v).second) {
                throw ConfigError("attribute pool '" + std::string(name) + "' has duplicate value '" + v + "'");
            }
        }
    }
}

bool CoherenceRules::rejects(std::string_view discipline, std::string_view classroom_context) const noexcept
{
    for (auto const & pair : incompatible) {
        if (text::iequals(pair.discipline, discipline) && text::iequals(pair.classroom_context, classroom_context)) {
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json & j, ChallengeItem const & c)
{
    j = nlohmann::json{{"id", c.id}, {"category", c.category}, {"name", c.name},
        {"description", c.description}, {"sample_question", c.sample_question}};
}

void from_json(nlohmann::json const & j, ChallengeItem & c)
{
    j.at("id").get_to(c.id);
    j.at("category").get_to(c.category);
    j.at("name").get_to(c.name);
    j.at("description").get_to(c.description);
    j.at("sample_question").get_to(c.sample_question);
}

void to_json(nlohmann::json & j, PersonaProfile const & p)
{
    nlohmann::json traits = nlohmann::json::object();
    for (auto t : all_traits) {
        traits[std::string(to_string(t))] = std::string(to_string(p.traits.get(t)));
    }
    j = nlohmann::json{
        {"first_name", p.first_name},
        {"last_name", p.last_name},
        {"classroom_context", p.classroom_context},
        {"teaching_experience", p.teaching_experience},
        {"discipline", p.discipline},
        {"course_level", p.course_level},
        {"semester_context", p.semester_context},
        {"traits", traits},
        {"teaching_style", p.teaching_style},
        {"conversation_style", p.conversation_style},
        {"challenge", p.challenge},
    };
}

void from_json(nlohmann::json const & j, PersonaProfile & p)
{
    j.at("first_name").get_to(p.first_name);
    j.at("last_name").get_to(p.last_name);
    j.at("classroom_context").get_to(p.classroom_context);
    j.at("teaching_experience").get_to(p.teaching_experience);
    j.at("discipline").get_to(p.discipline);
    j.at("course_level").get_to(p.course_level);
    j.at("semester_context").get_to(p.semester_context);
    auto const & traits = j.at("traits");
    for (auto t : all_traits) {
        auto const pole = parse_pole(traits.at(std::string(to_string(t))).get<std::string>());
        if (!pole) {
            throw FormatError("persona trait '" + std::string(to_string(t)) + "' must be HIGH or LOW");
        }
        p.traits.set(t, *pole);
    }
    j.at("teaching_style").get_to(p.teaching_style);
    j.at("conversation_style").get_to(p.conversation_style);
    j.at("challenge").get_to(p.challenge);
}

// ---------------------------------------------------------------------------

AttributePools parse_attribute_pools(std::string_view contents)
{
    AttributePools pools;
    auto slot_for = [&pools](std::string_view name) -> std::vector<std::string> * {
        if (name == "first_name") return &pools.first_name;
        if (name == "last_name") return &pools.last_name;
        if (name == "classroom_context") return &pools.classroom_context;
        if (name == "teaching_experience") return &pools.teaching_experience;
        if (name == "discipline") return &pools.discipline;
        if (name == "course_level") return &pools.course_level;
        if (name == "semester_context") return &pools.semester_context;
        return nullptr;
    };

    std::vector<std::string> * current = nullptr;
    std::string current_name;
    std::set<std::string> seen_sections;
    std::size_t line_no = 0;
    for (auto raw : text::split_lines(contents)) {
        ++line_no;
        auto const line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto const where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + "unterminated section header");
            }
            current_name = std::string(text::trim(line.substr(1, line.size() - 2)));
            current = slot_for(current_name);
            if (current == nullptr) {
                throw ConfigError(where + "unknown attribute pool '" + current_name + "'");
            }
            if (!seen_sections.insert(current_name).second) {
                throw ConfigError(where + "attribute pool '" + current_name + "' declared twice");
            }
            continue;
        }
        if (current == nullptr) {
            throw ConfigError(where + "value outside of a [pool] section");
        }
        std::string value(line);
        if (std::find(current->begin(), current->end(), value) != current->end()) {
            throw ConfigError(where + "duplicate value '" + value + "' in pool '" + current_name + "'");
        }
        current->push_back(std::move(value));
    }
    pools.validate();
    return pools;
}

AttributePools load_attribute_pools(std::filesystem::path const & path)
{
    try {
        return parse_attribute_pools(text::read_file(path));
    } catch (ConfigError const & e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<ChallengeItem> parse_challenge_bank(std::string_view contents)
{
    std::vector<ChallengeItem> bank;
    std::set<int> ids;
    std::size_t line_no = 0;
    for (auto raw : text::split_lines(contents)) {
        ++line_no;
        auto const line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto const where = "line " + std::to_string(line_no) + ": ";
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (nlohmann::json::parse_error const &) {
            throw ConfigError(where + "not a JSON object");
        }
        if (!obj.is_object()) {
            throw ConfigError(where + "not a JSON object");
        }
        if (!obj.contains("id") || !obj["id"].is_number_integer()) {
            throw ConfigError(where + "missing integer field 'id'");
        }
        ChallengeItem item;
        item.id = obj["id"].get<int>();
        item.category = require_string(obj, "category", line_no);
        item.name = require_string(obj, "name", line_no);
        item.description = require_string(obj, "description", line_no);
        item.sample_question = require_string(obj, "sample_question", line_no);
        if (text::trim(item.description).empty()) {
            throw ConfigError(where + "'description' is empty");
        }
        if (text::trim(item.sample_question).empty()) {
            throw ConfigError(where + "'sample_question' is empty");
        }
        if (!ids.insert(item.id).second) {
            throw ConfigError(where + "duplicate challenge id " + std::to_string(item.id));
        }
        bank.push_back(std::move(item));
    }
    if (bank.empty()) {
        throw ConfigError("challenge bank is empty");
    }
    return bank;
}

std::vector<ChallengeItem> load_challenge_bank(std::filesystem::path const & path)
{
    try {
        return parse_challenge_bank(text::read_file(path));
    } catch (ConfigError const & e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

CoherenceRules parse_coherence_rules(std::string_view contents)
{
    CoherenceRules rules;
    std::size_t line_no = 0;
    for (auto raw : text::split_lines(contents)) {
        ++line_no;
        auto const line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto const bar = line.find('|');
        if (bar == std::string_view::npos || line.find('|', bar + 1) != std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'discipline | classroom_context'");
        }
        CoherenceRules::Pair pair{std::string(text::trim(line.substr(0, bar))),
            std::string(text::trim(line.substr(bar + 1)))};
        if (pair.discipline.empty() || pair.classroom_context.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty side in incompatibility pair");
        }
        rules.incompatible.push_back(std::move(pair));
    }
    return rules;
}

CoherenceRules load_coherence_rules(std::filesystem::path const & path)
{
    try {
        return parse_coherence_rules(text::read_file(path));
    } catch (ConfigError const & e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

PersonaProfile sample_persona(AttributePools const & pools, std::vector<ChallengeItem> const & bank, Rng & rng)
{
    pools.validate();
    if (bank.empty()) {
        throw ConfigError("challenge bank is empty");
    }
    auto draw = [&rng](std::vector<std::string> const & pool) {
        return pool[rng.uniform_index(pool.size())];
    };
    PersonaProfile p;
    p.first_name = draw(pools.first_name);
    p.last_name = draw(pools.last_name);
    p.classroom_context = draw(pools.classroom_context);
    p.teaching_experience = draw(pools.teaching_experience);
    p.discipline = draw(pools.discipline);
    p.course_level = draw(pools.course_level);
    p.semester_context = draw(pools.semester_context);
    for (auto t : all_traits) {
        p.traits.set(t, rng.coin() ? Pole::High : Pole::Low);
    }
    p.teaching_style = render_teaching_style(p.traits);
    p.conversation_style = render_conversation_style(p.traits);
    p.challenge = bank[rng.uniform_index(bank.size())];
    return p;
}

std::string render_coherence_prompt(PersonaProfile const & profile)
{
    std::ostringstream out;
    out << "You are checking a generated profile of a college instructor for logical coherence.\n"
        << "A profile is incoherent if any of its attributes contradict each other, for example "
           "a nursing instructor whose course runs in a design studio.\n\n"
        << "Profile:\n"
        << render_profile_text(profile) << "\n"
        << "Challenge: " << profile.challenge.name << " (" << profile.challenge.category << ")\n\n"
        << "Is this profile internally coherent? Answer with YES or NO, then a colon and a one-sentence reason.";
    return out.str();
}

VerificationResult verify_coherence(PersonaProfile const & profile, CoherenceRules const & rules,
    VerificationMode mode, llm::ChatProvider * provider, VerifierOptions const & options)
{
    VerificationResult result;
    result.source = VerificationSource::Rules;
    if (rules.rejects(profile.discipline, profile.classroom_context)) {
        result.violations.push_back({"discipline", "classroom_context",
            profile.discipline + " is not taught in a " + profile.classroom_context + " setting"});
    }
    result.coherent = result.violations.empty();
    if (!result.coherent || mode == VerificationMode::Rules) {
        return result;
    }
    if (provider == nullptr) {
        throw ValidationError("LLM coherence verification requires a chat provider");
    }

    llm::ChatRequest request;
    request.model_id = options.model_id;
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;
    request.messages.push_back({llm::ChatRole::User, render_coherence_prompt(profile)});

    std::string last_raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto const response = llm::complete(*provider, request, options.retry);
        if (auto answer = parse_coherence_answer(response.content)) {
            result.source = VerificationSource::Llm;
            if (!answer->coherent) {
                result.violations.push_back({"profile", "profile",
                    answer->reason.empty() ? std::string("judged incoherent") : answer->reason});
            }
            result.coherent = result.violations.empty();
            return result;
        }
        last_raw = response.content;
    }
    throw VerificationError("coherence verifier answer is not YES/NO", last_raw);
}

std::string render_profile_text(PersonaProfile const & p)
{
    std::ostringstream out;
    out << "First name: " << p.first_name << "\n"
        << "Last name: " << p.last_name << "\n"
        << "Discipline: " << p.discipline << "\n"
        << "Course level: " << p.course_level << "\n"
        << "Classroom context: " << p.classroom_context << "\n"
        << "Teaching experience: " << p.teaching_experience << "\n"
        << "Semester context: " << p.semester_context << "\n"
        << "Teaching style: " << p.teaching_style << "\n"
        << "Conversation style: " << p.conversation_style << "\n"
        << "Personality traits: ";
    bool first = true;
    for (auto t : all_traits) {
        out << (first ? "" : ", ") << trait_label(t, p.traits.get(t));
        first = false;
    }
    out << "\n";
    return out.str();
}

} // namespace coachsim::persona
