#pragma once

#include "coachsim/error.hpp"
#include "coachsim/llm.hpp"
#include "coachsim/random.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coachsim::persona {

enum class Trait { Openness, Conscientiousness, Extroversion, Agreeableness };
enum class Pole { Low, High };

inline constexpr std::array<Trait, 4> all_traits{
    Trait::Openness, Trait::Conscientiousness, Trait::Extroversion, Trait::Agreeableness};

[[nodiscard]] std::string_view to_string(Trait trait) noexcept;
[[nodiscard]] std::string_view to_string(Pole pole) noexcept;
[[nodiscard]] std::optional<Trait> parse_trait(std::string_view name) noexcept;
[[nodiscard]] std::optional<Pole> parse_pole(std::string_view name) noexcept;

/// Short adjective for a trait pole, e.g. (Extroversion, Low) -> "introverted".
[[nodiscard]] std::string_view trait_label(Trait trait, Pole pole) noexcept;

/// Longer behavioural phrase; always begins with trait_label(trait, pole).
[[nodiscard]] std::string_view trait_phrase(Trait trait, Pole pole) noexcept;

/// The four Big Five traits used for the novice (neuroticism is never modelled).
struct TraitAssignment
{
    Pole openness = Pole::Low;
    Pole conscientiousness = Pole::Low;
    Pole extroversion = Pole::Low;
    Pole agreeableness = Pole::Low;

    [[nodiscard]] Pole get(Trait trait) const noexcept;
    void set(Trait trait, Pole pole) noexcept;

    friend bool operator == (TraitAssignment const &, TraitAssignment const &) = default;
};

/// openness + conscientiousness phrases.
[[nodiscard]] std::string render_teaching_style(TraitAssignment const & traits);
/// extroversion + agreeableness phrases.
[[nodiscard]] std::string render_conversation_style(TraitAssignment const & traits);

/// Candidate values for the seven attributes drawn directly from pools.
struct AttributePools
{
    std::vector<std::string> first_name;
    std::vector<std::string> last_name;
    std::vector<std::string> classroom_context;
    std::vector<std::string> teaching_experience;
    std::vector<std::string> discipline;
    std::vector<std::string> course_level;
    std::vector<std::string> semester_context;

    /// Pool names in draw order, paired with the member they name.
    [[nodiscard]] std::array<std::pair<std::string_view, std::vector<std::string> const *>, 7> named() const;

    /// Throws ConfigError naming the first empty pool or duplicated value.
    void validate() const;
};

struct ChallengeItem
{
    int id = 0;
    std::string category;
    std::string name;
    std::string description;
    std::string sample_question;

    friend bool operator == (ChallengeItem const &, ChallengeItem const &) = default;
};

struct PersonaProfile
{
    std::string first_name;
    std::string last_name;
    std::string classroom_context;
    std::string teaching_experience;
    std::string discipline;
    std::string course_level;
    std::string semester_context;
    TraitAssignment traits;
    std::string teaching_style;
    std::string conversation_style;
    ChallengeItem challenge;

    friend bool operator == (PersonaProfile const &, PersonaProfile const &) = default;
};

void to_json(nlohmann::json & j, PersonaProfile const & p);
void from_json(nlohmann::json const & j, PersonaProfile & p);
void to_json(nlohmann::json & j, ChallengeItem const & c);
void from_json(nlohmann::json const & j, ChallengeItem & c);

/// Unordered (discipline, classroom_context) pairs that make a profile incoherent.
struct CoherenceRules
{
    struct Pair
    {
        std::string discipline;
        std::string classroom_context;
    };
    std::vector<Pair> incompatible;

    [[nodiscard]] bool rejects(std::string_view discipline, std::string_view classroom_context) const noexcept;
};

enum class VerificationMode { Rules, RulesThenLlm };
enum class VerificationSource { Rules, Llm };

struct Violation
{
    std::string first_attribute;
    std::string second_attribute;
    std::string reason;
};

struct VerificationResult
{
    bool coherent = true;
    std::vector<Violation> violations;
    VerificationSource source = VerificationSource::Rules;
};

struct VerifierOptions
{
    std::string model_id = "gpt-4";
    double temperature = 0.0;
    int max_tokens = 128;
    llm::RetryPolicy retry;
};

class VerificationError : public GenerationError
{
public:
    using GenerationError::GenerationError;
};

// ---------------------------------------------------------------------------
// Data files

/**
 * Attribute pools: a line-oriented text file. `[pool_name]` opens a section,
 * each following non-blank line is one value, `#` starts a comment line.
 * Section names are the AttributePools member names.
 */
[[nodiscard]] AttributePools parse_attribute_pools(std::string_view text);
[[nodiscard]] AttributePools load_attribute_pools(std::filesystem::path const & path);

/// One JSON object per line: {"id","category","name","description","sample_question"}.
[[nodiscard]] std::vector<ChallengeItem> parse_challenge_bank(std::string_view text);
[[nodiscard]] std::vector<ChallengeItem> load_challenge_bank(std::filesystem::path const & path);

/// One "discipline | classroom_context" pair per line, `#` comments.
[[nodiscard]] CoherenceRules parse_coherence_rules(std::string_view text);
[[nodiscard]] CoherenceRules load_coherence_rules(std::filesystem::path const & path);

// ---------------------------------------------------------------------------
// Operations

/// Draws every pooled attribute, each trait pole and the challenge uniformly
/// and independently, in a fixed order. Throws ConfigError on an empty pool or bank.
[[nodiscard]] PersonaProfile sample_persona(AttributePools const & pools,
    std::vector<ChallengeItem> const & bank, Rng & rng);

[[nodiscard]] std::string render_coherence_prompt(PersonaProfile const & profile);

/**
 * Checks the rule table first. In RulesThenLlm mode, a profile that passes
 * the rules is sent to `provider` as a YES/NO question; an unparseable answer
 * is retried once before VerificationError is thrown.
 */
[[nodiscard]] VerificationResult verify_coherence(PersonaProfile const & profile,
    CoherenceRules const & rules, VerificationMode mode, llm::ChatProvider * provider = nullptr,
    VerifierOptions const & options = {});

/// Multi-line block naming all nine attributes and the trait labels.
[[nodiscard]] std::string render_profile_text(PersonaProfile const & profile);

} // namespace coachsim::persona
