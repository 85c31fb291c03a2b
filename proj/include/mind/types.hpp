#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mind {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class Theme {
    WorkIssues,
    InterpersonalIssues,
    EconomicIssues,
    RandomNegativeEvents,
    FamilyIssues,
    PhysicalStress,
    IdealRealityDiscrepancy,
};

const std::array<Theme, 7>& all_themes();
std::string_view to_string(Theme theme);
/// Canonical names only (case-insensitive). Throws InvalidInput otherwise.
Theme parse_theme(std::string_view label);
/// Lower-case phrase bound into the {topic} placeholder.
std::string_view topic_label(Theme theme);

enum class DistortionType {
    EmotionalReasoning,
    Overgeneralization,
    MentalFiltering,
    ShouldStatements,
    AllOrNothing,
    MindReading,
    Magnification,
    Personalization,
    Labeling,
    FortuneTelling,
};

const std::array<DistortionType, 10>& all_distortion_types();
std::string_view to_string(DistortionType type);
/// Human-readable form used in prompts, e.g. "Emotional Reasoning".
std::string_view display_name(DistortionType type);
DistortionType parse_distortion_type_exact(std::string_view name);
/// Case-insensitive, punctuation-stripped, prefix-tolerant match against the
/// ten canonical names. Returns nullopt when nothing (or more than one
/// candidate) matches.
std::optional<DistortionType> match_distortion_type(std::string_view label);

enum class ComfortAuthor { Human, Simulated };
std::string_view to_string(ComfortAuthor author);

enum class SafetyStop { DialogueStagnation, SuicidalIdeation, IntenseEmotion, WorseningBias };
std::string_view to_string(SafetyStop stop);
std::optional<SafetyStop> match_safety_stop(std::string_view text);

enum class Phase {
    AwaitingScenario,
    AwaitingThought,
    AwaitingGuidance,
    AwaitingComfort,
    AwaitingProgression,
    Completed,
};
std::string_view to_string(Phase phase);

enum class SessionStatus { Active, CompletedGoal, MaxRoundsReached, SafetyTerminated };
std::string_view to_string(SessionStatus status);

enum class Ablation { None, NoMemory, NoStrategist, NoGuide };
std::string_view to_string(Ablation ablation);
Ablation parse_ablation(std::string_view label);

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

/// The player's worry. Never empty after trimming.
class Concern {
public:
    explicit Concern(std::string text);

    const std::string& text() const noexcept { return text_; }
    bool operator==(const Concern&) const = default;

private:
    std::string text_;
};

struct PersonalityProfile {
    double openness = 0.5;
    double conscientiousness = 0.5;
    double extraversion = 0.5;
    double agreeableness = 0.5;
    double neuroticism = 0.5;

    static PersonalityProfile balanced() { return {}; }
    void validate() const;
    /// One line per trait with a low/medium/high adjective.
    std::string describe() const;

    bool operator==(const PersonalityProfile&) const = default;
};

/// "low" below 0.33, "medium" below 0.66, "high" otherwise.
std::string_view trait_level(double score);

struct Scenario {
    int round = 0;
    std::string scene;
    std::optional<std::string> changes;
    std::string reasons;

    bool operator==(const Scenario&) const = default;
};

struct DistortedThought {
    int round = 0;
    DistortionType distortion_type = DistortionType::EmotionalReasoning;
    std::string thoughts;
    std::string reasons;

    bool operator==(const DistortedThought&) const = default;
};

struct Guidance {
    int round = 0;
    std::string summary_scene;
    std::string summary_thoughts;
    std::string help;
    std::string changes;
    std::string reasons;

    bool operator==(const Guidance&) const = default;
};

struct Comfort {
    int round = 0;
    std::string comforting_words;
    std::optional<std::string> reasons;
    ComfortAuthor author = ComfortAuthor::Human;

    bool operator==(const Comfort&) const = default;
};

struct Progression {
    int round = 0;
    std::string next_scene;
    std::string next_thoughts;
    bool is_end = false;
    std::string reasons;
    std::optional<SafetyStop> safety_stop;

    bool operator==(const Progression&) const = default;
};

struct MemoryState {
    std::vector<std::string> memory_scene;
    std::vector<std::string> memory_thought;
    std::vector<std::string> memory_guide;
    std::vector<std::string> memory_comforting;
    std::string summary;

    bool operator==(const MemoryState&) const = default;
};

struct RoundRecord {
    int round = 0;
    std::optional<Scenario> scenario;
    std::optional<DistortedThought> thought;
    std::optional<Guidance> guidance;
    std::optional<Comfort> comfort;
    std::optional<Progression> progression;
    /// agent role ("trigger", "devil", ...) -> raw backend text
    std::map<std::string, std::string> raw_outputs;
    /// Field names in the order step() accepted them.
    std::vector<std::string> acceptance;

    bool complete() const noexcept
    {
        return scenario && thought && guidance && comfort && progression;
    }
    bool operator==(const RoundRecord&) const = default;
};

struct SessionState {
    std::string id;
    Theme theme = Theme::WorkIssues;
    Concern concern;
    PersonalityProfile personality;
    int round = 0;
    Phase phase = Phase::AwaitingScenario;
    std::vector<RoundRecord> rounds;
    MemoryState memory;
    SessionStatus status = SessionStatus::Active;
    int max_rounds = 10;
    bool facilitation_enabled = false;
    Ablation ablation = Ablation::None;

    bool operator==(const SessionState&) const = default;
};

using PhaseInput = std::variant<Scenario, DistortedThought, Guidance, Comfort, Progression>;

// ---------------------------------------------------------------------------
// JSON (field names match the type definitions above)
// ---------------------------------------------------------------------------

void to_json(Json& j, const PersonalityProfile& p);
void from_json(const Json& j, PersonalityProfile& p);
void to_json(Json& j, const Scenario& s);
void from_json(const Json& j, Scenario& s);
void to_json(Json& j, const DistortedThought& d);
void from_json(const Json& j, DistortedThought& d);
void to_json(Json& j, const Guidance& g);
void from_json(const Json& j, Guidance& g);
void to_json(Json& j, const Comfort& c);
void from_json(const Json& j, Comfort& c);
void to_json(Json& j, const Progression& p);
void from_json(const Json& j, Progression& p);
void to_json(Json& j, const MemoryState& m);
void from_json(const Json& j, MemoryState& m);
void to_json(Json& j, const RoundRecord& r);
void from_json(const Json& j, RoundRecord& r);
void to_json(Json& j, const SessionState& s);
SessionState session_from_json(const Json& j);

} // namespace mind
