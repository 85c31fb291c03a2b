#include "mind/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mind/error.hpp"
#include "mind/text.hpp"

namespace mind {

// ---------------------------------------------------------------------------
// Theme
// ---------------------------------------------------------------------------

const std::array<Theme, 7>& all_themes()
{
    static const std::array<Theme, 7> themes{
        Theme::WorkIssues,   Theme::InterpersonalIssues, Theme::EconomicIssues,         Theme::RandomNegativeEvents,
        Theme::FamilyIssues, Theme::PhysicalStress,      Theme::IdealRealityDiscrepancy,
    };
    return themes;
}

std::string_view to_string(Theme theme)
{
    switch (theme) {
    case Theme::WorkIssues: return "WorkIssues";
    case Theme::InterpersonalIssues: return "InterpersonalIssues";
    case Theme::EconomicIssues: return "EconomicIssues";
    case Theme::RandomNegativeEvents: return "RandomNegativeEvents";
    case Theme::FamilyIssues: return "FamilyIssues";
    case Theme::PhysicalStress: return "PhysicalStress";
    case Theme::IdealRealityDiscrepancy: return "IdealRealityDiscrepancy";
    }
    return "";
}

Theme parse_theme(std::string_view label)
{
    const auto trimmed = text::trim(label);
    for (auto theme : all_themes()) {
        if (text::iequals(trimmed, to_string(theme))) {
            return theme;
        }
    }
    throw Error(ErrorCode::InvalidInput, "unknown theme '" + trimmed + "'");
}

std::string_view topic_label(Theme theme)
{
    switch (theme) {
    case Theme::WorkIssues: return "work issues";
    case Theme::InterpersonalIssues: return "interpersonal issues";
    case Theme::EconomicIssues: return "economic issues";
    case Theme::RandomNegativeEvents: return "random negative events";
    case Theme::FamilyIssues: return "family issues";
    case Theme::PhysicalStress: return "physical stress";
    case Theme::IdealRealityDiscrepancy: return "discrepancy between ideal and reality";
    }
    return "";
}

// ---------------------------------------------------------------------------
// DistortionType
// ---------------------------------------------------------------------------

const std::array<DistortionType, 10>& all_distortion_types()
{
    static const std::array<DistortionType, 10> types{
        DistortionType::EmotionalReasoning, DistortionType::Overgeneralization, DistortionType::MentalFiltering,
        DistortionType::ShouldStatements,   DistortionType::AllOrNothing,       DistortionType::MindReading,
        DistortionType::Magnification,      DistortionType::Personalization,    DistortionType::Labeling,
        DistortionType::FortuneTelling,
    };
    return types;
}

std::string_view to_string(DistortionType type)
{
    switch (type) {
    case DistortionType::EmotionalReasoning: return "EmotionalReasoning";
    case DistortionType::Overgeneralization: return "Overgeneralization";
    case DistortionType::MentalFiltering: return "MentalFiltering";
    case DistortionType::ShouldStatements: return "ShouldStatements";
    case DistortionType::AllOrNothing: return "AllOrNothing";
    case DistortionType::MindReading: return "MindReading";
    case DistortionType::Magnification: return "Magnification";
    case DistortionType::Personalization: return "Personalization";
    case DistortionType::Labeling: return "Labeling";
    case DistortionType::FortuneTelling: return "FortuneTelling";
    }
    return "";
}

std::string_view display_name(DistortionType type)
{
    switch (type) {
    case DistortionType::EmotionalReasoning: return "Emotional Reasoning";
    case DistortionType::Overgeneralization: return "Overgeneralization";
    case DistortionType::MentalFiltering: return "Mental Filtering";
    case DistortionType::ShouldStatements: return "\"Should\" Statements";
    case DistortionType::AllOrNothing: return "All or Nothing";
    case DistortionType::MindReading: return "Mind Reading";
    case DistortionType::Magnification: return "Magnification";
    case DistortionType::Personalization: return "Personalization";
    case DistortionType::Labeling: return "Labeling";
    case DistortionType::FortuneTelling: return "Fortune Telling";
    }
    return "";
}

DistortionType parse_distortion_type_exact(std::string_view name)
{
    for (auto type : all_distortion_types()) {
        if (name == to_string(type)) {
            return type;
        }
    }
    throw Error(ErrorCode::UnknownDistortionType, std::string(name));
}

std::optional<DistortionType> match_distortion_type(std::string_view label)
{
    const auto needle = text::alpha_lower(label);
    if (needle.empty()) {
        return std::nullopt;
    }

    static const std::pair<std::string_view, DistortionType> aliases[] = {
        {"labelling", DistortionType::Labeling},
        {"catastrophizing", DistortionType::Magnification},
        {"catastrophising", DistortionType::Magnification},
        {"blackandwhitethinking", DistortionType::AllOrNothing},
    };
    for (const auto& [alias, type] : aliases) {
        if (needle.rfind(alias, 0) == 0) {
            return type;
        }
    }

    std::optional<DistortionType> found;
    int candidates = 0;
    for (auto type : all_distortion_types()) {
        const auto canonical = text::alpha_lower(to_string(type));
        if (needle == canonical) {
            return type;
        }
        const bool label_extends = needle.rfind(canonical, 0) == 0;
        const bool label_truncates = needle.size() >= 4 && canonical.rfind(needle, 0) == 0;
        if (label_extends || label_truncates) {
            found = type;
            ++candidates;
        }
    }
    if (candidates == 1) {
        return found;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Small enums
// ---------------------------------------------------------------------------

std::string_view to_string(ComfortAuthor author)
{
    return author == ComfortAuthor::Human ? "Human" : "Simulated";
}

std::string_view to_string(SafetyStop stop)
{
    switch (stop) {
    case SafetyStop::DialogueStagnation: return "DialogueStagnation";
    case SafetyStop::SuicidalIdeation: return "SuicidalIdeation";
    case SafetyStop::IntenseEmotion: return "IntenseEmotion";
    case SafetyStop::WorseningBias: return "WorseningBias";
    }
    return "";
}

std::optional<SafetyStop> match_safety_stop(std::string_view label)
{
    const auto n = text::alpha_lower(label);
    if (n.empty() || n == "none" || n == "no" || n == "na") {
        return std::nullopt;
    }
    if (text::contains(n, "stagnat")) {
        return SafetyStop::DialogueStagnation;
    }
    if (text::contains(n, "suicid")) {
        return SafetyStop::SuicidalIdeation;
    }
    if (text::contains(n, "intenseemotion") || text::contains(n, "emotionalfluctuation")
        || text::contains(n, "emotionaloutburst")) {
        return SafetyStop::IntenseEmotion;
    }
    if (text::contains(n, "worsening")) {
        return SafetyStop::WorseningBias;
    }
    return std::nullopt;
}

std::string_view to_string(Phase phase)
{
    switch (phase) {
    case Phase::AwaitingScenario: return "AwaitingScenario";
    case Phase::AwaitingThought: return "AwaitingThought";
    case Phase::AwaitingGuidance: return "AwaitingGuidance";
    case Phase::AwaitingComfort: return "AwaitingComfort";
    case Phase::AwaitingProgression: return "AwaitingProgression";
    case Phase::Completed: return "Completed";
    }
    return "";
}

std::string_view to_string(SessionStatus status)
{
    switch (status) {
    case SessionStatus::Active: return "Active";
    case SessionStatus::CompletedGoal: return "CompletedGoal";
    case SessionStatus::MaxRoundsReached: return "MaxRoundsReached";
    case SessionStatus::SafetyTerminated: return "SafetyTerminated";
    }
    return "";
}

std::string_view to_string(Ablation ablation)
{
    switch (ablation) {
    case Ablation::None: return "None";
    case Ablation::NoMemory: return "NoMemory";
    case Ablation::NoStrategist: return "NoStrategist";
    case Ablation::NoGuide: return "NoGuide";
    }
    return "";
}

Ablation parse_ablation(std::string_view label)
{
    for (auto a : {Ablation::None, Ablation::NoMemory, Ablation::NoStrategist, Ablation::NoGuide}) {
        if (text::iequals(label, to_string(a))) {
            return a;
        }
    }
    throw Error(ErrorCode::InvalidInput, "unknown ablation '" + std::string(label) + "'");
}

namespace {

template <class Enum, std::size_t N>
Enum enum_from_string(std::string_view s, const std::array<Enum, N>& values, const char* what)
{
    for (auto v : values) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw Error(ErrorCode::InvalidInput, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<Phase, 6> kPhases{Phase::AwaitingScenario,    Phase::AwaitingThought, Phase::AwaitingGuidance,
                                       Phase::AwaitingComfort,     Phase::AwaitingProgression, Phase::Completed};
constexpr std::array<SessionStatus, 4> kStatuses{SessionStatus::Active, SessionStatus::CompletedGoal,
                                                 SessionStatus::MaxRoundsReached, SessionStatus::SafetyTerminated};
constexpr std::array<SafetyStop, 4> kStops{SafetyStop::DialogueStagnation, SafetyStop::SuicidalIdeation,
                                           SafetyStop::IntenseEmotion, SafetyStop::WorseningBias};
constexpr std::array<ComfortAuthor, 2> kAuthors{ComfortAuthor::Human, ComfortAuthor::Simulated};

Json optional_text(const std::optional<std::string>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

std::optional<std::string> read_optional_text(const Json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<std::string>();
}

template <class T>
Json optional_value(const std::optional<T>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> read_optional(const Json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

} // namespace

// ---------------------------------------------------------------------------
// Concern / PersonalityProfile
// ---------------------------------------------------------------------------

Concern::Concern(std::string text) : text_(std::move(text))
{
    if (text::trim(text_).empty()) {
        throw Error(ErrorCode::EmptyConcern, "concern must not be empty");
    }
}

void PersonalityProfile::validate() const
{
    const std::pair<const char*, double> traits[] = {
        {"openness", openness},           {"conscientiousness", conscientiousness}, {"extraversion", extraversion},
        {"agreeableness", agreeableness}, {"neuroticism", neuroticism},
    };
    for (const auto& [name, score] : traits) {
        if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
            throw Error(ErrorCode::InvalidInput, std::string(name) + " must lie in [0, 1]");
        }
    }
}

std::string_view trait_level(double score)
{
    if (score < 0.33) {
        return "low";
    }
    if (score < 0.66) {
        return "medium";
    }
    return "high";
}

std::string PersonalityProfile::describe() const
{
    std::ostringstream out;
    out << "Openness: " << trait_level(openness) << "\n"
        << "Conscientiousness: " << trait_level(conscientiousness) << "\n"
        << "Extraversion: " << trait_level(extraversion) << "\n"
        << "Agreeableness: " << trait_level(agreeableness) << "\n"
        << "Neuroticism: " << trait_level(neuroticism);
    return out.str();
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(Json& j, const PersonalityProfile& p)
{
    j = Json{{"openness", p.openness},
             {"conscientiousness", p.conscientiousness},
             {"extraversion", p.extraversion},
             {"agreeableness", p.agreeableness},
             {"neuroticism", p.neuroticism}};
}

void from_json(const Json& j, PersonalityProfile& p)
{
    j.at("openness").get_to(p.openness);
    j.at("conscientiousness").get_to(p.conscientiousness);
    j.at("extraversion").get_to(p.extraversion);
    j.at("agreeableness").get_to(p.agreeableness);
    j.at("neuroticism").get_to(p.neuroticism);
}

void to_json(Json& j, const Scenario& s)
{
    j = Json{{"round", s.round}, {"scene", s.scene}, {"changes", optional_text(s.changes)}, {"reasons", s.reasons}};
}

void from_json(const Json& j, Scenario& s)
{
    j.at("round").get_to(s.round);
    j.at("scene").get_to(s.scene);
    s.changes = read_optional_text(j, "changes");
    j.at("reasons").get_to(s.reasons);
}

void to_json(Json& j, const DistortedThought& d)
{
    j = Json{{"round", d.round},
             {"distortion_type", to_string(d.distortion_type)},
             {"thoughts", d.thoughts},
             {"reasons", d.reasons}};
}

void from_json(const Json& j, DistortedThought& d)
{
    j.at("round").get_to(d.round);
    d.distortion_type = parse_distortion_type_exact(j.at("distortion_type").get<std::string>());
    j.at("thoughts").get_to(d.thoughts);
    j.at("reasons").get_to(d.reasons);
}

void to_json(Json& j, const Guidance& g)
{
    j = Json{{"round", g.round},
             {"summary_scene", g.summary_scene},
             {"summary_thoughts", g.summary_thoughts},
             {"help", g.help},
             {"changes", g.changes},
             {"reasons", g.reasons}};
}

void from_json(const Json& j, Guidance& g)
{
    j.at("round").get_to(g.round);
    j.at("summary_scene").get_to(g.summary_scene);
    j.at("summary_thoughts").get_to(g.summary_thoughts);
    j.at("help").get_to(g.help);
    j.at("changes").get_to(g.changes);
    j.at("reasons").get_to(g.reasons);
}

void to_json(Json& j, const Comfort& c)
{
    j = Json{{"round", c.round},
             {"comforting_words", c.comforting_words},
             {"reasons", optional_text(c.reasons)},
             {"author", to_string(c.author)}};
}

void from_json(const Json& j, Comfort& c)
{
    j.at("round").get_to(c.round);
    j.at("comforting_words").get_to(c.comforting_words);
    c.reasons = read_optional_text(j, "reasons");
    c.author = enum_from_string(j.at("author").get<std::string>(), kAuthors, "author");
}

void to_json(Json& j, const Progression& p)
{
    j = Json{{"round", p.round},
             {"next_scene", p.next_scene},
             {"next_thoughts", p.next_thoughts},
             {"is_end", p.is_end},
             {"reasons", p.reasons},
             {"safety_stop", p.safety_stop ? Json(to_string(*p.safety_stop)) : Json(nullptr)}};
}

void from_json(const Json& j, Progression& p)
{
    j.at("round").get_to(p.round);
    j.at("next_scene").get_to(p.next_scene);
    j.at("next_thoughts").get_to(p.next_thoughts);
    j.at("is_end").get_to(p.is_end);
    j.at("reasons").get_to(p.reasons);
    p.safety_stop.reset();
    if (auto stop = read_optional_text(j, "safety_stop")) {
        p.safety_stop = enum_from_string(*stop, kStops, "safety_stop");
    }
}

void to_json(Json& j, const MemoryState& m)
{
    j = Json{{"memory_scene", m.memory_scene},
             {"memory_thought", m.memory_thought},
             {"memory_guide", m.memory_guide},
             {"memory_comforting", m.memory_comforting},
             {"summary", m.summary}};
}

void from_json(const Json& j, MemoryState& m)
{
    j.at("memory_scene").get_to(m.memory_scene);
    j.at("memory_thought").get_to(m.memory_thought);
    j.at("memory_guide").get_to(m.memory_guide);
    j.at("memory_comforting").get_to(m.memory_comforting);
    j.at("summary").get_to(m.summary);
}

void to_json(Json& j, const RoundRecord& r)
{
    j = Json{{"round", r.round},
             {"scenario", optional_value(r.scenario)},
             {"thought", optional_value(r.thought)},
             {"guidance", optional_value(r.guidance)},
             {"comfort", optional_value(r.comfort)},
             {"progression", optional_value(r.progression)},
             {"raw_outputs", r.raw_outputs},
             {"acceptance", r.acceptance}};
}

void from_json(const Json& j, RoundRecord& r)
{
    j.at("round").get_to(r.round);
    r.scenario = read_optional<Scenario>(j, "scenario");
    r.thought = read_optional<DistortedThought>(j, "thought");
    r.guidance = read_optional<Guidance>(j, "guidance");
    r.comfort = read_optional<Comfort>(j, "comfort");
    r.progression = read_optional<Progression>(j, "progression");
    r.raw_outputs = j.value("raw_outputs", std::map<std::string, std::string>{});
    r.acceptance = j.value("acceptance", std::vector<std::string>{});
}

void to_json(Json& j, const SessionState& s)
{
    j = Json{{"id", s.id},
             {"theme", to_string(s.theme)},
             {"concern", s.concern.text()},
             {"personality", s.personality},
             {"round", s.round},
             {"phase", to_string(s.phase)},
             {"rounds", s.rounds},
             {"memory", s.memory},
             {"status", to_string(s.status)},
             {"max_rounds", s.max_rounds},
             {"facilitation_enabled", s.facilitation_enabled},
             {"ablation", to_string(s.ablation)}};
}

SessionState session_from_json(const Json& j)
{
    SessionState s{
        .id = j.at("id").get<std::string>(),
        .theme = parse_theme(j.at("theme").get<std::string>()),
        .concern = Concern(j.at("concern").get<std::string>()),
        .personality = j.at("personality").get<PersonalityProfile>(),
        .round = j.at("round").get<int>(),
        .phase = enum_from_string(j.at("phase").get<std::string>(), kPhases, "phase"),
        .rounds = j.at("rounds").get<std::vector<RoundRecord>>(),
        .memory = j.at("memory").get<MemoryState>(),
        .status = enum_from_string(j.at("status").get<std::string>(), kStatuses, "status"),
        .max_rounds = j.at("max_rounds").get<int>(),
        .facilitation_enabled = j.at("facilitation_enabled").get<bool>(),
        .ablation = parse_ablation(j.at("ablation").get<std::string>()),
    };
    return s;
}

} // namespace mind
