#include "mind/agents.hpp"

#include "mind/error.hpp"
#include "mind/text.hpp"

namespace mind {

std::string_view to_string(AgentRole role)
{
    switch (role) {
    case AgentRole::Trigger: return "Trigger";
    case AgentRole::Devil: return "Devil";
    case AgentRole::Guide: return "Guide";
    case AgentRole::Strategist: return "Strategist";
    case AgentRole::Patient: return "Patient";
    }
    return "";
}

std::string_view agent_tag(AgentRole role)
{
    switch (role) {
    case AgentRole::Trigger: return "trigger";
    case AgentRole::Devil: return "devil";
    case AgentRole::Guide: return "guide";
    case AgentRole::Strategist: return "strategist";
    case AgentRole::Patient: return "patient";
    }
    return "";
}

std::optional<TemplateRole> select_template(AgentRole role, int round, Ablation ablation, bool facilitation)
{
    switch (role) {
    case AgentRole::Trigger:
        if (round == 0) {
            return TemplateRole::Trigger0;
        }
        if (ablation == Ablation::NoMemory) {
            return TemplateRole::TriggerI_NoMemory;
        }
        if (ablation == Ablation::NoStrategist) {
            return TemplateRole::TriggerI_NoStrategist;
        }
        return TemplateRole::TriggerI;
    case AgentRole::Devil:
        return round == 0 ? TemplateRole::Devil0 : TemplateRole::DevilI;
    case AgentRole::Guide:
        if (ablation == Ablation::NoGuide) {
            return std::nullopt;
        }
        return TemplateRole::Guide;
    case AgentRole::Strategist:
        if (ablation == Ablation::NoStrategist) {
            return std::nullopt;
        }
        if (ablation == Ablation::NoMemory) {
            return TemplateRole::Strategist_NoMemory;
        }
        return facilitation ? TemplateRole::StrategistFacilitated : TemplateRole::Strategist;
    case AgentRole::Patient:
        return ablation == Ablation::NoGuide ? TemplateRole::SimulatedPatient_NoGuide : TemplateRole::SimulatedPatient;
    }
    return std::nullopt;
}

std::string render_memory(const std::vector<std::string>& entries)
{
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) {
            out += "\n";
        }
        out += "Round " + std::to_string(i + 1) + ": " + entries[i];
    }
    return out;
}

std::optional<DistortionType> session_distortion_type(const SessionState& session)
{
    if (!session.rounds.empty() && session.rounds.front().thought) {
        return session.rounds.front().thought->distortion_type;
    }
    return std::nullopt;
}

namespace {

const RoundRecord& open_record(const SessionState& s, std::string_view what)
{
    const auto* record = current_round(s);
    if (record == nullptr) {
        throw Error(ErrorCode::PhaseMismatch, std::string(what) + " needs an open round");
    }
    return *record;
}

const RoundRecord& previous_record(const SessionState& s)
{
    if (s.rounds.empty()) {
        throw Error(ErrorCode::PhaseMismatch, "no previous round");
    }
    // While a round is open the previous one sits right before it.
    const auto* open = current_round(s);
    const std::size_t idx = open ? s.rounds.size() - 2 : s.rounds.size() - 1;
    return s.rounds.at(idx);
}

std::string type_name(const SessionState& s)
{
    auto t = session_distortion_type(s);
    if (!t) {
        throw Error(ErrorCode::PhaseMismatch, "distortion type not yet classified");
    }
    return std::string(display_name(*t));
}

void require_phase(const SessionState& s, Phase phase, std::string_view who)
{
    if (s.phase != phase) {
        throw Error(ErrorCode::PhaseMismatch,
                    std::string(who) + " runs at " + std::string(to_string(phase)) + ", session is "
                        + std::string(to_string(s.phase)));
    }
}

} // namespace

PromptPlan plan_trigger(const SessionState& s)
{
    require_phase(s, Phase::AwaitingScenario, "trigger");
    PromptPlan plan;
    plan.role = *select_template(AgentRole::Trigger, s.round, s.ablation, s.facilitation_enabled);
    plan.bindings["topic"] = std::string(topic_label(s.theme));
    plan.bindings["worries"] = s.concern.text();
    if (s.round == 0) {
        return plan;
    }
    plan.bindings["type"] = type_name(s);
    if (plan.role != TemplateRole::TriggerI_NoStrategist) {
        const auto& prev = previous_record(s);
        plan.bindings["next_scene"] = prev.progression ? prev.progression->next_scene : std::string();
    }
    if (plan.role != TemplateRole::TriggerI_NoMemory) {
        plan.bindings["memory_scene"] = render_memory(s.memory.memory_scene);
        plan.bindings["memory_thought"] = render_memory(s.memory.memory_thought);
    }
    return plan;
}

PromptPlan plan_devil(const SessionState& s)
{
    require_phase(s, Phase::AwaitingThought, "devil");
    const auto& record = open_record(s, "devil");
    PromptPlan plan;
    plan.role = *select_template(AgentRole::Devil, s.round, s.ablation, s.facilitation_enabled);
    plan.bindings["scene"] = record.scenario->scene;
    plan.appendix = "Patient's Personality Profile:\n" + s.personality.describe();
    if (s.round == 0) {
        plan.bindings["worries"] = s.concern.text();
        plan.bindings["comforting_words"] = "";
        return plan;
    }
    const auto& prev = previous_record(s);
    plan.bindings["type"] = type_name(s);
    plan.bindings["comforting_words"] = prev.comfort ? prev.comfort->comforting_words : std::string();
    plan.bindings["next_thoughts"] = prev.progression ? prev.progression->next_thoughts : std::string();
    plan.bindings["memory_thought"] = render_memory(s.memory.memory_thought);
    plan.bindings["count"] = std::to_string(s.round);
    return plan;
}

PromptPlan plan_guide(const SessionState& s)
{
    require_phase(s, Phase::AwaitingGuidance, "guide");
    if (s.ablation == Ablation::NoGuide) {
        throw Error(ErrorCode::ConfigError, "the guide is ablated in this session");
    }
    const auto& record = open_record(s, "guide");
    PromptPlan plan;
    plan.role = TemplateRole::Guide;
    plan.bindings["scene"] = record.scenario->scene;
    plan.bindings["thoughts"] = record.thought->thoughts;
    plan.bindings["type"] = std::string(display_name(record.thought->distortion_type));
    plan.bindings["memory_guide"] = render_memory(s.memory.memory_guide);
    return plan;
}

PromptPlan plan_strategist(const SessionState& s, bool facilitation)
{
    require_phase(s, Phase::AwaitingProgression, "strategist");
    if (facilitation && !s.facilitation_enabled) {
        throw Error(ErrorCode::ConfigError, "facilitation template requested for a session without the protocol");
    }
    auto role = select_template(AgentRole::Strategist, s.round, s.ablation, facilitation);
    if (!role) {
        throw Error(ErrorCode::ConfigError, "the strategist is ablated in this session");
    }
    const auto& record = open_record(s, "strategist");
    PromptPlan plan;
    plan.role = *role;
    plan.bindings["summary"] = s.memory.summary;
    plan.bindings["comforting_words"] = record.comfort->comforting_words;
    if (plan.role != TemplateRole::Strategist_NoMemory) {
        plan.bindings["memory_scene"] = render_memory(s.memory.memory_scene);
        plan.bindings["memory_thought"] = render_memory(s.memory.memory_thought);
    }
    return plan;
}

PromptPlan plan_patient(const SessionState& s)
{
    require_phase(s, Phase::AwaitingComfort, "simulated patient");
    const auto& record = open_record(s, "simulated patient");
    PromptPlan plan;
    plan.role = *select_template(AgentRole::Patient, s.round, s.ablation, s.facilitation_enabled);
    plan.bindings["concerns"] = s.concern.text();
    plan.bindings["scene"] = record.scenario->scene;
    plan.bindings["thoughts"] = record.thought->thoughts;
    if (plan.role == TemplateRole::SimulatedPatient) {
        plan.bindings["help_text"] = record.guidance ? record.guidance->help : std::string();
    }
    return plan;
}

std::string render_plan(const TemplateRegistry& registry, const PromptPlan& plan)
{
    auto text = render_prompt(registry.get(plan.role), plan.bindings);
    if (plan.appendix.empty()) {
        return text;
    }
    static const std::string marker = "Please provide your answer in the following format";
    const auto pos = text.find(marker);
    if (pos == std::string::npos) {
        return text + "\n\n" + plan.appendix + "\n";
    }
    return text.substr(0, pos) + plan.appendix + "\n\n" + text.substr(pos);
}

std::string corrective_note(const Error& parse_error)
{
    std::string what;
    switch (parse_error.code()) {
    case ErrorCode::MissingSection:
        what = "the \"" + parse_error.detail() + ":\" section was missing";
        break;
    case ErrorCode::UnknownIsEnd:
        what = "the \"Is_end:\" section must be exactly Yes or No";
        break;
    case ErrorCode::UnknownDistortionType:
        what = "the \"Type:\" section must name one of the ten listed cognitive distortion types";
        break;
    default:
        what = "it did not follow the required format (" + parse_error.detail() + ")";
        break;
    }
    return "\n\nNote: your previous answer could not be used because " + what
           + ". Answer again using exactly the requested format, one labeled section per item.";
}

void warn_if_long(const std::string& raw, const std::string& tag, const AgentOptions& options)
{
    const auto words = text::word_count(raw);
    if (options.on_warning && words > options.word_warning_limit) {
        options.on_warning(tag + " reply has " + std::to_string(words) + " words (limit "
                           + std::to_string(options.word_warning_limit) + ")");
    }
}

// ---------------------------------------------------------------------------

LlmAgentSuite::LlmAgentSuite(Backend& backend, const TemplateRegistry& templates, AgentOptions options)
    : backend_(backend), templates_(templates), options_(std::move(options))
{
}

ChatRequest LlmAgentSuite::request(const PromptPlan& plan, AgentRole role) const
{
    return ChatRequest{options_.system_prompt, render_plan(templates_, plan), std::nullopt,
                       std::string(agent_tag(role))};
}

AgentOutput<Scenario> LlmAgentSuite::trigger(const SessionState& s)
{
    const auto plan = plan_trigger(s);
    const int round = s.round;
    return ask_with_retry(
        backend_, request(plan, AgentRole::Trigger),
        [&](const std::string& raw) { return parse_scenario(plan.role, raw, round); }, options_);
}

AgentOutput<DistortedThought> LlmAgentSuite::devil(const SessionState& s)
{
    const auto plan = plan_devil(s);
    const int round = s.round;
    // Later rounds keep the round-0 classification whatever the reply says.
    const auto carried = round == 0 ? std::nullopt : session_distortion_type(s);
    return ask_with_retry(
        backend_, request(plan, AgentRole::Devil),
        [&](const std::string& raw) {
            auto thought = parse_thought(plan.role, raw, round, carried);
            if (carried) {
                thought.distortion_type = *carried;
            }
            return thought;
        },
        options_);
}

GuideOutput LlmAgentSuite::guide(const SessionState& s)
{
    const auto plan = plan_guide(s);
    const int round = s.round;
    auto out = ask_with_retry(
        backend_, request(plan, AgentRole::Guide),
        [&](const std::string& raw) { return parse_guidance(raw, round); }, options_);

    GuideOutput result{std::move(out.value), std::move(out.raw), std::nullopt, {}};
    if (options_.summarize) {
        SessionState preview = s;
        apply_step(preview, result.value);
        ChatRequest req{options_.system_prompt,
                        "Condense the following round-by-round record of a simulated scenario and the "
                        "protagonist's thoughts into a short summary. Merge repeated information and keep "
                        "key events, emotional states and the pattern of cognitive distortion.\n\n"
                            + preview.memory.summary + "\n\nSummary:",
                        std::nullopt, "summarizer"};
        auto reply = backend_.complete(req);
        result.summary = text::trim(reply.text);
        result.summary_raw = std::move(reply.text);
    }
    return result;
}

AgentOutput<Progression> LlmAgentSuite::strategist(const SessionState& s)
{
    const auto plan = plan_strategist(s, s.facilitation_enabled);
    const int round = s.round;
    return ask_with_retry(
        backend_, request(plan, AgentRole::Strategist),
        [&](const std::string& raw) { return parse_progression(plan.role, raw, round); }, options_);
}

SimulatedPatient::SimulatedPatient(Backend& backend, const TemplateRegistry& templates, AgentOptions options)
    : backend_(backend), templates_(templates), options_(std::move(options))
{
}

std::optional<AgentOutput<Comfort>> SimulatedPatient::comfort(const SessionState& s)
{
    const auto plan = plan_patient(s);
    const int round = s.round;
    ChatRequest req{options_.system_prompt, render_plan(templates_, plan), std::nullopt,
                    std::string(agent_tag(AgentRole::Patient))};
    return ask_with_retry(
        backend_, req, [&](const std::string& raw) { return parse_comfort(plan.role, raw, round); }, options_);
}

} // namespace mind
