#include "mind/session.hpp"

#include <atomic>
#include <chrono>
#include <random>
#include <sstream>

#include "mind/text.hpp"

namespace mind {

namespace {

std::string_view phase_for(const PhaseInput& input)
{
    switch (input.index()) {
    case 0: return to_string(Phase::AwaitingScenario);
    case 1: return to_string(Phase::AwaitingThought);
    case 2: return to_string(Phase::AwaitingGuidance);
    case 3: return to_string(Phase::AwaitingComfort);
    default: return to_string(Phase::AwaitingProgression);
    }
}

Phase expected_phase(const PhaseInput& input)
{
    static constexpr Phase phases[] = {Phase::AwaitingScenario, Phase::AwaitingThought, Phase::AwaitingGuidance,
                                       Phase::AwaitingComfort, Phase::AwaitingProgression};
    return phases[input.index()];
}

int input_round(const PhaseInput& input)
{
    return std::visit([](const auto& v) { return v.round; }, input);
}

RoundRecord& open_round(SessionState& s)
{
    if (s.rounds.empty() || s.rounds.back().round != s.round) {
        throw Error(ErrorCode::PhaseMismatch, "no open round for index " + std::to_string(s.round));
    }
    return s.rounds.back();
}

void push_memory(SessionState& s, std::vector<std::string>& stream, const std::string& value)
{
    if (s.ablation != Ablation::NoMemory) {
        stream.push_back(value);
    }
}

void finish_round(SessionState& s, const Progression& progression)
{
    if (progression.safety_stop) {
        s.status = SessionStatus::SafetyTerminated;
    } else if (progression.is_end) {
        s.status = SessionStatus::CompletedGoal;
    } else if (s.round + 1 >= s.max_rounds) {
        s.status = SessionStatus::MaxRoundsReached;
    }

    if (s.status != SessionStatus::Active) {
        s.phase = Phase::Completed;
    } else {
        ++s.round;
        s.phase = Phase::AwaitingScenario;
    }
}

void accept(SessionState& s, const Scenario& scenario)
{
    if (scenario.round == 0 && scenario.changes) {
        throw Error(ErrorCode::InvalidInput, "round-0 scenario carries no Changes section");
    }
    if (scenario.round > 0 && !scenario.changes) {
        throw Error(ErrorCode::InvalidInput, "scenario for round > 0 requires Changes");
    }
    RoundRecord record;
    record.round = s.round;
    record.scenario = scenario;
    record.acceptance.emplace_back("scenario");
    s.rounds.push_back(std::move(record));
    push_memory(s, s.memory.memory_scene, scenario.scene);
    s.phase = Phase::AwaitingThought;
}

void accept(SessionState& s, const DistortedThought& thought)
{
    if (s.round > 0) {
        const auto& first = s.rounds.front().thought;
        if (first && first->distortion_type != thought.distortion_type) {
            throw Error(ErrorCode::InvalidInput, "distortion type must stay " + std::string(to_string(first->distortion_type)));
        }
    }
    auto& record = open_round(s);
    record.thought = thought;
    record.acceptance.emplace_back("thought");
    push_memory(s, s.memory.memory_thought, thought.thoughts);

    if (s.ablation == Ablation::NoGuide) {
        Guidance placeholder;
        placeholder.round = s.round;
        record.guidance = placeholder;
        s.memory.summary = compose_summary(s);
        s.phase = Phase::AwaitingComfort;
    } else {
        s.phase = Phase::AwaitingGuidance;
    }
}

void accept(SessionState& s, const Guidance& guidance)
{
    auto& record = open_round(s);
    record.guidance = guidance;
    record.acceptance.emplace_back("guidance");
    push_memory(s, s.memory.memory_guide, guidance.help);
    s.memory.summary = compose_summary(s);
    s.phase = Phase::AwaitingComfort;
}

void accept(SessionState& s, const Comfort& comfort)
{
    if (text::trim(comfort.comforting_words).empty()) {
        throw Error(ErrorCode::InvalidInput, "comforting_words must not be empty");
    }
    if (comfort.author == ComfortAuthor::Simulated && !comfort.reasons) {
        throw Error(ErrorCode::InvalidInput, "simulated comfort requires reasons");
    }
    auto& record = open_round(s);
    record.comfort = comfort;
    record.acceptance.emplace_back("comfort");
    push_memory(s, s.memory.memory_comforting, comfort.comforting_words);

    if (s.ablation == Ablation::NoStrategist) {
        Progression carry{
            .round = s.round,
            .next_scene = record.scenario->scene,
            .next_thoughts = record.thought->thoughts,
            .is_end = false,
            .reasons = {},
            .safety_stop = std::nullopt,
        };
        record.progression = carry;
        finish_round(s, carry);
    } else {
        s.phase = Phase::AwaitingProgression;
    }
}

void accept(SessionState& s, const Progression& progression)
{
    if (progression.safety_stop && !s.facilitation_enabled) {
        throw Error(ErrorCode::InvalidInput, "safety_stop requires the facilitation protocol");
    }
    auto& record = open_round(s);
    record.progression = progression;
    record.acceptance.emplace_back("progression");
    finish_round(s, progression);
}

std::string_view role_for(Phase phase)
{
    switch (phase) {
    case Phase::AwaitingScenario: return "trigger";
    case Phase::AwaitingThought: return "devil";
    case Phase::AwaitingGuidance: return "guide";
    case Phase::AwaitingComfort: return "comfort";
    case Phase::AwaitingProgression: return "strategist";
    case Phase::Completed: break;
    }
    return "";
}

template <class Fn>
auto call_role(std::string_view role, Fn&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        if (e.role().empty()) {
            throw e.with_role(std::string(role));
        }
        throw;
    }
}

void require_active(const SessionState& s)
{
    if (s.status != SessionStatus::Active) {
        throw Error(ErrorCode::SessionNotActive, "session " + s.id + " is " + std::string(to_string(s.status)));
    }
}

} // namespace

std::string generate_session_id()
{
    static std::atomic<unsigned> counter{0};
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    std::ostringstream out;
    out << std::hex << std::chrono::duration_cast<std::chrono::milliseconds>(now).count() << "-"
        << (rng() & 0xffffffu) << "-" << counter.fetch_add(1);
    return out.str();
}

SessionState create_session(Theme theme, Concern concern, PersonalityProfile personality,
                            const SessionOptions& options)
{
    if (options.max_rounds < 1) {
        throw Error(ErrorCode::InvalidOptions, "max_rounds must be >= 1");
    }
    if (options.facilitation_enabled && options.ablation == Ablation::NoStrategist) {
        throw Error(ErrorCode::InvalidOptions, "facilitation needs a strategist");
    }
    if (options.facilitation_enabled && options.ablation == Ablation::NoMemory) {
        throw Error(ErrorCode::InvalidOptions, "no memory-free facilitation template exists");
    }
    personality.validate();

    return SessionState{
        .id = options.id.empty() ? generate_session_id() : options.id,
        .theme = theme,
        .concern = std::move(concern),
        .personality = personality,
        .round = 0,
        .phase = Phase::AwaitingScenario,
        .rounds = {},
        .memory = {},
        .status = SessionStatus::Active,
        .max_rounds = options.max_rounds,
        .facilitation_enabled = options.facilitation_enabled,
        .ablation = options.ablation,
    };
}

void apply_step(SessionState& session, const PhaseInput& input, std::optional<RawOutput> raw)
{
    require_active(session);
    if (session.phase != expected_phase(input)) {
        throw Error(ErrorCode::PhaseMismatch, "session is " + std::string(to_string(session.phase)) + ", input belongs to "
                                                  + std::string(phase_for(input)));
    }
    if (input_round(input) != session.round) {
        throw Error(ErrorCode::RoundIndexMismatch, "input round " + std::to_string(input_round(input))
                                                       + " != session round " + std::to_string(session.round));
    }
    const int round = session.round;
    std::visit([&](const auto& value) { accept(session, value); }, input);

    if (raw) {
        auto& record = session.rounds.back();
        if (record.round == round) {
            record.raw_outputs[raw->role] = std::move(raw->text);
        }
    }
}

std::string compose_summary(const SessionState& session)
{
    std::string out;
    for (const auto& record : session.rounds) {
        if (session.ablation == Ablation::NoMemory && record.round != session.round) {
            continue;
        }
        if (!record.scenario || !record.thought) {
            continue;
        }
        const bool guided = record.guidance && !record.guidance->summary_scene.empty();
        const auto& scene = guided ? record.guidance->summary_scene : record.scenario->scene;
        const auto& thoughts = guided ? record.guidance->summary_thoughts : record.thought->thoughts;
        if (!out.empty()) {
            out += "\n";
        }
        out += "Round " + std::to_string(record.round + 1) + ": " + scene + " | " + thoughts;
    }
    return out;
}

const RoundRecord* current_round(const SessionState& session)
{
    if (session.rounds.empty() || session.rounds.back().round != session.round) {
        return nullptr;
    }
    return &session.rounds.back();
}

ScriptedComfort::ScriptedComfort(std::vector<std::string> lines, bool repeat_last)
    : lines_(std::move(lines)), repeat_last_(repeat_last)
{
}

std::optional<AgentOutput<Comfort>> ScriptedComfort::comfort(const SessionState& session)
{
    if (lines_.empty()) {
        return std::nullopt;
    }
    if (next_ >= lines_.size()) {
        if (!repeat_last_) {
            return std::nullopt;
        }
        next_ = lines_.size() - 1;
    }
    Comfort c{.round = session.round, .comforting_words = lines_[next_++], .reasons = {}, .author = ComfortAuthor::Human};
    return AgentOutput<Comfort>{std::move(c), {}};
}

void advance_to_comfort(SessionState& session, AgentSuite& agents)
{
    require_active(session);
    if (session.phase != Phase::AwaitingScenario) {
        throw Error(ErrorCode::PhaseMismatch, "round must start at AwaitingScenario");
    }

    auto scenario = call_role("trigger", [&] { return agents.trigger(session); });
    apply_step(session, scenario.value, RawOutput{"trigger", std::move(scenario.raw)});

    auto thought = call_role("devil", [&] { return agents.devil(session); });
    apply_step(session, thought.value, RawOutput{"devil", std::move(thought.raw)});

    if (session.phase == Phase::AwaitingGuidance) {
        auto guide = call_role("guide", [&] { return agents.guide(session); });
        apply_step(session, guide.value, RawOutput{"guide", std::move(guide.raw)});
        if (guide.summary) {
            session.memory.summary = *guide.summary;
            session.rounds.back().raw_outputs["summarizer"] = std::move(guide.summary_raw);
        }
    }
}

void complete_round(SessionState& session, AgentSuite& agents, const AgentOutput<Comfort>& comfort)
{
    std::optional<RawOutput> raw;
    if (comfort.value.author == ComfortAuthor::Simulated) {
        raw = RawOutput{"patient", comfort.raw};
    }
    apply_step(session, comfort.value, std::move(raw));

    if (session.phase == Phase::AwaitingProgression) {
        auto progression = call_role("strategist", [&] { return agents.strategist(session); });
        apply_step(session, progression.value, RawOutput{"strategist", std::move(progression.raw)});
    }
}

std::optional<RoundRecord> run_round(SessionState& session, AgentSuite& agents, ComfortProvider& comfort_source)
{
    require_active(session);
    if (session.phase != Phase::AwaitingScenario) {
        throw Error(ErrorCode::PhaseMismatch, "run_round expects AwaitingScenario, session is "
                                                  + std::string(to_string(session.phase)));
    }
    SessionState snapshot = session;
    try {
        advance_to_comfort(session, agents);
        auto comfort = call_role(role_for(Phase::AwaitingComfort), [&] { return comfort_source.comfort(session); });
        if (!comfort) {
            session = std::move(snapshot);
            session.status = SessionStatus::MaxRoundsReached;
            session.phase = Phase::Completed;
            return std::nullopt;
        }
        complete_round(session, agents, *comfort);
    } catch (...) {
        session = std::move(snapshot);
        throw;
    }
    return session.rounds.back();
}

SessionOutcome advance_until_done(SessionState& session, AgentSuite& agents, ComfortProvider& comfort_source,
                                  const RoundCallback& on_round)
{
    require_active(session);
    bool withdrew = false;
    while (session.status == SessionStatus::Active) {
        auto record = run_round(session, agents, comfort_source);
        if (!record) {
            withdrew = true;
            break;
        }
        if (on_round) {
            on_round(session, *record);
        }
    }
    return SessionOutcome{
        .session_id = session.id,
        .status = session.status,
        .rounds = static_cast<int>(session.rounds.size()),
        .player_withdrew = withdrew,
        .transcript = {},
    };
}

bool classify_failure(const SessionOutcome& outcome)
{
    switch (outcome.status) {
    case SessionStatus::CompletedGoal: return false;
    case SessionStatus::MaxRoundsReached:
    case SessionStatus::SafetyTerminated: return true;
    case SessionStatus::Active: break;
    }
    throw Error(ErrorCode::PreconditionViolation, "outcome of an active session");
}

} // namespace mind
