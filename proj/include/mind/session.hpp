#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mind/error.hpp"
#include "mind/types.hpp"

namespace mind {

struct SessionOptions {
    int max_rounds = 10;
    bool facilitation_enabled = false;
    Ablation ablation = Ablation::None;
    /// Empty means a fresh identifier is generated.
    std::string id;
};

/// Returns an inert session at round 0. No agent is consulted here; the
/// first scenario is produced by the first round that is driven.
SessionState create_session(Theme theme, Concern concern, PersonalityProfile personality,
                            const SessionOptions& options = {});

std::string generate_session_id();

struct RawOutput {
    std::string role;
    std::string text;
};

/// Accepts one phase input and advances the state machine in place.
void apply_step(SessionState& session, const PhaseInput& input, std::optional<RawOutput> raw = std::nullopt);

inline SessionState step(SessionState session, const PhaseInput& input)
{
    apply_step(session, input);
    return session;
}

/// Condensed memory: one line per round built from the guide's summaries
/// (or the raw scene/thoughts when the guide is ablated).
std::string compose_summary(const SessionState& session);

/// The record currently being filled, if any.
const RoundRecord* current_round(const SessionState& session);

template <class T>
struct AgentOutput {
    T value;
    std::string raw;
};

struct GuideOutput {
    Guidance value;
    std::string raw;
    /// Overrides the composed summary when a backend summarization pass ran.
    std::optional<std::string> summary;
    std::string summary_raw;
};

/// The four narrative agents as seen by the session engine.
class AgentSuite {
public:
    virtual ~AgentSuite() = default;

    virtual AgentOutput<Scenario> trigger(const SessionState& session) = 0;
    virtual AgentOutput<DistortedThought> devil(const SessionState& session) = 0;
    virtual GuideOutput guide(const SessionState& session) = 0;
    virtual AgentOutput<Progression> strategist(const SessionState& session) = 0;
};

/// Supplies C_i. Returning nullopt means the player stopped engaging.
class ComfortProvider {
public:
    virtual ~ComfortProvider() = default;

    virtual std::optional<AgentOutput<Comfort>> comfort(const SessionState& session) = 0;
};

/// Comfort lines handed out in order; runs dry -> player withdrew.
class ScriptedComfort : public ComfortProvider {
public:
    explicit ScriptedComfort(std::vector<std::string> lines, bool repeat_last = false);

    std::optional<AgentOutput<Comfort>> comfort(const SessionState& session) override;

private:
    std::vector<std::string> lines_;
    std::size_t next_ = 0;
    bool repeat_last_;
};

struct SessionOutcome {
    std::string session_id;
    SessionStatus status = SessionStatus::Active;
    int rounds = 0;
    bool player_withdrew = false;
    /// Where the transcript was written, when the caller persisted one.
    std::string transcript;
};

/// Steps 1-3 of the current round: trigger, devil and (unless ablated) guide.
/// Leaves the session at AwaitingComfort.
void advance_to_comfort(SessionState& session, AgentSuite& agents);

/// Steps 4-5: accepts the comfort and runs the strategist (or its identity
/// stand-in under NoStrategist).
void complete_round(SessionState& session, AgentSuite& agents, const AgentOutput<Comfort>& comfort);

/// One full round. Returns nullopt when the comfort provider withdrew, in
/// which case the partial round is discarded and the session is closed.
/// On any agent error the session is restored to its state at entry.
std::optional<RoundRecord> run_round(SessionState& session, AgentSuite& agents, ComfortProvider& comfort_source);

using RoundCallback = std::function<void(const SessionState&, const RoundRecord&)>;

SessionOutcome advance_until_done(SessionState& session, AgentSuite& agents, ComfortProvider& comfort_source,
                                  const RoundCallback& on_round = {});

/// True unless the session reached the therapeutic goal.
bool classify_failure(const SessionOutcome& outcome);

/// Serializes access to sessions by id. Distinct sessions never contend.
template <class Extra = std::monostate>
class SessionRegistry {
public:
    struct Slot {
        std::mutex mutex;
        SessionState state;
        Extra extra{};

        explicit Slot(SessionState s) : state(std::move(s)) {}
    };

    void insert(SessionState state)
    {
        std::unique_lock lock(map_mutex_);
        auto id = state.id;
        slots_.insert_or_assign(id, std::make_shared<Slot>(std::move(state)));
    }

    bool contains(const std::string& id) const
    {
        std::shared_lock lock(map_mutex_);
        return slots_.count(id) != 0;
    }

    std::shared_ptr<Slot> find(const std::string& id) const
    {
        std::shared_lock lock(map_mutex_);
        auto it = slots_.find(id);
        return it == slots_.end() ? nullptr : it->second;
    }

    /// Runs `fn(Slot&)` with the session locked. Throws InvalidInput for an
    /// unknown id.
    template <class Fn>
    decltype(auto) with_session(const std::string& id, Fn&& fn)
    {
        auto slot = find(id);
        if (!slot) {
            throw Error(ErrorCode::InvalidInput, "unknown session '" + id + "'");
        }
        std::lock_guard lock(slot->mutex);
        return std::forward<Fn>(fn)(*slot);
    }

    std::vector<std::string> ids() const
    {
        std::shared_lock lock(map_mutex_);
        std::vector<std::string> out;
        out.reserve(slots_.size());
        for (const auto& [id, slot] : slots_) {
            out.push_back(id);
        }
        return out;
    }

private:
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

} // namespace mind
