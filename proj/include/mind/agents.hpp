#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mind/backend.hpp"
#include "mind/error.hpp"
#include "mind/sections.hpp"
#include "mind/session.hpp"
#include "mind/templates.hpp"

namespace mind {

enum class AgentRole { Trigger, Devil, Guide, Strategist, Patient };
std::string_view to_string(AgentRole role);
/// The tag carried by backend requests and raw_outputs keys.
std::string_view agent_tag(AgentRole role);

/// Which template a role uses. nullopt means the role is ablated away.
/// Facilitation only changes the strategist's template.
std::optional<TemplateRole> select_template(AgentRole role, int round, Ablation ablation, bool facilitation);

/// Renders a list as one "Round k: value" line per entry (k from 1).
/// Empty lists render as empty text.
std::string render_memory(const std::vector<std::string>& entries);

/// What an agent sends: a template, its bindings and text inserted before
/// the reply-format block (the personality profile for the devil).
struct PromptPlan {
    TemplateRole role = TemplateRole::Trigger0;
    Bindings bindings;
    std::string appendix;
};

PromptPlan plan_trigger(const SessionState& session);
PromptPlan plan_devil(const SessionState& session);
PromptPlan plan_guide(const SessionState& session);
/// Throws ConfigError when `facilitation` is requested for a session that did
/// not enable the protocol.
PromptPlan plan_strategist(const SessionState& session, bool facilitation);
PromptPlan plan_patient(const SessionState& session);

/// Renders a plan, inserting the appendix ahead of the reply-format block.
std::string render_plan(const TemplateRegistry& registry, const PromptPlan& plan);

/// Type of the round-0 thought, which later rounds keep.
std::optional<DistortionType> session_distortion_type(const SessionState& session);

struct AgentOptions {
    /// Adds a backend call that condenses the memory summary after each
    /// guide turn. Off by default so runs stay deterministic.
    bool summarize = false;
    /// Replies longer than this only raise a warning.
    std::size_t word_warning_limit = 250;
    std::function<void(const std::string&)> on_warning;
    std::optional<std::string> system_prompt;
};

std::string corrective_note(const Error& parse_error);

void warn_if_long(const std::string& raw, const std::string& tag, const AgentOptions& options);

/// Sends a prompt and parses the reply. A parse failure gets exactly one
/// re-ask carrying a note about the broken section; a second failure is
/// rethrown. Returns the parsed value and the accepted raw text.
template <class Parse>
auto ask_with_retry(Backend& backend, const ChatRequest& request, Parse&& parse, const AgentOptions& options = {})
    -> AgentOutput<decltype(parse(std::string{}))>
{
    auto reply = backend.complete(request);
    try {
        auto value = parse(reply.text);
        warn_if_long(reply.text, request.tag, options);
        return {std::move(value), std::move(reply.text)};
    } catch (const Error& e) {
        if (!e.is_parse_error()) {
            throw;
        }
        ChatRequest again = request;
        again.user += corrective_note(e);
        reply = backend.complete(again);
    }
    auto value = parse(reply.text);
    warn_if_long(reply.text, request.tag, options);
    return {std::move(value), std::move(reply.text)};
}

/// The narrative agents over a backend and a template set.
class LlmAgentSuite : public AgentSuite {
public:
    LlmAgentSuite(Backend& backend, const TemplateRegistry& templates, AgentOptions options = {});

    AgentOutput<Scenario> trigger(const SessionState& session) override;
    AgentOutput<DistortedThought> devil(const SessionState& session) override;
    GuideOutput guide(const SessionState& session) override;
    AgentOutput<Progression> strategist(const SessionState& session) override;

private:
    ChatRequest request(const PromptPlan& plan, AgentRole role) const;

    Backend& backend_;
    const TemplateRegistry& templates_;
    AgentOptions options_;
};

/// Plays the player through the backend.
class SimulatedPatient : public ComfortProvider {
public:
    SimulatedPatient(Backend& backend, const TemplateRegistry& templates, AgentOptions options = {});

    std::optional<AgentOutput<Comfort>> comfort(const SessionState& session) override;

private:
    Backend& backend_;
    const TemplateRegistry& templates_;
    AgentOptions options_;
};

} // namespace mind
