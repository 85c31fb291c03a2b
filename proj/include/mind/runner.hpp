#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mind/agents.hpp"
#include "mind/backend.hpp"
#include "mind/session.hpp"
#include "mind/templates.hpp"
#include "mind/transcript.hpp"

namespace mind {

/// Timestamp used in transcript headers: UTC, second precision.
std::string utc_timestamp();

struct MindRun {
    SessionState state;
    SessionOutcome outcome;
    TranscriptHeader header;
    std::vector<Json> round_lines;

    /// The transcript bytes for this run.
    std::string transcript() const;
};

/// Drives a MIND session to its end. When `transcript_path` is given the
/// transcript is written as the session progresses.
MindRun run_mind_session(SessionState session, Backend& backend, const TemplateRegistry& templates,
                         ComfortProvider& comfort, const std::string& created_at,
                         const std::optional<std::filesystem::path>& transcript_path = std::nullopt,
                         const AgentOptions& options = {});

/// Reruns a recorded MIND transcript against a replay backend and the
/// recorded human comforts. Returns the new run.
MindRun replay_transcript(const Transcript& recorded, const TemplateRegistry& templates,
                          const AgentOptions& options = {});

} // namespace mind
