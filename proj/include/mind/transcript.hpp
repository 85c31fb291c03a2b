#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mind/backend.hpp"
#include "mind/session.hpp"
#include "mind/types.hpp"

namespace mind {

enum class Paradigm { Mind, Chatbot, Empathy };
std::string_view to_string(Paradigm p);
Paradigm parse_paradigm(std::string_view label);

struct TranscriptHeader {
    std::string session_id;
    std::string theme;
    std::string concern;
    Paradigm paradigm = Paradigm::Mind;
    Ablation ablation = Ablation::None;
    std::string created_at;
    std::string template_set;
    std::string backend_model;
    PersonalityProfile personality;
    int max_rounds = 10;
    bool facilitation_enabled = false;
    /// Paradigm-specific settings (the empathy character, for instance).
    Json extra = Json::object();
};

struct TranscriptFooter {
    std::string status;
    int rounds = 0;
    bool failure = false;
};

Json to_json(const TranscriptHeader& h);
TranscriptHeader header_from_json(const Json& j);
Json to_json(const TranscriptFooter& f);
TranscriptFooter footer_from_json(const Json& j);

/// Header for a MIND session.
TranscriptHeader make_header(const SessionState& session, std::string created_at, std::string template_set,
                             std::string backend_model);
TranscriptFooter make_footer(const SessionState& session);

/// One JSON object per line: a header, one line per completed round, and a
/// footer once the session has ended.
struct Transcript {
    TranscriptHeader header;
    std::vector<Json> rounds;
    std::optional<TranscriptFooter> footer;

    /// Round lines decoded as MIND round records.
    std::vector<RoundRecord> round_records() const;
};

Json round_line(const RoundRecord& record, const std::string& summary);

/// Append-only writer. Every line is flushed as soon as it is written.
class TranscriptWriter {
public:
    /// Truncates `path` and writes the header.
    TranscriptWriter(std::filesystem::path path, const TranscriptHeader& header);
    /// Reopens an existing transcript for appending (after a restart).
    static TranscriptWriter reopen(std::filesystem::path path);

    void append_round(const Json& line);
    /// Throws PreconditionViolation on a second call.
    void finish(const TranscriptFooter& footer);
    bool finished() const noexcept { return finished_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    explicit TranscriptWriter(std::filesystem::path path);
    void write_line(const Json& line);

    std::filesystem::path path_;
    std::unique_ptr<std::ofstream> out_;
    bool finished_ = false;
};

/// Throws DataError naming the offending line.
Transcript read_transcript(const std::filesystem::path& path);
Transcript parse_transcript(std::string_view content);

/// The bytes TranscriptWriter would produce for the same lines.
std::string render_transcript(const TranscriptHeader& header, const std::vector<Json>& round_lines,
                              const std::optional<TranscriptFooter>& footer);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Rebuilds a MIND session by replaying every persisted round through the
/// state machine. The result is always at a round boundary.
SessionState restore_session(const Transcript& transcript);

/// Replay backend for a recorded MIND transcript, reporting the recorded
/// model name so a rerun writes the same header.
std::unique_ptr<ScriptedBackend> record_replay(const Transcript& transcript);

} // namespace mind
