#include "mind/runner.hpp"

#include <chrono>
#include <ctime>

#include "mind/error.hpp"

namespace mind {

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string MindRun::transcript() const
{
    std::optional<TranscriptFooter> footer;
    if (state.status != SessionStatus::Active) {
        footer = make_footer(state);
    }
    return render_transcript(header, round_lines, footer);
}

MindRun run_mind_session(SessionState session, Backend& backend, const TemplateRegistry& templates,
                         ComfortProvider& comfort, const std::string& created_at,
                         const std::optional<std::filesystem::path>& transcript_path, const AgentOptions& options)
{
    auto header = make_header(session, created_at, templates.set_id(), backend.model_name());
    std::optional<TranscriptWriter> writer;
    if (transcript_path) {
        writer.emplace(*transcript_path, header);
    }

    std::vector<Json> lines;
    LlmAgentSuite agents(backend, templates, options);
    auto outcome = advance_until_done(session, agents, comfort, [&](const SessionState& s, const RoundRecord& r) {
        auto line = round_line(r, s.memory.summary);
        if (writer) {
            writer->append_round(line);
        }
        lines.push_back(std::move(line));
    });
    if (writer) {
        writer->finish(make_footer(session));
        outcome.transcript = transcript_path->string();
    }
    return MindRun{std::move(session), std::move(outcome), std::move(header), std::move(lines)};
}

MindRun replay_transcript(const Transcript& recorded, const TemplateRegistry& templates, const AgentOptions& options)
{
    if (recorded.header.paradigm != Paradigm::Mind) {
        throw Error(ErrorCode::IncompleteTranscript, "only MIND transcripts can be replayed");
    }
    auto backend = record_replay(recorded);
    ScriptedComfort comforts(recorded_comforts(recorded.round_records()));

    SessionOptions opts;
    opts.id = recorded.header.session_id;
    opts.max_rounds = recorded.header.max_rounds;
    // A player who withdrew left no trace of the abandoned round, so stop the
    // rerun at the same place through the round cap.
    const int recorded_rounds = static_cast<int>(recorded.rounds.size());
    if (recorded.footer && recorded.footer->status == "MaxRoundsReached" && recorded_rounds > 0
        && recorded_rounds < opts.max_rounds) {
        opts.max_rounds = recorded_rounds;
    }
    opts.facilitation_enabled = recorded.header.facilitation_enabled;
    opts.ablation = recorded.header.ablation;
    auto session = create_session(parse_theme(recorded.header.theme), Concern(recorded.header.concern),
                                  recorded.header.personality, opts);

    // Rounds with a simulated comfort need the patient agent instead.
    bool simulated = false;
    for (const auto& r : recorded.round_records()) {
        simulated = simulated || (r.comfort && r.comfort->author == ComfortAuthor::Simulated);
    }
    AgentOptions replay_options = options;
    replay_options.summarize = false;
    for (const auto& r : recorded.round_records()) {
        replay_options.summarize = replay_options.summarize || r.raw_outputs.count("summarizer") != 0;
    }
    SimulatedPatient patient(*backend, templates, replay_options);
    ComfortProvider& provider = simulated ? static_cast<ComfortProvider&>(patient) : comforts;
    auto run = run_mind_session(std::move(session), *backend, templates, provider, recorded.header.created_at,
                                std::nullopt, replay_options);
    run.header.template_set = recorded.header.template_set;
    run.header.max_rounds = recorded.header.max_rounds;
    run.state.max_rounds = recorded.header.max_rounds;
    return run;
}

} // namespace mind
