#include <gtest/gtest.h>

#include "mind/error.hpp"
#include "mind/runner.hpp"
#include "mind/transcript.hpp"
#include "support.hpp"

using namespace mind;

namespace {

const std::string kCreated = "2000-01-01T00:00:00Z";

MindRun scripted_run(const test::ScriptSpec& spec, std::vector<std::string> comforts, SessionOptions options = {},
                     const std::optional<std::filesystem::path>& path = std::nullopt)
{
    auto backend = test::mind_script(spec);
    ScriptedComfort comfort(std::move(comforts));
    return run_mind_session(test::new_session(options), *backend, TemplateRegistry::builtin(), comfort, kCreated,
                            path);
}

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr)
{
    try {
        fn();
    } catch (const Error& e) {
        if (message) {
            *message = e.what();
        }
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::PreconditionViolation;
}

} // namespace

TEST(Transcript, WriterOutputMatchesRenderAndReadsBack)
{
    test::TempDir dir("transcript");
    const auto path = dir / "t.jsonl";
    const auto run = scripted_run({.end_at = 2}, test::comfort_lines(5), {}, path);
    ASSERT_EQ(run.state.status, SessionStatus::CompletedGoal);

    const auto bytes = test::slurp(path);
    EXPECT_EQ(bytes, run.transcript());
    EXPECT_EQ(std::count(bytes.begin(), bytes.end(), '\n'), 5);

    const auto t = read_transcript(path);
    EXPECT_EQ(t.header.session_id, "test-session");
    EXPECT_EQ(t.header.created_at, kCreated);
    EXPECT_EQ(t.header.template_set, "builtin-en");
    EXPECT_EQ(t.rounds.size(), 3u);
    ASSERT_TRUE(t.footer);
    EXPECT_EQ(t.footer->status, "CompletedGoal");
    EXPECT_FALSE(t.footer->failure);
    EXPECT_EQ(render_transcript(t.header, t.rounds, t.footer), bytes);
    EXPECT_EQ(t.round_records(), run.state.rounds);
}

TEST(Transcript, SecondFooterIsRejected)
{
    test::TempDir dir("footer");
    const auto s = test::new_session();
    TranscriptWriter w(dir / "t.jsonl", make_header(s, kCreated, "builtin-en", "m"));
    TranscriptFooter f{"MaxRoundsReached", 0, true};
    w.finish(f);
    EXPECT_TRUE(w.finished());
    EXPECT_EQ(code_of([&] { w.finish(f); }), ErrorCode::PreconditionViolation);
    EXPECT_EQ(code_of([&] { w.append_round(Json::object()); }), ErrorCode::PreconditionViolation);
}

TEST(Transcript, ReopenAppends)
{
    test::TempDir dir("reopen");
    const auto full = scripted_run({.end_at = 1}, test::comfort_lines(5));
    const auto path = dir / "t.jsonl";
    {
        TranscriptWriter w(path, full.header);
        w.append_round(full.round_lines[0]);
    }
    auto w = TranscriptWriter::reopen(path);
    w.append_round(full.round_lines[1]);
    w.finish(make_footer(full.state));
    EXPECT_EQ(test::slurp(path), full.transcript());
}

TEST(Transcript, ParseErrorsNameTheLine)
{
    const auto run = scripted_run({.end_at = 1}, test::comfort_lines(5));
    const auto bytes = run.transcript();
    const auto first_nl = bytes.find('\n');

    std::string msg;
    EXPECT_EQ(code_of([&] { parse_transcript(bytes.substr(0, first_nl + 1) + "{broken\n"); }, &msg),
              ErrorCode::DataError);
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;

    EXPECT_EQ(code_of([&] { parse_transcript(bytes.substr(first_nl + 1)); }, &msg), ErrorCode::DataError);
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;

    EXPECT_EQ(code_of([&] { parse_transcript(bytes + bytes.substr(first_nl + 1)); }), ErrorCode::DataError);
    EXPECT_EQ(code_of([&] { parse_transcript(""); }), ErrorCode::DataError);

    // Footer that disagrees with the body.
    auto t = parse_transcript(bytes);
    t.footer->rounds = 7;
    EXPECT_EQ(code_of([&] { parse_transcript(render_transcript(t.header, t.rounds, t.footer)); }),
              ErrorCode::DataError);
}

TEST(Transcript, HeaderJsonRoundTrip)
{
    const auto run = scripted_run({.end_at = 0}, test::comfort_lines(1));
    auto h = run.header;
    h.extra = Json{{"character", "Tom"}};
    const auto back = header_from_json(to_json(h));
    EXPECT_EQ(to_json(back), to_json(h));
    EXPECT_EQ(back.paradigm, Paradigm::Mind);
    EXPECT_EQ(parse_paradigm(to_string(Paradigm::Empathy)), Paradigm::Empathy);
    EXPECT_THROW(parse_paradigm("therapy"), Error);
}

TEST(Restore, RebuildsTheFinalState)
{
    for (int end_at : {0, 3, 9}) {
        const auto run = scripted_run({.end_at = end_at}, test::comfort_lines(12));
        const auto restored = restore_session(parse_transcript(run.transcript()));
        EXPECT_EQ(restored, run.state) << end_at;
    }
    // A session still in progress comes back at its round boundary.
    const auto run = scripted_run({}, test::comfort_lines(12));
    auto t = parse_transcript(run.transcript());
    t.rounds.resize(4);
    t.footer.reset();
    const auto s = restore_session(t);
    EXPECT_EQ(s.status, SessionStatus::Active);
    EXPECT_EQ(s.round, 4);
    EXPECT_EQ(s.phase, Phase::AwaitingScenario);
    EXPECT_EQ(s.memory.memory_scene.size(), 4u);
}

TEST(Restore, TamperedRoundIsDetected)
{
    const auto run = scripted_run({.end_at = 2}, test::comfort_lines(5));
    auto t = parse_transcript(run.transcript());
    t.rounds[1]["acceptance"] = Json::array({"scenario", "bogus"});
    EXPECT_EQ(code_of([&] { restore_session(t); }), ErrorCode::DataError);
}

TEST(Replay, ReproducesTheTranscriptByteForByte)
{
    for (auto ablation : {Ablation::None, Ablation::NoMemory, Ablation::NoStrategist, Ablation::NoGuide}) {
        SessionOptions o;
        o.ablation = ablation;
        o.max_rounds = 5;
        const auto run = scripted_run({.end_at = 3}, test::comfort_lines(12), o);
        const auto recorded = parse_transcript(run.transcript());
        const auto again = replay_transcript(recorded, TemplateRegistry::builtin());
        EXPECT_EQ(again.transcript(), run.transcript()) << to_string(ablation);
    }
}

TEST(Replay, WithdrawnSessionReplaysToTheSameStop)
{
    const auto run = scripted_run({}, test::comfort_lines(3));
    ASSERT_TRUE(run.outcome.player_withdrew);
    ASSERT_EQ(run.state.rounds.size(), 3u);
    const auto again = replay_transcript(parse_transcript(run.transcript()), TemplateRegistry::builtin());
    EXPECT_EQ(again.transcript(), run.transcript());
}

TEST(Replay, SimulatedComfortsReplay)
{
    auto backend = test::mind_script({.end_at = 2});
    SimulatedPatient patient(*backend, TemplateRegistry::builtin());
    const auto run = run_mind_session(test::new_session(), *backend, TemplateRegistry::builtin(), patient, kCreated);
    const auto again = replay_transcript(parse_transcript(run.transcript()), TemplateRegistry::builtin());
    EXPECT_EQ(again.transcript(), run.transcript());
}

TEST(Replay, MissingRawOutputIsIncomplete)
{
    const auto run = scripted_run({.end_at = 2}, test::comfort_lines(5));
    auto t = parse_transcript(run.transcript());
    t.rounds[1]["raw_outputs"].erase("devil");
    EXPECT_EQ(code_of([&] { replay_transcript(t, TemplateRegistry::builtin()); }), ErrorCode::IncompleteTranscript);
}
