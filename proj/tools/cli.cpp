#include "cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mind/agents.hpp"
#include "mind/backend.hpp"
#include "mind/baselines.hpp"
#include "mind/error.hpp"
#include "mind/eval.hpp"
#include "mind/runner.hpp"
#include "mind/service.hpp"
#include "mind/text.hpp"
#include "mind/transcript.hpp"

namespace mind::cli {

namespace fs = std::filesystem;

namespace {

int exit_code(const Error& e)
{
    switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::AuthMissing:
    case ErrorCode::TemplateNotFound:
    case ErrorCode::UnknownPlaceholder:
    case ErrorCode::InvalidOptions:
        return kExitConfig;
    default:
        return kExitData;
    }
}

/// Option values are user configuration, so any validation failure while
/// interpreting them is a configuration error.
template <class Fn>
auto as_config(Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.detail());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::DataError, "cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> read_lines(const fs::path& path)
{
    std::vector<std::string> lines;
    for (auto& line : text::split_lines(read_file(path))) {
        line = text::trim(line);
        if (!line.empty()) {
            lines.push_back(std::move(line));
        }
    }
    return lines;
}

struct Globals {
    std::string config;
    std::string data_dir;
    std::string scripted;
    std::string templates;
};

/// Everything a command needs after the global flags and the config file
/// have been merged. Flags win over the file.
class Context {
public:
    Context(const Globals& g, std::ostream& err) : err_(err)
    {
        std::string data_dir = "mind-data";
        std::string scripted;
        std::string templates;
        if (!g.config.empty()) {
            Json j;
            try {
                j = Json::parse(read_file(g.config));
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::ConfigError, g.config + ": " + e.what());
            } catch (const Error& e) {
                throw Error(ErrorCode::ConfigError, e.detail());
            }
            if (!j.is_object()) {
                throw Error(ErrorCode::ConfigError, g.config + ": expected a JSON object");
            }
            try {
                for (const auto& [key, value] : j.items()) {
                    if (key == "backend") {
                        backend_ = backend_config_from_json(value);
                    } else if (key == "data_dir") {
                        data_dir = value.get<std::string>();
                    } else if (key == "scripted") {
                        scripted = value.get<std::string>();
                    } else if (key == "templates") {
                        templates = value.get<std::string>();
                    } else if (key == "agent") {
                        for (const auto& [k, v] : value.items()) {
                            if (k == "summarize") {
                                agent_.summarize = v.get<bool>();
                            } else if (k == "word_warning_limit") {
                                agent_.word_warning_limit = v.get<std::size_t>();
                            } else if (k == "system_prompt") {
                                agent_.system_prompt = v.get<std::string>();
                            } else {
                                throw Error(ErrorCode::ConfigError, "unknown agent key '" + k + "'");
                            }
                        }
                    } else {
                        throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
                    }
                }
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::ConfigError, g.config + ": " + e.what());
            }
        }
        if (!g.data_dir.empty()) {
            data_dir = g.data_dir;
        }
        if (!g.scripted.empty()) {
            scripted = g.scripted;
        }
        if (!g.templates.empty()) {
            templates = g.templates;
        }
        data_dir_ = data_dir;
        if (!scripted.empty()) {
            if (!fs::is_directory(scripted)) {
                throw Error(ErrorCode::ConfigError, "scripted backend directory not found: " + scripted);
            }
            prototype_ = as_config([&] { return ScriptedBackend::load_directory(scripted).fresh(); });
        }
        if (!templates.empty()) {
            custom_templates_ = as_config([&] { return TemplateRegistry::load_directory(templates); });
        }
        agent_.on_warning = [this](const std::string& message) {
            std::lock_guard lock(err_mutex_);
            err_ << "warning: " << message << "\n";
        };
    }

    bool scripted() const { return prototype_ != nullptr; }
    const fs::path& data_dir() const { return data_dir_; }
    const AgentOptions& agent_options() const { return agent_; }

    const TemplateRegistry& templates() const
    {
        return custom_templates_ ? *custom_templates_ : TemplateRegistry::builtin();
    }

    std::string created_at() const { return scripted() ? kScriptedCreatedAt : utc_timestamp(); }

    bool key_present() const
    {
        const char* key = std::getenv(backend_.api_key_env.c_str());
        return key != nullptr && *key != '\0';
    }

    /// Fails fast with AuthMissing rather than at the first agent call.
    std::shared_ptr<Backend> make_backend() const
    {
        if (prototype_) {
            return prototype_->fresh();
        }
        if (!key_present()) {
            throw Error(ErrorCode::AuthMissing,
                        "environment variable " + backend_.api_key_env + " is not set (or pass --scripted <dir>)");
        }
        return std::make_shared<OpenAiBackend>(backend_);
    }

    BackendFactory factory() const
    {
        return [this](const std::string&) -> std::shared_ptr<Backend> {
            if (!prototype_ && !key_present()) {
                return nullptr;
            }
            return make_backend();
        };
    }

    std::ostream& err() const { return err_; }
    std::mutex& err_mutex() const { return err_mutex_; }

private:
    std::ostream& err_;
    mutable std::mutex err_mutex_;
    BackendConfig backend_;
    AgentOptions agent_;
    fs::path data_dir_;
    std::unique_ptr<ScriptedBackend> prototype_;
    std::optional<TemplateRegistry> custom_templates_;
};

fs::path transcript_dir(const Context& ctx)
{
    auto dir = ctx.data_dir() / "transcripts";
    fs::create_directories(dir);
    return dir;
}

std::string default_concern(Theme theme)
{
    return "Lately I keep getting stuck on " + std::string(topic_label(theme)) + ".";
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Shows each round's scenario, inner voice and guidance, then takes the
/// comfort from the inner provider or from a line reader.
class TerminalComfort : public ComfortProvider {
public:
    TerminalComfort(std::ostream& out, std::istream* in, ComfortProvider* inner) : out_(out), in_(in), inner_(inner) {}

    std::optional<AgentOutput<Comfort>> comfort(const SessionState& s) override
    {
        if (s.rounds.size() >= 2) {
            const auto& prev = s.rounds[s.rounds.size() - 2];
            if (prev.progression) {
                out_ << "Next: " << prev.progression->next_scene << "\n";
            }
        }
        const auto* r = current_round(s);
        out_ << "\n== Round " << s.round + 1 << " ==\n";
        if (r->scenario) {
            out_ << "Scene: " << r->scenario->scene << "\n";
        }
        if (r->thought) {
            out_ << "Inner voice [" << display_name(r->thought->distortion_type) << "]: " << r->thought->thoughts
                 << "\n";
        }
        if (r->guidance && s.ablation != Ablation::NoGuide) {
            out_ << "Guide: " << r->guidance->help << "\n";
        }
        if (inner_) {
            auto c = inner_->comfort(s);
            if (c) {
                out_ << "Comfort: " << c->value.comforting_words << "\n";
            }
            return c;
        }
        for (;;) {
            out_ << "Your comforting words> " << std::flush;
            std::string line;
            if (!std::getline(*in_, line)) {
                out_ << "\n";
                return std::nullopt;
            }
            line = text::trim(line);
            if (line.empty()) {
                out_ << "Please write something to comfort your inner voice.\n";
                continue;
            }
            Comfort c;
            c.round = s.round;
            c.comforting_words = line;
            c.author = ComfortAuthor::Human;
            return AgentOutput<Comfort>{c, {}};
        }
    }

private:
    std::ostream& out_;
    std::istream* in_;
    ComfortProvider* inner_;
};

struct RunArgs {
    std::string theme;
    std::string concern;
    int max_rounds = 10;
    std::string ablation = "None";
    bool facilitation = false;
    std::string comforts;
    bool simulated = false;
    std::string id;
    std::string personality;
};

int cmd_run(const Context& ctx, const RunArgs& a, std::istream& in, std::ostream& out)
{
    SessionOptions so;
    so.max_rounds = a.max_rounds;
    so.facilitation_enabled = a.facilitation;
    so.id = a.id;
    auto session = as_config([&] {
        const auto theme = parse_theme(a.theme);
        so.ablation = parse_ablation(a.ablation);
        if (so.id.empty() && ctx.scripted()) {
            so.id = "run-" + std::string(to_string(theme));
        }
        PersonalityProfile personality;
        if (!a.personality.empty()) {
            try {
                personality = Json::parse(a.personality).get<PersonalityProfile>();
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::ConfigError, std::string("--personality: ") + e.what());
            }
        }
        return create_session(theme, Concern(a.concern), personality, so);
    });
    auto backend = ctx.make_backend();

    std::ifstream file;
    std::istream* source = &in;
    if (!a.comforts.empty()) {
        file.open(a.comforts);
        if (!file) {
            throw Error(ErrorCode::ConfigError, "cannot read comfort file " + a.comforts);
        }
        source = &file;
    }
    std::optional<SimulatedPatient> patient;
    if (a.simulated) {
        patient.emplace(*backend, ctx.templates(), ctx.agent_options());
    }
    TerminalComfort terminal(out, source, patient ? &*patient : nullptr);

    const auto path = transcript_dir(ctx) / (session.id + ".jsonl");
    auto result = run_mind_session(std::move(session), *backend, ctx.templates(), terminal, ctx.created_at(), path,
                                   ctx.agent_options());
    const auto& s = result.state;
    if (!s.rounds.empty() && s.rounds.back().progression) {
        out << "Next: " << s.rounds.back().progression->next_scene << "\n";
    }
    out << "\nSession " << s.id << " ended: " << to_string(s.status) << " after " << s.rounds.size() << " round"
        << (s.rounds.size() == 1 ? "" : "s") << (result.outcome.player_withdrew ? " (player withdrew)" : "") << "\n";
    out << "Transcript: " << path.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate / ablate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::vector<std::string> themes;
    int samples = 10;
    std::string paradigm = "mind";
    std::vector<std::string> ablations;
    std::string facilitation = "off";
    std::string comforts;
    int jobs = 0;
    int max_rounds = 10;
    std::string concern;
    int turns = 10;
    std::string character = "LittleGirl";
};

struct Job {
    Paradigm paradigm;
    Ablation ablation;
    bool facilitation;
    Theme theme;
    int sample;

    std::string id() const
    {
        std::ostringstream s;
        s << to_string(paradigm) << "-" << to_string(ablation) << "-" << (facilitation ? "fac" : "nofac") << "-"
          << to_string(theme) << "-" << (sample < 10 ? "0" : "") << sample;
        return text::to_lower(s.str());
    }
};

SessionOutcome run_job(const Context& ctx, const SimulateArgs& a, const Job& job, const std::vector<std::string>& lines,
                       Character character)
{
    const auto id = job.id();
    const auto path = transcript_dir(ctx) / (id + ".jsonl");
    Concern concern(a.concern.empty() ? default_concern(job.theme) : a.concern);
    auto backend = ctx.make_backend();

    if (job.paradigm == Paradigm::Mind) {
        SessionOptions so;
        so.id = id;
        so.max_rounds = a.max_rounds;
        so.ablation = job.ablation;
        so.facilitation_enabled = job.facilitation;
        auto session = create_session(job.theme, concern, PersonalityProfile::balanced(), so);
        if (!lines.empty()) {
            ScriptedComfort comfort(lines);
            return run_mind_session(std::move(session), *backend, ctx.templates(), comfort, ctx.created_at(), path,
                                    ctx.agent_options())
                .outcome;
        }
        SimulatedPatient patient(*backend, ctx.templates(), ctx.agent_options());
        return run_mind_session(std::move(session), *backend, ctx.templates(), patient, ctx.created_at(), path,
                                ctx.agent_options())
            .outcome;
    }

    BaselineRun run = job.paradigm == Paradigm::Chatbot
                          ? run_chatbot(id, job.theme, concern, a.turns, *backend, lines, ctx.created_at())
                          : run_empathy(id, job.theme, concern, character, *backend, ctx.templates(), lines,
                                        ctx.created_at());
    write_text_file(path, render_transcript(run.header, run.round_lines, run.footer));
    SessionOutcome o;
    o.session_id = id;
    o.rounds = run.footer.rounds;
    o.status = run.footer.failure ? SessionStatus::MaxRoundsReached : SessionStatus::CompletedGoal;
    o.transcript = path.string();
    return o;
}

int cmd_simulate(const Context& ctx, SimulateArgs a, bool ablate, std::ostream& out)
{
    if (a.samples < 1) {
        throw Error(ErrorCode::ConfigError, "--samples must be at least 1");
    }
    if (a.turns < 1) {
        throw Error(ErrorCode::ConfigError, "--turns must be at least 1");
    }
    std::vector<Theme> themes;
    std::vector<Ablation> ablations;
    std::vector<bool> facilitation;
    Paradigm paradigm = Paradigm::Mind;
    Character character = Character::LittleGirl;
    as_config([&] {
        paradigm = parse_paradigm(a.paradigm);
        character = parse_character(a.character);
        if (a.themes.empty()) {
            themes.assign(all_themes().begin(), all_themes().end());
        }
        for (const auto& t : a.themes) {
            themes.push_back(parse_theme(t));
        }
        if (a.ablations.empty()) {
            a.ablations = ablate ? std::vector<std::string>{"None", "NoMemory", "NoStrategist", "NoGuide"}
                                 : std::vector<std::string>{"None"};
        }
        for (const auto& ab : a.ablations) {
            ablations.push_back(parse_ablation(ab));
        }
        return 0;
    });
    if (a.facilitation == "off") {
        facilitation = {false};
    } else if (a.facilitation == "on") {
        facilitation = {true};
    } else if (a.facilitation == "both") {
        facilitation = {false, true};
    } else {
        throw Error(ErrorCode::ConfigError, "--facilitation must be off, on or both");
    }
    if (paradigm != Paradigm::Mind) {
        ablations = {Ablation::None};
        facilitation = {false};
    }

    std::vector<Job> jobs;
    for (auto ab : ablations) {
        for (bool fac : facilitation) {
            if (fac && (ab == Ablation::NoMemory || ab == Ablation::NoStrategist)) {
                if (!ablate && facilitation.size() == 1) {
                    throw Error(ErrorCode::ConfigError,
                                "facilitation cannot be combined with " + std::string(to_string(ab)));
                }
                std::lock_guard lock(ctx.err_mutex());
                ctx.err() << "note: skipping " << to_string(ab) << " with facilitation (needs memory and strategist)\n";
                continue;
            }
            for (auto theme : themes) {
                for (int i = 1; i <= a.samples; ++i) {
                    jobs.push_back(Job{paradigm, ab, fac, theme, i});
                }
            }
        }
    }
    std::vector<std::string> lines;
    if (!a.comforts.empty()) {
        lines = as_config([&] { return read_lines(a.comforts); });
    }
    // Fail on a missing key before spawning workers.
    ctx.make_backend();

    const int workers = std::max(1, std::min<int>(a.jobs > 0 ? a.jobs : static_cast<int>(std::thread::hardware_concurrency()),
                                                  static_cast<int>(jobs.size())));
    std::vector<std::optional<SessionOutcome>> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = run_job(ctx, a, jobs[i], lines, character);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }

    std::map<OutcomeCell, std::vector<SessionOutcome>> cells;
    std::size_t errored = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) {
            cells[OutcomeCell{std::string(to_string(jobs[i].paradigm)), jobs[i].ablation, jobs[i].facilitation}]
                .push_back(*results[i]);
        } else {
            ++errored;
        }
    }
    out << "runs: n=" << jobs.size() << " (" << themes.size() << " themes x " << a.samples << " samples per cell, "
        << errored << " errored)\n";
    out << "transcripts: " << transcript_dir(ctx).string() << "\n";
    if (!cells.empty()) {
        out << failure_table(cells);
    }
    if (errored > 0) {
        std::lock_guard lock(ctx.err_mutex());
        ctx.err() << "failed runs:\n";
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (!results[i]) {
                ctx.err() << "  " << jobs[i].id() << ": " << failures[i] << "\n";
            }
        }
        return kExitData;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string panas;
    std::string rubric;
    std::string transcripts;
    std::string target_kind;
};

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
    if (a.panas.empty() && a.rubric.empty() && a.transcripts.empty()) {
        throw Error(ErrorCode::ConfigError, "eval needs at least one of --panas, --rubric, --transcripts");
    }
    bool first = true;
    auto heading = [&](const char* title) {
        out << (first ? "" : "\n") << "## " << title << "\n";
        first = false;
    };
    if (!a.panas.empty()) {
        const auto records = read_panas_csv(a.panas);
        heading("PANAS deltas (post - pre)");
        out << panas_delta_table(records);
        heading("Emotional fluctuation");
        out << fluctuation_table(records);
    }
    if (!a.rubric.empty()) {
        const auto scores = read_rubric_csv(a.rubric);
        heading("Rubric means");
        out << rubric_table(rubric_aggregate(scores, a.target_kind));
    }
    if (!a.transcripts.empty()) {
        heading("Failure rates");
        out << failure_table(outcomes_from_transcripts(a.transcripts));
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// serve / replay
// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
    int max_in_flight = 64;
};

int cmd_serve(const Context& ctx, const ServeArgs& a, std::ostream& out)
{
    ServiceConfig config;
    config.data_dir = ctx.data_dir();
    if (!a.static_dir.empty()) {
        config.static_dir = a.static_dir;
    }
    config.max_in_flight = a.max_in_flight;
    config.agent_options = ctx.agent_options();
    if (ctx.scripted()) {
        config.created_at = kScriptedCreatedAt;
    }
    Service service(config, ctx.templates(), ctx.factory());
    const auto loaded = service.reload();
    out << "loaded " << loaded << " session(s) from " << (config.data_dir / "sessions").string() << "\n";
    out << "listening on http://" << a.host << ":" << a.port << std::endl;
    service.run(a.host, a.port);
    return kExitOk;
}

struct ReplayArgs {
    std::string transcript;
    std::string out;
};

int cmd_replay(const Context& ctx, const ReplayArgs& a, std::ostream& out)
{
    const auto original = read_file(a.transcript);
    const auto recorded = parse_transcript(original);
    const auto run = replay_transcript(recorded, ctx.templates(), ctx.agent_options());
    const auto bytes = run.transcript();
    fs::path target = a.out;
    if (target.empty()) {
        target = ctx.data_dir() / "replays" / (recorded.header.session_id + ".jsonl");
    }
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    write_text_file(target, bytes);
    out << "replayed " << run.state.rounds.size() << " round(s) to " << target.string() << "\n";
    if (bytes == original) {
        out << "identical\n";
        return kExitOk;
    }
    const auto want = text::split_lines(original);
    const auto got = text::split_lines(bytes);
    std::size_t line = 0;
    while (line < want.size() && line < got.size() && want[line] == got[line]) {
        ++line;
    }
    out << "differs from the recording at line " << line + 1 << "\n";
    return kExitData;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Inner-dialogue training sessions with LLM agents: play, simulate, evaluate and serve.", "mind"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    Globals g;
    app.add_option("--config", g.config, "JSON configuration file")->option_text("FILE");
    app.add_option("--data-dir", g.data_dir, "Where transcripts and sessions are written (default: mind-data)")
        ->option_text("DIR");
    app.add_option("--scripted", g.scripted, "Use the scripted backend in DIR instead of a provider")
        ->option_text("DIR");
    app.add_option("--templates", g.templates, "Load prompt templates from DIR instead of the built-in set")
        ->option_text("DIR");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Play a session in the terminal");
    run_cmd->add_option("--theme", run.theme, "Theme, e.g. WorkIssues")->required();
    run_cmd->add_option("--concern", run.concern, "What is on your mind")->required();
    run_cmd->add_option("--max-rounds", run.max_rounds, "Round cap")->capture_default_str();
    run_cmd->add_option("--ablation", run.ablation, "None, NoMemory, NoStrategist or NoGuide")->capture_default_str();
    run_cmd->add_flag("--facilitation", run.facilitation, "Let the strategist stop the session for safety reasons");
    run_cmd->add_option("--comforts", run.comforts, "Read comfort lines from FILE instead of stdin")
        ->option_text("FILE");
    run_cmd->add_flag("--simulated", run.simulated, "Let the simulated patient answer");
    run_cmd->add_option("--id", run.id, "Session id");
    run_cmd->add_option("--personality", run.personality, "Personality profile as a JSON object")
        ->option_text("JSON");

    SimulateArgs sim;
    auto add_matrix = [&](CLI::App* cmd, bool ablate) {
        cmd->add_option("--themes", sim.themes, "Themes to run (default: all seven)");
        cmd->add_option("--samples", sim.samples, "Runs per theme and cell")->capture_default_str();
        cmd->add_option("--paradigm", sim.paradigm, "mind, chatbot or empathy")->capture_default_str();
        cmd->add_option("--ablations", sim.ablations,
                        ablate ? "Ablations to sweep (default: all four)" : "Ablations to run (default: None)");
        cmd->add_option("--facilitation", sim.facilitation, "off, on or both")->capture_default_str();
        cmd->add_option("--comforts", sim.comforts, "Scripted comfort file, one line per round")->option_text("FILE");
        cmd->add_option("--jobs", sim.jobs, "Worker threads (default: logical cores)");
        cmd->add_option("--max-rounds", sim.max_rounds, "Round cap")->capture_default_str();
        cmd->add_option("--concern", sim.concern, "Concern used by every run (default: one per theme)");
        cmd->add_option("--turns", sim.turns, "Chatbot exchanges per run")->capture_default_str();
        cmd->add_option("--character", sim.character, "Empathy avatar")->capture_default_str();
    };
    auto* sim_cmd = app.add_subcommand("simulate", "Run sessions with a simulated or scripted player");
    add_matrix(sim_cmd, false);
    auto* ablate_cmd = app.add_subcommand("ablate", "Simulate across ablation variants");
    add_matrix(ablate_cmd, true);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Print evaluation tables");
    eval_cmd->add_option("--panas", ev.panas, "PANAS scores (client_id,system,item,pre,post)")->option_text("FILE");
    eval_cmd->add_option("--rubric", ev.rubric, "Rubric scores (rater_id,target_kind,target,dimension,score)")
        ->option_text("FILE");
    eval_cmd->add_option("--transcripts", ev.transcripts, "Directory of transcripts for failure rates")
        ->option_text("DIR");
    eval_cmd->add_option("--target-kind", ev.target_kind, "Only use rubric rows of this target kind");

    ServeArgs sv;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("--host", sv.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", sv.port, "Port")->capture_default_str();
    serve_cmd->add_option("--static", sv.static_dir, "Serve static files from DIR")->option_text("DIR");
    serve_cmd->add_option("--max-in-flight", sv.max_in_flight, "Concurrent mutating requests")->capture_default_str();

    ReplayArgs rp;
    auto* replay_cmd = app.add_subcommand("replay", "Rerun a recorded transcript and compare the bytes");
    replay_cmd->add_option("transcript", rp.transcript, "Recorded transcript")->required();
    replay_cmd->add_option("--out", rp.out, "Where to write the rerun")->option_text("FILE");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        Context ctx(g, err);
        if (*run_cmd) {
            return cmd_run(ctx, run, in, out);
        }
        if (*sim_cmd) {
            return cmd_simulate(ctx, sim, false, out);
        }
        if (*ablate_cmd) {
            return cmd_simulate(ctx, sim, true, out);
        }
        if (*eval_cmd) {
            return cmd_eval(ev, out);
        }
        if (*serve_cmd) {
            return cmd_serve(ctx, sv, out);
        }
        return cmd_replay(ctx, rp, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.detail() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

} // namespace mind::cli
