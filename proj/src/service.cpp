#include "mind/service.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <httplib.h>

#include "mind/error.hpp"
#include "mind/runner.hpp"
#include "mind/text.hpp"

namespace mind {

std::string_view to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::ScenarioReady: return "ScenarioReady";
    case EventKind::ThoughtReady: return "ThoughtReady";
    case EventKind::GuidanceReady: return "GuidanceReady";
    case EventKind::AwaitingComfort: return "AwaitingComfort";
    case EventKind::ProgressionReady: return "ProgressionReady";
    case EventKind::SessionEnded: return "SessionEnded";
    }
    return "";
}

Json to_json(const SessionEvent& e)
{
    return Json{{"session_id", e.session_id}, {"sequence", e.sequence}, {"kind", to_string(e.kind)},
                {"payload", e.payload}};
}

std::vector<SessionEvent> derive_events(const SessionState& s)
{
    std::vector<SessionEvent> events;
    auto push = [&](EventKind kind, Json payload) {
        events.push_back(SessionEvent{s.id, static_cast<long long>(events.size()), kind, std::move(payload)});
    };
    for (const auto& r : s.rounds) {
        const bool open = current_round(s) == &r && s.status == SessionStatus::Active;
        if (r.scenario) {
            push(EventKind::ScenarioReady, *r.scenario);
        }
        if (r.thought) {
            push(EventKind::ThoughtReady, *r.thought);
        }
        if (r.guidance && s.ablation != Ablation::NoGuide) {
            push(EventKind::GuidanceReady, *r.guidance);
        }
        const bool waiting = open && s.phase == Phase::AwaitingComfort;
        if (r.comfort || (r.guidance && (waiting || s.phase == Phase::AwaitingProgression || !open))) {
            push(EventKind::AwaitingComfort, Json{{"round", r.round}});
        }
        if (r.progression) {
            push(EventKind::ProgressionReady, Json{{"round", r.round}, {"comfort", *r.comfort},
                                                   {"progression", *r.progression}});
        }
    }
    if (s.status != SessionStatus::Active) {
        push(EventKind::SessionEnded, Json{{"status", to_string(s.status)},
                                          {"rounds", static_cast<int>(s.rounds.size())},
                                          {"failure", s.status != SessionStatus::CompletedGoal}});
    }
    return events;
}

// ---------------------------------------------------------------------------

struct Service::Slot {
    std::shared_ptr<Backend> backend;
    std::shared_ptr<TranscriptWriter> writer;
    bool busy = false;
    std::string last_error;
};

struct Service::Impl {
    Impl(ServiceConfig c, const TemplateRegistry& t, BackendFactory b)
        : config(std::move(c)), templates(t), backends(std::move(b))
    {
    }

    ServiceConfig config;
    const TemplateRegistry& templates;
    BackendFactory backends;
    SessionRegistry<Slot> sessions;

    httplib::Server server;
    std::thread server_thread;

    std::mutex change_mutex;
    std::condition_variable change_cv;
    long long version = 0;

    std::atomic<int> in_flight{0};
    std::mutex drivers_mutex;
    std::condition_variable drivers_cv;
    int active_drivers = 0;
    std::atomic<bool> stopping{false};

    std::string created_at() const { return config.created_at.empty() ? utc_timestamp() : config.created_at; }
};

namespace {

void send_json(httplib::Response& res, int status, const Json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message)
{
    send_json(res, status, Json{{"error", code}, {"message", message}});
}

/// Counts a mutating request against the in-flight cap for its lifetime.
class InFlight {
public:
    InFlight(std::atomic<int>& counter, int cap) : counter_(counter)
    {
        admitted_ = counter_.fetch_add(1) < cap;
    }
    ~InFlight() { counter_.fetch_sub(1); }
    bool admitted() const { return admitted_; }

private:
    std::atomic<int>& counter_;
    bool admitted_;
};

Json session_view(const SessionState& s, bool busy, const std::string& last_error)
{
    Json j = s;
    j["driver"] = Json{{"busy", busy}, {"error", last_error.empty() ? Json(nullptr) : Json(last_error)}};
    return j;
}

} // namespace

Service::Service(ServiceConfig config, const TemplateRegistry& templates, BackendFactory backends)
    : impl_(std::make_unique<Impl>(std::move(config), templates, std::move(backends)))
{
    std::filesystem::create_directories(impl_->config.data_dir / "sessions");
    install_routes();
}

Service::~Service()
{
    stop();
}

std::filesystem::path Service::transcript_path(const std::string& session_id) const
{
    return impl_->config.data_dir / "sessions" / (session_id + ".jsonl");
}

void Service::notify()
{
    {
        std::lock_guard lock(impl_->change_mutex);
        ++impl_->version;
    }
    impl_->change_cv.notify_all();
}

void Service::start_driver(const std::string& id)
{
    auto slot = impl_->sessions.find(id);
    if (!slot) {
        return;
    }
    {
        std::lock_guard lock(slot->mutex);
        if (slot->extra.busy || slot->state.status != SessionStatus::Active
            || slot->state.phase != Phase::AwaitingScenario || !slot->extra.backend) {
            return;
        }
        slot->extra.busy = true;
    }
    {
        std::lock_guard lock(impl_->drivers_mutex);
        ++impl_->active_drivers;
    }
    std::thread([this, id] {
        drive(id);
        {
            std::lock_guard lock(impl_->drivers_mutex);
            --impl_->active_drivers;
        }
        impl_->drivers_cv.notify_all();
    }).detach();
}

void Service::drive(const std::string& id)
{
    auto slot = impl_->sessions.find(id);
    SessionState work = [&] {
        std::lock_guard lock(slot->mutex);
        return slot->state;
    }();
    try {
        LlmAgentSuite agents(*slot->extra.backend, impl_->templates, impl_->config.agent_options);
        advance_to_comfort(work, agents);
        std::lock_guard lock(slot->mutex);
        slot->state = std::move(work);
        slot->extra.busy = false;
        slot->extra.last_error.clear();
    } catch (const std::exception& e) {
        std::lock_guard lock(slot->mutex);
        slot->extra.busy = false;
        slot->extra.last_error = e.what();
    }
    notify();
}

void Service::wait_idle()
{
    std::unique_lock lock(impl_->drivers_mutex);
    impl_->drivers_cv.wait(lock, [&] { return impl_->active_drivers == 0; });
}

namespace {

/// Drops a partial trailing line left by a crash mid-write.
Transcript read_recoverable(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto content = buf.str();
    if (!content.empty() && content.back() != '\n') {
        const auto cut = content.rfind('\n');
        content = cut == std::string::npos ? std::string() : content.substr(0, cut + 1);
        write_text_file(path, content);
    }
    return parse_transcript(content);
}

} // namespace

std::size_t Service::reload()
{
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(impl_->config.data_dir / "sessions")) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::size_t loaded = 0;
    std::vector<std::string> resume;
    for (const auto& file : files) {
        try {
            auto transcript = read_recoverable(file);
            if (transcript.header.paradigm != Paradigm::Mind) {
                continue;
            }
            auto state = restore_session(transcript);
            Slot extra;
            extra.backend = impl_->backends ? impl_->backends(state.id) : nullptr;
            if (!extra.backend) {
                extra.last_error = "no backend configured";
            }
            auto writer = std::make_shared<TranscriptWriter>(TranscriptWriter::reopen(file));
            if (state.status != SessionStatus::Active && !writer->finished()) {
                writer->finish(make_footer(state));
            }
            extra.writer = std::move(writer);
            const auto id = state.id;
            const bool active = state.status == SessionStatus::Active;
            impl_->sessions.insert(std::move(state));
            impl_->sessions.with_session(id, [&](auto& slot) { slot.extra = std::move(extra); });
            if (active) {
                resume.push_back(id);
            }
            ++loaded;
        } catch (const std::exception& e) {
            std::cerr << "skipping " << file << ": " << e.what() << "\n";
        }
    }
    for (const auto& id : resume) {
        start_driver(id);
    }
    return loaded;
}

void Service::install_routes()
{
    auto& server = impl_->server;
    auto* impl = impl_.get();

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"status", "ok"}});
    });

    server.Get("/version", [impl](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"version", kVersion}, {"templates", impl->templates.set_id()}});
    });

    server.Post("/sessions", [this, impl](const httplib::Request& req, httplib::Response& res) {
        InFlight guard(impl->in_flight, impl->config.max_in_flight);
        if (!guard.admitted()) {
            return send_error(res, 503, "Busy", "too many requests in flight");
        }
        SessionState state = [&]() -> SessionState {
            Json body;
            try {
                body = Json::parse(req.body);
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::InvalidInput, std::string("body is not JSON: ") + e.what());
            }
            if (!body.is_object()) {
                throw Error(ErrorCode::InvalidInput, "body must be an object");
            }
            try {
                const auto theme = parse_theme(body.at("theme").get<std::string>());
                Concern concern(body.at("concern").get<std::string>());
                PersonalityProfile personality;
                if (body.contains("personality") && !body["personality"].is_null()) {
                    personality = body["personality"].get<PersonalityProfile>();
                }
                SessionOptions options;
                const auto opts = body.value("options", Json::object());
                options.max_rounds = opts.value("max_rounds", 10);
                options.facilitation_enabled = opts.value("facilitation_enabled", false);
                options.ablation = parse_ablation(opts.value("ablation", "None"));
                return create_session(theme, std::move(concern), personality, options);
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::InvalidInput, e.what());
            }
        }();

        auto backend = impl->backends ? impl->backends(state.id) : nullptr;
        if (!backend) {
            return send_error(res, 503, "BackendUnavailable", "no backend is configured");
        }
        Slot extra;
        extra.backend = backend;
        extra.writer = std::make_shared<TranscriptWriter>(
            transcript_path(state.id),
            make_header(state, impl->created_at(), impl->templates.set_id(), backend->model_name()));
        const auto id = state.id;
        Json view = state;
        impl->sessions.insert(std::move(state));
        impl->sessions.with_session(id, [&](auto& slot) { slot.extra = std::move(extra); });
        start_driver(id);
        send_json(res, 201, Json{{"id", id}, {"state", view}});
    });

    server.Get("/sessions", [impl](const httplib::Request&, httplib::Response& res) {
        Json list = Json::array();
        for (const auto& id : impl->sessions.ids()) {
            impl->sessions.with_session(id, [&](auto& slot) {
                const auto& s = slot.state;
                list.push_back(Json{{"id", s.id},
                                    {"theme", to_string(s.theme)},
                                    {"status", to_string(s.status)},
                                    {"phase", to_string(s.phase)},
                                    {"round", s.round},
                                    {"ablation", to_string(s.ablation)}});
            });
        }
        send_json(res, 200, list);
    });

    server.Get(R"(/sessions/([^/]+))", [impl](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto slot = impl->sessions.find(id);
        if (!slot) {
            return send_error(res, 404, "NotFound", "unknown session '" + id + "'");
        }
        std::lock_guard lock(slot->mutex);
        send_json(res, 200, session_view(slot->state, slot->extra.busy, slot->extra.last_error));
    });

    server.Post(R"(/sessions/([^/]+)/comfort)", [this, impl](const httplib::Request& req, httplib::Response& res) {
        InFlight guard(impl->in_flight, impl->config.max_in_flight);
        if (!guard.admitted()) {
            return send_error(res, 503, "Busy", "too many requests in flight");
        }
        const std::string id = req.matches[1];
        auto slot = impl->sessions.find(id);
        if (!slot) {
            return send_error(res, 404, "NotFound", "unknown session '" + id + "'");
        }
        std::string words;
        std::optional<int> round;
        try {
            const auto body = Json::parse(req.body);
            words = body.at("comforting_words").get<std::string>();
            if (body.contains("round") && !body["round"].is_null()) {
                round = body["round"].get<int>();
            }
        } catch (const Json::exception& e) {
            return send_error(res, 400, "InvalidInput", std::string("expected {\"comforting_words\": text}: ") + e.what());
        }
        if (text::trim(words).empty()) {
            return send_error(res, 400, "InvalidInput", "comforting_words must not be empty");
        }

        SessionState work = [&] {
            std::lock_guard lock(slot->mutex);
            return slot->state;
        }();
        {
            std::lock_guard lock(slot->mutex);
            const auto& s = slot->state;
            if (s.status != SessionStatus::Active || s.phase != Phase::AwaitingComfort || slot->extra.busy
                || (round && *round != s.round)) {
                return send_error(res, 409, "PhaseMismatch",
                                  "session is " + std::string(to_string(s.phase)) + " at round "
                                      + std::to_string(s.round) + (slot->extra.busy ? " (agents running)" : ""));
            }
            slot->extra.busy = true;
            work = s;
        }
        try {
            LlmAgentSuite agents(*slot->extra.backend, impl->templates, impl->config.agent_options);
            Comfort comfort;
            comfort.round = work.round;
            comfort.comforting_words = words;
            comfort.author = ComfortAuthor::Human;
            complete_round(work, agents, AgentOutput<Comfort>{comfort, {}});
        } catch (const std::exception& e) {
            {
                std::lock_guard lock(slot->mutex);
                slot->extra.busy = false;
                slot->extra.last_error = e.what();
            }
            return send_error(res, 502, "AgentFailure", e.what());
        }

        Json response;
        bool active = false;
        {
            std::lock_guard lock(slot->mutex);
            slot->state = work;
            slot->extra.busy = false;
            slot->extra.last_error.clear();
            const auto& completed = slot->state.rounds.back();
            slot->extra.writer->append_round(round_line(completed, slot->state.memory.summary));
            active = slot->state.status == SessionStatus::Active;
            response = Json{{"round", completed},
                            {"phase", to_string(slot->state.phase)},
                            {"status", to_string(slot->state.status)},
                            {"footer", nullptr}};
            if (!active) {
                const auto footer = make_footer(slot->state);
                slot->extra.writer->finish(footer);
                response["footer"] = to_json(footer);
            }
        }
        notify();
        if (active) {
            start_driver(id);
        }
        send_json(res, 200, response);
    });

    server.Get(R"(/sessions/([^/]+)/events)", [impl](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto slot = impl->sessions.find(id);
        if (!slot) {
            return send_error(res, 404, "NotFound", "unknown session '" + id + "'");
        }
        long long from = 0;
        try {
            if (req.has_param("from")) {
                from = std::stoll(req.get_param_value("from"));
            } else if (req.has_header("Last-Event-ID")) {
                from = std::stoll(req.get_header_value("Last-Event-ID")) + 1;
            }
        } catch (const std::exception&) {
            return send_error(res, 400, "InvalidInput", "from must be an integer");
        }
        if (from < 0) {
            return send_error(res, 400, "InvalidInput", "from must be >= 0");
        }
        auto snapshot = [slot] {
            std::lock_guard lock(slot->mutex);
            return derive_events(slot->state);
        };

        if (req.get_param_value("format") == "json") {
            Json list = Json::array();
            for (const auto& e : snapshot()) {
                if (e.sequence >= from) {
                    list.push_back(to_json(e));
                }
            }
            return send_json(res, 200, list);
        }

        const bool follow = req.get_param_value("wait") != "0";
        auto next = std::make_shared<long long>(from);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [impl, snapshot, next, follow](std::size_t, httplib::DataSink& sink) {
                for (;;) {
                    long long seen_version = 0;
                    {
                        std::lock_guard lock(impl->change_mutex);
                        seen_version = impl->version;
                    }
                    const auto events = snapshot();
                    bool ended = false;
                    for (const auto& e : events) {
                        if (e.sequence < *next) {
                            continue;
                        }
                        std::string frame = "id: " + std::to_string(e.sequence) + "\nevent: "
                                            + std::string(to_string(e.kind)) + "\ndata: " + to_json(e).dump() + "\n\n";
                        if (!sink.write(frame.data(), frame.size())) {
                            return false;
                        }
                        *next = e.sequence + 1;
                        ended = ended || e.kind == EventKind::SessionEnded;
                    }
                    if (ended || !follow || impl->stopping) {
                        sink.done();
                        return true;
                    }
                    std::unique_lock lock(impl->change_mutex);
                    const bool changed = impl->change_cv.wait_for(lock, std::chrono::seconds(15), [&] {
                        return impl->version != seen_version || impl->stopping;
                    });
                    lock.unlock();
                    if (!changed) {
                        static const std::string keepalive = ": keepalive\n\n";
                        if (!sink.write(keepalive.data(), keepalive.size())) {
                            return false;
                        }
                    }
                }
            });
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            const bool client = e.code() == ErrorCode::InvalidInput || e.code() == ErrorCode::InvalidOptions
                                || e.code() == ErrorCode::EmptyConcern;
            send_error(res, client ? 400 : 500, std::string(to_string(e.code())), e.detail());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    });

    if (impl->config.static_dir) {
        server.set_mount_point("/", impl->config.static_dir->string());
    }
}

int Service::start(const std::string& host, int port)
{
    auto& server = impl_->server;
    int bound = port;
    if (port == 0) {
        bound = server.bind_to_any_port(host);
    } else if (!server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        throw Error(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->server_thread = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
    return bound;
}

void Service::run(const std::string& host, int port)
{
    if (!impl_->server.listen(host, port)) {
        if (!impl_->stopping) {
            throw Error(ErrorCode::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
        }
    }
}

void Service::stop()
{
    if (impl_->stopping.exchange(true)) {
        return;
    }
    notify();
    impl_->server.stop();
    if (impl_->server_thread.joinable()) {
        impl_->server_thread.join();
    }
    wait_idle();
}

} // namespace mind
