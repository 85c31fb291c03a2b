#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mind/agents.hpp"
#include "mind/backend.hpp"
#include "mind/session.hpp"
#include "mind/templates.hpp"
#include "mind/transcript.hpp"

namespace httplib {
class Server;
}

namespace mind {

inline constexpr const char* kVersion = "1.0.0";

enum class EventKind { ScenarioReady, ThoughtReady, GuidanceReady, AwaitingComfort, ProgressionReady, SessionEnded };
std::string_view to_string(EventKind kind);

struct SessionEvent {
    std::string session_id;
    long long sequence = 0;
    EventKind kind = EventKind::ScenarioReady;
    Json payload;
};

Json to_json(const SessionEvent& e);

/// The event log implied by a session state. Events are never retracted, so
/// the log of a later state always extends the log of an earlier one and
/// sequence numbers stay gapless.
std::vector<SessionEvent> derive_events(const SessionState& session);

/// Returns the backend for a new (or reloaded) session, or nullptr when no
/// backend is configured.
using BackendFactory = std::function<std::shared_ptr<Backend>(const std::string& session_id)>;

struct ServiceConfig {
    std::filesystem::path data_dir = "data/run";
    std::optional<std::filesystem::path> static_dir;
    /// Concurrent mutating requests and background drivers allowed.
    int max_in_flight = 64;
    /// Fixed header timestamp (used for reproducible runs); empty means now.
    std::string created_at;
    AgentOptions agent_options;
};

class Service {
public:
    Service(ServiceConfig config, const TemplateRegistry& templates, BackendFactory backends);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Loads every transcript under the data directory and resumes sessions
    /// that were still running. Returns the number of sessions loaded.
    std::size_t reload();

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// the bound port is returned.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

    /// Blocks until no background driver is running.
    void wait_idle();

    std::filesystem::path transcript_path(const std::string& session_id) const;

private:
    struct Slot;
    struct Impl;

    void install_routes();
    void start_driver(const std::string& id);
    void drive(const std::string& id);
    void notify();

    std::unique_ptr<Impl> impl_;
};

} // namespace mind
