#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "mind/agents.hpp"
#include "mind/backend.hpp"
#include "mind/session.hpp"

namespace mind::test {

inline std::string n(int i) { return std::to_string(i); }

inline std::string trigger_reply(int round)
{
    if (round == 0) {
        return "Scene: scene 0\n\nReasons: opening 0";
    }
    return "Scene: scene " + n(round) + "\n\nChanges: change " + n(round) + "\n\nReasons: because " + n(round);
}

inline std::string devil_reply(int round, const std::string& type = "Fortune Telling")
{
    if (round == 0) {
        return "Type: " + type + "\n\nThoughts: thought 0\n\nReasons: why 0";
    }
    return "Thoughts: thought " + n(round) + "\n\nReasons: why " + n(round);
}

inline std::string guide_reply(int round)
{
    return "SummaryScene: summary scene " + n(round) + "\n\nSummaryThoughts: summary thoughts " + n(round)
           + "\n\nHelp: help " + n(round) + "\n\nChanges: guide change " + n(round) + "\n\nReasons: guide reason "
           + n(round);
}

inline std::string strategist_reply(int round, bool end, std::optional<std::string> termination = std::nullopt)
{
    auto text = "Next_scene: next scene " + n(round) + "\n\nNext_thoughts: next thoughts " + n(round)
                + "\n\nIs_end: " + (end ? "Yes" : "No") + "\n\nReasons: plan " + n(round);
    if (termination) {
        text += "\n\nTermination: " + *termination;
    }
    return text;
}

inline std::string patient_reply(int round)
{
    return "Comforting_words: simulated comfort " + n(round) + "\n\nReasons: patient reason " + n(round);
}

struct ScriptSpec {
    int rounds = 12;
    /// Round whose strategist answers Is_end: Yes (-1: never).
    int end_at = -1;
    /// Round whose strategist reports a safety stop (-1: never).
    int stop_at = -1;
    std::string stop = "Dialogue Stagnation";
};

/// Canned replies for every MIND agent, each firing once per round in order.
inline std::unique_ptr<ScriptedBackend> mind_script(const ScriptSpec& spec = {})
{
    auto b = std::make_unique<ScriptedBackend>();
    for (int r = 0; r < spec.rounds; ++r) {
        b->add_rule({"trigger", "", {}, trigger_reply(r), 1});
        b->add_rule({"devil", "", {}, devil_reply(r), 1});
        b->add_rule({"guide", "", {}, guide_reply(r), 1});
        std::optional<std::string> term;
        if (r == spec.stop_at) {
            term = spec.stop;
        }
        b->add_rule({"strategist", "", {}, strategist_reply(r, r == spec.end_at, term), 1});
        b->add_rule({"patient", "", {}, patient_reply(r), 1});
    }
    return b;
}

inline std::vector<std::string> comfort_lines(int count)
{
    std::vector<std::string> lines;
    for (int i = 0; i < count; ++i) {
        lines.push_back("comfort " + n(i));
    }
    return lines;
}

inline SessionState new_session(SessionOptions options = {}, Theme theme = Theme::WorkIssues)
{
    if (options.id.empty()) {
        options.id = "test-session";
    }
    return create_session(theme, Concern("my manager wants a meeting"), PersonalityProfile::balanced(), options);
}

/// A fresh directory that is removed when the object goes away.
class TempDir {
public:
    explicit TempDir(const std::string& name)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path()
                / ("mind-test-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

} // namespace mind::test
