#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mind/types.hpp"

namespace mind {

inline constexpr double kDefaultTemperature = 0.7;

struct BackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    double temperature = kDefaultTemperature;
    std::chrono::milliseconds timeout{60000};
    int max_retries_transport = 2;
    std::string api_key_env = "OPENAI_API_KEY";
    /// First retry waits this long; each further retry doubles it.
    std::chrono::milliseconds backoff_base{500};

    void validate() const;
};

/// Unknown keys are rejected so typos surface as configuration errors.
BackendConfig backend_config_from_json(const Json& j);
Json to_json(const BackendConfig& config);

struct ChatRequest {
    std::optional<std::string> system;
    std::string user;
    std::optional<double> temperature;
    /// Which agent issued the call ("trigger", "devil", ...). Never sent.
    std::string tag;
};

struct TokenUsage {
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
    std::chrono::milliseconds latency{0};
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string model_name() const = 0;
};

// ---------------------------------------------------------------------------
// Network backend
// ---------------------------------------------------------------------------

struct HttpReply {
    int status = 0;
    std::string body;
};

/// One POST. Throws Error(Timeout) or Error(TransportError) when no HTTP
/// reply was obtained; any reply, whatever its status, is returned.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;

    virtual HttpReply post(const std::string& base_url, const std::string& path,
                           const std::map<std::string, std::string>& headers, const std::string& body,
                           std::chrono::milliseconds timeout) = 0;
};

class HttplibTransport : public HttpTransport {
public:
    HttpReply post(const std::string& base_url, const std::string& path,
                   const std::map<std::string, std::string>& headers, const std::string& body,
                   std::chrono::milliseconds timeout) override;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// OpenAI-compatible chat completions.
class OpenAiBackend : public Backend {
public:
    explicit OpenAiBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                           Sleeper sleeper = nullptr);

    ChatResponse complete(const ChatRequest& request) override;
    std::string model_name() const override { return config_.model; }
    const BackendConfig& config() const noexcept { return config_; }

    /// The JSON body sent for a request (exposed for tests).
    Json build_request_body(const ChatRequest& request) const;
    /// Extracts text and usage from a 2xx body. Throws ProviderError.
    static ChatResponse parse_response_body(const std::string& body);

private:
    BackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

struct ScriptRule {
    /// Empty matches any tag.
    std::string tag;
    /// Substring of the user message; empty matches anything.
    std::string contains;
    std::function<bool(const ChatRequest&)> predicate;
    std::string response;
    /// How many times the rule may fire; negative means unlimited.
    int times = -1;
};

/// Answers from an ordered rule list: the first rule that matches and is not
/// exhausted wins. Matching and logging happen under one lock.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<ScriptRule> rules, std::optional<std::string> default_response = std::nullopt);

    /// Reads `<tag>.txt` files whose responses are separated by lines holding
    /// only "---"; each response fires once and the last one repeats. A
    /// `script.json` ({"rules": [...], "default": "..."}) is used instead
    /// when present.
    static ScriptedBackend load_directory(const std::filesystem::path& dir);

    ChatResponse complete(const ChatRequest& request) override;
    std::string model_name() const override { return model_; }
    void set_model_name(std::string name) { model_ = std::move(name); }

    void add_rule(ScriptRule rule);
    void set_default(std::optional<std::string> response);

    /// A copy with every rule's budget restored and an empty log.
    std::unique_ptr<ScriptedBackend> fresh() const;

    std::vector<ChatRequest> call_log() const;
    std::vector<std::string> tag_log() const;
    std::size_t call_count() const;

private:
    mutable std::mutex mutex_;
    std::vector<ScriptRule> original_;
    std::vector<ScriptRule> rules_;
    std::optional<std::string> default_;
    std::vector<ChatRequest> log_;
    std::string model_ = "scripted";
};

/// Rebuilds the backend that produced the given rounds: every recorded raw
/// output becomes a single-use rule for its agent tag, in round order.
/// Throws IncompleteTranscript when there is nothing to replay or a round
/// lacks the raw output of an agent that must have run.
std::unique_ptr<ScriptedBackend> record_replay(const std::vector<RoundRecord>& rounds, Ablation ablation);

/// Human-authored comfort lines of the recorded rounds, in order.
std::vector<std::string> recorded_comforts(const std::vector<RoundRecord>& rounds);

} // namespace mind
