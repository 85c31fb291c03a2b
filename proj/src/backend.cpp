#include "mind/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mind/error.hpp"
#include "mind/text.hpp"

namespace mind {

void BackendConfig::validate() const
{
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(ErrorCode::ConfigError, "temperature must be within [0, 2]");
    }
    if (timeout.count() <= 0) {
        throw Error(ErrorCode::ConfigError, "timeout must be positive");
    }
    if (max_retries_transport < 0) {
        throw Error(ErrorCode::ConfigError, "max_retries_transport must be >= 0");
    }
    if (model.empty()) {
        throw Error(ErrorCode::ConfigError, "model must not be empty");
    }
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
        throw Error(ErrorCode::ConfigError, "base_url must start with http:// or https://");
    }
}

BackendConfig backend_config_from_json(const Json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::ConfigError, "backend configuration must be an object");
    }
    BackendConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "base_url") {
                c.base_url = value.get<std::string>();
            } else if (key == "model") {
                c.model = value.get<std::string>();
            } else if (key == "temperature") {
                c.temperature = value.get<double>();
            } else if (key == "timeout_seconds") {
                c.timeout = std::chrono::milliseconds(static_cast<long long>(std::llround(value.get<double>() * 1000)));
            } else if (key == "max_retries_transport") {
                c.max_retries_transport = value.get<int>();
            } else if (key == "api_key_env") {
                c.api_key_env = value.get<std::string>();
            } else if (key == "backoff_ms") {
                c.backoff_base = std::chrono::milliseconds(value.get<long long>());
            } else {
                throw Error(ErrorCode::ConfigError, "unknown backend option '" + key + "'");
            }
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    c.validate();
    return c;
}

Json to_json(const BackendConfig& c)
{
    return Json{{"base_url", c.base_url},
                {"model", c.model},
                {"temperature", c.temperature},
                {"timeout_seconds", static_cast<double>(c.timeout.count()) / 1000.0},
                {"max_retries_transport", c.max_retries_transport},
                {"api_key_env", c.api_key_env},
                {"backoff_ms", c.backoff_base.count()}};
}

// ---------------------------------------------------------------------------

HttpReply HttplibTransport::post(const std::string& base_url, const std::string& path,
                                 const std::map<std::string, std::string>& headers, const std::string& body,
                                 std::chrono::milliseconds timeout)
{
    // Split "scheme://host[:port][/prefix]" so the prefix joins the path.
    const auto scheme_end = base_url.find("://");
    const auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? base_url : base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers h;
    for (const auto& [k, v] : headers) {
        h.emplace(k, v);
    }
    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(prefix + path, h, body, "application/json");
    if (!result) {
        const auto err = result.error();
        const auto elapsed = std::chrono::steady_clock::now() - started;
        if (err == httplib::Error::ConnectionTimeout || elapsed >= timeout) {
            throw Error(ErrorCode::Timeout, "no reply within " + std::to_string(timeout.count()) + " ms");
        }
        throw Error(ErrorCode::TransportError, httplib::to_string(err));
    }
    return HttpReply{result->status, result->body};
}

OpenAiBackend::OpenAiBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper))
{
    config_.validate();
    if (!transport_) {
        transport_ = std::make_shared<HttplibTransport>();
    }
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

Json OpenAiBackend::build_request_body(const ChatRequest& request) const
{
    Json messages = Json::array();
    if (request.system) {
        messages.push_back({{"role", "system"}, {"content", *request.system}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user}});
    return Json{{"model", config_.model},
                {"messages", messages},
                {"temperature", request.temperature.value_or(config_.temperature)}};
}

ChatResponse OpenAiBackend::parse_response_body(const std::string& body)
{
    ChatResponse out;
    try {
        const auto j = Json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_string()) {
            out.text = content.get<std::string>();
        }
        if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
            if (auto p = u->find("prompt_tokens"); p != u->end() && p->is_number_integer()) {
                out.usage.prompt_tokens = p->get<int>();
            }
            if (auto c = u->find("completion_tokens"); c != u->end() && c->is_number_integer()) {
                out.usage.completion_tokens = c->get<int>();
            }
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ProviderError, std::string("malformed completion: ") + e.what());
    }
    if (text::trim(out.text).empty()) {
        throw Error(ErrorCode::ProviderError, "empty completion");
    }
    return out;
}

ChatResponse OpenAiBackend::complete(const ChatRequest& request)
{
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::AuthMissing, "environment variable " + config_.api_key_env + " is not set");
    }
    const std::map<std::string, std::string> headers{{"Authorization", std::string("Bearer ") + key}};
    const auto body = build_request_body(request).dump();
    const int attempts = config_.max_retries_transport + 1;

    for (int attempt = 0;; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        try {
            auto reply = transport_->post(config_.base_url, "/chat/completions", headers, body, config_.timeout);
            if (reply.status < 200 || reply.status >= 300) {
                throw Error(ErrorCode::ProviderError, "HTTP " + std::to_string(reply.status) + ": " + reply.body);
            }
            auto out = parse_response_body(reply.body);
            out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now()
                                                                                - started);
            return out;
        } catch (const Error& e) {
            const bool transport_level = e.code() == ErrorCode::TransportError || e.code() == ErrorCode::Timeout;
            if (!transport_level || attempt + 1 >= attempts) {
                throw;
            }
        }
        sleeper_(config_.backoff_base * (1LL << attempt));
    }
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, std::optional<std::string> default_response)
    : original_(rules), rules_(std::move(rules)), default_(std::move(default_response))
{
}

namespace {

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot read " + p.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_responses(const std::string& content)
{
    std::vector<std::string> out(1);
    for (const auto& line : text::split_lines(content)) {
        if (text::trim(line) == "---") {
            out.emplace_back();
        } else {
            out.back() += line + "\n";
        }
    }
    std::vector<std::string> trimmed;
    for (auto& r : out) {
        auto t = text::trim(r);
        if (!t.empty()) {
            trimmed.push_back(std::move(t));
        }
    }
    return trimmed;
}

} // namespace

ScriptedBackend ScriptedBackend::load_directory(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::ConfigError, "script directory not found: " + dir.string());
    }
    std::vector<ScriptRule> rules;
    std::optional<std::string> fallback;

    const auto json_path = dir / "script.json";
    if (fs::exists(json_path)) {
        try {
            const auto j = Json::parse(read_file(json_path));
            for (const auto& r : j.value("rules", Json::array())) {
                ScriptRule rule;
                rule.tag = r.value("tag", "");
                rule.contains = r.value("contains", "");
                rule.response = r.at("response").get<std::string>();
                rule.times = r.value("times", -1);
                rules.push_back(std::move(rule));
            }
            if (j.contains("default") && j["default"].is_string()) {
                fallback = j["default"].get<std::string>();
            }
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ConfigError, json_path.string() + ": " + e.what());
        }
    } else {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            const auto tag = file.stem().string();
            const auto responses = split_responses(read_file(file));
            for (std::size_t i = 0; i < responses.size(); ++i) {
                rules.push_back(ScriptRule{tag, "", nullptr, responses[i], i + 1 == responses.size() ? -1 : 1});
            }
        }
    }
    if (rules.empty() && !fallback) {
        throw Error(ErrorCode::ConfigError, "script directory holds no responses: " + dir.string());
    }
    return ScriptedBackend(std::move(rules), std::move(fallback));
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request)
{
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    for (auto& rule : rules_) {
        if (rule.times == 0) {
            continue;
        }
        if (!rule.tag.empty() && rule.tag != request.tag) {
            continue;
        }
        if (!rule.contains.empty() && request.user.find(rule.contains) == std::string::npos) {
            continue;
        }
        if (rule.predicate && !rule.predicate(request)) {
            continue;
        }
        if (rule.times > 0) {
            --rule.times;
        }
        return ChatResponse{rule.response, {}, std::chrono::milliseconds(0)};
    }
    if (default_) {
        return ChatResponse{*default_, {}, std::chrono::milliseconds(0)};
    }
    throw Error(ErrorCode::NoScriptMatch, "no scripted response for tag '" + request.tag + "'");
}

void ScriptedBackend::add_rule(ScriptRule rule)
{
    std::lock_guard lock(mutex_);
    original_.push_back(rule);
    rules_.push_back(std::move(rule));
}

void ScriptedBackend::set_default(std::optional<std::string> response)
{
    std::lock_guard lock(mutex_);
    default_ = std::move(response);
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::fresh() const
{
    std::lock_guard lock(mutex_);
    auto copy = std::make_unique<ScriptedBackend>(original_, default_);
    copy->model_ = model_;
    return copy;
}

std::vector<ChatRequest> ScriptedBackend::call_log() const
{
    std::lock_guard lock(mutex_);
    return log_;
}

std::vector<std::string> ScriptedBackend::tag_log() const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> tags;
    tags.reserve(log_.size());
    for (const auto& r : log_) {
        tags.push_back(r.tag);
    }
    return tags;
}

std::size_t ScriptedBackend::call_count() const
{
    std::lock_guard lock(mutex_);
    return log_.size();
}

// ---------------------------------------------------------------------------

std::unique_ptr<ScriptedBackend> record_replay(const std::vector<RoundRecord>& rounds, Ablation ablation)
{
    if (rounds.empty()) {
        throw Error(ErrorCode::IncompleteTranscript, "transcript has no rounds");
    }
    std::vector<ScriptRule> rules;
    for (const auto& r : rounds) {
        std::vector<std::string> needed{"trigger", "devil"};
        if (ablation != Ablation::NoGuide) {
            needed.emplace_back("guide");
        }
        if (r.comfort && r.comfort->author == ComfortAuthor::Simulated) {
            needed.emplace_back("patient");
        }
        if (ablation != Ablation::NoStrategist) {
            needed.emplace_back("strategist");
        }
        for (const auto& tag : needed) {
            if (!r.raw_outputs.count(tag)) {
                throw Error(ErrorCode::IncompleteTranscript,
                            "round " + std::to_string(r.round) + " lacks the raw " + tag + " output");
            }
        }
        for (const auto& [tag, text] : r.raw_outputs) {
            rules.push_back(ScriptRule{tag, "", nullptr, text, 1});
        }
    }
    auto backend = std::make_unique<ScriptedBackend>(std::move(rules));
    backend->set_model_name("replay");
    return backend;
}

std::vector<std::string> recorded_comforts(const std::vector<RoundRecord>& rounds)
{
    std::vector<std::string> lines;
    for (const auto& r : rounds) {
        if (r.comfort && r.comfort->author == ComfortAuthor::Human) {
            lines.push_back(r.comfort->comforting_words);
        }
    }
    return lines;
}

} // namespace mind
