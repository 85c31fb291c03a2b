#include "mind/transcript.hpp"

#include <sstream>

#include "mind/error.hpp"
#include "mind/text.hpp"

namespace mind {

std::string_view to_string(Paradigm p)
{
    switch (p) {
    case Paradigm::Mind: return "mind";
    case Paradigm::Chatbot: return "chatbot";
    case Paradigm::Empathy: return "empathy";
    }
    return "";
}

Paradigm parse_paradigm(std::string_view label)
{
    const auto l = text::to_lower(text::trim(label));
    if (l == "mind") {
        return Paradigm::Mind;
    }
    if (l == "chatbot") {
        return Paradigm::Chatbot;
    }
    if (l == "empathy") {
        return Paradigm::Empathy;
    }
    throw Error(ErrorCode::InvalidInput, "unknown paradigm '" + std::string(label) + "'");
}

Json to_json(const TranscriptHeader& h)
{
    return Json{{"kind", "header"},
                {"session_id", h.session_id},
                {"theme", h.theme},
                {"concern", h.concern},
                {"paradigm", to_string(h.paradigm)},
                {"ablation", to_string(h.ablation)},
                {"created_at", h.created_at},
                {"template_set", h.template_set},
                {"backend_model", h.backend_model},
                {"personality", h.personality},
                {"max_rounds", h.max_rounds},
                {"facilitation_enabled", h.facilitation_enabled},
                {"extra", h.extra}};
}

TranscriptHeader header_from_json(const Json& j)
{
    TranscriptHeader h;
    h.session_id = j.at("session_id").get<std::string>();
    h.theme = j.at("theme").get<std::string>();
    h.concern = j.at("concern").get<std::string>();
    h.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
    h.ablation = parse_ablation(j.at("ablation").get<std::string>());
    h.created_at = j.value("created_at", "");
    h.template_set = j.value("template_set", "");
    h.backend_model = j.value("backend_model", "");
    if (j.contains("personality")) {
        h.personality = j.at("personality").get<PersonalityProfile>();
    }
    h.max_rounds = j.value("max_rounds", 10);
    h.facilitation_enabled = j.value("facilitation_enabled", false);
    h.extra = j.value("extra", Json::object());
    return h;
}

Json to_json(const TranscriptFooter& f)
{
    return Json{{"kind", "footer"}, {"status", f.status}, {"rounds", f.rounds}, {"failure", f.failure}};
}

TranscriptFooter footer_from_json(const Json& j)
{
    return TranscriptFooter{j.at("status").get<std::string>(), j.at("rounds").get<int>(),
                            j.at("failure").get<bool>()};
}

TranscriptHeader make_header(const SessionState& s, std::string created_at, std::string template_set,
                             std::string backend_model)
{
    TranscriptHeader h;
    h.session_id = s.id;
    h.theme = std::string(to_string(s.theme));
    h.concern = s.concern.text();
    h.paradigm = Paradigm::Mind;
    h.ablation = s.ablation;
    h.created_at = std::move(created_at);
    h.template_set = std::move(template_set);
    h.backend_model = std::move(backend_model);
    h.personality = s.personality;
    h.max_rounds = s.max_rounds;
    h.facilitation_enabled = s.facilitation_enabled;
    return h;
}

TranscriptFooter make_footer(const SessionState& s)
{
    TranscriptFooter f;
    f.status = std::string(to_string(s.status));
    f.rounds = static_cast<int>(s.rounds.size());
    f.failure = s.status != SessionStatus::CompletedGoal;
    return f;
}

std::vector<RoundRecord> Transcript::round_records() const
{
    std::vector<RoundRecord> out;
    out.reserve(rounds.size());
    for (const auto& line : rounds) {
        out.push_back(line.get<RoundRecord>());
    }
    return out;
}

Json round_line(const RoundRecord& record, const std::string& summary)
{
    Json j = record;
    j["kind"] = "round";
    j["summary"] = summary;
    return j;
}

// ---------------------------------------------------------------------------

TranscriptWriter::TranscriptWriter(std::filesystem::path path) : path_(std::move(path)) {}

TranscriptWriter::TranscriptWriter(std::filesystem::path path, const TranscriptHeader& header)
    : path_(std::move(path))
{
    if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    out_ = std::make_unique<std::ofstream>(path_, std::ios::binary | std::ios::trunc);
    if (!*out_) {
        throw Error(ErrorCode::DataError, "cannot write " + path_.string());
    }
    write_line(to_json(header));
}

TranscriptWriter TranscriptWriter::reopen(std::filesystem::path path)
{
    const auto existing = read_transcript(path);
    TranscriptWriter w(std::move(path));
    w.finished_ = existing.footer.has_value();
    w.out_ = std::make_unique<std::ofstream>(w.path_, std::ios::binary | std::ios::app);
    if (!*w.out_) {
        throw Error(ErrorCode::DataError, "cannot append to " + w.path_.string());
    }
    return w;
}

void TranscriptWriter::write_line(const Json& line)
{
    *out_ << line.dump() << '\n';
    out_->flush();
    if (!*out_) {
        throw Error(ErrorCode::DataError, "write failed for " + path_.string());
    }
}

void TranscriptWriter::append_round(const Json& line)
{
    if (finished_) {
        throw Error(ErrorCode::PreconditionViolation, "transcript already has a footer");
    }
    write_line(line);
}

void TranscriptWriter::finish(const TranscriptFooter& footer)
{
    if (finished_) {
        throw Error(ErrorCode::PreconditionViolation, "transcript footer already written");
    }
    write_line(to_json(footer));
    finished_ = true;
}

// ---------------------------------------------------------------------------

Transcript parse_transcript(std::string_view content)
{
    Transcript t;
    bool have_header = false;
    int line_no = 0;
    for (const auto& line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto where = "line " + std::to_string(line_no);
        try {
            auto j = Json::parse(line);
            const auto kind = j.value("kind", "");
            if (!have_header) {
                if (kind != "header") {
                    throw Error(ErrorCode::DataError, where + ": transcript must start with a header");
                }
                t.header = header_from_json(j);
                have_header = true;
            } else if (t.footer) {
                throw Error(ErrorCode::DataError, where + ": content after the footer");
            } else if (kind == "round") {
                t.rounds.push_back(std::move(j));
            } else if (kind == "footer") {
                t.footer = footer_from_json(j);
            } else {
                throw Error(ErrorCode::DataError, where + ": unexpected record kind '" + kind + "'");
            }
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::DataError, where + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DataError) {
                throw;
            }
            throw Error(ErrorCode::DataError, where + ": " + e.what());
        }
    }
    if (!have_header) {
        throw Error(ErrorCode::DataError, "empty transcript");
    }
    if (t.footer && t.footer->rounds != static_cast<int>(t.rounds.size())) {
        throw Error(ErrorCode::DataError, "footer counts " + std::to_string(t.footer->rounds) + " rounds, body has "
                                              + std::to_string(t.rounds.size()));
    }
    return t;
}

Transcript read_transcript(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::DataError, "cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_transcript(buf.str());
    } catch (const Error& e) {
        throw Error(ErrorCode::DataError, path.string() + ": " + e.detail());
    }
}

std::string render_transcript(const TranscriptHeader& header, const std::vector<Json>& round_lines,
                              const std::optional<TranscriptFooter>& footer)
{
    std::string out = to_json(header).dump() + "\n";
    for (const auto& line : round_lines) {
        out += line.dump() + "\n";
    }
    if (footer) {
        out += to_json(*footer).dump() + "\n";
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        throw Error(ErrorCode::DataError, "cannot write " + path.string());
    }
}

SessionState restore_session(const Transcript& t)
{
    if (t.header.paradigm != Paradigm::Mind) {
        throw Error(ErrorCode::DataError, "only MIND transcripts can be resumed");
    }
    SessionOptions options;
    options.id = t.header.session_id;
    options.max_rounds = t.header.max_rounds;
    options.facilitation_enabled = t.header.facilitation_enabled;
    options.ablation = t.header.ablation;
    auto s = create_session(parse_theme(t.header.theme), Concern(t.header.concern), t.header.personality, options);

    for (const auto& line : t.rounds) {
        const auto r = line.get<RoundRecord>();
        for (const auto& field : r.acceptance) {
            if (field == "scenario" && r.scenario) {
                apply_step(s, *r.scenario);
            } else if (field == "thought" && r.thought) {
                apply_step(s, *r.thought);
            } else if (field == "guidance" && r.guidance) {
                apply_step(s, *r.guidance);
            } else if (field == "comfort" && r.comfort) {
                apply_step(s, *r.comfort);
            } else if (field == "progression" && r.progression) {
                apply_step(s, *r.progression);
            } else {
                throw Error(ErrorCode::DataError, "round " + std::to_string(r.round) + " cannot replay '" + field + "'");
            }
        }
        if (s.rounds.empty()) {
            throw Error(ErrorCode::DataError, "round line without accepted fields");
        }
        s.rounds.back().raw_outputs = r.raw_outputs;
        if (s.rounds.back() != r) {
            throw Error(ErrorCode::DataError, "round " + std::to_string(r.round) + " does not replay identically");
        }
        const auto summary = line.value("summary", "");
        if (!summary.empty()) {
            s.memory.summary = summary;
        }
    }
    return s;
}

std::unique_ptr<ScriptedBackend> record_replay(const Transcript& t)
{
    auto backend = record_replay(t.round_records(), t.header.ablation);
    backend->set_model_name(t.header.backend_model);
    return backend;
}

} // namespace mind
