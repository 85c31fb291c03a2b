#include "mind/sections.hpp"

#include <cctype>

#include "mind/error.hpp"
#include "mind/text.hpp"

namespace mind {

const SectionSchema& section_schema(TemplateRole role)
{
    using V = std::vector<std::string>;
    static const V scene0{"Scene", "Reasons"};
    static const V scene{"Scene", "Changes", "Reasons"};
    static const V devil0{"Type", "Thoughts", "Reasons"};
    static const V devil{"Thoughts", "Reasons"};
    static const V guide{"SummaryScene", "SummaryThoughts", "Help", "Changes", "Reasons"};
    static const V strategist{"Next_scene", "Next_thoughts", "Is_end", "Reasons"};
    static const V comfort{"Comforting_words", "Reasons"};
    static const V behavior{"Behavior", "Reasons"};

    static const std::map<TemplateRole, SectionSchema> table{
        {TemplateRole::Trigger0, {scene0, {}, false}},
        {TemplateRole::TriggerI, {scene, {}, false}},
        {TemplateRole::TriggerI_NoMemory, {scene, {}, false}},
        {TemplateRole::TriggerI_NoStrategist, {scene, {}, false}},
        {TemplateRole::Devil0, {devil0, {}, false}},
        {TemplateRole::DevilI, {devil, {}, false}},
        {TemplateRole::Guide, {guide, {}, false}},
        {TemplateRole::Strategist, {strategist, {}, false}},
        {TemplateRole::Strategist_NoMemory, {strategist, {}, false}},
        {TemplateRole::StrategistFacilitated, {strategist, {"Termination"}, false}},
        {TemplateRole::SimulatedPatient, {comfort, {}, false}},
        {TemplateRole::SimulatedPatient_NoGuide, {comfort, {}, false}},
        {TemplateRole::BaselineUser, {comfort, {}, false}},
        {TemplateRole::BaselinePatient, {behavior, {}, false}},
        {TemplateRole::BaselineChangeRole, {{"Thoughts", "Reasons"}, {}, true}},
    };
    return table.at(role);
}

namespace {

std::string normalize_label(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '_' || c == ' ' || c == '\\' || c == '\t') {
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

bool is_decoration(char c) { return c == '*' || c == '#' || c == '-' || c == '>' || c == ' ' || c == '\t'; }

struct LabelHit {
    std::string key;   // normalized text before the colon
    std::string rest;  // text after the colon, leading decoration removed
};

/// Returns the candidate label of a line, if it has the shape "<label>:".
std::optional<LabelHit> label_candidate(std::string_view line)
{
    std::size_t start = 0;
    while (start < line.size() && is_decoration(line[start])) {
        ++start;
    }
    const auto colon = line.find(':', start);
    if (colon == std::string_view::npos || colon == start || colon - start > 40) {
        return std::nullopt;
    }
    auto head = line.substr(start, colon - start);
    while (!head.empty() && (head.back() == '*' || head.back() == ' ' || head.back() == '\t')) {
        head.remove_suffix(1);
    }
    // Emphasis closing after the colon ("**Label:** text") belongs to the label.
    const bool emphasised = line.substr(0, start).find('*') != std::string_view::npos;
    std::size_t rest_start = colon + 1;
    while (emphasised && rest_start < line.size() && line[rest_start] == '*') {
        ++rest_start;
    }
    while (rest_start < line.size() && (line[rest_start] == ' ' || line[rest_start] == '\t')) {
        ++rest_start;
    }
    return LabelHit{normalize_label(head), std::string(line.substr(rest_start))};
}

/// Cuts text into (label, body) pieces using the given label set.
/// Text before the first label is dropped.
std::vector<std::pair<std::string, std::string>> cut(std::string_view raw,
                                                     const std::map<std::string, std::string>& labels)
{
    std::vector<std::pair<std::string, std::string>> pieces;
    for (const auto& line : text::split_lines(raw)) {
        if (auto hit = label_candidate(line)) {
            auto it = labels.find(hit->key);
            if (it != labels.end()) {
                pieces.emplace_back(it->second, hit->rest);
                continue;
            }
        }
        if (!pieces.empty()) {
            pieces.back().second += "\n" + line;
        }
    }
    for (auto& piece : pieces) {
        piece.second = text::trim(piece.second);
    }
    return pieces;
}

std::map<std::string, std::string> label_index(const SectionSchema& schema)
{
    std::map<std::string, std::string> index;
    for (const auto& l : schema.required) {
        index.emplace(normalize_label(l), l);
    }
    for (const auto& l : schema.optional) {
        index.emplace(normalize_label(l), l);
    }
    return index;
}

} // namespace

Sections parse_sections(TemplateRole role, std::string_view raw)
{
    const auto& schema = section_schema(role);
    if (schema.round_list) {
        throw Error(ErrorCode::ConfigError, "BaselineChangeRole replies use parse_reversal_report");
    }
    if (text::trim(raw).empty()) {
        throw Error(ErrorCode::MissingSection, schema.required.front());
    }
    Sections sections;
    for (auto& [name, body] : cut(raw, label_index(schema))) {
        sections.emplace(name, std::move(body));  // first occurrence wins
    }
    for (const auto& l : schema.required) {
        if (!sections.count(l)) {
            throw Error(ErrorCode::MissingSection, l);
        }
    }
    return sections;
}

std::string format_sections(TemplateRole role, const Sections& sections)
{
    const auto& schema = section_schema(role);
    std::string out;
    auto emit = [&](const std::string& l) {
        auto it = sections.find(l);
        if (it == sections.end()) {
            return;
        }
        if (!out.empty()) {
            out += "\n\n";
        }
        out += l + ": " + it->second;
    };
    for (const auto& l : schema.required) {
        emit(l);
    }
    for (const auto& l : schema.optional) {
        emit(l);
    }
    return out;
}

namespace {

std::optional<int> round_header(const std::string& line, std::string& rest)
{
    auto hit = label_candidate(line);
    if (!hit || hit->key.size() <= 5 || hit->key.compare(0, 5, "round") != 0) {
        return std::nullopt;
    }
    const auto digits = hit->key.substr(5);
    for (char c : digits) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            return std::nullopt;
        }
    }
    rest = hit->rest;
    return std::stoi(digits);
}

} // namespace

std::vector<ReversalEntry> parse_reversal_report(std::string_view raw)
{
    std::vector<std::pair<int, std::string>> blocks;
    for (const auto& line : text::split_lines(raw)) {
        std::string rest;
        if (auto n = round_header(line, rest)) {
            blocks.emplace_back(*n, rest);
        } else if (!blocks.empty()) {
            blocks.back().second += "\n" + line;
        }
    }
    if (blocks.empty()) {
        throw Error(ErrorCode::MissingSection, "Round 1");
    }
    const auto index = label_index(section_schema(TemplateRole::BaselineChangeRole));
    std::vector<ReversalEntry> entries;
    for (const auto& [n, body] : blocks) {
        Sections s;
        for (auto& [name, value] : cut(body, index)) {
            s.emplace(name, std::move(value));
        }
        for (const char* l : {"Thoughts", "Reasons"}) {
            if (!s.count(l)) {
                throw Error(ErrorCode::MissingSection, std::string(l) + " (Round " + std::to_string(n) + ")");
            }
        }
        entries.push_back({n, s["Thoughts"], s["Reasons"]});
    }
    return entries;
}

std::string format_reversal_report(const std::vector<ReversalEntry>& entries)
{
    std::string out;
    for (const auto& e : entries) {
        if (!out.empty()) {
            out += "\n\n";
        }
        out += "Round " + std::to_string(e.round) + ":\n\nThoughts: " + e.thoughts + "\n\nReasons: " + e.reasons;
    }
    return out;
}

bool parse_is_end(std::string_view value)
{
    const auto n = text::alpha_lower(value);
    if (n == "yes") {
        return true;
    }
    if (n == "no") {
        return false;
    }
    throw Error(ErrorCode::UnknownIsEnd, std::string(value));
}

DistortionType parse_distortion_label(std::string_view value)
{
    if (auto t = match_distortion_type(value)) {
        return *t;
    }
    throw Error(ErrorCode::UnknownDistortionType, std::string(value));
}

Scenario parse_scenario(TemplateRole role, std::string_view raw, int round)
{
    auto s = parse_sections(role, raw);
    Scenario out;
    out.round = round;
    out.scene = s[std::string(label::Scene)];
    out.reasons = s[std::string(label::Reasons)];
    if (auto it = s.find(std::string(label::Changes)); it != s.end()) {
        out.changes = it->second;
    }
    return out;
}

DistortedThought parse_thought(TemplateRole role, std::string_view raw, int round,
                               std::optional<DistortionType> carried_type)
{
    auto s = parse_sections(role, raw);
    DistortedThought out;
    out.round = round;
    out.thoughts = s[std::string(label::Thoughts)];
    out.reasons = s[std::string(label::Reasons)];
    if (auto it = s.find(std::string(label::Type)); it != s.end()) {
        out.distortion_type = parse_distortion_label(it->second);
    } else if (carried_type) {
        out.distortion_type = *carried_type;
    } else {
        throw Error(ErrorCode::MissingSection, std::string(label::Type));
    }
    return out;
}

Guidance parse_guidance(std::string_view raw, int round)
{
    auto s = parse_sections(TemplateRole::Guide, raw);
    Guidance out;
    out.round = round;
    out.summary_scene = s["SummaryScene"];
    out.summary_thoughts = s["SummaryThoughts"];
    out.help = s["Help"];
    out.changes = s["Changes"];
    out.reasons = s["Reasons"];
    return out;
}

Progression parse_progression(TemplateRole role, std::string_view raw, int round)
{
    auto s = parse_sections(role, raw);
    Progression out;
    out.round = round;
    out.next_scene = s["Next_scene"];
    out.next_thoughts = s["Next_thoughts"];
    out.is_end = parse_is_end(s["Is_end"]);
    out.reasons = s["Reasons"];
    if (auto it = s.find("Termination"); it != s.end()) {
        out.safety_stop = match_safety_stop(it->second);
    }
    return out;
}

Comfort parse_comfort(TemplateRole role, std::string_view raw, int round)
{
    auto s = parse_sections(role, raw);
    Comfort out;
    out.round = round;
    out.comforting_words = s["Comforting_words"];
    out.reasons = s["Reasons"];
    out.author = ComfortAuthor::Simulated;
    return out;
}

} // namespace mind
