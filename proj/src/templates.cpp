#include "mind/templates.hpp"

#include <fstream>
#include <sstream>

#include "mind/error.hpp"

namespace mind {

namespace detail {
// Generated from templates/en at build time.
struct BuiltinTemplate {
    const char* key;
    const char* text;
};
extern const BuiltinTemplate kBuiltinTemplates[];
extern const std::size_t kBuiltinTemplateCount;
} // namespace detail

const std::array<TemplateRole, 15>& all_template_roles()
{
    static const std::array<TemplateRole, 15> roles{
        TemplateRole::Trigger0,
        TemplateRole::TriggerI,
        TemplateRole::Devil0,
        TemplateRole::DevilI,
        TemplateRole::Guide,
        TemplateRole::Strategist,
        TemplateRole::StrategistFacilitated,
        TemplateRole::SimulatedPatient,
        TemplateRole::BaselinePatient,
        TemplateRole::BaselineChangeRole,
        TemplateRole::BaselineUser,
        TemplateRole::TriggerI_NoMemory,
        TemplateRole::Strategist_NoMemory,
        TemplateRole::TriggerI_NoStrategist,
        TemplateRole::SimulatedPatient_NoGuide,
    };
    return roles;
}

std::string_view to_string(TemplateRole role)
{
    switch (role) {
    case TemplateRole::Trigger0: return "Trigger0";
    case TemplateRole::TriggerI: return "TriggerI";
    case TemplateRole::Devil0: return "Devil0";
    case TemplateRole::DevilI: return "DevilI";
    case TemplateRole::Guide: return "Guide";
    case TemplateRole::Strategist: return "Strategist";
    case TemplateRole::StrategistFacilitated: return "StrategistFacilitated";
    case TemplateRole::SimulatedPatient: return "SimulatedPatient";
    case TemplateRole::BaselinePatient: return "BaselinePatient";
    case TemplateRole::BaselineChangeRole: return "BaselineChangeRole";
    case TemplateRole::BaselineUser: return "BaselineUser";
    case TemplateRole::TriggerI_NoMemory: return "TriggerI_NoMemory";
    case TemplateRole::Strategist_NoMemory: return "Strategist_NoMemory";
    case TemplateRole::TriggerI_NoStrategist: return "TriggerI_NoStrategist";
    case TemplateRole::SimulatedPatient_NoGuide: return "SimulatedPatient_NoGuide";
    }
    return "";
}

TemplateRole parse_template_role(std::string_view key)
{
    for (auto role : all_template_roles()) {
        if (key == to_string(role)) {
            return role;
        }
    }
    throw Error(ErrorCode::TemplateNotFound, "unknown template key '" + std::string(key) + "'");
}

const std::set<std::string>& placeholder_vocabulary()
{
    static const std::set<std::string> vocab{
        "topic",          "worries",      "type",          "scene",         "thoughts",          "comforting_words",
        "help_text",      "summary",      "next_scene",    "next_thoughts", "memory_scene",      "memory_thought",
        "memory_guide",   "memory_comforting", "memory_behavior", "behavior", "concerns",         "count",
    };
    return vocab;
}

const std::set<std::string>& expected_placeholders(TemplateRole role)
{
    using S = std::set<std::string>;
    static const std::map<TemplateRole, S> table{
        {TemplateRole::Trigger0, S{"topic", "worries"}},
        {TemplateRole::TriggerI, S{"topic", "worries", "type", "next_scene", "memory_scene", "memory_thought"}},
        {TemplateRole::Devil0, S{"scene", "worries", "comforting_words"}},
        {TemplateRole::DevilI, S{"type", "scene", "comforting_words", "memory_thought", "next_thoughts", "count"}},
        {TemplateRole::Guide, S{"scene", "type", "thoughts", "memory_guide"}},
        {TemplateRole::Strategist, S{"summary", "comforting_words", "memory_scene", "memory_thought"}},
        {TemplateRole::StrategistFacilitated, S{"summary", "comforting_words", "memory_scene", "memory_thought"}},
        {TemplateRole::SimulatedPatient, S{"concerns", "scene", "thoughts", "help_text"}},
        {TemplateRole::BaselinePatient, S{"concerns", "memory_behavior"}},
        {TemplateRole::BaselineChangeRole, S{"concerns", "memory_comforting", "memory_behavior"}},
        {TemplateRole::BaselineUser, S{"concerns", "behavior", "memory_comforting"}},
        {TemplateRole::TriggerI_NoMemory, S{"topic", "worries", "type", "next_scene"}},
        {TemplateRole::Strategist_NoMemory, S{"summary", "comforting_words"}},
        {TemplateRole::TriggerI_NoStrategist, S{"topic", "worries", "type", "memory_scene", "memory_thought"}},
        {TemplateRole::SimulatedPatient_NoGuide, S{"concerns", "scene", "thoughts"}},
    };
    return table.at(role);
}

namespace {

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Calls on_text(literal) / on_name(name) in document order.
template <class OnText, class OnName>
void scan(std::string_view body, OnText&& on_text, OnName&& on_name)
{
    std::size_t pos = 0;
    std::size_t literal_start = 0;
    while (pos < body.size()) {
        if (body[pos] != '{') {
            ++pos;
            continue;
        }
        std::size_t end = pos + 1;
        while (end < body.size() && is_name_char(body[end])) {
            ++end;
        }
        if (end < body.size() && body[end] == '}' && end > pos + 1) {
            on_text(body.substr(literal_start, pos - literal_start));
            on_name(body.substr(pos + 1, end - pos - 1));
            pos = end + 1;
            literal_start = pos;
        } else {
            ++pos;
        }
    }
    on_text(body.substr(literal_start));
}

} // namespace

std::set<std::string> extract_placeholders(std::string_view body)
{
    std::set<std::string> names;
    scan(body, [](std::string_view) {}, [&](std::string_view name) {
        std::string n(name);
        if (!placeholder_vocabulary().count(n)) {
            throw Error(ErrorCode::UnknownPlaceholder, "{" + n + "}");
        }
        names.insert(std::move(n));
    });
    return names;
}

PromptTemplate PromptTemplate::make(TemplateRole role, std::string body, std::string id)
{
    PromptTemplate t;
    t.id = id.empty() ? std::string(to_string(role)) : std::move(id);
    t.role = role;
    t.placeholders = extract_placeholders(body);
    t.body = std::move(body);
    return t;
}

std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings)
{
    for (const auto& name : tmpl.placeholders) {
        if (!bindings.count(name)) {
            throw Error(ErrorCode::MissingBinding, name);
        }
    }
    for (const auto& [name, value] : bindings) {
        if (!tmpl.placeholders.count(name)) {
            throw Error(ErrorCode::UnknownBinding, name);
        }
    }
    std::string out;
    out.reserve(tmpl.body.size() + 256);
    scan(tmpl.body, [&](std::string_view literal) { out.append(literal); },
         [&](std::string_view name) { out.append(bindings.at(std::string(name))); });
    return out;
}

namespace {

void check_role_placeholders(const PromptTemplate& t)
{
    if (t.placeholders != expected_placeholders(t.role)) {
        std::string got;
        for (const auto& p : t.placeholders) {
            got += (got.empty() ? "" : ",") + p;
        }
        throw Error(ErrorCode::ConfigError,
                    "template " + std::string(to_string(t.role)) + " has placeholders {" + got + "}");
    }
}

} // namespace

const TemplateRegistry& TemplateRegistry::builtin()
{
    static const TemplateRegistry registry = [] {
        TemplateRegistry r;
        r.set_id_ = "builtin-en";
        for (std::size_t i = 0; i < detail::kBuiltinTemplateCount; ++i) {
            const auto& entry = detail::kBuiltinTemplates[i];
            const auto role = parse_template_role(entry.key);
            auto t = PromptTemplate::make(role, entry.text, std::string("builtin-en/") + entry.key);
            check_role_placeholders(t);
            r.templates_.emplace(role, std::move(t));
        }
        if (r.templates_.size() != all_template_roles().size()) {
            throw Error(ErrorCode::ConfigError, "builtin template set is incomplete");
        }
        return r;
    }();
    return registry;
}

TemplateRegistry TemplateRegistry::load_directory(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::ConfigError, "template directory not found: " + dir.string());
    }
    TemplateRegistry r;
    r.set_id_ = fs::absolute(dir).lexically_normal().filename().string();
    if (r.set_id_.empty()) {
        r.set_id_ = dir.string();
    }
    for (auto role : all_template_roles()) {
        const auto key = std::string(to_string(role));
        fs::path file = dir / (key + ".txt");
        if (!fs::exists(file)) {
            file = dir / key;
        }
        if (!fs::exists(file)) {
            throw Error(ErrorCode::TemplateNotFound, "missing template file for " + key + " in " + dir.string());
        }
        std::ifstream in(file, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        auto t = PromptTemplate::make(role, buf.str(), r.set_id_ + "/" + key);
        check_role_placeholders(t);
        r.templates_.emplace(role, std::move(t));
    }
    return r;
}

const PromptTemplate& TemplateRegistry::get(TemplateRole role) const
{
    auto it = templates_.find(role);
    if (it == templates_.end()) {
        throw Error(ErrorCode::TemplateNotFound, std::string(to_string(role)));
    }
    return it->second;
}

} // namespace mind
