#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace mind {

enum class TemplateRole {
    Trigger0,
    TriggerI,
    Devil0,
    DevilI,
    Guide,
    Strategist,
    StrategistFacilitated,
    SimulatedPatient,
    BaselinePatient,
    BaselineChangeRole,
    BaselineUser,
    TriggerI_NoMemory,
    Strategist_NoMemory,
    TriggerI_NoStrategist,
    SimulatedPatient_NoGuide,
};

const std::array<TemplateRole, 15>& all_template_roles();
std::string_view to_string(TemplateRole role);
TemplateRole parse_template_role(std::string_view key);

/// Every placeholder name a template may use.
const std::set<std::string>& placeholder_vocabulary();
/// The exact placeholder set the engine binds for each role.
const std::set<std::string>& expected_placeholders(TemplateRole role);

/// Finds `{name}` tokens. Braces around anything other than [a-z_]+ are
/// literal text. Throws UnknownPlaceholder for names outside the vocabulary.
std::set<std::string> extract_placeholders(std::string_view body);

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
    std::string id;
    TemplateRole role = TemplateRole::Trigger0;
    std::string body;
    std::set<std::string> placeholders;

    static PromptTemplate make(TemplateRole role, std::string body, std::string id = {});
};

/// Single pass substitution: bound values are inserted verbatim and never
/// re-expanded. Bindings must cover exactly the template's placeholders.
std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

class TemplateRegistry {
public:
    /// The English set compiled into the library.
    static const TemplateRegistry& builtin();
    /// One file per role key (`<key>.txt` or `<key>`). Every role must be
    /// present and carry exactly its expected placeholders.
    static TemplateRegistry load_directory(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateRole role) const;
    const std::string& set_id() const noexcept { return set_id_; }
    std::size_t size() const noexcept { return templates_.size(); }

private:
    std::string set_id_;
    std::map<TemplateRole, PromptTemplate> templates_;
};

} // namespace mind
