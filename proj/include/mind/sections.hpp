#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mind/templates.hpp"
#include "mind/types.hpp"

namespace mind {

/// Section labels accepted in agent replies, in canonical spelling.
namespace label {
inline constexpr std::string_view Scene = "Scene";
inline constexpr std::string_view Changes = "Changes";
inline constexpr std::string_view Reasons = "Reasons";
inline constexpr std::string_view Type = "Type";
inline constexpr std::string_view Thoughts = "Thoughts";
inline constexpr std::string_view SummaryScene = "SummaryScene";
inline constexpr std::string_view SummaryThoughts = "SummaryThoughts";
inline constexpr std::string_view Help = "Help";
inline constexpr std::string_view NextScene = "Next_scene";
inline constexpr std::string_view NextThoughts = "Next_thoughts";
inline constexpr std::string_view IsEnd = "Is_end";
inline constexpr std::string_view Termination = "Termination";
inline constexpr std::string_view ComfortingWords = "Comforting_words";
inline constexpr std::string_view Behavior = "Behavior";
} // namespace label

struct SectionSchema {
    std::vector<std::string> required;
    std::vector<std::string> optional;
    /// BaselineChangeRole replies are a list of "Round i:" blocks instead.
    bool round_list = false;
};

const SectionSchema& section_schema(TemplateRole role);

/// Canonical label -> trimmed section text.
using Sections = std::map<std::string, std::string>;

/// Splits a reply into the role's labeled sections. A label is recognised at
/// the start of a line (markdown bullets and emphasis are ignored), matched
/// case-insensitively and followed by a colon. A section runs to the next
/// label of the same schema or the end of the text. When a label repeats, the
/// first occurrence wins. Throws MissingSection naming the first absent label.
Sections parse_sections(TemplateRole role, std::string_view raw);

/// Writes sections in schema order as "Label: value" paragraphs.
std::string format_sections(TemplateRole role, const Sections& sections);

struct ReversalEntry {
    int round = 0;
    std::string thoughts;
    std::string reasons;

    bool operator==(const ReversalEntry&) const = default;
};

/// Parses "Round N:" blocks each holding Thoughts/Reasons. Rounds are
/// returned in the order they appear.
std::vector<ReversalEntry> parse_reversal_report(std::string_view raw);
std::string format_reversal_report(const std::vector<ReversalEntry>& entries);

/// Yes/No in any case, surrounding punctuation ignored. Throws UnknownIsEnd.
bool parse_is_end(std::string_view value);
/// Throws UnknownDistortionType.
DistortionType parse_distortion_label(std::string_view value);

// Typed views over parse_sections. The round index is supplied by the caller.
Scenario parse_scenario(TemplateRole role, std::string_view raw, int round);
/// `carried_type` is used when the schema has no Type section (later rounds).
DistortedThought parse_thought(TemplateRole role, std::string_view raw, int round,
                               std::optional<DistortionType> carried_type = std::nullopt);
Guidance parse_guidance(std::string_view raw, int round);
Progression parse_progression(TemplateRole role, std::string_view raw, int round);
Comfort parse_comfort(TemplateRole role, std::string_view raw, int round);

} // namespace mind
