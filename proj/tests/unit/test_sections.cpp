#include <gtest/gtest.h>

#include <random>

#include "mind/error.hpp"
#include "mind/sections.hpp"

using namespace mind;

namespace {

const std::vector<std::string> kWords{
    "the",   "cat",    "sat",      "quietly", "{braces}", "50%",   "a,b",     "x:y",  "(aside)",
    "café",  "naïve",  "\"quote\"", "it's",   "---",      "#tag",  "*stars*", "3.14", "well...",
    "round", "memory", "yes",      "no",      "feelings", "note:", "again",   "[ok]", "tab\there",
};

std::string random_line(std::mt19937& rng)
{
    std::string line;
    const int words = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < words; ++i) {
        if (i > 0) {
            line += " ";
        }
        line += kWords[rng() % kWords.size()];
    }
    // Some lines look like list items; they are content, not labels.
    if (rng() % 5 == 0) {
        line = "- " + line;
    }
    return line;
}

std::string random_value(std::mt19937& rng)
{
    std::string value = random_line(rng);
    const int extra = static_cast<int>(rng() % 3);
    for (int i = 0; i < extra; ++i) {
        value += (rng() % 2 ? "\n" : "\n\n") + random_line(rng);
    }
    return value;
}

/// Writes a reply the way a model might: labels decorated in various ways.
std::string decorated_reply(const std::vector<std::pair<std::string, std::string>>& sections, std::mt19937& rng)
{
    std::string out;
    if (rng() % 3 == 0) {
        out += "Sure, here is my answer.\n\n";
    }
    for (const auto& [label, value] : sections) {
        std::string l = label;
        switch (rng() % 5) {
        case 0: break;
        case 1: l = "**" + l + ":**"; break;
        case 2: l = "**" + l + "**:"; break;
        case 3: l = "- " + l + ":"; break;
        case 4:
            for (auto& c : l) {
                c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
            break;
        }
        if (l.find(':') == std::string::npos) {
            l += ":";
        }
        out += l + (rng() % 2 ? " " : "\n") + value + "\n\n";
    }
    return out;
}

} // namespace

// Property: for every registered template, labeled values survive
// format -> parse unchanged, also when the labels are decorated.
TEST(SectionsProperty, RoundTripAllRoles)
{
    std::mt19937 rng(20240901);
    int cases = 0;
    for (auto role : all_template_roles()) {
        const auto& schema = section_schema(role);
        for (int i = 0; i < 100; ++i, ++cases) {
            if (schema.round_list) {
                std::vector<ReversalEntry> entries;
                const int k = 1 + static_cast<int>(rng() % 10);
                for (int r = 1; r <= k; ++r) {
                    entries.push_back({r, random_value(rng), random_value(rng)});
                }
                ASSERT_EQ(parse_reversal_report(format_reversal_report(entries)), entries);
                continue;
            }
            Sections want;
            std::vector<std::pair<std::string, std::string>> ordered;
            for (const auto& l : schema.required) {
                want[l] = random_value(rng);
                ordered.emplace_back(l, want[l]);
            }
            for (const auto& l : schema.optional) {
                if (rng() % 2) {
                    want[l] = random_value(rng);
                    ordered.emplace_back(l, want[l]);
                }
            }
            ASSERT_EQ(parse_sections(role, format_sections(role, want)), want) << to_string(role);
            ASSERT_EQ(parse_sections(role, decorated_reply(ordered, rng)), want) << to_string(role);
        }
    }
    EXPECT_GE(cases, 1000);
}

TEST(Sections, MissingSectionNamesTheLabel)
{
    try {
        parse_sections(TemplateRole::Strategist, "Next_scene: a\nNext_thoughts: b\nReasons: c");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingSection);
        EXPECT_EQ(e.detail(), "Is_end");
        EXPECT_TRUE(e.is_parse_error());
    }
    EXPECT_THROW(parse_sections(TemplateRole::Guide, ""), Error);
}

TEST(Sections, FirstOccurrenceWinsAndPreambleIsDropped)
{
    const auto s = parse_sections(TemplateRole::Trigger0, "Intro text\nScene: one\nReasons: r\nScene: two");
    EXPECT_EQ(s.at("Scene"), "one");
    EXPECT_EQ(s.at("Reasons"), "r");
}

TEST(Sections, OnlyTheRolesOwnLabelsDelimit)
{
    // Trigger0 has no Changes section, so the line stays in the scene text.
    const auto s = parse_sections(TemplateRole::Trigger0, "Scene: a park\nChanges: none\nReasons: r");
    EXPECT_EQ(s.at("Scene"), "a park\nChanges: none");
    // A label in the middle of a line is content.
    const auto g = parse_sections(TemplateRole::SimulatedPatient,
                                  "Comforting_words: I said Reasons: later\nReasons: r");
    EXPECT_EQ(g.at("Comforting_words"), "I said Reasons: later");
}

TEST(Sections, LabelSpellingVariants)
{
    const auto s = parse_sections(TemplateRole::Strategist,
                                  "### Next scene: a\n**Next_Thoughts**: b\n- IS END: yes\n> reasons:\nc");
    EXPECT_EQ(s.at("Next_scene"), "a");
    EXPECT_EQ(s.at("Next_thoughts"), "b");
    EXPECT_EQ(s.at("Is_end"), "yes");
    EXPECT_EQ(s.at("Reasons"), "c");
}

TEST(Values, IsEndAndType)
{
    EXPECT_TRUE(parse_is_end("Yes"));
    EXPECT_TRUE(parse_is_end("**YES.**"));
    EXPECT_FALSE(parse_is_end("no"));
    try {
        parse_is_end("maybe");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownIsEnd);
    }
    EXPECT_EQ(parse_distortion_label("Mind reading"), DistortionType::MindReading);
    try {
        parse_distortion_label("Denial");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownDistortionType);
    }
}

TEST(Typed, Scenario)
{
    const auto s0 = parse_scenario(TemplateRole::Trigger0, "Scene: s\nReasons: r", 0);
    EXPECT_EQ(s0.scene, "s");
    EXPECT_FALSE(s0.changes);
    const auto s1 = parse_scenario(TemplateRole::TriggerI, "Scene: s\nChanges: c\nReasons: r", 3);
    EXPECT_EQ(s1.round, 3);
    EXPECT_EQ(s1.changes, "c");
}

TEST(Typed, ThoughtCarriesTypeAfterRoundZero)
{
    const auto d0 = parse_thought(TemplateRole::Devil0, "Type: Labeling\nThoughts: t\nReasons: r", 0);
    EXPECT_EQ(d0.distortion_type, DistortionType::Labeling);
    const auto d1 = parse_thought(TemplateRole::DevilI, "Thoughts: t\nReasons: r", 1, DistortionType::Labeling);
    EXPECT_EQ(d1.distortion_type, DistortionType::Labeling);
    EXPECT_THROW(parse_thought(TemplateRole::Devil0, "Type: Denial\nThoughts: t\nReasons: r", 0), Error);
}

TEST(Typed, GuidanceAndComfort)
{
    const auto g = parse_guidance("SummaryScene: a\nSummaryThoughts: b\nHelp: c\nChanges: d\nReasons: e", 2);
    EXPECT_EQ(g, (Guidance{2, "a", "b", "c", "d", "e"}));
    const auto c = parse_comfort(TemplateRole::SimulatedPatient, "Comforting_words: w\nReasons: r", 1);
    EXPECT_EQ(c.author, ComfortAuthor::Simulated);
    EXPECT_EQ(c.reasons, "r");
    EXPECT_EQ(c.comforting_words, "w");
}

TEST(Typed, ProgressionAndTermination)
{
    const std::string base = "Next_scene: a\nNext_thoughts: b\nIs_end: No\nReasons: r";
    auto p = parse_progression(TemplateRole::StrategistFacilitated, base + "\nTermination: Suicidal ideation", 0);
    EXPECT_EQ(p.safety_stop, SafetyStop::SuicidalIdeation);
    p = parse_progression(TemplateRole::StrategistFacilitated, base + "\nTermination: None", 0);
    EXPECT_FALSE(p.safety_stop);
    p = parse_progression(TemplateRole::StrategistFacilitated, base, 0);
    EXPECT_FALSE(p.safety_stop);
    // Without the protocol the section is not recognised.
    p = parse_progression(TemplateRole::Strategist, base + "\nTermination: Suicidal ideation", 0);
    EXPECT_FALSE(p.safety_stop);
    EXPECT_FALSE(p.is_end);
    EXPECT_THROW(parse_progression(TemplateRole::Strategist, "Next_scene: a\nNext_thoughts: b\nIs_end: perhaps\nReasons: r", 0),
                 Error);
}

TEST(Reversal, ParsesRoundBlocks)
{
    const auto r = parse_reversal_report("Round 1:\nThoughts: a\nReasons: b\n\n**Round 2:**\nThoughts: c\nReasons: d");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[1], (ReversalEntry{2, "c", "d"}));
    EXPECT_THROW(parse_reversal_report("no rounds here"), Error);
}
