#include <gtest/gtest.h>

#include "mind/error.hpp"
#include "mind/text.hpp"
#include "mind/types.hpp"
#include "support.hpp"

using namespace mind;

TEST(Themes, SevenCanonicalNamesRoundTrip)
{
    ASSERT_EQ(all_themes().size(), 7u);
    for (auto t : all_themes()) {
        EXPECT_EQ(parse_theme(to_string(t)), t);
        EXPECT_EQ(parse_theme(text::to_lower(to_string(t))), t);
        EXPECT_FALSE(topic_label(t).empty());
    }
    EXPECT_THROW(parse_theme("Weather"), Error);
    EXPECT_THROW(parse_theme(""), Error);
}

TEST(DistortionTypes, ExactAndFuzzyMatching)
{
    ASSERT_EQ(all_distortion_types().size(), 10u);
    for (auto t : all_distortion_types()) {
        EXPECT_EQ(match_distortion_type(to_string(t)), t);
        EXPECT_EQ(match_distortion_type(display_name(t)), t);
        EXPECT_EQ(parse_distortion_type_exact(to_string(t)), t);
    }
    EXPECT_EQ(match_distortion_type("**Fortune telling.**"), DistortionType::FortuneTelling);
    EXPECT_EQ(match_distortion_type("should statements"), DistortionType::ShouldStatements);
    EXPECT_EQ(match_distortion_type("All-or-nothing thinking"), DistortionType::AllOrNothing);
    EXPECT_EQ(match_distortion_type("Labelling"), DistortionType::Labeling);
    EXPECT_EQ(match_distortion_type("Catastrophizing"), DistortionType::Magnification);
    EXPECT_EQ(match_distortion_type("Pers"), DistortionType::Personalization);
    EXPECT_FALSE(match_distortion_type("Denial"));
    EXPECT_FALSE(match_distortion_type(""));
    EXPECT_FALSE(match_distortion_type("Me"));  // too short to disambiguate
}

TEST(SafetyStops, Matching)
{
    EXPECT_EQ(match_safety_stop("Dialogue Stagnation"), SafetyStop::DialogueStagnation);
    EXPECT_EQ(match_safety_stop("suicidal ideation detected"), SafetyStop::SuicidalIdeation);
    EXPECT_EQ(match_safety_stop("Intense emotion"), SafetyStop::IntenseEmotion);
    EXPECT_EQ(match_safety_stop("Worsening bias"), SafetyStop::WorseningBias);
    EXPECT_FALSE(match_safety_stop("None"));
    EXPECT_FALSE(match_safety_stop("N/A"));
    EXPECT_FALSE(match_safety_stop("something else"));
}

TEST(Ablations, ParseRoundTrip)
{
    for (auto a : {Ablation::None, Ablation::NoMemory, Ablation::NoStrategist, Ablation::NoGuide}) {
        EXPECT_EQ(parse_ablation(to_string(a)), a);
    }
    EXPECT_THROW(parse_ablation("NoDevil"), Error);
}

TEST(Concern, RejectsBlank)
{
    EXPECT_THROW(Concern(""), Error);
    EXPECT_THROW(Concern(" \n\t"), Error);
    EXPECT_EQ(Concern("worried").text(), "worried");
}

TEST(Personality, ValidationAndDescription)
{
    PersonalityProfile p;
    EXPECT_NO_THROW(p.validate());
    p.neuroticism = 1.2;
    EXPECT_THROW(p.validate(), Error);
    p.neuroticism = 0.9;
    p.openness = 0.1;
    const auto d = p.describe();
    EXPECT_NE(d.find("high"), std::string::npos);
    EXPECT_NE(d.find("low"), std::string::npos);
    EXPECT_EQ(trait_level(0.0), "low");
    EXPECT_EQ(trait_level(0.32), "low");
    EXPECT_EQ(trait_level(0.33), "medium");
    EXPECT_EQ(trait_level(0.65), "medium");
    EXPECT_EQ(trait_level(0.66), "high");
    EXPECT_EQ(trait_level(1.0), "high");
}

TEST(Json, SessionStateRoundTrip)
{
    auto backend = test::mind_script({.rounds = 3, .end_at = 2});
    auto s = test::new_session();
    LlmAgentSuite agents(*backend, TemplateRegistry::builtin());
    ScriptedComfort comfort(test::comfort_lines(3));
    advance_until_done(s, agents, comfort);
    ASSERT_EQ(s.rounds.size(), 3u);

    const Json j = s;
    EXPECT_EQ(session_from_json(j), s);
    EXPECT_EQ(session_from_json(Json::parse(j.dump())), s);
    EXPECT_EQ(j.at("phase"), "Completed");
    EXPECT_EQ(j.at("status"), "CompletedGoal");
    EXPECT_TRUE(j.at("rounds").at(0).contains("raw_outputs"));
}

TEST(Text, Helpers)
{
    EXPECT_EQ(text::trim("  a b \n"), "a b");
    EXPECT_EQ(text::word_count("one two  three\nfour"), 4u);
    EXPECT_EQ(text::word_count(""), 0u);
    EXPECT_TRUE(text::iequals("Yes", "yEs"));
    EXPECT_EQ(text::split_lines("a\r\nb\n").size(), 2u);
    EXPECT_EQ(text::alnum_lower("Is_End 2!"), "isend2");
}

TEST(Errors, ParseErrorClassification)
{
    for (auto code : {ErrorCode::MissingSection, ErrorCode::UnknownIsEnd, ErrorCode::UnknownDistortionType,
                      ErrorCode::RoundCountMismatch}) {
        EXPECT_TRUE(Error(code, "x").is_parse_error());
    }
    for (auto code : {ErrorCode::ProviderError, ErrorCode::Timeout, ErrorCode::ConfigError, ErrorCode::PhaseMismatch}) {
        EXPECT_FALSE(Error(code, "x").is_parse_error());
    }
    const auto e = Error(ErrorCode::MissingSection, "Scene").with_role("trigger");
    EXPECT_EQ(e.role(), "trigger");
    EXPECT_EQ(e.code(), ErrorCode::MissingSection);
}
