#include <gtest/gtest.h>

#include "mind/baselines.hpp"
#include "mind/error.hpp"
#include "support.hpp"

using namespace mind;

namespace {

std::string behavior(const std::string& b) { return "Behavior: " + b + "\n\nReasons: r"; }

std::string report(int rounds)
{
    std::vector<ReversalEntry> entries;
    for (int r = 1; r <= rounds; ++r) {
        entries.push_back({r, "felt " + test::n(r), "because " + test::n(r)});
    }
    return format_reversal_report(entries);
}

} // namespace

TEST(Empathy, CharacterPhrases)
{
    EXPECT_EQ(character_phrase(Character::LittleGirl), "little girl");
    EXPECT_EQ(character_phrase(Character::MirrorSelf), "mirror image of yourself");
    for (auto c : {Character::LittleGirl, Character::LittleBoy, Character::Woman, Character::Man,
                   Character::MirrorSelf}) {
        EXPECT_EQ(parse_character(to_string(c)), c);
    }
    EXPECT_THROW(parse_character("Dragon"), Error);

    const auto& reg = TemplateRegistry::builtin();
    const Bindings b{{"concerns", "a little girl's worry"}, {"memory_behavior", ""}};
    const auto girl = render_for_character(reg, TemplateRole::BaselinePatient, b, Character::LittleGirl);
    const auto man = render_for_character(reg, TemplateRole::BaselinePatient, b, Character::Man);
    EXPECT_NE(girl.find("little girl"), std::string::npos);
    // Bound values keep their wording; only the template text changes.
    EXPECT_NE(man.find("a little girl's worry"), std::string::npos);
    EXPECT_EQ(man.find("little girl") , man.find("a little girl's worry") + 2);
    EXPECT_NE(man.find(" man"), std::string::npos);
}

TEST(Empathy, CessationKeywords)
{
    CessationDetector d;
    EXPECT_TRUE(d("She finally STOPS CRYING and smiles."));
    EXPECT_TRUE(d("Her tears have dried."));
    EXPECT_FALSE(d("She is still sobbing."));
    d.keywords = {"smiles"};
    EXPECT_TRUE(d("He smiles"));
    EXPECT_FALSE(d("stops crying"));
}

TEST(Empathy, StepsUntilTheAvatarStopsCrying)
{
    ScriptedBackend backend;
    backend.add_rule({"baseline_patient", "", {}, behavior("still crying"), 2});
    backend.add_rule({"baseline_patient", "", {}, behavior("she stops crying"), 1});
    auto s = create_empathy_session(Concern("exam stress"));
    EXPECT_EQ(empathy_patient_step(s, "it's ok", backend, TemplateRegistry::builtin()), "still crying");
    EXPECT_EQ(s.phase, EmpathyPhase::Comforting);
    EXPECT_THROW(empathy_patient_step(s, "   ", backend, TemplateRegistry::builtin()), Error);
    empathy_patient_step(s, "breathe", backend, TemplateRegistry::builtin());
    empathy_patient_step(s, "you did well", backend, TemplateRegistry::builtin());
    EXPECT_EQ(s.phase, EmpathyPhase::RoleReversed);
    EXPECT_EQ(s.memory_comforting, (std::vector<std::string>{"it's ok", "breathe", "you did well"}));
    EXPECT_EQ(s.memory_behavior.size(), 3u);

    // The comfort is placed ahead of the reply format.
    const auto last = backend.call_log().back().user;
    const auto words = last.find("The comforter says: you did well");
    ASSERT_NE(words, std::string::npos);
    EXPECT_LT(words, last.find("Please provide your answer in the following format"));
    EXPECT_NE(last.find("Round 2: still crying"), std::string::npos);

    EXPECT_THROW(empathy_patient_step(s, "more", backend, TemplateRegistry::builtin()), Error);
}

TEST(Empathy, RoundCapForcesReversal)
{
    ScriptedBackend backend({}, behavior("still crying"));
    auto s = create_empathy_session(Concern("c"));
    for (int i = 0; i < kEmpathyRoundCap; ++i) {
        empathy_patient_step(s, "there there", backend, TemplateRegistry::builtin());
    }
    EXPECT_EQ(s.phase, EmpathyPhase::RoleReversed);
}

TEST(Empathy, ReversalReportMustCoverEveryRound)
{
    ScriptedBackend backend;
    backend.add_rule({"baseline_patient", "", {}, behavior("stops crying"), -1});
    backend.add_rule({"change_role", "", {}, report(2), 1});
    backend.add_rule({"change_role", "", {}, report(1), 1});
    auto s = create_empathy_session(Concern("c"));
    EXPECT_THROW(empathy_role_reverse(s, backend, TemplateRegistry::builtin()), Error);
    empathy_patient_step(s, "hug", backend, TemplateRegistry::builtin());
    const auto& entries = empathy_role_reverse(s, backend, TemplateRegistry::builtin());
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].thoughts, "felt 1");
    EXPECT_EQ(s.phase, EmpathyPhase::Completed);
    // The first reply (two rounds) was re-asked once.
    const auto tags = backend.tag_log();
    EXPECT_EQ(std::count(tags.begin(), tags.end(), "change_role"), 2);

    ScriptedBackend stubborn;
    stubborn.add_rule({"baseline_patient", "", {}, behavior("stops crying"), -1});
    stubborn.add_rule({"change_role", "", {}, report(3), -1});
    auto t = create_empathy_session(Concern("c"));
    empathy_patient_step(t, "hug", stubborn, TemplateRegistry::builtin());
    try {
        empathy_role_reverse(t, stubborn, TemplateRegistry::builtin());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RoundCountMismatch);
    }
}

TEST(Empathy, WholeRunWithTheShippedScripts)
{
    auto backend = ScriptedBackend::load_directory(MIND_DATA_DIR "/scripted/default");
    const auto run = run_empathy("e1", Theme::FamilyIssues, Concern("exams"), Character::Woman, backend,
                                 TemplateRegistry::builtin(), {}, "2000-01-01T00:00:00Z");
    EXPECT_EQ(run.header.paradigm, Paradigm::Empathy);
    EXPECT_EQ(run.round_lines.size(), 3u);
    EXPECT_EQ(run.footer.status, "Completed");
    EXPECT_EQ(run.footer.rounds, 3);
    EXPECT_EQ(run.header.extra.at("character"), "Woman");
    EXPECT_EQ(run.header.extra.at("reversal_report").size(), 3u);
    for (const auto& line : run.round_lines) {
        EXPECT_FALSE(line.at("comforting_words").get<std::string>().empty());
    }
}

TEST(Chatbot, RepliesAreKeptVerbatim)
{
    ScriptedBackend backend;
    backend.add_rule({"chatbot", "", {}, "  Hello there.\n\nHow are you?  ", 1});
    backend.add_rule({"chatbot", "", {}, "Second.", 1});
    ChatbotSession s;
    EXPECT_EQ(chatbot_respond(s, "hi", backend), "  Hello there.\n\nHow are you?  ");
    EXPECT_THROW(chatbot_respond(s, "  ", backend), Error);
    chatbot_respond(s, "I'm worried", backend);
    ASSERT_EQ(s.history.size(), 4u);
    EXPECT_EQ(s.history[0], (ChatTurn{Speaker::User, "hi"}));
    EXPECT_EQ(s.history[1].speaker, Speaker::Bot);
    const auto log = backend.call_log();
    EXPECT_EQ(log[0].system, std::string(kChatbotPersona));
    EXPECT_NE(log[1].user.find("Client: hi"), std::string::npos);
    EXPECT_NE(log[1].user.find("Therapist:   Hello there."), std::string::npos);
}

TEST(Chatbot, WholeRun)
{
    ScriptedBackend backend;
    backend.add_rule({"chatbot", "", {}, "bot", -1});
    backend.add_rule({"chatbot_user", "", {}, "  next question ", -1});
    const auto run = run_chatbot("c1", Theme::InterpersonalIssues, Concern("a breakup"), 3, backend, {}, "t");
    ASSERT_EQ(run.round_lines.size(), 3u);
    EXPECT_EQ(run.header.paradigm, Paradigm::Chatbot);
    // The first message is the concern itself.
    EXPECT_EQ(backend.call_log()[0].tag, "chatbot");
    EXPECT_NE(backend.call_log()[0].user.find("Client: a breakup"), std::string::npos);
    EXPECT_EQ(backend.call_count(), 5u);

    const auto scripted = run_chatbot("c2", Theme::InterpersonalIssues, Concern("x"), 5, backend, {"one", "two"}, "t");
    EXPECT_EQ(scripted.round_lines.size(), 2u);
    EXPECT_THROW(run_chatbot("c3", Theme::InterpersonalIssues, Concern("x"), 0, backend, {}, "t"), Error);
}
