#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mind/backend.hpp"
#include "mind/sections.hpp"
#include "mind/templates.hpp"
#include "mind/transcript.hpp"
#include "mind/types.hpp"

namespace mind {

// ---------------------------------------------------------------------------
// Empathy training: comfort an avatar, then relive the comfort as the avatar.
// ---------------------------------------------------------------------------

enum class Character { LittleGirl, LittleBoy, Woman, Man, MirrorSelf };
std::string_view to_string(Character c);
Character parse_character(std::string_view label);
/// The phrase substituted for "little girl" in the baseline templates.
std::string_view character_phrase(Character c);

enum class EmpathyPhase { Comforting, RoleReversed, Completed };
std::string_view to_string(EmpathyPhase p);

inline constexpr int kEmpathyRoundCap = 10;

struct EmpathySession {
    Concern concerns;
    Character character = Character::LittleGirl;
    EmpathyPhase phase = EmpathyPhase::Comforting;
    std::vector<std::string> memory_behavior;
    std::vector<std::string> memory_comforting;
    std::optional<std::vector<ReversalEntry>> reversal_report;
    /// Raw backend replies, in call order, tagged by agent.
    std::vector<std::pair<std::string, std::string>> raw_outputs;
};

EmpathySession create_empathy_session(Concern concerns, Character character = Character::LittleGirl);

/// Decides whether a behavior description means the avatar stopped crying.
struct CessationDetector {
    std::vector<std::string> keywords{"stops crying",    "stopped crying",   "no longer crying",
                                      "ceases crying",   "ceased crying",    "has stopped crying",
                                      "stop crying",     "tears have dried", "crying has stopped"};

    bool operator()(std::string_view behavior) const;
};

/// Renders the template with the character phrase swapped in.
std::string render_for_character(const TemplateRegistry& templates, TemplateRole role, const Bindings& bindings,
                                 Character character);

/// One comforting round. The avatar's prompt carries the comforter's words
/// ahead of its reply format. Returns the parsed behavior.
std::string empathy_patient_step(EmpathySession& session, const std::string& comfort, Backend& backend,
                                 const TemplateRegistry& templates, const CessationDetector& detector = {});

/// The role-reversal report; one entry per comforting round.
const std::vector<ReversalEntry>& empathy_role_reverse(EmpathySession& session, Backend& backend,
                                                       const TemplateRegistry& templates);

/// Comfort produced by the backend playing the participant.
std::string empathy_simulated_comfort(const EmpathySession& session, Backend& backend,
                                      const TemplateRegistry& templates);

// ---------------------------------------------------------------------------
// Chat-bot: a single therapist agent.
// ---------------------------------------------------------------------------

enum class Speaker { User, Bot };
std::string_view to_string(Speaker s);

struct ChatTurn {
    Speaker speaker = Speaker::User;
    std::string text;

    bool operator==(const ChatTurn&) const = default;
};

struct ChatbotSession {
    std::vector<ChatTurn> history;
};

/// Default therapist persona. The baseline's original prompt is not
/// published, so this one is ours.
extern const char* const kChatbotPersona;

/// Appends the user turn and the bot reply (verbatim).
std::string chatbot_respond(ChatbotSession& session, const std::string& user_text, Backend& backend,
                            const std::string& persona = kChatbotPersona);

/// Next user message when the backend plays the client.
std::string chatbot_simulated_user(const ChatbotSession& session, const Concern& concern, Backend& backend);

// ---------------------------------------------------------------------------
// Whole runs, for simulations.
// ---------------------------------------------------------------------------

struct BaselineRun {
    TranscriptHeader header;
    std::vector<Json> round_lines;
    TranscriptFooter footer;
};

/// `comforts` empty means the backend plays the participant.
BaselineRun run_empathy(const std::string& session_id, Theme theme, Concern concern, Character character,
                        Backend& backend, const TemplateRegistry& templates, const std::vector<std::string>& comforts,
                        std::string created_at);

/// `user_lines` empty means the backend plays the client; the first user
/// message is then the concern itself.
BaselineRun run_chatbot(const std::string& session_id, Theme theme, Concern concern, int turns, Backend& backend,
                        const std::vector<std::string>& user_lines, std::string created_at);

} // namespace mind
