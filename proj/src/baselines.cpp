#include "mind/baselines.hpp"

#include "mind/agents.hpp"
#include "mind/error.hpp"
#include "mind/text.hpp"

namespace mind {

std::string_view to_string(Character c)
{
    switch (c) {
    case Character::LittleGirl: return "LittleGirl";
    case Character::LittleBoy: return "LittleBoy";
    case Character::Woman: return "Woman";
    case Character::Man: return "Man";
    case Character::MirrorSelf: return "MirrorSelf";
    }
    return "";
}

Character parse_character(std::string_view label)
{
    const auto key = text::alpha_lower(label);
    for (auto c : {Character::LittleGirl, Character::LittleBoy, Character::Woman, Character::Man,
                   Character::MirrorSelf}) {
        if (key == text::alpha_lower(to_string(c))) {
            return c;
        }
    }
    throw Error(ErrorCode::InvalidInput, "unknown character '" + std::string(label) + "'");
}

std::string_view character_phrase(Character c)
{
    switch (c) {
    case Character::LittleGirl: return "little girl";
    case Character::LittleBoy: return "little boy";
    case Character::Woman: return "woman";
    case Character::Man: return "man";
    case Character::MirrorSelf: return "mirror image of yourself";
    }
    return "little girl";
}

std::string_view to_string(EmpathyPhase p)
{
    switch (p) {
    case EmpathyPhase::Comforting: return "Comforting";
    case EmpathyPhase::RoleReversed: return "RoleReversed";
    case EmpathyPhase::Completed: return "Completed";
    }
    return "";
}

EmpathySession create_empathy_session(Concern concerns, Character character)
{
    return EmpathySession{std::move(concerns), character, EmpathyPhase::Comforting, {}, {}, std::nullopt, {}};
}

bool CessationDetector::operator()(std::string_view behavior) const
{
    const auto lower = text::to_lower(behavior);
    for (const auto& k : keywords) {
        if (text::contains(lower, text::to_lower(k))) {
            return true;
        }
    }
    return false;
}

std::string render_for_character(const TemplateRegistry& templates, TemplateRole role, const Bindings& bindings,
                                 Character character)
{
    const auto& tmpl = templates.get(role);
    if (character == Character::LittleGirl) {
        return render_prompt(tmpl, bindings);
    }
    // Bound values are left alone; only template text carries the phrase.
    const std::string from = "little girl";
    const std::string to(character_phrase(character));
    std::string body;
    std::size_t pos = 0;
    for (;;) {
        const auto hit = tmpl.body.find(from, pos);
        if (hit == std::string::npos) {
            body.append(tmpl.body, pos, std::string::npos);
            break;
        }
        body.append(tmpl.body, pos, hit - pos);
        body += to;
        pos = hit + from.size();
    }
    return render_prompt(PromptTemplate::make(role, std::move(body), tmpl.id), bindings);
}

namespace {

std::string insert_before_format(std::string prompt, const std::string& block)
{
    static const std::string marker = "Please provide your answer in the following format";
    const auto pos = prompt.find(marker);
    if (pos == std::string::npos) {
        return prompt + "\n\n" + block + "\n";
    }
    return prompt.substr(0, pos) + block + "\n\n" + prompt.substr(pos);
}

} // namespace

std::string empathy_patient_step(EmpathySession& session, const std::string& comfort, Backend& backend,
                                 const TemplateRegistry& templates, const CessationDetector& detector)
{
    if (session.phase != EmpathyPhase::Comforting) {
        throw Error(ErrorCode::PhaseMismatch, "empathy session is " + std::string(to_string(session.phase)));
    }
    if (text::trim(comfort).empty()) {
        throw Error(ErrorCode::InvalidInput, "comforting words must not be empty");
    }
    const Bindings bindings{{"concerns", session.concerns.text()},
                            {"memory_behavior", render_memory(session.memory_behavior)}};
    auto prompt = render_for_character(templates, TemplateRole::BaselinePatient, bindings, session.character);
    prompt = insert_before_format(std::move(prompt), "The comforter says: " + comfort);

    auto out = ask_with_retry(backend, ChatRequest{std::nullopt, prompt, std::nullopt, "baseline_patient"},
                              [](const std::string& raw) {
                                  return parse_sections(TemplateRole::BaselinePatient, raw).at("Behavior");
                              });
    session.memory_comforting.push_back(comfort);
    session.memory_behavior.push_back(out.value);
    session.raw_outputs.emplace_back("baseline_patient", out.raw);
    if (detector(out.value) || static_cast<int>(session.memory_comforting.size()) >= kEmpathyRoundCap) {
        session.phase = EmpathyPhase::RoleReversed;
    }
    return out.value;
}

const std::vector<ReversalEntry>& empathy_role_reverse(EmpathySession& session, Backend& backend,
                                                       const TemplateRegistry& templates)
{
    if (session.phase != EmpathyPhase::RoleReversed || session.memory_comforting.empty()) {
        throw Error(ErrorCode::PreconditionViolation, "role reversal needs at least one finished comforting round");
    }
    const Bindings bindings{{"concerns", session.concerns.text()},
                            {"memory_comforting", render_memory(session.memory_comforting)},
                            {"memory_behavior", render_memory(session.memory_behavior)}};
    const auto prompt = render_for_character(templates, TemplateRole::BaselineChangeRole, bindings, session.character);
    const auto expected = session.memory_comforting.size();

    auto out = ask_with_retry(backend, ChatRequest{std::nullopt, prompt, std::nullopt, "change_role"},
                              [&](const std::string& raw) {
                                  auto report = parse_reversal_report(raw);
                                  if (report.size() != expected) {
                                      throw Error(ErrorCode::RoundCountMismatch,
                                                  "report has " + std::to_string(report.size()) + " rounds, expected "
                                                      + std::to_string(expected));
                                  }
                                  return report;
                              });
    session.raw_outputs.emplace_back("change_role", out.raw);
    session.reversal_report = std::move(out.value);
    session.phase = EmpathyPhase::Completed;
    return *session.reversal_report;
}

std::string empathy_simulated_comfort(const EmpathySession& session, Backend& backend,
                                      const TemplateRegistry& templates)
{
    const std::string behavior = session.memory_behavior.empty()
                                     ? "crouched in a corner, crying, with chaotic thoughts and low mood"
                                     : session.memory_behavior.back();
    const Bindings bindings{{"concerns", session.concerns.text()},
                            {"behavior", behavior},
                            {"memory_comforting", render_memory(session.memory_comforting)}};
    const auto prompt = render_for_character(templates, TemplateRole::BaselineUser, bindings, session.character);
    auto out = ask_with_retry(backend, ChatRequest{std::nullopt, prompt, std::nullopt, "baseline_user"},
                              [](const std::string& raw) {
                                  return parse_sections(TemplateRole::BaselineUser, raw).at("Comforting_words");
                              });
    return out.value;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Speaker s)
{
    return s == Speaker::User ? "User" : "Bot";
}

const char* const kChatbotPersona =
    "You are a warm and patient virtual therapist trained in cognitive behavioral therapy. "
    "Listen to the client, notice any cognitive distortions in what they say, offer comfort, "
    "and gently help them examine and restructure those thoughts. Keep each reply under 200 words.";

namespace {

std::string render_history(const std::vector<ChatTurn>& history, std::string_view user_name,
                           std::string_view bot_name)
{
    std::string out;
    for (const auto& turn : history) {
        out += std::string(turn.speaker == Speaker::User ? user_name : bot_name) + ": " + turn.text + "\n";
    }
    return out;
}

} // namespace

std::string chatbot_respond(ChatbotSession& session, const std::string& user_text, Backend& backend,
                            const std::string& persona)
{
    if (!session.history.empty() && session.history.back().speaker != Speaker::Bot) {
        throw Error(ErrorCode::PreconditionViolation, "the user already spoke; waiting for the bot");
    }
    if (text::trim(user_text).empty()) {
        throw Error(ErrorCode::InvalidInput, "user text must not be empty");
    }
    std::string prompt;
    if (!session.history.empty()) {
        prompt = "Conversation so far:\n" + render_history(session.history, "Client", "Therapist") + "\n";
    }
    prompt += "Client: " + user_text + "\nTherapist:";
    auto reply = backend.complete(ChatRequest{persona, prompt, std::nullopt, "chatbot"});
    session.history.push_back({Speaker::User, user_text});
    session.history.push_back({Speaker::Bot, reply.text});
    return reply.text;
}

std::string chatbot_simulated_user(const ChatbotSession& session, const Concern& concern, Backend& backend)
{
    if (session.history.empty()) {
        return concern.text();
    }
    const auto prompt = "You are a client talking to a therapist about this concern: " + concern.text()
                        + "\n\nConversation so far:\n" + render_history(session.history, "You", "Therapist")
                        + "\nWrite your next message to the therapist. Reply with the message only.";
    auto reply = backend.complete(ChatRequest{std::nullopt, prompt, std::nullopt, "chatbot_user"});
    return text::trim(reply.text);
}

// ---------------------------------------------------------------------------

namespace {

TranscriptHeader baseline_header(const std::string& id, Theme theme, const Concern& concern, Paradigm paradigm,
                                 std::string created_at, std::string template_set, std::string model)
{
    TranscriptHeader h;
    h.session_id = id;
    h.theme = std::string(to_string(theme));
    h.concern = concern.text();
    h.paradigm = paradigm;
    h.created_at = std::move(created_at);
    h.template_set = std::move(template_set);
    h.backend_model = std::move(model);
    return h;
}

} // namespace

BaselineRun run_empathy(const std::string& session_id, Theme theme, Concern concern, Character character,
                        Backend& backend, const TemplateRegistry& templates, const std::vector<std::string>& comforts,
                        std::string created_at)
{
    BaselineRun run;
    run.header = baseline_header(session_id, theme, concern, Paradigm::Empathy, std::move(created_at),
                                 templates.set_id(), backend.model_name());
    run.header.max_rounds = kEmpathyRoundCap;
    run.header.extra = Json{{"character", to_string(character)}};

    auto session = create_empathy_session(std::move(concern), character);
    std::size_t next = 0;
    while (session.phase == EmpathyPhase::Comforting) {
        std::string comfort;
        if (comforts.empty()) {
            comfort = empathy_simulated_comfort(session, backend, templates);
        } else if (next < comforts.size()) {
            comfort = comforts[next++];
        } else {
            break;  // scripted participant ran out of lines
        }
        const auto before = session.raw_outputs.size();
        const auto behavior = empathy_patient_step(session, comfort, backend, templates);
        Json raw = Json::object();
        for (auto i = before; i < session.raw_outputs.size(); ++i) {
            raw[session.raw_outputs[i].first] = session.raw_outputs[i].second;
        }
        run.round_lines.push_back(Json{{"kind", "round"},
                                       {"round", static_cast<int>(session.memory_comforting.size()) - 1},
                                       {"comforting_words", comfort},
                                       {"behavior", behavior},
                                       {"raw_outputs", raw}});
    }
    if (session.phase == EmpathyPhase::Comforting && !session.memory_comforting.empty()) {
        session.phase = EmpathyPhase::RoleReversed;
    }
    Json report = nullptr;
    if (session.phase == EmpathyPhase::RoleReversed) {
        report = Json::array();
        for (const auto& e : empathy_role_reverse(session, backend, templates)) {
            report.push_back(Json{{"round", e.round}, {"thoughts", e.thoughts}, {"reasons", e.reasons}});
        }
    }
    run.header.extra["reversal_report"] = report;
    run.footer = TranscriptFooter{std::string(to_string(session.phase)),
                                  static_cast<int>(run.round_lines.size()), false};
    return run;
}

BaselineRun run_chatbot(const std::string& session_id, Theme theme, Concern concern, int turns, Backend& backend,
                        const std::vector<std::string>& user_lines, std::string created_at)
{
    if (turns < 1) {
        throw Error(ErrorCode::InvalidOptions, "turns must be >= 1");
    }
    BaselineRun run;
    run.header = baseline_header(session_id, theme, concern, Paradigm::Chatbot, std::move(created_at), "persona",
                                 backend.model_name());
    run.header.max_rounds = turns;
    run.header.extra = Json{{"persona", kChatbotPersona}};

    ChatbotSession session;
    for (int i = 0; i < turns; ++i) {
        std::string user;
        if (user_lines.empty()) {
            user = chatbot_simulated_user(session, concern, backend);
        } else if (static_cast<std::size_t>(i) < user_lines.size()) {
            user = user_lines[static_cast<std::size_t>(i)];
        } else {
            break;
        }
        const auto bot = chatbot_respond(session, user, backend);
        run.round_lines.push_back(Json{{"kind", "round"}, {"round", i}, {"user", user}, {"bot", bot}});
    }
    run.footer = TranscriptFooter{"Completed", static_cast<int>(run.round_lines.size()), false};
    return run;
}

} // namespace mind
