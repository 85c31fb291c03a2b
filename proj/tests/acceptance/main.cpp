// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "mind/agents.hpp"
#include "mind/eval.hpp"
#include "mind/runner.hpp"
#include "mind/sections.hpp"
#include "mind/service.hpp"
#include "mind/transcript.hpp"
#include "support.hpp"

using namespace mind;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what)
{
    if (!ok) {
        throw Failure(what);
    }
}

struct Criterion {
    std::string name;
    double limit_seconds;  // <= 0: no time limit
    std::function<std::string()> body;
};

const std::string kCreated = "2000-01-01T00:00:00Z";

/// Records every backend call and every comfort request in one sequence.
class Recorder : public Backend, public ComfortProvider {
public:
    Recorder(Backend& inner, std::vector<std::string> comforts) : inner_(inner), comforts_(std::move(comforts)) {}

    ChatResponse complete(const ChatRequest& request) override
    {
        order.push_back(request.tag);
        prompts.push_back(request);
        return inner_.complete(request);
    }
    std::string model_name() const override { return inner_.model_name(); }

    std::optional<AgentOutput<Comfort>> comfort(const SessionState& s) override
    {
        order.push_back("comfort");
        return comforts_.comfort(s);
    }

    std::vector<std::string> order;
    std::vector<ChatRequest> prompts;

private:
    Backend& inner_;
    ScriptedComfort comforts_;
};

// ---------------------------------------------------------------------------

std::string protocol_conformance()
{
    auto script = test::mind_script({.end_at = 2});
    Recorder rec(*script, test::comfort_lines(3));
    auto s = test::new_session();
    LlmAgentSuite agents(rec, TemplateRegistry::builtin());
    advance_until_done(s, agents, rec);

    std::vector<std::string> want;
    for (int r = 0; r < 3; ++r) {
        for (const char* tag : {"trigger", "devil", "guide", "comfort", "strategist"}) {
            want.push_back(tag);
        }
    }
    expect(rec.order == want, "call order differs");
    expect(s.memory.memory_scene.size() == 3 && s.memory.memory_thought.size() == 3
               && s.memory.memory_guide.size() == 3 && s.memory.memory_comforting.size() == 3,
           "memory streams are not of length 3");
    for (int r = 0; r < 3; ++r) {
        const auto& rec_r = s.rounds.at(static_cast<std::size_t>(r));
        expect(rec_r.round == r && rec_r.scenario->round == r && rec_r.thought->round == r
                   && rec_r.guidance->round == r && rec_r.comfort->round == r && rec_r.progression->round == r,
               "round indices differ at round " + std::to_string(r));
    }
    return "15 calls in order, 4 memory streams of length 3, rounds 0-2";
}

std::string termination_semantics()
{
    auto run = [](test::ScriptSpec spec, SessionOptions o) {
        auto backend = test::mind_script(spec);
        auto s = test::new_session(o);
        LlmAgentSuite agents(*backend, TemplateRegistry::builtin());
        ScriptedComfort comfort(test::comfort_lines(20));
        advance_until_done(s, agents, comfort);
        return s;
    };
    std::string detail;
    for (int k : {0, 3, 9}) {
        const auto s = run({.end_at = k}, {});
        expect(s.status == SessionStatus::CompletedGoal, "k=" + std::to_string(k) + " did not complete");
        expect(s.rounds.size() == static_cast<std::size_t>(k + 1), "k=" + std::to_string(k) + " wrong round count");
        detail += "k=" + std::to_string(k) + ":" + std::to_string(s.rounds.size()) + " ";
    }
    const auto never = run({}, {});
    expect(never.status == SessionStatus::MaxRoundsReached && never.rounds.size() == 10, "cap not at 10 rounds");
    SessionOptions fac;
    fac.facilitation_enabled = true;
    const auto stopped = run({.stop_at = 2, .stop = "Suicidal ideation"}, fac);
    expect(stopped.status == SessionStatus::SafetyTerminated && stopped.rounds.size() == 3, "safety stop not honoured");
    // The stop wins even when the strategist also says the goal was reached.
    const auto both = run({.end_at = 1, .stop_at = 1}, fac);
    expect(both.status == SessionStatus::SafetyTerminated, "safety stop must take precedence over Is_end");
    return detail + "never:10 MaxRoundsReached, stop@2 SafetyTerminated";
}

std::string ablation_wiring()
{
    const auto& reg = TemplateRegistry::builtin();

    // NoGuide: no guide calls; the patient prompt is the guidance-free template.
    {
        auto script = test::mind_script({.end_at = 2});
        Recorder rec(*script, {});
        SessionOptions o;
        o.ablation = Ablation::NoGuide;
        auto s = test::new_session(o);
        LlmAgentSuite agents(rec, reg);
        SimulatedPatient patient(rec, reg);
        int patient_prompts = 0;
        while (s.status == SessionStatus::Active) {
            advance_to_comfort(s, agents);
            const auto plan = plan_patient(s);
            expect(plan.role == TemplateRole::SimulatedPatient_NoGuide, "NoGuide bound the guided patient template");
            const auto expected = render_plan(reg, plan);
            auto c = patient.comfort(s);
            expect(rec.prompts.back().tag == "patient" && rec.prompts.back().user == expected,
                   "captured patient prompt differs from the guidance-free template");
            ++patient_prompts;
            complete_round(s, agents, *c);
        }
        for (const auto& tag : rec.order) {
            expect(tag != "guide", "NoGuide session called the guide");
        }
        expect(patient_prompts == 3, "expected 3 patient prompts");
    }

    // NoMemory: every captured prompt is its plan rendered with no memory.
    std::size_t captured = 0;
    {
        auto script = test::mind_script();
        Recorder rec(*script, {});
        SessionOptions o;
        o.ablation = Ablation::NoMemory;
        o.max_rounds = 5;
        auto s = test::new_session(o);
        LlmAgentSuite agents(rec, reg);
        ScriptedComfort comfort(test::comfort_lines(10));
        auto check = [&](const PromptPlan& plan) {
            for (const auto& name : expected_placeholders(plan.role)) {
                if (name.rfind("memory_", 0) == 0) {
                    expect(plan.bindings.at(name).empty(), std::string(to_string(plan.role)) + " bound " + name);
                }
            }
            const auto text = render_plan(reg, plan);
            expect(text.find("{memory_") == std::string::npos, "unrendered memory placeholder");
            expect(rec.prompts.back().user == text, "captured prompt differs from its plan");
            ++captured;
        };
        while (s.status == SessionStatus::Active) {
            const auto tp = plan_trigger(s);
            apply_step(s, agents.trigger(s).value);
            check(tp);
            const auto dp = plan_devil(s);
            apply_step(s, agents.devil(s).value);
            check(dp);
            const auto gp = plan_guide(s);
            apply_step(s, agents.guide(s).value);
            check(gp);
            apply_step(s, comfort.comfort(s)->value);
            const auto sp = plan_strategist(s, false);
            expect(sp.role == TemplateRole::Strategist_NoMemory, "NoMemory strategist template not used");
            apply_step(s, agents.strategist(s).value);
            check(sp);
            for (const auto* stream : {&s.memory.memory_scene, &s.memory.memory_thought, &s.memory.memory_guide,
                                       &s.memory.memory_comforting}) {
                expect(stream->empty(), "NoMemory session grew a memory stream");
            }
        }
        for (auto role : {TemplateRole::TriggerI_NoMemory, TemplateRole::Strategist_NoMemory}) {
            for (const auto& name : reg.get(role).placeholders) {
                expect(name.rfind("memory_", 0) != 0, "ablated template still names " + name);
            }
        }
    }

    // NoStrategist: even a strategist script that ends at once is never consulted.
    for (auto theme : all_themes()) {
        auto script = test::mind_script({.end_at = 0});
        SessionOptions o;
        o.ablation = Ablation::NoStrategist;
        auto s = test::new_session(o, theme);
        LlmAgentSuite agents(*script, reg);
        ScriptedComfort comfort(test::comfort_lines(12));
        advance_until_done(s, agents, comfort);
        expect(s.status == SessionStatus::MaxRoundsReached && s.rounds.size() == 10,
               "NoStrategist did not run to the cap");
        for (const auto& tag : script->tag_log()) {
            expect(tag != "strategist", "NoStrategist session called the strategist");
        }
    }
    return "NoGuide 0 guide calls; NoMemory " + std::to_string(captured)
           + " prompts memory-free; NoStrategist 7/7 MaxRoundsReached";
}

std::map<std::string, std::map<std::string, int>> oracle_deltas()
{
    std::ifstream in(MIND_ORACLE_DIR "/panas_deltas.csv");
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::map<std::string, int>> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        out[line.substr(0, a)][line.substr(a + 1, b - a - 1)] = std::stoi(line.substr(b + 1));
    }
    return out;
}

std::string panas_arithmetic()
{
    const auto records = read_panas_csv(MIND_DATA_DIR "/fixtures/panas_clients.csv");
    const auto oracle = oracle_deltas();
    expect(records.size() == 8, "expected 8 clients");
    int cells = 0;
    for (const auto& r : records) {
        const auto d = panas_delta(r);
        expect(d.per_item.size() == 20, r.client_id + " lacks items");
        for (const auto& [item, delta] : d.per_item) {
            expect(oracle.at(r.client_id).at(item) == delta, r.client_id + " " + item + " differs");
            ++cells;
        }
    }
    expect(oracle.at("client5").at("Strong") == 4 && oracle.at("client1").at("Distressed") == 1
               && oracle.at("client7").at("Interested") == -1,
           "oracle spot values");

    // Antisymmetry under pre/post swap.
    auto swapped = records;
    for (auto& r : swapped) {
        std::swap(r.pre, r.post);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto a = panas_delta(records[i]);
        const auto b = panas_delta(swapped[i]);
        expect(a.pos_mean_delta == -b.pos_mean_delta && a.neg_mean_delta == -b.neg_mean_delta, "not antisymmetric");
    }
    for (auto mode : {Aggregation::MeanOfClientMeans, Aggregation::PooledItemMean}) {
        const auto a = fluctuation_summary(records, mode);
        const auto b = fluctuation_summary(swapped, mode);
        for (const auto& [system, f] : a) {
            expect(b.at(system).positive == -f.positive && b.at(system).negative == -f.negative,
                   "summary not antisymmetric for " + system);
        }
    }

    // The headline figures are not reproduced; both modes and the caveat are reported.
    const auto m = fluctuation_summary(records, Aggregation::MeanOfClientMeans, {"MIND"}).at("MIND");
    const auto p = fluctuation_summary(records, Aggregation::PooledItemMean, {"MIND"}).at("MIND");
    const auto table = fluctuation_table(records);
    expect(table.find(kAggregationCaveat) != std::string::npos, "caveat missing from the report");
    expect(table.find(to_string(Aggregation::MeanOfClientMeans)) != std::string::npos
               && table.find(to_string(Aggregation::PooledItemMean)) != std::string::npos,
           "both aggregation modes must be reported");
    return std::to_string(cells) + " delta cells exact; MIND computed " + format_decimal(m.positive) + "/"
           + format_decimal(m.negative) + " (client means), " + format_decimal(p.positive) + "/"
           + format_decimal(p.negative) + " (pooled) vs published 1.46/-0.65: not reproduced, caveat reported";
}

std::string failure_rate_arithmetic()
{
    auto outcomes = [](int failures) {
        std::vector<SessionOutcome> out(70);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i].status = static_cast<int>(i) < failures ? SessionStatus::MaxRoundsReached
                                                           : SessionStatus::CompletedGoal;
        }
        return out;
    };
    const auto six = failure_rate(outcomes(6));
    const auto seven = failure_rate(outcomes(7));
    expect(six.failures == 6 && six.total == 70, "6 failures not counted as 6/70");
    expect(format_decimal(seven.value()) == "0.10", "7/70 does not report 0.10");
    std::map<OutcomeCell, std::vector<SessionOutcome>> cells{{{"Mind", Ablation::None, false}, outcomes(6)}};
    expect(failure_table(cells).find("6/70") != std::string::npos, "table lacks 6/70");
    return "6/70 = " + format_decimal(six.value()) + ", 7/70 = " + format_decimal(seven.value());
}

std::string random_text(std::mt19937& rng)
{
    static const std::vector<std::string> words{"calm", "the", "rain", "{x}", "50%", "a:b", "- item", "*", "Round",
                                                "yes", "naïve", "\"q\"", "...", "#", "no", "tab\tin"};
    std::string out;
    const int lines = 1 + static_cast<int>(rng() % 3);
    for (int l = 0; l < lines; ++l) {
        if (l > 0) {
            out += "\n";
        }
        const int n = 1 + static_cast<int>(rng() % 7);
        for (int i = 0; i < n; ++i) {
            out += (i ? " " : "") + words[rng() % words.size()];
        }
    }
    return out;
}

std::string render_parse_round_trip()
{
    std::mt19937 rng(4242);
    int cases = 0;
    for (int i = 0; i < 80; ++i) {
        for (auto role : all_template_roles()) {
            const auto& schema = section_schema(role);
            if (schema.round_list) {
                std::vector<ReversalEntry> entries;
                const int k = 1 + static_cast<int>(rng() % 10);
                for (int r = 1; r <= k; ++r) {
                    entries.push_back({r, random_text(rng), random_text(rng)});
                }
                expect(parse_reversal_report(format_reversal_report(entries)) == entries,
                       std::string(to_string(role)) + " report did not round-trip");
            } else {
                Sections values;
                for (const auto& l : schema.required) {
                    values[l] = random_text(rng);
                }
                for (const auto& l : schema.optional) {
                    if (rng() % 2) {
                        values[l] = random_text(rng);
                    }
                }
                expect(parse_sections(role, format_sections(role, values)) == values,
                       std::string(to_string(role)) + " did not round-trip");
            }
            ++cases;
        }
    }
    expect(cases >= 1000, "too few cases");
    return std::to_string(cases) + " cases over " + std::to_string(all_template_roles().size()) + " templates";
}

std::string replay_determinism()
{
    auto script = test::mind_script({.end_at = 4});
    ScriptedComfort comfort(test::comfort_lines(5));
    const auto recorded = run_mind_session(test::new_session(), *script, TemplateRegistry::builtin(), comfort,
                                           kCreated);
    expect(recorded.state.rounds.size() == 5, "expected a 5-round session");
    const auto original = recorded.transcript();
    const auto transcript = parse_transcript(original);

    auto replay_backend = record_replay(transcript);
    ScriptedComfort recorded_comfort(recorded_comforts(transcript.round_records()));
    auto again = run_mind_session(restore_session(Transcript{transcript.header, {}, std::nullopt}), *replay_backend,
                                  TemplateRegistry::builtin(), recorded_comfort, transcript.header.created_at);
    expect(again.transcript() == original, "rerun transcript differs");
    return std::to_string(original.size()) + " bytes identical over 5 rounds";
}

std::string rubric_ingestion()
{
    const auto table = rubric_aggregate(read_rubric_csv(MIND_DATA_DIR "/fixtures/client_ratings.csv"), "system");
    const std::vector<std::pair<std::string, Rational>> want{{"IM", Rational(5)},    {"CO", Rational(9, 2)},
                                                             {"EN", Rational(9, 2)}, {"ER", Rational(5)},
                                                             {"SA", Rational(5)},    {"IN", Rational(9, 2)}};
    std::string row;
    for (const auto& [dim, value] : want) {
        expect(table.at("MIND").at(dim) == value, "MIND " + dim + " differs");
        row += (row.empty() ? "" : "/") + format_decimal(value, 1);
    }
    return "MIND row " + row;
}

std::string service_contract()
{
    test::TempDir data("acceptance-service");
    auto factory = [](const std::string&) -> std::shared_ptr<Backend> {
        auto b = std::make_shared<ScriptedBackend>();
        b->add_rule({"trigger", "", {}, test::trigger_reply(1), -1});
        b->add_rule({"devil", "", {}, "Type: Labeling\n\n" + test::devil_reply(1), -1});
        b->add_rule({"guide", "", {}, test::guide_reply(1), -1});
        b->add_rule({"strategist", "", {}, test::strategist_reply(1, false), -1});
        return b;
    };
    const ServiceConfig config{data.path(), std::nullopt, 64, kCreated, {}};
    auto post_comfort = [](httplib::Client& c, const std::string& id, const Json& body) {
        auto res = c.Post("/sessions/" + id + "/comfort", body.dump(), "application/json");
        expect(static_cast<bool>(res), "no reply to comfort");
        return res->status;
    };
    auto events = [](httplib::Client& c, const std::string& id, long long from) {
        auto res = c.Get("/sessions/" + id + "/events?format=json&from=" + std::to_string(from));
        expect(res && res->status == 200, "events request failed");
        return Json::parse(res->body);
    };

    std::vector<std::string> ids;
    Json before_restart;
    {
        Service service(config, TemplateRegistry::builtin(), factory);
        httplib::Client c("127.0.0.1", service.start());
        for (int i = 0; i < 3; ++i) {
            auto res = c.Post("/sessions",
                              Json{{"theme", "WorkIssues"}, {"concern", "c"}, {"options", {{"max_rounds", 3}}}}.dump(),
                              "application/json");
            expect(res && res->status == 201, "session not created");
            ids.push_back(Json::parse(res->body).at("id"));
        }
        service.wait_idle();
        expect(post_comfort(c, ids[0], {{"comforting_words", "x"}, {"round", 1}}) == 409, "round mismatch not 409");
        expect(post_comfort(c, ids[0], {{"comforting_words", "first"}}) == 200, "comfort rejected");
        // Same round again: the session has moved on.
        expect(post_comfort(c, ids[0], {{"comforting_words", "again"}, {"round", 0}}) == 409,
               "stale round not 409");
        service.wait_idle();
        expect(post_comfort(c, ids[1], {{"comforting_words", "one"}}) == 200, "comfort rejected");
        service.wait_idle();
        expect(post_comfort(c, ids[1], {{"comforting_words", "two"}}) == 200, "comfort rejected");
        service.wait_idle();
        expect(post_comfort(c, ids[1], {{"comforting_words", "three"}}) == 200, "comfort rejected");
        expect(post_comfort(c, ids[1], {{"comforting_words", "four"}}) == 409, "ended session not 409");

        before_restart = events(c, ids[0], 0);
        const auto full = events(c, ids[1], 0);
        for (std::size_t i = 0; i < full.size(); ++i) {
            expect(full[i].at("sequence") == static_cast<long long>(i), "event log has a gap");
        }
        expect(full.back().at("kind") == "SessionEnded", "ended session lacks SessionEnded");
        for (long long k = 0; k <= static_cast<long long>(full.size()); ++k) {
            const auto tail = events(c, ids[1], k);
            expect(tail.size() == full.size() - static_cast<std::size_t>(k), "resume from k wrong size");
            for (std::size_t i = 0; i < tail.size(); ++i) {
                expect(tail[i] == full[static_cast<std::size_t>(k) + i], "resumed log differs");
            }
        }
        service.stop();
    }
    // Crash mid-write on one transcript.
    {
        std::ofstream out(data / ("sessions/" + ids[2] + ".jsonl"), std::ios::app | std::ios::binary);
        out << R"({"kind":"round","ro)";
    }

    Service service(config, TemplateRegistry::builtin(), factory);
    expect(service.reload() == 3, "not every session reloaded");
    service.wait_idle();
    httplib::Client c("127.0.0.1", service.start());
    // The log seen before the restart is a prefix of the log after it.
    const auto after = events(c, ids[0], 0);
    expect(after.size() >= before_restart.size(), "events lost in restart");
    for (std::size_t i = 0; i < before_restart.size(); ++i) {
        expect(after[i] == before_restart[i], "event changed across restart");
    }
    int steps = 0;
    for (const auto& id : {ids[0], ids[2]}) {
        for (;;) {
            auto s = Json::parse(c.Get("/sessions/" + id)->body);
            if (s.at("status") != "Active") {
                expect(s.at("status") == "MaxRoundsReached", "unexpected end state");
                break;
            }
            expect(s.at("phase") == "AwaitingComfort", "reloaded session not waiting for comfort");
            expect(post_comfort(c, id, {{"comforting_words", "after restart"}}) == 200, "reloaded session stuck");
            service.wait_idle();
            ++steps;
        }
    }
    expect(events(c, ids[1], 0).back().at("kind") == "SessionEnded", "finished session lost its end");
    service.stop();
    return "409 on mismatch, gapless resumable events, 3/3 sessions reloaded and stepped " + std::to_string(steps)
           + " rounds to the end";
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {"protocol-conformance", 1.0, protocol_conformance},
        {"termination-semantics", 1.0, termination_semantics},
        {"ablation-wiring", 0, ablation_wiring},
        {"panas-arithmetic", 1.0, panas_arithmetic},
        {"failure-rate-arithmetic", 0, failure_rate_arithmetic},
        {"render-parse-round-trip", 5.0, render_parse_round_trip},
        {"replay-determinism", 0, replay_determinism},
        {"rubric-ingestion", 0, rubric_ingestion},
        {"service-contract", 0, service_contract},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.body();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (ok && c.limit_seconds > 0 && secs >= c.limit_seconds) {
            ok = false;
            detail += "; too slow";
        }
        std::ostringstream timing;
        timing.setf(std::ios::fixed);
        timing.precision(3);
        timing << secs << "s";
        if (c.limit_seconds > 0) {
            timing << " < " << c.limit_seconds << "s";
        }
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << " [" << timing.str() << "] " << detail << std::endl;
        failed += ok ? 0 : 1;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
