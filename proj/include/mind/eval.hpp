#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "mind/session.hpp"
#include "mind/types.hpp"

namespace mind {

using Rational = boost::rational<long long>;

/// Decimal text rounded half away from zero, e.g. (-0.645, 2) -> "-0.65".
std::string format_decimal(const Rational& value, int places = 2);
double to_double(const Rational& value);

// ---------------------------------------------------------------------------
// PANAS
// ---------------------------------------------------------------------------

const std::array<std::string_view, 10>& panas_positive_items();
const std::array<std::string_view, 10>& panas_negative_items();
bool is_panas_item(std::string_view item);
bool is_positive_item(std::string_view item);

/// "EmoLLM", "CACTUS", "MIND" and "Control" are recognised in any case;
/// anything else is kept verbatim as an "other" system.
std::string canonical_system(std::string_view label);

struct PanasRecord {
    std::string client_id;
    std::string system;
    std::map<std::string, int> pre;
    std::map<std::string, int> post;

    /// Throws MissingItem, InvalidScore or InvalidInput (unknown item).
    void validate() const;
};

struct PanasDelta {
    std::map<std::string, int> per_item;
    Rational pos_mean_delta;
    Rational neg_mean_delta;
};

PanasDelta panas_delta(const PanasRecord& record);

enum class Aggregation { MeanOfClientMeans, PooledItemMean };
std::string_view to_string(Aggregation a);

struct Fluctuation {
    Rational positive;
    Rational negative;
    int clients = 0;
};

/// Per-system summary. `systems` restricts and orders the report; a listed
/// system without records raises EmptyGroup, as does an empty input.
std::map<std::string, Fluctuation> fluctuation_summary(const std::vector<PanasRecord>& records, Aggregation mode,
                                                       const std::vector<std::string>& systems = {});

/// Long format, one row per (client, item): client_id,system,item,pre,post.
std::vector<PanasRecord> parse_panas_csv(std::string_view content);
std::vector<PanasRecord> read_panas_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Failure rate
// ---------------------------------------------------------------------------

struct FailureRate {
    long long failures = 0;
    long long total = 0;

    Rational value() const { return Rational(failures, total); }
};

FailureRate failure_rate(const std::vector<SessionOutcome>& outcomes);
FailureRate failure_rate(const std::vector<bool>& failed);

// ---------------------------------------------------------------------------
// Rubric ratings
// ---------------------------------------------------------------------------

enum class DimensionSet { Content, SimulatedPatient };
/// IM, CO, EN, ER, SA, IN.
const std::array<std::string_view, 6>& content_dimensions();
/// DS, CF, EE, PD, Acc.
const std::array<std::string_view, 5>& sp_dimensions();

struct RubricScore {
    std::string rater_id;
    std::string target_kind;
    std::string target;
    std::map<std::string, Rational> scores;

    /// Throws InvalidScore or InvalidInput. Returns the dimension set used.
    DimensionSet validate() const;
};

/// target -> dimension -> mean. Only scores whose target_kind equals
/// `target_kind` are used (all of them when it is empty).
using RubricTable = std::map<std::string, std::map<std::string, Rational>>;
RubricTable rubric_aggregate(const std::vector<RubricScore>& scores, const std::string& target_kind = {});

/// Long format: rater_id,target_kind,target,dimension,score.
std::vector<RubricScore> parse_rubric_csv(std::string_view content);
std::vector<RubricScore> read_rubric_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Outcomes from stored transcripts
// ---------------------------------------------------------------------------

struct OutcomeCell {
    std::string paradigm;
    Ablation ablation = Ablation::None;
    bool facilitation = false;

    auto operator<=>(const OutcomeCell&) const = default;
};

/// Reads every *.jsonl transcript with a footer under `dir`.
std::map<OutcomeCell, std::vector<SessionOutcome>> outcomes_from_transcripts(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string panas_delta_table(const std::vector<PanasRecord>& records);
/// Both aggregation modes side by side, with the caveat line.
std::string fluctuation_table(const std::vector<PanasRecord>& records);
std::string rubric_table(const RubricTable& table);
std::string failure_table(const std::map<OutcomeCell, std::vector<SessionOutcome>>& cells);

extern const char* const kAggregationCaveat;

} // namespace mind
