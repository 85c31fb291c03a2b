#include "mind/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

#include <boost/tokenizer.hpp>

#include "mind/error.hpp"
#include "mind/text.hpp"
#include "mind/transcript.hpp"

namespace mind {

std::string format_decimal(const Rational& value, int places)
{
    long long scale = 1;
    for (int i = 0; i < places; ++i) {
        scale *= 10;
    }
    const long long num = value.numerator();
    const long long den = value.denominator();  // always positive
    const bool negative = num < 0;
    const long long mag = negative ? -num : num;
    const long long scaled = (2 * mag * scale + den) / (2 * den);

    std::ostringstream out;
    if (negative && scaled != 0) {
        out << '-';
    }
    out << scaled / scale;
    if (places > 0) {
        out << '.' << std::setw(places) << std::setfill('0') << scaled % scale;
    }
    return out.str();
}

double to_double(const Rational& value)
{
    return boost::rational_cast<double>(value);
}

// ---------------------------------------------------------------------------

const std::array<std::string_view, 10>& panas_positive_items()
{
    static const std::array<std::string_view, 10> items{"Interested", "Excited",  "Strong",     "Enthusiastic",
                                                        "Proud",      "Alert",    "Inspired",   "Determined",
                                                        "Attentive",  "Active"};
    return items;
}

const std::array<std::string_view, 10>& panas_negative_items()
{
    static const std::array<std::string_view, 10> items{"Distressed", "Upset",   "Guilty",  "Scared",  "Hostile",
                                                        "Irritable",  "Ashamed", "Nervous", "Jittery", "Afraid"};
    return items;
}

bool is_positive_item(std::string_view item)
{
    const auto& p = panas_positive_items();
    return std::find(p.begin(), p.end(), item) != p.end();
}

bool is_panas_item(std::string_view item)
{
    const auto& n = panas_negative_items();
    return is_positive_item(item) || std::find(n.begin(), n.end(), item) != n.end();
}

namespace {

/// Canonical capitalisation of an item name, or empty when unknown.
std::string canonical_item(std::string_view label)
{
    const auto key = text::trim(label);
    for (const auto* list : {&panas_positive_items(), &panas_negative_items()}) {
        for (auto item : *list) {
            if (text::iequals(key, item)) {
                return std::string(item);
            }
        }
    }
    return {};
}

} // namespace

std::string canonical_system(std::string_view label)
{
    const auto key = text::trim(label);
    for (const char* known : {"EmoLLM", "CACTUS", "MIND", "Control"}) {
        if (text::iequals(key, known)) {
            return known;
        }
    }
    if (text::iequals(key, "control group")) {
        return "Control";
    }
    return key;
}

void PanasRecord::validate() const
{
    for (const auto* side : {&pre, &post}) {
        for (const auto& [item, score] : *side) {
            if (!is_panas_item(item)) {
                throw Error(ErrorCode::InvalidInput, client_id + ": unknown PANAS item '" + item + "'");
            }
            if (score < 1 || score > 5) {
                throw Error(ErrorCode::InvalidScore,
                            client_id + ": " + item + " score " + std::to_string(score) + " outside 1..5");
            }
        }
        for (const auto* list : {&panas_positive_items(), &panas_negative_items()}) {
            for (auto item : *list) {
                if (!side->count(std::string(item))) {
                    throw Error(ErrorCode::MissingItem, client_id + ": " + std::string(item));
                }
            }
        }
    }
}

PanasDelta panas_delta(const PanasRecord& record)
{
    record.validate();
    PanasDelta d;
    long long pos = 0;
    long long neg = 0;
    for (const auto& [item, before] : record.pre) {
        const int delta = record.post.at(item) - before;
        d.per_item[item] = delta;
        (is_positive_item(item) ? pos : neg) += delta;
    }
    d.pos_mean_delta = Rational(pos, 10);
    d.neg_mean_delta = Rational(neg, 10);
    return d;
}

std::string_view to_string(Aggregation a)
{
    return a == Aggregation::MeanOfClientMeans ? "MeanOfClientMeans" : "PooledItemMean";
}

std::map<std::string, Fluctuation> fluctuation_summary(const std::vector<PanasRecord>& records, Aggregation mode,
                                                       const std::vector<std::string>& systems)
{
    if (records.empty()) {
        throw Error(ErrorCode::EmptyGroup, "no PANAS records");
    }
    std::map<std::string, std::vector<const PanasRecord*>> groups;
    for (const auto& r : records) {
        groups[canonical_system(r.system)].push_back(&r);
    }
    std::vector<std::string> wanted;
    if (systems.empty()) {
        for (const auto& [name, members] : groups) {
            wanted.push_back(name);
        }
    } else {
        for (const auto& s : systems) {
            wanted.push_back(canonical_system(s));
        }
    }

    std::map<std::string, Fluctuation> out;
    for (const auto& system : wanted) {
        auto it = groups.find(system);
        if (it == groups.end() || it->second.empty()) {
            throw Error(ErrorCode::EmptyGroup, "no records for system '" + system + "'");
        }
        const auto& members = it->second;
        Fluctuation f;
        f.clients = static_cast<int>(members.size());
        if (mode == Aggregation::MeanOfClientMeans) {
            Rational pos = 0;
            Rational neg = 0;
            for (const auto* r : members) {
                const auto d = panas_delta(*r);
                pos += d.pos_mean_delta;
                neg += d.neg_mean_delta;
            }
            f.positive = pos / static_cast<long long>(members.size());
            f.negative = neg / static_cast<long long>(members.size());
        } else {
            long long pos_sum = 0;
            long long neg_sum = 0;
            long long pos_n = 0;
            long long neg_n = 0;
            for (const auto* r : members) {
                for (const auto& [item, delta] : panas_delta(*r).per_item) {
                    if (is_positive_item(item)) {
                        pos_sum += delta;
                        ++pos_n;
                    } else {
                        neg_sum += delta;
                        ++neg_n;
                    }
                }
            }
            f.positive = Rational(pos_sum, pos_n);
            f.negative = Rational(neg_sum, neg_n);
        }
        out.emplace(system, f);
    }
    return out;
}

namespace {

using Row = std::vector<std::string>;

/// Comma-separated rows with optional double quotes. Returns (line number,
/// fields) for each non-blank line.
std::vector<std::pair<int, Row>> read_csv_rows(std::string_view content)
{
    using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
    std::vector<std::pair<int, Row>> rows;
    int line_no = 0;
    for (const auto& line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        Row row;
        try {
            Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
            for (const auto& field : tok) {
                row.push_back(text::trim(field));
            }
        } catch (const std::exception& e) {
            throw Error(ErrorCode::DataError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.emplace_back(line_no, std::move(row));
    }
    return rows;
}

void expect_header(const std::vector<std::pair<int, Row>>& rows, const Row& header)
{
    if (rows.empty()) {
        throw Error(ErrorCode::DataError, "empty input");
    }
    Row got;
    for (const auto& f : rows.front().second) {
        got.push_back(text::to_lower(f));
    }
    if (got != header) {
        std::string want;
        for (const auto& h : header) {
            want += (want.empty() ? "" : ",") + h;
        }
        throw Error(ErrorCode::DataError, "line " + std::to_string(rows.front().first) + ": expected header " + want);
    }
}

int parse_int_score(const std::string& field, int line_no)
{
    static const std::regex int_re(R"(-?\d+)");
    if (!std::regex_match(field, int_re)) {
        throw Error(ErrorCode::InvalidScore, "line " + std::to_string(line_no) + ": '" + field + "' is not an integer");
    }
    return std::stoi(field);
}

Rational parse_decimal(const std::string& field, int line_no)
{
    static const std::regex dec_re(R"((\d+)(?:\.(\d+))?)");
    std::smatch m;
    if (!std::regex_match(field, m, dec_re) || m[1].length() > 6 || m[2].length() > 6) {
        throw Error(ErrorCode::InvalidScore, "line " + std::to_string(line_no) + ": '" + field + "' is not a score");
    }
    long long den = 1;
    std::string digits = m[1].str();
    if (m[2].matched) {
        digits += m[2].str();
        for (long i = 0; i < m[2].length(); ++i) {
            den *= 10;
        }
    }
    return Rational(std::stoll(digits), den);
}

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::DataError, "cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

std::vector<PanasRecord> parse_panas_csv(std::string_view content)
{
    const auto rows = read_csv_rows(content);
    expect_header(rows, {"client_id", "system", "item", "pre", "post"});

    std::map<std::pair<std::string, std::string>, PanasRecord> by_client;
    std::vector<std::pair<std::string, std::string>> order;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& [line_no, row] = rows[i];
        const auto where = "line " + std::to_string(line_no);
        if (row.size() != 5) {
            throw Error(ErrorCode::DataError, where + ": expected 5 fields, found " + std::to_string(row.size()));
        }
        const auto item = canonical_item(row[2]);
        if (item.empty()) {
            throw Error(ErrorCode::DataError, where + ": unknown PANAS item '" + row[2] + "'");
        }
        const auto key = std::make_pair(row[0], canonical_system(row[1]));
        auto [it, inserted] = by_client.try_emplace(key);
        if (inserted) {
            it->second.client_id = key.first;
            it->second.system = key.second;
            order.push_back(key);
        }
        auto& rec = it->second;
        if (rec.pre.count(item)) {
            throw Error(ErrorCode::DataError, where + ": duplicate item " + item + " for " + key.first);
        }
        const int pre = parse_int_score(row[3], line_no);
        const int post = parse_int_score(row[4], line_no);
        for (int s : {pre, post}) {
            if (s < 1 || s > 5) {
                throw Error(ErrorCode::InvalidScore, where + ": score " + std::to_string(s) + " outside 1..5");
            }
        }
        rec.pre[item] = pre;
        rec.post[item] = post;
    }
    if (order.empty()) {
        throw Error(ErrorCode::DataError, "no PANAS rows");
    }
    std::vector<PanasRecord> out;
    for (const auto& key : order) {
        auto& rec = by_client.at(key);
        rec.validate();
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<PanasRecord> read_panas_csv(const std::filesystem::path& path)
{
    try {
        return parse_panas_csv(slurp(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

// ---------------------------------------------------------------------------

FailureRate failure_rate(const std::vector<SessionOutcome>& outcomes)
{
    if (outcomes.empty()) {
        throw Error(ErrorCode::EmptyInput, "no outcomes");
    }
    FailureRate r;
    r.total = static_cast<long long>(outcomes.size());
    for (const auto& o : outcomes) {
        r.failures += classify_failure(o) ? 1 : 0;
    }
    return r;
}

FailureRate failure_rate(const std::vector<bool>& failed)
{
    if (failed.empty()) {
        throw Error(ErrorCode::EmptyInput, "no outcomes");
    }
    return FailureRate{static_cast<long long>(std::count(failed.begin(), failed.end(), true)),
                       static_cast<long long>(failed.size())};
}

// ---------------------------------------------------------------------------

const std::array<std::string_view, 6>& content_dimensions()
{
    static const std::array<std::string_view, 6> dims{"IM", "CO", "EN", "ER", "SA", "IN"};
    return dims;
}

const std::array<std::string_view, 5>& sp_dimensions()
{
    static const std::array<std::string_view, 5> dims{"DS", "CF", "EE", "PD", "Acc"};
    return dims;
}

namespace {

template <std::size_t N>
bool keys_equal(const std::map<std::string, Rational>& scores, const std::array<std::string_view, N>& dims)
{
    if (scores.size() != N) {
        return false;
    }
    for (auto d : dims) {
        if (!scores.count(std::string(d))) {
            return false;
        }
    }
    return true;
}

/// Dimension label in its canonical spelling, or empty.
std::string canonical_dimension(std::string_view label)
{
    for (auto d : content_dimensions()) {
        if (text::iequals(label, d)) {
            return std::string(d);
        }
    }
    for (auto d : sp_dimensions()) {
        if (text::iequals(label, d)) {
            return std::string(d);
        }
    }
    return {};
}

} // namespace

DimensionSet RubricScore::validate() const
{
    for (const auto& [dim, value] : scores) {
        if (value < 1 || value > 5) {
            throw Error(ErrorCode::InvalidScore, rater_id + "/" + target + ": " + dim + " outside [1, 5]");
        }
        if ((value * 2).denominator() != 1) {
            throw Error(ErrorCode::InvalidScore, rater_id + "/" + target + ": " + dim + " is not a whole or half point");
        }
    }
    if (keys_equal(scores, content_dimensions())) {
        return DimensionSet::Content;
    }
    if (keys_equal(scores, sp_dimensions())) {
        return DimensionSet::SimulatedPatient;
    }
    throw Error(ErrorCode::InvalidInput,
                rater_id + "/" + target + ": dimensions must be exactly IM,CO,EN,ER,SA,IN or DS,CF,EE,PD,Acc");
}

RubricTable rubric_aggregate(const std::vector<RubricScore>& scores, const std::string& target_kind)
{
    std::map<std::string, std::vector<const RubricScore*>> groups;
    for (const auto& s : scores) {
        if (target_kind.empty() || text::iequals(s.target_kind, target_kind)) {
            groups[s.target].push_back(&s);
        }
    }
    if (groups.empty()) {
        throw Error(ErrorCode::EmptyInput, "no rubric scores");
    }
    RubricTable table;
    for (const auto& [target, members] : groups) {
        std::optional<DimensionSet> set;
        std::map<std::string, Rational> sums;
        for (const auto* s : members) {
            const auto this_set = s->validate();
            if (set && *set != this_set) {
                throw Error(ErrorCode::MixedDimensionSets, "target '" + target + "' mixes dimension sets");
            }
            set = this_set;
            for (const auto& [dim, value] : s->scores) {
                sums[dim] += value;
            }
        }
        for (auto& [dim, sum] : sums) {
            table[target][dim] = sum / static_cast<long long>(members.size());
        }
    }
    return table;
}

std::vector<RubricScore> parse_rubric_csv(std::string_view content)
{
    const auto rows = read_csv_rows(content);
    expect_header(rows, {"rater_id", "target_kind", "target", "dimension", "score"});

    std::map<std::tuple<std::string, std::string, std::string>, RubricScore> by_key;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& [line_no, row] = rows[i];
        const auto where = "line " + std::to_string(line_no);
        if (row.size() != 5) {
            throw Error(ErrorCode::DataError, where + ": expected 5 fields, found " + std::to_string(row.size()));
        }
        const auto dim = canonical_dimension(row[3]);
        if (dim.empty()) {
            throw Error(ErrorCode::DataError, where + ": unknown dimension '" + row[3] + "'");
        }
        auto key = std::make_tuple(row[0], row[1], row[2]);
        auto [it, inserted] = by_key.try_emplace(key);
        if (inserted) {
            it->second.rater_id = row[0];
            it->second.target_kind = row[1];
            it->second.target = row[2];
            order.push_back(key);
        }
        if (it->second.scores.count(dim)) {
            throw Error(ErrorCode::DataError, where + ": duplicate dimension " + dim);
        }
        const auto value = parse_decimal(row[4], line_no);
        if (value < 1 || value > 5 || (value * 2).denominator() != 1) {
            throw Error(ErrorCode::InvalidScore, where + ": score " + row[4] + " must be a whole or half point in [1, 5]");
        }
        it->second.scores[dim] = value;
    }
    if (order.empty()) {
        throw Error(ErrorCode::DataError, "no rubric rows");
    }
    std::vector<RubricScore> out;
    for (const auto& key : order) {
        auto& s = by_key.at(key);
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RubricScore> read_rubric_csv(const std::filesystem::path& path)
{
    try {
        return parse_rubric_csv(slurp(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

// ---------------------------------------------------------------------------

std::map<OutcomeCell, std::vector<SessionOutcome>> outcomes_from_transcripts(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::DataError, "transcript directory not found: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::map<OutcomeCell, std::vector<SessionOutcome>> cells;
    for (const auto& f : files) {
        const auto t = read_transcript(f);
        if (!t.footer || t.header.paradigm != Paradigm::Mind) {
            continue;
        }
        SessionOutcome o;
        o.session_id = t.header.session_id;
        o.rounds = t.footer->rounds;
        o.transcript = f.string();
        const auto& st = t.footer->status;
        if (st == "CompletedGoal") {
            o.status = SessionStatus::CompletedGoal;
        } else if (st == "SafetyTerminated") {
            o.status = SessionStatus::SafetyTerminated;
        } else if (st == "MaxRoundsReached") {
            o.status = SessionStatus::MaxRoundsReached;
        } else {
            throw Error(ErrorCode::DataError, f.string() + ": unknown status '" + st + "'");
        }
        OutcomeCell cell{std::string(to_string(t.header.paradigm)), t.header.ablation, t.header.facilitation_enabled};
        cells[cell].push_back(std::move(o));
    }
    if (cells.empty()) {
        throw Error(ErrorCode::EmptyInput, "no finished MIND transcripts under " + dir.string());
    }
    return cells;
}

// ---------------------------------------------------------------------------

const char* const kAggregationCaveat =
    "note: the aggregation behind the published average-fluctuation figures is unspecified; both modes are "
    "shown and neither is claimed to reproduce those figures.";

namespace {

std::string pad(const std::string& s, std::size_t width, bool right = false)
{
    if (s.size() >= width) {
        return s;
    }
    const std::string fill(width - s.size(), ' ');
    return right ? fill + s : s + fill;
}

std::string render_table(const std::vector<Row>& rows)
{
    std::vector<std::size_t> widths;
    for (const auto& r : rows) {
        widths.resize(std::max(widths.size(), r.size()), 0);
        for (std::size_t i = 0; i < r.size(); ++i) {
            widths[i] = std::max(widths[i], r[i].size());
        }
    }
    // Columns whose body cells all look numeric are right-aligned.
    std::vector<bool> numeric(widths.size(), true);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        for (std::size_t i = 0; i < rows[k].size(); ++i) {
            const auto& c = rows[k][i];
            if (!c.empty() && !std::isdigit(static_cast<unsigned char>(c[0])) && c[0] != '-' && c[0] != '+') {
                numeric[i] = false;
            }
        }
    }
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i > 0) {
                line += "  ";
            }
            line += pad(r[i], widths[i], i > 0 && numeric[i]);
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        out += line + "\n";
    }
    return out;
}

std::string signed_int(int v)
{
    return std::to_string(v);
}

} // namespace

std::string panas_delta_table(const std::vector<PanasRecord>& records)
{
    std::vector<Row> rows;
    Row head{"item"};
    std::vector<PanasDelta> deltas;
    for (const auto& r : records) {
        head.push_back(r.client_id + " (" + canonical_system(r.system) + ")");
        deltas.push_back(panas_delta(r));
    }
    rows.push_back(head);
    for (const auto* list : {&panas_positive_items(), &panas_negative_items()}) {
        for (auto item : *list) {
            Row row{std::string(item)};
            for (const auto& d : deltas) {
                row.push_back(signed_int(d.per_item.at(std::string(item))));
            }
            rows.push_back(row);
        }
    }
    Row pos{"positive mean"};
    Row neg{"negative mean"};
    for (const auto& d : deltas) {
        pos.push_back(format_decimal(d.pos_mean_delta));
        neg.push_back(format_decimal(d.neg_mean_delta));
    }
    rows.push_back(pos);
    rows.push_back(neg);
    return render_table(rows);
}

std::string fluctuation_table(const std::vector<PanasRecord>& records)
{
    const auto a = fluctuation_summary(records, Aggregation::MeanOfClientMeans);
    const auto b = fluctuation_summary(records, Aggregation::PooledItemMean);
    std::vector<Row> rows{{"system", "clients", "MeanOfClientMeans +", "MeanOfClientMeans -", "PooledItemMean +",
                           "PooledItemMean -"}};
    for (const auto& [system, f] : a) {
        const auto& g = b.at(system);
        rows.push_back({system, std::to_string(f.clients), format_decimal(f.positive), format_decimal(f.negative),
                        format_decimal(g.positive), format_decimal(g.negative)});
    }
    return render_table(rows) + kAggregationCaveat + "\n";
}

std::string rubric_table(const RubricTable& table)
{
    std::set<std::string> dims;
    for (const auto& [target, means] : table) {
        for (const auto& [dim, value] : means) {
            dims.insert(dim);
        }
    }
    // Keep the published dimension order rather than alphabetical.
    std::vector<std::string> ordered;
    for (auto d : content_dimensions()) {
        if (dims.count(std::string(d))) {
            ordered.emplace_back(d);
        }
    }
    for (auto d : sp_dimensions()) {
        if (dims.count(std::string(d))) {
            ordered.emplace_back(d);
        }
    }
    std::vector<Row> rows;
    Row head{"target"};
    head.insert(head.end(), ordered.begin(), ordered.end());
    rows.push_back(head);
    for (const auto& [target, means] : table) {
        Row row{target};
        for (const auto& d : ordered) {
            auto it = means.find(d);
            row.push_back(it == means.end() ? "-" : format_decimal(it->second));
        }
        rows.push_back(row);
    }
    return render_table(rows);
}

std::string failure_table(const std::map<OutcomeCell, std::vector<SessionOutcome>>& cells)
{
    std::vector<Row> rows{{"paradigm", "ablation", "facilitation", "failures", "n", "rate"}};
    for (const auto& [cell, outcomes] : cells) {
        const auto r = failure_rate(outcomes);
        rows.push_back({cell.paradigm, std::string(to_string(cell.ablation)), cell.facilitation ? "on" : "off",
                        std::to_string(r.failures), std::to_string(r.total),
                        std::to_string(r.failures) + "/" + std::to_string(r.total) + " = "
                            + format_decimal(r.value())});
    }
    return render_table(rows);
}

} // namespace mind
