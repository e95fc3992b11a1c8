#include "arblens/analytics.hpp"

#include "arblens/error.hpp"
#include "arblens/simulator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace arblens {

std::string utc_date(TimestampMs t) {
    using namespace std::chrono;
    const auto day = floor<days>(sys_time<milliseconds>(milliseconds(t)));
    const year_month_day ymd(day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

namespace {

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
nlohmann::json opt(const std::optional<Decimal>& v) {
    return v ? nlohmann::json(v->to_string()) : nlohmann::json(nullptr);
}

}  // namespace

double DailyCounts::triangular_share() const { return ratio(3 * triangular, trades); }
double DailyCounts::indirect_share() const { return ratio(2 * indirect, trades); }
double SummaryReport::triangular_share() const { return ratio(3 * triangular, trades); }
double SummaryReport::indirect_share() const { return ratio(2 * indirect, trades); }

nlohmann::json SummaryReport::to_json() const {
    auto days = nlohmann::json::array();
    for (const auto& [date, d] : daily) {
        days.push_back({{"date", date},
                        {"trades", d.trades},
                        {"triangular", d.triangular},
                        {"indirect", d.indirect},
                        {"triangular_share", d.triangular_share()},
                        {"indirect_share", d.indirect_share()}});
    }
    auto rows = nlohmann::json::array();
    for (const auto& [bucket, row] : census) {
        rows.push_back({{"bucket", cycle_bucket_name(bucket)},
                        {"listed_cycles", row.listed_cycles},
                        {"detected", row.detected}});
    }
    return {{"trades", trades},
            {"triangular", triangular},
            {"triangular_share", triangular_share()},
            {"indirect", indirect},
            {"indirect_share", indirect_share()},
            {"clusters", clusters},
            {"daily", days},
            {"cycle_census", rows}};
}

SummaryReport summarize(const DetectionResult& detections, const TradeStream& stream,
                        const std::optional<std::string>& expected_digest) {
    if (expected_digest && *expected_digest != trades_digest(stream)) {
        throw Error(Errc::Consistency, "detections were produced from a different trade log");
    }
    SummaryReport r;
    r.trades = stream.size();
    r.clusters = detections.clusters.size();
    for (const auto& t : stream.trades()) ++r.daily[utc_date(t.date)].trades;

    const auto& u = stream.universe();
    const auto census = enumerate_cycles(u, 3);
    for (auto b : kCycleBuckets) r.census[b].listed_cycles = census.counts.at(b);

    for (const auto& s : detections.sequences) {
        const auto pos = stream.position_of(s.legs.front());
        for (auto id : s.legs) {
            if (!stream.position_of(id)) {
                throw Error(Errc::Consistency, "detection refers to unknown trade " + std::to_string(id));
            }
        }
        DailyCounts& day = r.daily[utc_date(stream[*pos].date)];
        if (s.kind == SequenceKind::Triangular) {
            ++r.triangular;
            ++day.triangular;
            const Coin* base = u.coin(s.base_coin());
            ++r.census[base ? bucket_of(*base) : CycleBucket::Other].detected;
        } else {
            ++r.indirect;
            ++day.indirect;
        }
    }
    return r;
}

Decimal sequence_latency(const DetectedSequence& s) {
    if (s.latencies.empty()) return Decimal();
    Decimal total;
    for (auto l : s.latencies) total += Decimal(l);
    return Decimal::div(total, Decimal(static_cast<std::int64_t>(s.latencies.size())), Rounding::HalfEven);
}

void LatencyAccumulator::add(Decimal latency_ms) {
    ++n_;
    sum_ += latency_ms;
    sum_sq_ += latency_ms * latency_ms;
    ++values_[latency_ms];
}

void LatencyAccumulator::merge(const LatencyAccumulator& o) {
    n_ += o.n_;
    sum_ += o.sum_;
    sum_sq_ += o.sum_sq_;
    for (const auto& [v, c] : o.values_) values_[v] += c;
}

std::map<std::int64_t, std::size_t> LatencyAccumulator::histogram() const {
    std::map<std::int64_t, std::size_t> out;
    for (const auto& [v, c] : values_) out[static_cast<std::int64_t>(v.floor_to(Decimal(1)).raw() / Decimal(1).raw())] += c;
    return out;
}

std::optional<double> LatencyAccumulator::mean() const {
    if (n_ == 0) return std::nullopt;
    return Decimal::div(sum_, Decimal(static_cast<std::int64_t>(n_)), Rounding::HalfEven).to_double();
}

std::optional<double> LatencyAccumulator::stdev() const {
    if (n_ < 2) return std::nullopt;
    const Decimal n(static_cast<std::int64_t>(n_));
    // Exact sums keep this independent of input order.
    const Decimal centered = sum_sq_ - Decimal::div(sum_ * sum_, n, Rounding::HalfEven);
    const double var = Decimal::div(centered, n - Decimal(1), Rounding::HalfEven).to_double();
    return std::sqrt(std::max(0.0, var));
}

std::optional<double> LatencyAccumulator::share_at_most(TimestampMs ms) const {
    if (n_ == 0) return std::nullopt;
    std::size_t within = 0;
    for (auto it = values_.begin(); it != values_.end() && it->first <= Decimal(ms); ++it) within += it->second;
    return ratio(within, n_);
}

namespace {

nlohmann::json latency_json(const LatencyAccumulator& a) {
    auto hist = nlohmann::json::array();
    for (const auto& [bin, c] : a.histogram()) hist.push_back({bin, c});
    return {{"count", a.count()},
            {"mean_ms", opt(a.mean())},
            {"stdev_ms", opt(a.stdev())},
            {"share_at_most_30ms", opt(a.share_at_most(30))},
            {"histogram", hist}};
}

}  // namespace

nlohmann::json LatencyStats::to_json() const {
    return {{"triangular", latency_json(triangular)}, {"indirect", latency_json(indirect)}};
}

LatencyStats latency_stats(const std::vector<DetectedSequence>& sequences) {
    LatencyStats s;
    for (const auto& seq : sequences) {
        if (seq.latencies.empty()) continue;
        (seq.kind == SequenceKind::Triangular ? s.triangular : s.indirect).add(sequence_latency(seq));
    }
    return s;
}

void ReturnAccumulator::add(const ReturnSample& s) {
    ++n_;
    if (s.bps.is_positive()) ++profitable_;
    sum_bps_ += s.bps;
    sum_q_ += s.quantity;
    sum_q_bps_ += Decimal::mul(s.quantity, s.bps, Rounding::HalfEven);
}

void ReturnAccumulator::merge(const ReturnAccumulator& o) {
    n_ += o.n_;
    profitable_ += o.profitable_;
    sum_bps_ += o.sum_bps_;
    sum_q_ += o.sum_q_;
    sum_q_bps_ += o.sum_q_bps_;
}

std::optional<Decimal> ReturnAccumulator::equal_weighted_bps() const {
    if (n_ == 0) return std::nullopt;
    return Decimal::div(sum_bps_, Decimal(static_cast<std::int64_t>(n_)), Rounding::HalfEven);
}

std::optional<Decimal> ReturnAccumulator::return_on_capital_bps() const {
    if (sum_q_.is_zero()) return std::nullopt;
    return Decimal::div(sum_q_bps_, sum_q_, Rounding::HalfEven);
}

std::optional<double> ReturnAccumulator::share_profitable() const {
    if (n_ == 0) return std::nullopt;
    return ratio(profitable_, n_);
}

namespace {

nlohmann::json returns_json(const ReturnAccumulator& a) {
    return {{"count", a.count()},
            {"equal_weighted_bps", opt(a.equal_weighted_bps())},
            {"return_on_capital_bps", opt(a.return_on_capital_bps())},
            {"share_profitable", opt(a.share_profitable())}};
}

}  // namespace

nlohmann::json LossMitigation::to_json() const {
    return {{"losers", losers},
            {"full_exits", full_exits},
            {"partial_exits", partial_exits},
            {"full_exit_share", ratio(full_exits, full_exits + partial_exits)},
            {"full_exit_return", returns_json(full_loss)},
            {"partial_exit_return", returns_json(partial_loss)},
            {"mean_partial_exit_coins", ratio(exit_coins, partial_exits)},
            {"competing_clusters", competing_clusters},
            {"competing_members", competing_members}};
}

nlohmann::json ReturnStats::to_json() const {
    nlohmann::json by_base = nlohmann::json::object();
    for (const auto& [coin, acc] : indirect_by_base) by_base[coin] = returns_json(acc);
    return {{"triangular", returns_json(triangular)},
            {"indirect", returns_json(indirect)},
            {"indirect_by_base", by_base},
            {"loss_mitigation", loss_mitigation.to_json()}};
}

ReturnStats returns(const DetectionResult& detections, const TradeStream& stream) {
    const auto& u = stream.universe();
    ReturnStats r;
    for (const auto& s : detections.sequences) {
        if (!s.profitability_bps) continue;
        const auto pos = stream.position_of(s.legs.front());
        if (!pos) throw Error(Errc::Consistency, "detection refers to unknown trade " + std::to_string(s.legs.front()));
        const ReturnSample sample{*s.profitability_bps, taker_spent(stream[*pos], u)};
        if (s.kind == SequenceKind::Triangular) {
            r.triangular.add(sample);
        } else {
            r.indirect.add(sample);
            r.indirect_by_base[s.base_coin()].add(sample);
        }
    }
    auto& lm = r.loss_mitigation;
    for (const auto& c : detections.clusters) {
        if (c.members.size() >= 2) {
            ++lm.competing_clusters;
            lm.competing_members += c.members.size();
        }
        for (const auto& m : c.members) {
            if (m.role == MemberRole::Loser) ++lm.losers;
            const auto& e = m.exit;
            if (e.kind == ExitKind::None) continue;
            if (e.kind == ExitKind::FullExit) {
                ++lm.full_exits;
                if (e.realized_bps) lm.full_loss.add({*e.realized_bps, m.q1});
            } else {
                ++lm.partial_exits;
                lm.exit_coins += e.coin_count;
                if (e.realized_bps) lm.partial_loss.add({*e.realized_bps, m.q1});
            }
        }
    }
    return r;
}

nlohmann::json AnalysisReport::to_json() const {
    return {{"summary", summary.to_json()}, {"latency", latency.to_json()}, {"returns", returns.to_json()}};
}

AnalysisReport analyze(const DetectionResult& detections, const TradeStream& stream,
                       const std::optional<std::string>& expected_digest) {
    AnalysisReport a;
    a.summary = summarize(detections, stream, expected_digest);
    a.latency = latency_stats(detections.sequences);
    a.returns = returns(detections, stream);
    return a;
}

namespace {

std::string fmt(const std::optional<double>& v, int places) {
    if (!v) return "n/a";
    std::ostringstream s;
    s << std::fixed << std::setprecision(places) << *v;
    return s.str();
}

std::string fmt(const std::optional<Decimal>& v) {
    return v ? v->round_to(4, Rounding::HalfEven).to_string() : "n/a";
}

std::string pct(double v) { return fmt(std::optional<double>(100.0 * v), 4) + "%"; }

void row(std::ostream& out, const std::string& label, const std::string& value) {
    out << "  " << std::left << std::setw(34) << label << std::right << std::setw(18) << value << "\n";
}

void returns_block(std::ostream& out, const std::string& title, const ReturnAccumulator& a) {
    out << title << "\n";
    row(out, "count", std::to_string(a.count()));
    row(out, "equal-weighted return (bps)", fmt(a.equal_weighted_bps()));
    row(out, "return on capital (bps)", fmt(a.return_on_capital_bps()));
    row(out, "profitable share", a.share_profitable() ? pct(*a.share_profitable()) : "n/a");
}

void latency_block(std::ostream& out, const std::string& title, const LatencyAccumulator& a) {
    out << title << "\n";
    row(out, "count", std::to_string(a.count()));
    row(out, "mean (ms)", fmt(a.mean(), 3));
    row(out, "stdev (ms)", fmt(a.stdev(), 3));
    row(out, "at most 30 ms", a.share_at_most(30) ? pct(*a.share_at_most(30)) : "n/a");
}

}  // namespace

void write_text_report(std::ostream& out, const AnalysisReport& report) {
    const auto& s = report.summary;
    out << "Summary\n";
    row(out, "trades", std::to_string(s.trades));
    row(out, "triangular sequences", std::to_string(s.triangular));
    row(out, "triangular volume share", pct(s.triangular_share()));
    row(out, "indirect sequences", std::to_string(s.indirect));
    row(out, "indirect volume share", pct(s.indirect_share()));
    row(out, "competition clusters", std::to_string(s.clusters));
    out << "Cycle census\n";
    for (const auto& [bucket, c] : s.census) {
        row(out, std::string(cycle_bucket_name(bucket)),
            std::to_string(c.detected) + " / " + std::to_string(c.listed_cycles));
    }
    latency_block(out, "Triangular latency", report.latency.triangular);
    latency_block(out, "Indirect latency", report.latency.indirect);
    returns_block(out, "Triangular returns", report.returns.triangular);
    returns_block(out, "Indirect returns", report.returns.indirect);
    const auto& lm = report.returns.loss_mitigation;
    out << "Loss mitigation\n";
    row(out, "competing clusters", std::to_string(lm.competing_clusters));
    row(out, "losers", std::to_string(lm.losers));
    row(out, "full exits", std::to_string(lm.full_exits));
    row(out, "partial exits", std::to_string(lm.partial_exits));
    row(out, "mean full-exit return (bps)", fmt(lm.full_loss.equal_weighted_bps()));
    row(out, "mean partial-exit return (bps)", fmt(lm.partial_loss.equal_weighted_bps()));
    row(out, "mean coins per partial exit", fmt(std::optional<double>(ratio(lm.exit_coins, lm.partial_exits)), 3));
}

void write_daily_series(std::ostream& out, const SummaryReport& s, const std::string& field) {
    out << "date," << field << "\n";
    for (const auto& [date, d] : s.daily) {
        out << date << ",";
        if (field == "trades") {
            out << d.trades;
        } else if (field == "triangular") {
            out << d.triangular;
        } else if (field == "indirect") {
            out << d.indirect;
        } else if (field == "triangular_share") {
            out << std::setprecision(10) << d.triangular_share();
        } else if (field == "indirect_share") {
            out << std::setprecision(10) << d.indirect_share();
        } else {
            throw Error(Errc::InvalidArgument, "unknown daily field '" + field + "'");
        }
        out << "\n";
    }
}

void write_latency_histogram(std::ostream& out, const LatencyAccumulator& acc) {
    out << "latency_ms,count\n";
    for (const auto& [bin, c] : acc.histogram()) out << bin << "," << c << "\n";
}

}  // namespace arblens
