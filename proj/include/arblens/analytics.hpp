#pragma once

// Aggregate statistics over detections: volume shares, daily series, cycle
// census, latency and return distributions, loss-mitigation breakdown.
// Accumulators are exact and merge associatively, so partial results from
// shards combine to the same totals in any order.

#include "arblens/core.hpp"
#include "arblens/detector.hpp"
#include "arblens/ingest.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace arblens {

/// UTC calendar date of a millisecond epoch timestamp, as YYYY-MM-DD.
[[nodiscard]] std::string utc_date(TimestampMs t);

struct DailyCounts {
    std::size_t trades = 0;
    std::size_t triangular = 0;
    std::size_t indirect = 0;

    /// Share of the day's trades that are legs of detected sequences.
    [[nodiscard]] double triangular_share() const;
    [[nodiscard]] double indirect_share() const;
};

struct CensusRow {
    std::size_t listed_cycles = 0;
    std::size_t detected = 0;
};

struct SummaryReport {
    std::size_t trades = 0;
    std::size_t triangular = 0;
    std::size_t indirect = 0;
    std::size_t clusters = 0;
    std::map<std::string, DailyCounts> daily;  // by UTC date
    std::map<CycleBucket, CensusRow> census;   // every bucket present

    [[nodiscard]] double triangular_share() const;
    [[nodiscard]] double indirect_share() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws Errc::Consistency when `expected_digest` is given and differs from
/// the stream's digest, or when a detection refers to a trade not in `stream`.
[[nodiscard]] SummaryReport summarize(const DetectionResult& detections, const TradeStream& stream,
                                      const std::optional<std::string>& expected_digest = std::nullopt);

/// Latency of one sequence: mean gap between consecutive legs.
[[nodiscard]] Decimal sequence_latency(const DetectedSequence& s);

class LatencyAccumulator {
public:
    void add(Decimal latency_ms);
    void merge(const LatencyAccumulator& other);

    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] std::optional<double> mean() const;
    /// Sample standard deviation; absent below two observations.
    [[nodiscard]] std::optional<double> stdev() const;
    [[nodiscard]] std::optional<double> share_at_most(TimestampMs ms) const;
    /// Counts per whole millisecond (floor).
    [[nodiscard]] std::map<std::int64_t, std::size_t> histogram() const;

private:
    std::size_t n_ = 0;
    Decimal sum_;
    Decimal sum_sq_;
    std::map<Decimal, std::size_t> values_;
};

struct LatencyStats {
    LatencyAccumulator triangular;
    LatencyAccumulator indirect;

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] LatencyStats latency_stats(const std::vector<DetectedSequence>& sequences);

struct ReturnSample {
    Decimal bps;
    Decimal quantity;
};

class ReturnAccumulator {
public:
    void add(const ReturnSample& s);
    void merge(const ReturnAccumulator& other);

    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] std::optional<Decimal> equal_weighted_bps() const;
    /// Quantity-weighted mean; absent when the total quantity is zero.
    [[nodiscard]] std::optional<Decimal> return_on_capital_bps() const;
    [[nodiscard]] std::optional<double> share_profitable() const;

private:
    std::size_t n_ = 0;
    std::size_t profitable_ = 0;
    Decimal sum_bps_;
    Decimal sum_q_;
    Decimal sum_q_bps_;
};

struct LossMitigation {
    std::size_t losers = 0;
    std::size_t full_exits = 0;
    std::size_t partial_exits = 0;
    ReturnAccumulator full_loss;     // realized bps of full exits
    ReturnAccumulator partial_loss;  // realized bps of partial exits
    std::size_t exit_coins = 0;      // summed over partial exits
    std::size_t competing_clusters = 0;  // clusters with two or more members
    std::size_t competing_members = 0;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct ReturnStats {
    ReturnAccumulator triangular;
    ReturnAccumulator indirect;
    std::map<std::string, ReturnAccumulator> indirect_by_base;
    LossMitigation loss_mitigation;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Sequences without profitability are skipped. Quantity is the amount of
/// the first coin spent by leg 1.
[[nodiscard]] ReturnStats returns(const DetectionResult& detections, const TradeStream& stream);

struct AnalysisReport {
    SummaryReport summary;
    LatencyStats latency;
    ReturnStats returns;

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] AnalysisReport analyze(const DetectionResult& detections, const TradeStream& stream,
                                     const std::optional<std::string>& expected_digest = std::nullopt);

/// Aligned-column human summary.
void write_text_report(std::ostream& out, const AnalysisReport& report);
/// date,value rows.
void write_daily_series(std::ostream& out, const SummaryReport& s, const std::string& field);
/// latency_ms,count rows.
void write_latency_histogram(std::ostream& out, const LatencyAccumulator& acc);

}  // namespace arblens
