#pragma once

// Reconstructs triangular sequences, indirect conversions, competing clusters
// and loss-mitigating exits from a public trade log.

#include "arblens/ingest.hpp"
#include "arblens/universe.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace arblens {

struct DetectorConfig {
    TimestampMs delta_t = 50;
    TimestampMs competition_window = 100;
    TimestampMs exit_window = 100;
    std::size_t max_subset_candidates = 20;
    /// Reference prices for the direct pair are taken this long before leg 1.
    TimestampMs reference_offset = 50;
    TimestampMs book_tolerance = kDefaultBookTolerance;
    TimestampMs vwap_window = kDefaultVwapWindow;

    /// Throws Errc::InvalidArgument unless every window is positive.
    void validate() const;
    /// Largest distance in time any detection step looks across.
    [[nodiscard]] TimestampMs reach() const;

    [[nodiscard]] static DetectorConfig from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

/// The conversion the aggressor of `t` performed.
struct TakerDirection {
    std::string from;
    std::string to;
};
[[nodiscard]] TakerDirection taker_direction(const Trade& t, const Universe& universe);
/// Amount of the from-coin the aggressor gave up and of the to-coin it got.
[[nodiscard]] Decimal taker_spent(const Trade& t, const Universe& universe);
[[nodiscard]] Decimal taker_received(const Trade& t, const Universe& universe);

struct QuantityMatch {
    bool match = false;
    Decimal diff;  // received by a minus spent by b, in common-coin units
    Decimal lower;
    Decimal upper;
};

/// Whether `b` spends what `a` received, up to the taker fee on a's proceeds
/// and one quantity increment of b's pair. Throws Errc::InvalidPairing unless
/// a's to-coin is b's from-coin.
[[nodiscard]] QuantityMatch quantities_match(const Trade& a, const Trade& b, const Universe& universe,
                                             Decimal taker_rate);

enum class SequenceKind { Triangular, Indirect };
[[nodiscard]] std::string_view sequence_kind_name(SequenceKind k);

struct DetectedSequence {
    SequenceKind kind = SequenceKind::Indirect;
    std::vector<std::int64_t> legs;  // trade ids
    std::vector<std::string> coins;  // c1, c2, c3
    std::vector<Decimal> quantities;
    std::vector<Decimal> prices;
    std::vector<TimestampMs> latencies;
    std::optional<Decimal> profitability_bps;  // absent when no reference price
    PriceSource reference = PriceSource::Unavailable;

    [[nodiscard]] const std::string& base_coin() const { return coins.front(); }
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Net return in bps of an indirect conversion against the direct ratio at
/// `ref`; absent when the reference is unavailable.
[[nodiscard]] std::optional<Decimal> conversion_profitability(const DetectedSequence& seq, const ReferencePrice& ref,
                                                              Decimal taker_rate, const Universe& universe);

enum class ExitKind { None, FullExit, PartialExit };
[[nodiscard]] std::string_view exit_kind_name(ExitKind k);

struct ExitClassification {
    ExitKind kind = ExitKind::None;
    std::vector<std::int64_t> exits;
    std::size_t coin_count = 0;
    /// True when some exit goes to a coin other than the conversion target.
    bool other_targets = false;
    std::optional<Decimal> realized_bps;
    bool truncated = false;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct PartialExitProblem {
    Decimal q1;
    Decimal p12;
    Decimal p13;
    std::vector<Decimal> q;
    std::vector<Decimal> p;
};

/// Sum over exits of q_j * p13 / (p12 * p_j). Throws Errc::InvalidPrice on a
/// non-positive price.
[[nodiscard]] Decimal partial_exit_loss(const PartialExitProblem& problem);

/// Index sets of `quantities` found by bounded depth-first search whose sum
/// lies in [lo, hi]; the first hit, or nothing. Candidates beyond `limit` are
/// ignored and reported through `truncated`.
[[nodiscard]] std::optional<std::vector<std::size_t>> find_exit_subset(const std::vector<Decimal>& quantities,
                                                                       Decimal lo, Decimal hi, std::size_t limit,
                                                                       bool* truncated = nullptr);

enum class MemberRole { Winner, Loser, Undetermined };
[[nodiscard]] std::string_view member_role_name(MemberRole r);

struct ClusterMember {
    std::vector<std::int64_t> legs;  // one leg for an attempt without a matching second leg
    std::string from;
    Decimal q1;  // c2 obtained by leg 1
    std::optional<Decimal> profitability_bps;
    MemberRole role = MemberRole::Undetermined;
    bool capacity_exhausted = false;
    ExitClassification exit;
};

struct CompetitionCluster {
    std::int64_t id = 0;
    std::string c2;
    std::string c3;
    std::vector<ClusterMember> members;  // by first-leg time

    [[nodiscard]] std::size_t winners() const;
    [[nodiscard]] std::size_t losers() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct DetectionResult {
    std::vector<DetectedSequence> sequences;
    std::vector<CompetitionCluster> clusters;
    std::vector<std::string> diagnostics;
};

class Detector {
public:
    Detector(const TradeStream& trades, const BookStream& books, FeeSchedule fees, DetectorConfig config = {});

    [[nodiscard]] std::vector<DetectedSequence> detect_triangular() const;
    /// Skips trades that belong to a detected triangular sequence.
    [[nodiscard]] std::vector<DetectedSequence> detect_indirect() const;
    /// Full pipeline. `threads` > 1 splits the log at quiet gaps longer than
    /// the config reach; the result does not depend on the thread count.
    [[nodiscard]] DetectionResult run(unsigned threads = 1) const;

    /// True when the trade after `winner_leg2` on its pair fills at another price.
    [[nodiscard]] bool capacity_exhausted(std::int64_t winner_leg2) const;

    [[nodiscard]] const DetectorConfig& config() const { return config_; }

private:
    struct Range {
        std::size_t begin;
        std::size_t end;
    };
    struct Pass;

    [[nodiscard]] DetectionResult run_range(Range r) const;
    [[nodiscard]] std::vector<Range> shards() const;

    const TradeStream* trades_;
    const BookStream* books_;
    FeeSchedule fees_;
    DetectorConfig config_;
};

/// One JSON object per line: a header, then sequences, clusters and diagnostics.
void write_detections(std::ostream& out, const DetectionResult& result, const std::string& trades_digest,
                      const DetectorConfig& config);
[[nodiscard]] std::string detections_jsonl(const DetectionResult& result, const std::string& trades_digest,
                                           const DetectorConfig& config);

struct DetectionFile {
    std::string trades_digest;
    DetectorConfig config;
    DetectionResult result;
};

/// Inverse of write_detections. Throws Errc::Parse naming the offending line.
[[nodiscard]] DetectionFile read_detections(std::istream& in);
[[nodiscard]] DetectionFile load_detections(const std::filesystem::path& path);

}  // namespace arblens
