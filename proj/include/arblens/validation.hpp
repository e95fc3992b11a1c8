#pragma once

// Scores detections against simulator ground truth. Items are compared by
// their trade-id sets: a sequence by its legs, a competition winner by its
// legs, an exit by the loser's first leg followed by the exit trades.

#include "arblens/detector.hpp"
#include "arblens/simulator.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace arblens {

struct KindScore {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;

    /// Absent when nothing was detected.
    [[nodiscard]] std::optional<double> precision() const;
    /// Absent when nothing was planted.
    [[nodiscard]] std::optional<double> recall() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

using TradeSet = std::vector<std::int64_t>;

/// Detected items of each scored kind, keyed by label kind name.
[[nodiscard]] std::map<std::string, std::set<TradeSet>> detected_items(const DetectionResult& detections);
/// Planted items of each scored kind, keyed the same way.
[[nodiscard]] std::map<std::string, std::set<TradeSet>> planted_items(const std::vector<GroundTruthLabel>& labels);

struct ValidationReport {
    std::map<std::string, KindScore> kinds;
    /// confusion[detected kind][label kind of the same trade set, or "UNLABELLED"]
    std::map<std::string, std::map<std::string, std::size_t>> confusion;
    /// Detected sequences touching a trade labelled as a decoy.
    std::size_t decoy_hits = 0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws Errc::Consistency when both digests are non-empty and differ.
[[nodiscard]] ValidationReport validate_detections(const LabelLog& labels, const DetectionFile& detections);
[[nodiscard]] ValidationReport validate_detections(const std::vector<GroundTruthLabel>& labels,
                                                   const DetectionResult& detections);

void write_validation_table(std::ostream& out, const ValidationReport& report);

}  // namespace arblens
