#pragma once

// Replays order-book snapshots and reports every moment a triangular cycle
// over the current tops yields a positive net gain at its capacity.

#include "arblens/core.hpp"
#include "arblens/ingest.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <ostream>
#include <vector>

namespace arblens {

struct OpenCycle {
    TimestampMs date = 0;
    std::vector<std::string> coins;  // base first, closing on the base
    Decimal capacity;
    GainBreakdown gain;
    Decimal gain_bps;  // gain relative to the capacity

    [[nodiscard]] nlohmann::json to_json() const;
};

struct ScanReport {
    std::size_t snapshots = 0;
    std::size_t evaluations = 0;
    /// Evaluations skipped for a missing BNB rate or an empty top level.
    std::size_t unpriced = 0;
    std::vector<OpenCycle> open;
    std::map<CycleBucket, std::size_t> open_by_bucket;  // every bucket present

    [[nodiscard]] nlohmann::json summary_json() const;
};

/// BNB rates come from the mid price of each coin's BNB pair in the current
/// tops. Fees are taken from `fees` at each snapshot date.
[[nodiscard]] ScanReport scan_books(const Universe& universe, const BookStream& books, const FeeSchedule& fees);

/// A summary line, then one line per open cycle.
void write_scan(std::ostream& out, const ScanReport& report);

}  // namespace arblens
