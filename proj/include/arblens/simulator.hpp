#pragma once

// Seeded scenario runner. A passive market maker quotes every pair around a
// static fair value; noise takers trade against it; planted bots run
// triangular cycles, indirect conversions and competing conversions with
// loss-mitigating exits. Every planted fill is recorded in a sidecar label log.

#include "arblens/engine.hpp"
#include "arblens/ingest.hpp"
#include "arblens/universe.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace arblens {

/// Normal(mean, stdev) truncated to [min, max], rounded to whole milliseconds.
struct LatencyModel {
    double mean = 21;
    double stdev = 14;
    double min = 1;
    double max = 100;

    [[nodiscard]] TimestampMs sample(std::mt19937_64& rng) const;
};

/// Planted profitability: values come in pairs mean +/- d with d uniform in
/// [0, spread], so every even-sized batch has the exact mean.
struct BpsModel {
    Decimal mean = Decimal(12);
    Decimal spread = Decimal(8);
};

/// Size of the first leg in quote-currency value (fair value units).
struct SizeModel {
    Decimal min_value = Decimal(100);
    Decimal max_value = Decimal(5000);
    /// 0: sizes independent of planted bps; 1: sizes ranked by planted bps.
    double bps_correlation = 0;
};

enum class AgentKind { Noise, Triangular, Indirect, Competing, Decoy };
[[nodiscard]] std::string_view agent_kind_name(AgentKind k);

struct AgentSpec {
    AgentKind kind = AgentKind::Noise;
    std::string id;
    std::size_t count = 0;  // episodes; trades for noise
    LatencyModel latency;
    BpsModel bps;
    SizeModel size;
    std::vector<std::string> base_coins;  // restricts the first coin; empty = any
    // Competing clusters only.
    std::size_t min_competitors = 2;
    std::size_t max_competitors = 3;
    double full_exit_share = 0.5;
    std::size_t min_exit_coins = 2;
    std::size_t max_exit_coins = 4;
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    TimestampMs duration_ms = 3'600'000;
    Universe universe;
    std::map<std::string, Decimal> fair_values;  // per coin, common unit
    FeeModel fees;
    TimestampMs snapshot_cadence_ms = 60'000;
    Decimal mm_half_spread = Decimal::parse("0.005");
    std::vector<AgentSpec> agents;

    /// Either "universe" + "values", or "coins" (a fully listed universe is
    /// generated, values drawn from the seed for coins without a known value).
    [[nodiscard]] static ScenarioSpec from_json(const nlohmann::json& doc);
    [[nodiscard]] static ScenarioSpec load(const std::filesystem::path& path);
    [[nodiscard]] nlohmann::json to_json() const;
    /// Throws Errc::ScenarioConfig.
    void validate() const;
};

/// Fully listed universe over `coins`: the higher-valued coin of each pair is
/// the base, so every price is >= 1.
[[nodiscard]] Universe full_universe(const std::vector<std::string>& coins,
                                     const std::map<std::string, Decimal>& values);

enum class LabelKind { Triangular, Indirect, CompetingWinner, CompetingLoser, FullExit, PartialExit, Noise };
[[nodiscard]] std::string_view label_kind_name(LabelKind k);
[[nodiscard]] std::optional<LabelKind> parse_label_kind(std::string_view s);

struct GroundTruthLabel {
    LabelKind kind = LabelKind::Noise;
    std::int64_t episode = 0;
    std::string agent;
    std::vector<std::int64_t> trade_ids;
    std::optional<Decimal> planted_bps;
    std::optional<Decimal> quantity;  // first-leg quantity of the first coin
    std::vector<TimestampMs> latencies;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static GroundTruthLabel from_json(const nlohmann::json& j);
};

struct ScenarioResult {
    std::vector<SimTrade> trades;
    std::vector<BookSnapshot> snapshots;
    std::vector<GroundTruthLabel> labels;
};

/// Deterministic in `spec`. Throws Errc::ScenarioConfig when the roster
/// cannot be realized on the universe.
[[nodiscard]] ScenarioResult run_scenario(const ScenarioSpec& spec);

/// 64-bit FNV-1a over the canonical trade CSV, hex encoded.
[[nodiscard]] std::string trades_digest(const std::vector<Trade>& trades, const Universe& universe);
[[nodiscard]] std::string trades_digest(const TradeStream& stream);
[[nodiscard]] std::string fnv1a_hex(std::string_view bytes);

struct ScenarioFiles {
    std::filesystem::path trades;
    std::filesystem::path books;
    std::filesystem::path labels;
    std::filesystem::path universe;
};
/// Writes trades.csv, books.csv, labels.jsonl and universe.json into `dir`.
ScenarioFiles write_scenario(const ScenarioSpec& spec, const ScenarioResult& result, const std::filesystem::path& dir);

struct LabelLog {
    std::string trades_digest;
    std::vector<GroundTruthLabel> labels;
};
[[nodiscard]] LabelLog load_labels(const std::filesystem::path& path);

}  // namespace arblens
