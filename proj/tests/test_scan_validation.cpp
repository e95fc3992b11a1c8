#include "arblens/error.hpp"
#include "arblens/scan.hpp"
#include "arblens/validation.hpp"
#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace arblens;
using namespace arblens::literals;

namespace {

PairListing listing(const std::string& base, const std::string& quote) {
    PairListing l;
    l.symbol = base + quote;
    l.base = {base, default_anchor_class(base)};
    l.quote = {quote, default_anchor_class(quote)};
    l.qty_increment = "0.001"_d;
    l.min_qty = "0.001"_d;
    l.max_qty = 1'000'000_d;
    l.price_increment = "0.00000001"_d;
    l.min_price = "0.00000001"_d;
    l.max_price = 1'000'000_d;
    return l;
}

BookSnapshot snap(const Universe& u, const std::string& sym, TimestampMs t, const char* bid, const char* ask,
                  const char* qty = "50") {
    BookSnapshot s;
    s.pair = *u.index_of(sym);
    s.levels.timestamp = t;
    s.levels.bids = {{Decimal::parse(bid), Decimal::parse(qty)}};
    s.levels.asks = {{Decimal::parse(ask), Decimal::parse(qty)}};
    return s;
}

Universe bnb_market() { return Universe({listing("ETH", "BTC"), listing("BNB", "BTC"), listing("BNB", "ETH")}); }

}  // namespace

TEST(Scan, ConsistentBooksHaveNoOpenCycle) {
    const auto u = bnb_market();
    // BNB = 0.001 BTC = 1/30 ETH, ETH = 0.03 BTC, with a spread on every pair.
    const BookStream books({snap(u, "ETHBTC", 100, "0.0299", "0.0301"), snap(u, "BNBBTC", 100, "0.000999", "0.001001"),
                            snap(u, "BNBETH", 100, "0.0333", "0.0334")},
                           {});
    const auto r = scan_books(u, books, FeeSchedule::constant(FeeModel{}));
    EXPECT_EQ(r.snapshots, 3u);
    EXPECT_EQ(r.evaluations, 6u);
    EXPECT_TRUE(r.open.empty());
}

TEST(Scan, MispricedCycleMatchesReplayOracle) {
    const auto u = bnb_market();
    const BookStream books({snap(u, "ETHBTC", 100, "0.03", "0.0301"), snap(u, "BNBBTC", 100, "0.000999", "0.001"),
                            snap(u, "BNBETH", 100, "0.04", "0.0401")},
                           {});
    const FeeModel fee;
    const auto r = scan_books(u, books, FeeSchedule::constant(fee));
    ASSERT_EQ(r.open.size(), 3u) << "one mispriced triangle, seen from each of its coins";
    EXPECT_EQ(r.open_by_bucket.at(CycleBucket::Btc) + r.open_by_bucket.at(CycleBucket::Bnb) +
                  r.open_by_bucket.at(CycleBucket::Alts),
              3u);

    // Independent replay on the same tops and the same mid-price BNB rates.
    Market m(u);
    for (const auto& s : books.snapshots()) m.set_top(u.listing(s.pair).symbol, s.levels.top());
    BnbRates rates;
    rates.set_listed_price("BTC", "0.0009995"_d, true);
    rates.set_listed_price("ETH", "0.04005"_d, true);
    for (const auto& o : r.open) {
        Cycle c;
        for (std::size_t i = 0; i + 1 < o.coins.size(); ++i) c.legs.push_back(u.require_direction(o.coins[i], o.coins[i + 1]));
        const Decimal step = "0.00000001"_d;
        const Decimal brute = oracle::brute_force_capacity(c.legs, m, step);
        EXPECT_LE(brute, o.capacity + Decimal::from_raw(1'000));
        EXPECT_LT(o.capacity - brute, step + Decimal::from_raw(1'000)) << o.to_json().dump();
        const double want = oracle::to_double(oracle::replay_cycle_gain(o.capacity, c, m, rates, fee.bnb_flat));
        EXPECT_NEAR(o.gain.gain.to_double(), want, 1e-9 * std::max(1.0, std::abs(want)));
        EXPECT_TRUE(o.gain.gain.is_positive());
    }
    std::ostringstream out;
    write_scan(out, r);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(Scan, MissingBnbRateIsCountedNotFatal) {
    const auto u = Universe({listing("ETH", "BTC"), listing("LTC", "BTC"), listing("LTC", "ETH")});
    const BookStream books({snap(u, "ETHBTC", 5, "0.03", "0.0301"), snap(u, "LTCBTC", 5, "0.000999", "0.001"),
                            snap(u, "LTCETH", 5, "0.04", "0.0401")},
                           {});
    const auto r = scan_books(u, books, FeeSchedule::constant(FeeModel{}));
    EXPECT_TRUE(r.open.empty());
    EXPECT_GT(r.unpriced, 0u);
}

namespace {

GroundTruthLabel label(LabelKind k, std::vector<std::int64_t> ids, std::string agent = "a") {
    GroundTruthLabel l;
    l.kind = k;
    l.trade_ids = std::move(ids);
    l.agent = std::move(agent);
    return l;
}

DetectedSequence indirect(std::vector<std::int64_t> legs) {
    DetectedSequence s;
    s.kind = SequenceKind::Indirect;
    s.legs = std::move(legs);
    s.coins = {"A", "B", "C"};
    s.latencies = {1};
    return s;
}

}  // namespace

TEST(Validate, PerfectDetection) {
    std::vector<GroundTruthLabel> labels;
    DetectionResult det;
    for (std::int64_t i = 0; i < 10; ++i) {
        labels.push_back(label(LabelKind::Indirect, {2 * i + 1, 2 * i + 2}));
        det.sequences.push_back(indirect({2 * i + 1, 2 * i + 2}));
    }
    const auto r = validate_detections(labels, det);
    EXPECT_EQ(*r.kinds.at("INDIRECT").precision(), 1.0);
    EXPECT_EQ(*r.kinds.at("INDIRECT").recall(), 1.0);
    EXPECT_FALSE(r.kinds.at("TRIANGULAR").precision());
    EXPECT_EQ(r.confusion.at("INDIRECT").at("INDIRECT"), 10u);
}

TEST(Validate, OneMissedOfTen) {
    std::vector<GroundTruthLabel> labels;
    DetectionResult det;
    for (std::int64_t i = 0; i < 10; ++i) {
        labels.push_back(label(LabelKind::Indirect, {2 * i + 1, 2 * i + 2}));
        if (i != 4) det.sequences.push_back(indirect({2 * i + 1, 2 * i + 2}));
    }
    const auto s = validate_detections(labels, det).kinds.at("INDIRECT");
    EXPECT_DOUBLE_EQ(*s.recall(), 0.9);
    EXPECT_DOUBLE_EQ(*s.precision(), 1.0);
    EXPECT_EQ(s.false_negatives, 1u);
}

TEST(Validate, DetectedDecoyIsAFalsePositive) {
    const std::vector<GroundTruthLabel> labels{label(LabelKind::Indirect, {1, 2}),
                                               label(LabelKind::Noise, {5, 6}, "decoy")};
    DetectionResult det;
    det.sequences = {indirect({1, 2}), indirect({5, 6})};
    const auto r = validate_detections(labels, det);
    EXPECT_EQ(r.kinds.at("INDIRECT").false_positives, 1u);
    EXPECT_DOUBLE_EQ(*r.kinds.at("INDIRECT").precision(), 0.5);
    EXPECT_EQ(r.decoy_hits, 1u);
    EXPECT_EQ(r.confusion.at("INDIRECT").at("NOISE"), 1u);
}

TEST(Validate, ExitsAndWinnersAreScored) {
    const std::vector<GroundTruthLabel> labels{label(LabelKind::CompetingWinner, {1, 3}),
                                               label(LabelKind::FullExit, {2, 4}),
                                               label(LabelKind::PartialExit, {5, 7, 8})};
    CompetitionCluster c;
    ClusterMember w;
    w.legs = {1, 3};
    w.role = MemberRole::Winner;
    ClusterMember full;
    full.legs = {2};
    full.role = MemberRole::Loser;
    full.exit.kind = ExitKind::FullExit;
    full.exit.exits = {4};
    ClusterMember part;
    part.legs = {5};
    part.role = MemberRole::Loser;
    part.exit.kind = ExitKind::PartialExit;
    part.exit.exits = {7, 9};
    c.members = {w, full, part};
    DetectionResult det;
    det.clusters = {c};
    const auto r = validate_detections(labels, det);
    EXPECT_EQ(r.kinds.at("COMPETING_WINNER").true_positives, 1u);
    EXPECT_EQ(r.kinds.at("FULL_EXIT").true_positives, 1u);
    EXPECT_EQ(r.kinds.at("PARTIAL_EXIT").false_positives, 1u);
    EXPECT_EQ(r.kinds.at("PARTIAL_EXIT").false_negatives, 1u);
}

TEST(Validate, ProvenanceMismatchIsAConsistencyError) {
    LabelLog labels{"aaaa", {}};
    DetectionFile det;
    det.trades_digest = "bbbb";
    try {
        (void)validate_detections(labels, det);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Consistency);
    }
    det.trades_digest = "aaaa";
    EXPECT_NO_THROW((void)validate_detections(labels, det));
}
