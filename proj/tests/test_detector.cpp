#include "arblens/detector.hpp"
#include "arblens/error.hpp"
#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace arblens;
using namespace arblens::literals;
using oracle::Rational;
using oracle::to_rational;

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

// LTC is the only coin here that is not an anchor.
Universe market() {
    return Universe({listing("ETH", "BTC"), listing("ETH", "LTC"), listing("LTC", "BTC"), listing("ETH", "USDT"),
                     listing("LTC", "USDT"), listing("BTC", "USDT")});
}

class Log {
public:
    explicit Log(const Universe& u) : u_(u) {}
    Log& add(const std::string& symbol, TimestampMs date, const char* price, const char* amount, bool sell) {
        trades_.push_back({next_++, "binance", *u_.index_of(symbol), date, Decimal::parse(price),
                           Decimal::parse(amount), sell});
        return *this;
    }
    [[nodiscard]] TradeStream stream() const { return TradeStream(u_, trades_); }

private:
    const Universe& u_;
    std::vector<Trade> trades_;
    std::int64_t next_ = 1;
};

// BTC -> ETH -> LTC -> BTC with legs at t, t + g1, t + g1 + g2.
Log triangle(const Universe& u, TimestampMs g1, TimestampMs g2, bool middle_is_maker = false) {
    Log log(u);
    log.add("ETHBTC", 1000, "0.02", "10", false)
        .add("ETHLTC", 1000 + g1, "3.34", "10", !middle_is_maker)
        .add("LTCBTC", 1000 + g1 + g2, "0.006", "33.4", true);
    return log;
}

DetectionResult detect(const TradeStream& s, DetectorConfig cfg = {}) {
    static const BookStream no_books;
    return Detector(s, no_books, FeeSchedule::constant(FeeModel{}), cfg).run();
}

std::vector<std::vector<std::int64_t>> legs_of(const std::vector<DetectedSequence>& seqs, SequenceKind kind) {
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& s : seqs) {
        if (s.kind == kind) out.push_back(s.legs);
    }
    return out;
}

Trade trade(const Universe& u, const std::string& symbol, const char* price, const char* amount, bool sell,
            std::int64_t id = 1) {
    return {id, "binance", *u.index_of(symbol), 0, Decimal::parse(price), Decimal::parse(amount), sell};
}

}  // namespace

TEST(QuantitiesMatch, SameBaseRowMatchesExactly) {
    const Universe u({listing("ETH", "BTC"), listing("ETH", "LTC")});
    // BTC -> ETH on ETH/BTC, then ETH -> LTC on ETH/LTC.
    const auto m = quantities_match(trade(u, "ETHBTC", "0.02", "0.153", false), trade(u, "ETHLTC", "3", "0.153", true),
                                    u, "0.00024"_d);
    EXPECT_TRUE(m.match);
    EXPECT_EQ(m.diff, 0_d);
}

TEST(QuantitiesMatch, FeeSizedDifferenceMatches) {
    const Universe u({listing("LTC", "ETH"), listing("ETH", "BTC")});
    const auto a = trade(u, "LTCETH", "2.0", "1.0", true);  // LTC -> ETH receives 2.0 ETH
    const auto b = trade(u, "ETHBTC", "0.02", "1.99952", true, 2);
    const auto m = quantities_match(a, b, u, "0.00024"_d);
    const Rational fee = to_rational("1.0"_d) * to_rational("2.0"_d) * to_rational("0.00024"_d);
    EXPECT_EQ(to_rational(m.diff), to_rational("2.0"_d) - to_rational("1.99952"_d));
    EXPECT_EQ(to_rational(m.diff), fee);
    EXPECT_TRUE(m.match);
    EXPECT_EQ(m.upper, "0.00148"_d);
}

TEST(QuantitiesMatch, FarApartDoesNotMatch) {
    const Universe u({listing("LTC", "ETH"), listing("ETH", "BTC")});
    const auto m = quantities_match(trade(u, "LTCETH", "2.0", "1.0", true), trade(u, "ETHBTC", "0.02", "1.5", true, 2),
                                    u, "0.00024"_d);
    EXPECT_FALSE(m.match);
    EXPECT_EQ(m.diff, "0.5"_d);
}

TEST(QuantitiesMatch, QuoteSideIncrementIsTranslated) {
    const Universe u({listing("ETH", "BTC"), listing("LTC", "BTC")});
    // ETH -> BTC, then BTC -> LTC where BTC is the quote: dx becomes 0.001 * 0.006.
    const auto m = quantities_match(trade(u, "ETHBTC", "0.02", "10", true), trade(u, "LTCBTC", "0.006", "33.333", false, 2),
                                    u, 0_d);
    EXPECT_EQ(m.lower, "-0.000006"_d);
    EXPECT_EQ(m.diff, "0.000002"_d);
    EXPECT_TRUE(m.match);
}

TEST(QuantitiesMatch, NoCommonCoinIsInvalidPairing) {
    const Universe u({listing("ETH", "BTC"), listing("LTC", "USDT")});
    try {
        (void)quantities_match(trade(u, "ETHBTC", "0.02", "1", false), trade(u, "LTCUSDT", "60", "1", true, 2), u,
                               0_d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidPairing);
    }
    // Sharing a coin in the wrong direction is not a chain either.
    EXPECT_THROW((void)quantities_match(trade(u, "ETHBTC", "0.02", "1", true), trade(u, "ETHBTC", "0.02", "1", true, 2),
                                        u, 0_d),
                 Error);
}

TEST(ConversionProfitability, QuotientOfRatios) {
    const Universe u({listing("A", "B"), listing("B", "C"), listing("A", "C")});
    DetectedSequence s;
    s.kind = SequenceKind::Indirect;
    s.coins = {"A", "B", "C"};
    s.prices = {"6.09707"_d, 1_d};
    ReferencePrice ref;
    ref.pair = *u.index_of("AC");
    ref.source = PriceSource::Vwap;
    ref.price = 6_d;
    const auto bps = conversion_profitability(s, ref, 0_d, u);
    ASSERT_TRUE(bps);
    const Rational expected = (to_rational("6.09707"_d) / 6 - 1) * 10000;
    EXPECT_NEAR(bps->to_double(), oracle::to_double(expected), 1e-8);
    EXPECT_EQ(bps->round_to(2, Rounding::HalfEven), "161.78"_d);

    s.prices = {6_d, 1_d};
    EXPECT_EQ(*conversion_profitability(s, ref, 0_d, u), 0_d);

    ref.source = PriceSource::Unavailable;
    EXPECT_FALSE(conversion_profitability(s, ref, 0_d, u));
}

TEST(PartialExitLoss, MatchesRationalEvaluation) {
    const PartialExitProblem p{10_d, 2_d, 1_d, {6_d, 4_d}, {"0.51"_d, "0.49"_d}};
    const Rational expected = Rational(6) / to_rational("1.02"_d) + Rational(4) / to_rational("0.98"_d);
    const Decimal loss = partial_exit_loss(p);
    EXPECT_LE(abs(to_rational(loss) - expected), Rational(1, 1'000'000'000'000'000LL));
    EXPECT_NEAR(loss.to_double(), 9.9639855942, 1e-9);
}

TEST(PartialExitLoss, UnitRatioIsQuantity) {
    EXPECT_EQ(partial_exit_loss({5_d, 2_d, 1_d, {5_d}, {"0.5"_d}}), 5_d);
}

TEST(PartialExitLoss, HomogeneousAndPermutationInvariant) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        PartialExitProblem p;
        p.p12 = oracle::random_decimal(rng, 1, 500, 2);
        p.p13 = oracle::random_decimal(rng, 1, 500, 2);
        const int k = 1 + static_cast<int>(rng() % 5);
        for (int j = 0; j < k; ++j) {
            p.q.push_back(oracle::random_decimal(rng, 1, 1000, 3));
            p.p.push_back(oracle::random_decimal(rng, 1, 400, 2));
        }
        const Decimal base = partial_exit_loss(p);
        auto doubled = p;
        for (auto& x : doubled.p) x = x * 2_d;
        EXPECT_NEAR(partial_exit_loss(doubled).to_double() * 2, base.to_double(), 1e-12 * base.to_double() + 1e-15);
        auto shuffled = p;
        std::vector<std::size_t> idx(p.q.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            shuffled.q[j] = p.q[idx[j]];
            shuffled.p[j] = p.p[idx[j]];
        }
        EXPECT_EQ(partial_exit_loss(shuffled), base);
    }
}

TEST(PartialExitLoss, ZeroPriceIsInvalid) {
    try {
        (void)partial_exit_loss({1_d, 2_d, 1_d, {1_d}, {0_d}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidPrice);
    }
}

TEST(ExitSubset, FindsTheThreeTradeExit) {
    const std::vector<Decimal> q{4_d, "3.5"_d, "2.5"_d, 1_d};
    const auto s = find_exit_subset(q, 10_d, 10_d, 20);
    ASSERT_TRUE(s);
    EXPECT_EQ(*s, (std::vector<std::size_t>{0, 1, 2}));
    const auto all = oracle::exhaustive_subsets(q, 10_d, 10_d);
    EXPECT_NE(std::find(all.begin(), all.end(), *s), all.end());
    EXPECT_FALSE(find_exit_subset({4_d, 4_d}, 10_d, 10_d, 20));
}

TEST(ExitSubset, AgreesWithExhaustiveEnumeration) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<Decimal> q;
        for (std::size_t i = 0; i < n; ++i) q.push_back(oracle::random_decimal(rng, 1, 50, 1));
        const Decimal lo = oracle::random_decimal(rng, 1, 200, 1);
        const Decimal hi = lo + oracle::random_decimal(rng, 0, 3, 1);
        const auto all = oracle::exhaustive_subsets(q, lo, hi);
        const auto found = find_exit_subset(q, lo, hi, 20);
        ASSERT_EQ(found.has_value(), !all.empty()) << "trial " << trial;
        if (found) EXPECT_NE(std::find(all.begin(), all.end(), *found), all.end());
    }
}

TEST(ExitSubset, TruncatesLongCandidateLists) {
    std::vector<Decimal> q(25, 1_d);
    q.back() = 100_d;
    bool truncated = false;
    EXPECT_FALSE(find_exit_subset(q, 100_d, 100_d, 20, &truncated));
    EXPECT_TRUE(truncated);
    EXPECT_TRUE(find_exit_subset(q, 5_d, 5_d, 20, &truncated));
}

TEST(DetectTriangular, PlantedLegsWithinDeltaT) {
    const auto u = market();
    const auto s = triangle(u, 20, 21).stream();
    const auto r = detect(s);
    ASSERT_EQ(legs_of(r.sequences, SequenceKind::Triangular), (std::vector<std::vector<std::int64_t>>{{1, 2, 3}}));
    const auto& seq = r.sequences[0];
    EXPECT_EQ(seq.coins, (std::vector<std::string>{"BTC", "ETH", "LTC"}));
    EXPECT_EQ(seq.latencies, (std::vector<TimestampMs>{20, 21}));
    // 50 * 3.34 * 0.006 net of three taker fees.
    const Rational keep = 1 - to_rational("0.00024"_d);
    const Rational expected = (to_rational("1.002"_d) * keep * keep * keep - 1) * 10000;
    EXPECT_NEAR(seq.profitability_bps->to_double(), oracle::to_double(expected), 1e-7);
}

TEST(DetectTriangular, LegsTooFarApartAreIgnored) {
    const auto u = market();
    const auto s = triangle(u, 60, 10).stream();
    EXPECT_TRUE(legs_of(detect(s).sequences, SequenceKind::Triangular).empty());
    DetectorConfig wide;
    wide.delta_t = 60;
    EXPECT_EQ(legs_of(detect(s, wide).sequences, SequenceKind::Triangular).size(), 1u);
}

TEST(DetectTriangular, MakerMiddleLegBreaksTheSequence) {
    const auto u = market();
    const auto s = triangle(u, 20, 21, /*middle_is_maker=*/true).stream();
    const auto r = detect(s);
    EXPECT_TRUE(legs_of(r.sequences, SequenceKind::Triangular).empty());
}

TEST(DetectTriangular, NonAnchorStartIsIgnored) {
    const auto u = market();
    Log log(u);
    // LTC -> BTC -> ETH -> LTC chains by quantity but closes on LTC.
    log.add("LTCBTC", 1000, "0.006", "33.333", true)
        .add("ETHBTC", 1010, "0.02", "9.999", false)
        .add("ETHLTC", 1020, "3.334", "9.999", true);
    EXPECT_TRUE(legs_of(detect(log.stream()).sequences, SequenceKind::Triangular).empty());
}

TEST(DetectIndirect, TwoLegConversion) {
    const auto u = market();
    Log log(u);
    log.add("ETHUSDT", 1000, "200", "5", false).add("ETHLTC", 1025, "3.3", "5", true);
    const auto r = detect(log.stream());
    ASSERT_EQ(legs_of(r.sequences, SequenceKind::Indirect), (std::vector<std::vector<std::int64_t>>{{1, 2}}));
    EXPECT_EQ(r.sequences[0].latencies, (std::vector<TimestampMs>{25}));
    EXPECT_FALSE(r.sequences[0].profitability_bps);
    EXPECT_EQ(r.sequences[0].reference, PriceSource::Unavailable);
}

TEST(DetectIndirect, TriangularLegsAreNotReused) {
    const auto u = market();
    const auto s = triangle(u, 20, 21).stream();
    const auto r = detect(s);
    EXPECT_TRUE(legs_of(r.sequences, SequenceKind::Indirect).empty());
    EXPECT_EQ(r.sequences.size(), 1u);
}

TEST(DetectIndirect, MismatchedQuantitiesAreIgnored) {
    const auto u = market();
    Log log(u);
    log.add("ETHUSDT", 1000, "200", "5", false).add("ETHLTC", 1025, "3.3", "4.5", true);
    EXPECT_TRUE(detect(log.stream()).sequences.empty());
}

namespace {

// Winner BTC -> ETH -> LTC above the direct ratio; loser USDT -> ETH -> LTC
// `gap` ms later, below it. Reference fills on the direct pairs precede both.
Log competing(const Universe& u, TimestampMs gap) {
    Log log(u);
    log.add("LTCBTC", 930, "0.006", "1", true).add("LTCUSDT", 940 + gap, "60", "1", false);
    log.add("ETHBTC", 1000, "0.02", "10", false).add("ETHLTC", 1010, "3.36", "10", true);
    log.add("ETHUSDT", 1000 + gap, "200", "5", false).add("ETHLTC", 1010 + gap, "3.3", "5", true);
    return log;
}

}  // namespace

TEST(Clusters, ConversionsThirtyMsApartCompete) {
    const auto u = market();
    const auto s = competing(u, 30).stream();
    const auto r = detect(s);
    ASSERT_EQ(r.clusters.size(), 1u);
    const auto& c = r.clusters[0];
    EXPECT_EQ(c.c2, "ETH");
    EXPECT_EQ(c.c3, "LTC");
    ASSERT_EQ(c.members.size(), 2u);
    EXPECT_EQ(c.winners(), 1u);
    EXPECT_EQ(c.losers(), 1u);
    const auto& loser = c.members[1];
    EXPECT_EQ(loser.role, MemberRole::Loser);
    EXPECT_TRUE(loser.capacity_exhausted);
    EXPECT_EQ(loser.exit.kind, ExitKind::FullExit);
    EXPECT_EQ(loser.exit.coin_count, 1u);
    EXPECT_EQ(loser.exit.exits, (std::vector<std::int64_t>{loser.legs[1]}));
    // (5 * 3.3 * keep^2) / (1000 * 1/60 ... ) as a realized return.
    const Rational keep = 1 - to_rational("0.00024"_d);
    const Rational realized = (to_rational("16.5"_d) * keep * keep / (Rational(1000) / 60) - 1) * 10000;
    ASSERT_TRUE(loser.exit.realized_bps);
    EXPECT_NEAR(loser.exit.realized_bps->to_double(), oracle::to_double(realized), 1e-6);
}

TEST(Clusters, StartsBeyondTheWindowSplit) {
    const auto u = market();
    const auto s = competing(u, 150).stream();
    const auto r = detect(s);
    ASSERT_EQ(r.clusters.size(), 2u);
    for (const auto& c : r.clusters) EXPECT_EQ(c.members.size(), 1u);
}

TEST(Clusters, LoneConversionIsASingleton) {
    const auto u = market();
    Log log(u);
    log.add("ETHUSDT", 1000, "200", "5", false).add("ETHLTC", 1025, "3.3", "5", true);
    const auto r = detect(log.stream());
    ASSERT_EQ(r.clusters.size(), 1u);
    EXPECT_EQ(r.clusters[0].members.size(), 1u);
    EXPECT_EQ(r.clusters[0].members[0].role, MemberRole::Undetermined);
}

TEST(Clusters, PartialExitAcrossSeveralCoins) {
    const auto u = market();
    Log log(u);
    log.add("LTCBTC", 930, "0.006", "1", true);
    log.add("ETHBTC", 1000, "0.02", "10", false).add("ETHLTC", 1010, "3.36", "10", true);
    log.add("ETHUSDT", 1030, "200", "10", false);
    log.add("ETHLTC", 1045, "3.3", "4", true)
        .add("ETHUSDT", 1050, "199", "3.5", true)
        .add("ETHBTC", 1055, "0.0199", "2.5", true)
        .add("ETHLTC", 1060, "3.3", "1", true);
    const auto s = log.stream();
    const auto r = detect(s);
    ASSERT_EQ(r.clusters.size(), 1u);
    const auto& c = r.clusters[0];
    ASSERT_EQ(c.members.size(), 2u);
    const auto& m = c.members[1];
    EXPECT_EQ(m.legs, (std::vector<std::int64_t>{4}));
    EXPECT_EQ(m.role, MemberRole::Loser);
    EXPECT_EQ(m.exit.kind, ExitKind::PartialExit);
    EXPECT_EQ(m.exit.exits, (std::vector<std::int64_t>{5, 6, 7}));
    EXPECT_EQ(m.exit.coin_count, 3u);
    EXPECT_TRUE(m.exit.other_targets);
}

TEST(Clusters, NoSubsetMeansNoExit) {
    const auto u = market();
    Log log(u);
    log.add("LTCBTC", 930, "0.006", "1", true);
    log.add("ETHBTC", 1000, "0.02", "10", false).add("ETHLTC", 1010, "3.36", "10", true);
    log.add("ETHUSDT", 1030, "200", "10", false);
    log.add("ETHLTC", 1045, "3.3", "4", true).add("ETHLTC", 1050, "3.3", "4", true);
    const auto r = detect(log.stream());
    ASSERT_EQ(r.clusters.size(), 1u);
    EXPECT_EQ(r.clusters[0].members.size(), 1u);
}

TEST(CapacityExhausted, NextTradeOnThePair) {
    const auto u = market();
    static const BookStream none;
    {
        const auto s = competing(u, 30).stream();
        EXPECT_TRUE(Detector(s, none, FeeSchedule::constant(FeeModel{})).capacity_exhausted(4));
    }
    {
        Log log(u);
        log.add("ETHLTC", 1000, "3.36", "1", true).add("ETHLTC", 1001, "3.36", "2", true);
        const auto s = log.stream();
        const Detector d(s, none, FeeSchedule::constant(FeeModel{}));
        EXPECT_FALSE(d.capacity_exhausted(1));
        EXPECT_FALSE(d.capacity_exhausted(2));
    }
}

TEST(DetectorConfigTest, RejectsNonPositiveWindows) {
    DetectorConfig c;
    c.delta_t = 0;
    EXPECT_THROW(c.validate(), Error);
    const auto j = DetectorConfig{}.to_json();
    EXPECT_EQ(DetectorConfig::from_json(j).to_json(), j);
    EXPECT_THROW((void)DetectorConfig::from_json({{"exit_window_ms", -1}}), Error);
}
