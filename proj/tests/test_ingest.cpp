#include "arblens/error.hpp"
#include "arblens/ingest.hpp"

#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
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
    l.max_qty = Decimal(100'000);
    l.price_increment = "0.000001"_d;
    l.min_price = "0.000001"_d;
    l.max_price = Decimal(100'000);
    return l;
}

const Universe& universe() {
    static const Universe u({listing("ETH", "BTC"), listing("BNB", "BTC")});
    return u;
}

TradeStream trades_from(const std::string& csv) {
    std::istringstream in(csv);
    return load_trades(in, universe());
}

BookStream books_from(const std::string& csv) {
    std::istringstream in(csv);
    return load_books(in, universe());
}

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::InvalidArgument;
}

const std::string kHeader = "id,exchange,symbol,date,price,amount,sell\n";

}  // namespace

TEST(LoadTrades, MapsRowFields) {
    auto s = trades_from(kHeader + "1,binance,ETHBTC,1600000000000,0.018876,0.153,TRUE\n");
    ASSERT_EQ(s.size(), 1u);
    const Trade& t = s[0];
    EXPECT_EQ(t.id, 1);
    EXPECT_EQ(t.exchange, "binance");
    EXPECT_EQ(universe().listing(t.pair).symbol, "ETHBTC");
    EXPECT_EQ(t.date, 1600000000000);
    EXPECT_EQ(t.price, "0.018876"_d);
    EXPECT_EQ(t.amount, "0.153"_d);
    EXPECT_TRUE(t.sell);
}

TEST(LoadTrades, OrdersById) {
    auto s = trades_from(kHeader +
                         "3,binance,ETHBTC,30,0.02,1,FALSE\n"
                         "1,binance,ETHBTC,10,0.02,1,false\n"
                         "2,binance,BNBBTC,20,0.002,1,true\n");
    std::vector<std::int64_t> ids;
    for (const auto& t : s.trades()) ids.push_back(t.id);
    EXPECT_EQ(ids, (std::vector<std::int64_t>{1, 2, 3}));
    EXPECT_EQ(s.position_of(2), 1u);
    EXPECT_FALSE(s.position_of(7).has_value());
    EXPECT_EQ(s.on_pair(0).size(), 2u);
    EXPECT_EQ(s.on_pair(0, 10, 30).size(), 1u);
}

TEST(LoadTrades, ColumnsAreFoundByName) {
    auto s = trades_from("sell,amount,price,date,symbol,exchange,id\r\nTRUE,0.153,0.018876,5,ETHBTC,binance,9\r\n");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].id, 9);
    EXPECT_EQ(s[0].amount, "0.153"_d);
}

TEST(LoadTrades, Errors) {
    try {
        (void)trades_from(kHeader + "1,binance,ETHBTC,1,0.02,1,TRUE\n2,binance,ETHBTC,2,0.02,abc,TRUE\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_EQ(code_of([] { (void)trades_from(kHeader + "1,binance,XRPBTC,1,0.02,1,TRUE\n"); }), Errc::UnknownSymbol);
    EXPECT_EQ(code_of([] {
                  (void)trades_from(kHeader + "1,binance,ETHBTC,1,0.02,1,TRUE\n1,binance,ETHBTC,2,0.02,1,TRUE\n");
              }),
              Errc::DuplicateId);
    EXPECT_EQ(code_of([] { (void)trades_from("id,symbol\n1,ETHBTC\n"); }), Errc::Parse);
    EXPECT_EQ(code_of([] { (void)trades_from(kHeader + "1,binance,ETHBTC,1,0.02,1,maybe\n"); }), Errc::Parse);
    EXPECT_EQ(code_of([] { (void)trades_from(kHeader + "1,binance,ETHBTC,1,0.02,1\n"); }), Errc::Parse);
    EXPECT_TRUE(trades_from("").empty());
}

TEST(LoadTrades, StreamingReaderSeesRowsInFileOrder) {
    std::istringstream in(kHeader + "3,binance,ETHBTC,30,0.02,1,FALSE\n1,binance,ETHBTC,10,0.02,1,FALSE\n");
    TradeReader reader(in, universe());
    Trade t;
    ASSERT_TRUE(reader.next(t));
    EXPECT_EQ(t.id, 3);
    ASSERT_TRUE(reader.next(t));
    EXPECT_EQ(t.id, 1);
    EXPECT_EQ(reader.line(), 3u);
    EXPECT_FALSE(reader.next(t));
}

TEST(IngestProperty, TradeRoundTripIsCanonical) {
    std::mt19937_64 rng(17);
    std::ostringstream csv;
    csv << kHeader;
    for (int id = 1; id <= 500; ++id) {
        csv << id << ",binance," << (id % 3 ? "ETHBTC" : "BNBBTC") << ',' << 1'000 + id * 7 << ','
            << oracle::random_decimal(rng, 0, 2, 6).to_string() << "1," << oracle::random_decimal(rng, 0, 50, 3).to_string()
            << "1," << (id % 2 ? "TRUE" : "FALSE") << '\n';
    }
    auto s = trades_from(csv.str());
    std::ostringstream out;
    write_trades(out, s);
    auto again = trades_from(out.str());
    EXPECT_EQ(again.trades(), s.trades());
    std::ostringstream out2;
    write_trades(out2, again);
    EXPECT_EQ(out2.str(), out.str());
}

TEST(LoadBooks, GroupsRowsIntoSnapshots) {
    auto b = books_from(
        "symbol,date,type,price,amount\n"
        "ETHBTC,60000,bid,0.0188,2\n"
        "ETHBTC,60000,ask,0.0189,3\n"
        "ETHBTC,60000,bid,0.0187,1\n"
        "ETHBTC,60000,bid,0.0188,1\n");
    ASSERT_EQ(b.size(), 1u);
    const auto& levels = b.snapshots()[0].levels;
    EXPECT_EQ(levels.timestamp, 60000);
    EXPECT_EQ(levels.bids, (std::vector<Level>{{"0.0188"_d, 3_d}, {"0.0187"_d, 1_d}}));
    EXPECT_EQ(levels.asks, (std::vector<Level>{{"0.0189"_d, 3_d}}));
    EXPECT_TRUE(b.warnings().empty());
}

TEST(LoadBooks, OneLevelPerSide) {
    auto b = books_from("symbol,date,type,price,amount\nETHBTC,0,bid,0.0188,2\nETHBTC,0,ask,0.0189,3\n");
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b.snapshots()[0].levels.bids.size(), 1u);
    EXPECT_EQ(b.snapshots()[0].levels.asks.size(), 1u);
}

TEST(LoadBooks, CrossedSnapshotIsKeptWithWarning) {
    auto b = books_from("symbol,date,type,price,amount\nETHBTC,0,bid,0.0190,2\nETHBTC,0,ask,0.0189,3\n");
    ASSERT_EQ(b.size(), 1u);
    ASSERT_EQ(b.warnings().size(), 1u);
    EXPECT_NE(b.warnings()[0].find("ETHBTC"), std::string::npos);
}

TEST(LoadBooks, EmptyAndBadInput) {
    EXPECT_TRUE(books_from("").empty());
    EXPECT_TRUE(books_from("symbol,date,type,price,amount\n").empty());
    EXPECT_EQ(code_of([] { (void)books_from("symbol,date,type,price,amount\nETHBTC,0,mid,1,1\n"); }), Errc::Parse);
    EXPECT_EQ(code_of([] { (void)books_from("symbol,date,type,price,amount\nFOO,0,bid,1,1\n"); }),
              Errc::UnknownSymbol);
}

TEST(ReferencePrice, VwapOfWindow) {
    auto s = trades_from(kHeader +
                         "1,binance,ETHBTC,960,10,2,TRUE\n"
                         "2,binance,ETHBTC,990,11,1,FALSE\n"
                         "3,binance,ETHBTC,1000,50,9,FALSE\n"
                         "4,binance,ETHBTC,949,50,9,FALSE\n");
    auto ref = reference_price(0, 1000, 50, s, BookStream{});
    EXPECT_EQ(ref.source, PriceSource::Vwap);
    EXPECT_EQ(ref.price, "10.33333333"_d);
    const auto sell_eth = universe().require_direction("ETH", "BTC");
    EXPECT_EQ(ref.ratio(sell_eth), "10.33333333"_d);
}

TEST(ReferencePrice, SnapshotWithinToleranceWins) {
    auto s = trades_from(kHeader + "1,binance,ETHBTC,990,10,2,TRUE\n");
    auto b = books_from("symbol,date,type,price,amount\nETHBTC,950,bid,0.5,2\nETHBTC,950,ask,0.8,3\n");
    auto ref = reference_price(0, 1000, 50, s, b);
    EXPECT_EQ(ref.source, PriceSource::BookTop);
    EXPECT_EQ(ref.bid, "0.5"_d);
    EXPECT_EQ(ref.ask, "0.8"_d);
    EXPECT_EQ(ref.ratio(universe().require_direction("ETH", "BTC")), "0.5"_d);
    EXPECT_EQ(ref.ratio(universe().require_direction("BTC", "ETH")), "1.25"_d);

    // Outside the tolerance the VWAP is used instead.
    EXPECT_EQ(reference_price(0, 1100, 200, s, b, 100).source, PriceSource::Vwap);
    // A snapshot taken after t is never used.
    EXPECT_EQ(reference_price(0, 940, 50, s, b).source, PriceSource::Unavailable);
}

TEST(ReferencePrice, UnavailableWithoutData) {
    auto ref = reference_price(1, 1000, 50, trades_from(""), BookStream{});
    EXPECT_EQ(ref.source, PriceSource::Unavailable);
    EXPECT_FALSE(ref.available());
    EXPECT_FALSE(ref.ratio(universe().require_direction("BNB", "BTC")).has_value());
    EXPECT_EQ(code_of([] { (void)reference_price(0, 1000, 0, TradeStream{}, BookStream{}); }), Errc::InvalidArgument);
}

TEST(IngestProperty, VwapIgnoresOrderAndStaysInRange) {
    std::mt19937_64 rng(23);
    for (int round = 0; round < 200; ++round) {
        std::vector<Trade> trades;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            Trade t;
            t.id = i + 1;
            t.exchange = "binance";
            t.pair = 0;
            t.date = 960 + static_cast<TimestampMs>(rng() % 40);
            t.price = oracle::random_decimal(rng, 1, 100, 6);
            t.amount = oracle::random_decimal(rng, 0, 50, 3) + "0.001"_d;
            trades.push_back(t);
        }
        auto shuffled = trades;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].id = static_cast<std::int64_t>(i + 1);

        const auto a = reference_price(0, 1000, 50, TradeStream(universe(), trades), BookStream{});
        const auto b = reference_price(0, 1000, 50, TradeStream(universe(), shuffled), BookStream{});
        EXPECT_EQ(a.price, b.price);
        auto [lo, hi] = std::minmax_element(trades.begin(), trades.end(),
                                            [](const Trade& x, const Trade& y) { return x.price < y.price; });
        EXPECT_GE(a.price, lo->price.round_to(8, Rounding::Floor));
        EXPECT_LE(a.price, hi->price.round_to(8, Rounding::Ceil));
    }
}

TEST(IngestProperty, BookTopAlwaysHasWitness) {
    std::mt19937_64 rng(29);
    std::ostringstream csv;
    csv << "symbol,date,type,price,amount\n";
    for (int k = 0; k < 20; ++k) {
        csv << "ETHBTC," << k * 60'000 << ",bid,0.0188,1\nETHBTC," << k * 60'000 << ",ask,0.0189,1\n";
    }
    auto b = books_from(csv.str());
    for (int i = 0; i < 2000; ++i) {
        const TimestampMs t = static_cast<TimestampMs>(rng() % 1'300'000);
        auto ref = reference_price(0, t, 50, TradeStream{}, b);
        if (ref.source != PriceSource::BookTop) continue;
        const auto* snap = b.latest(0, t, kDefaultBookTolerance);
        ASSERT_NE(snap, nullptr);
        EXPECT_LE(snap->levels.timestamp, t);
        EXPECT_GE(snap->levels.timestamp, t - kDefaultBookTolerance);
    }
}

TEST(FeeSchedule, SingleEntry) {
    FeeSchedule s({FeeEntry{0, "1.2"_d, "2.4"_d, "0.0005"_d}});
    const auto m = fee_at(1'600'000'000'000, s);
    EXPECT_EQ(m.maker_bps, "1.2"_d);
    EXPECT_EQ(m.taker_bps, "2.4"_d);
    EXPECT_EQ(m.bnb_flat, "0.0005"_d);
}

TEST(FeeSchedule, HalfOpenIntervals) {
    auto s = FeeSchedule::from_json(nlohmann::json::parse(R"([
        {"effective_from": 1000, "maker_bps": "1.0", "taker_bps": 2.0, "f": "0.0004"},
        {"effective_from": 0, "maker_bps": "1.2", "taker_bps": "2.4"}
    ])"));
    EXPECT_EQ(s.at(999).taker_bps, "2.4"_d);
    EXPECT_EQ(s.at(1000).taker_bps, 2_d);
    EXPECT_EQ(s.at(1000).bnb_flat, "0.0004"_d);
    EXPECT_EQ(FeeSchedule::from_json(s.to_json()).entries().size(), 2u);
}

TEST(FeeSchedule, Errors) {
    FeeSchedule s({FeeEntry{100, "1.2"_d, "2.4"_d, "0.0005"_d}});
    EXPECT_EQ(code_of([&] { (void)s.at(99); }), Errc::OutOfRange);
    EXPECT_EQ(code_of([] {
                  (void)FeeSchedule({FeeEntry{0, 1_d, 2_d, Decimal{}}, FeeEntry{0, 1_d, 3_d, Decimal{}}});
              }),
              Errc::InvalidSchedule);
    EXPECT_EQ(code_of([] { (void)FeeSchedule(std::vector<FeeEntry>{}); }), Errc::InvalidSchedule);
    EXPECT_EQ(code_of([] { (void)FeeSchedule({FeeEntry{0, -1_d, 2_d, Decimal{}}}); }), Errc::InvalidSchedule);
}
