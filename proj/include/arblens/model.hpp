#pragma once

#include "arblens/decimal.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arblens {

using TimestampMs = std::int64_t;

enum class AnchorClass { None, Btc, Bnb, Alts, Stable };

[[nodiscard]] std::string_view anchor_class_name(AnchorClass c);
/// BTC, BNB, ALTS (ETH/XRP/TRX) and the common USD stable coins.
[[nodiscard]] AnchorClass default_anchor_class(std::string_view symbol);
[[nodiscard]] std::optional<AnchorClass> parse_anchor_class(std::string_view name);

struct Coin {
    std::string symbol;
    AnchorClass anchor_class = AnchorClass::None;

    [[nodiscard]] bool is_anchor() const { return anchor_class != AnchorClass::None; }
    friend bool operator==(const Coin& a, const Coin& b) { return a.symbol == b.symbol; }
    friend auto operator<=>(const Coin& a, const Coin& b) { return a.symbol <=> b.symbol; }
};

/// A tradable pair `base/quote`. Quantities are in base units, prices in quote per base.
struct PairListing {
    std::string symbol;
    Coin base;
    Coin quote;
    Decimal qty_increment;
    Decimal min_qty;
    Decimal max_qty;
    Decimal price_increment;
    Decimal min_price;
    Decimal max_price;

    /// Throws Errc::InvalidArgument on a broken listing.
    void validate() const;
};

enum class Orientation {
    FromIsQuote,  // to/from is listed: the holder buys the base
    FromIsBase,   // from/to is listed: the holder sells the base
};

struct Direction {
    Coin from;
    Coin to;
    PairListing listing;
    Orientation orientation = Orientation::FromIsBase;

    [[nodiscard]] static Direction make(const PairListing& listing, const Coin& from);
};

struct Level {
    Decimal price;
    Decimal qty;
    friend bool operator==(const Level&, const Level&) = default;
};

struct BookTop {
    std::optional<Level> bid;
    std::optional<Level> ask;
    TimestampMs timestamp = 0;
};

/// Full depth for one pair. bids strictly decreasing, asks strictly increasing.
struct BookLevels {
    std::vector<Level> bids;
    std::vector<Level> asks;
    TimestampMs timestamp = 0;

    [[nodiscard]] BookTop top() const;
    [[nodiscard]] bool crossed() const;
    /// Top of book as seen after the first `h` levels (0-based) on each side are gone.
    [[nodiscard]] BookTop level(std::size_t h) const;
};

enum class Role { Maker, Taker };

struct FeeModel {
    Decimal maker_bps = Decimal::parse("1.2");
    Decimal taker_bps = Decimal::parse("2.4");
    Decimal bnb_flat = Decimal::parse("0.0005");
    bool pay_in_bnb = true;

    /// Fraction charged for `role`, e.g. 2.4 bps -> 0.00024.
    [[nodiscard]] Decimal rate(Role role) const;
    void validate() const;
};

/// Last traded BNB conversion prices per coin.
class BnbRates {
public:
    /// Records the last price of the pair linking `coin` and BNB. When
    /// `bnb_is_base` the listed pair is BNB/coin, otherwise coin/BNB.
    void set_listed_price(const std::string& coin, Decimal price, bool bnb_is_base);
    /// Stores b directly (value of one `coin` in BNB).
    void set_rate(const std::string& coin, Decimal b) { set_listed_price(coin, b, false); }

    struct Quote {
        Decimal price;
        bool bnb_is_base = false;
    };
    [[nodiscard]] const Quote* find(const std::string& coin) const;

private:
    std::map<std::string, Quote> quotes_;
};

struct Cycle {
    std::vector<Direction> legs;

    [[nodiscard]] const Coin& base() const { return legs.front().from; }
    /// Throws Errc::InvalidArgument unless the legs chain, close on the base and
    /// never revisit an intermediate coin.
    void validate() const;
};

struct ConversionPath {
    std::vector<Direction> legs;

    [[nodiscard]] const Coin& source() const { return legs.front().from; }
    [[nodiscard]] const Coin& target() const { return legs.back().to; }
    void validate() const;
};

enum class GainClass { ArbitrageFree, Open };

struct GainBreakdown {
    Decimal gross_delta;
    Decimal residual_value;
    Decimal fee_value;
    Decimal gain;
    GainClass classification = GainClass::ArbitrageFree;
};

struct LegResult {
    Decimal gross;
    Decimal fee_amount;
    Decimal net;
    Decimal residual;
    friend bool operator==(const LegResult&, const LegResult&) = default;
};

}  // namespace arblens
