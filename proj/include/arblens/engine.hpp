#pragma once

// Price-time priority matching engine over a listing universe.

#include "arblens/ingest.hpp"
#include "arblens/model.hpp"
#include "arblens/universe.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace arblens {

enum class Side { Buy, Sell };
enum class OrderType { Limit, Market, LimitMaker };

struct Order {
    std::int64_t order_id = 0;
    std::string symbol;
    Side side = Side::Buy;
    OrderType type = OrderType::Limit;
    std::optional<Decimal> price;  // absent for MARKET
    Decimal qty;  // base units
    TimestampMs timestamp = 0;
    std::string owner;
};

/// A fill: the public trade record plus fields only the simulator knows.
struct SimTrade {
    Trade trade;
    std::string maker;
    std::string taker;
    std::int64_t maker_order = 0;
    std::int64_t taker_order = 0;
    Decimal maker_fee;  // in the coin the maker received
    Decimal taker_fee;  // in the coin the taker received
};

class MatchingEngine {
public:
    MatchingEngine(const Universe& universe, FeeModel fees, std::string exchange = "binance");

    /// Matches `order` against the book of its pair. Throws Errc::InvalidOrder
    /// on listing-constraint violations, Errc::OrderRejected for a crossing
    /// LIMIT_MAKER and Errc::NoLiquidity for a MARKET order facing an empty side.
    std::vector<SimTrade> submit(const Order& order);
    /// Removes a resting order; false when it is not on the book.
    bool cancel(const std::string& symbol, std::int64_t order_id);

    [[nodiscard]] BookLevels levels(std::size_t pair) const;
    [[nodiscard]] BookTop top(std::size_t pair) const;
    /// One snapshot per pair with a non-empty book, stamped `t`.
    [[nodiscard]] std::vector<BookSnapshot> snapshot(TimestampMs t) const;

    [[nodiscard]] const Universe& universe() const { return *universe_; }
    [[nodiscard]] std::int64_t trades_emitted() const { return next_trade_id_ - 1; }

private:
    struct Resting {
        std::int64_t order_id;
        std::string owner;
        Decimal qty;
    };
    struct Book {
        std::map<Decimal, std::deque<Resting>, std::greater<>> bids;
        std::map<Decimal, std::deque<Resting>> asks;
    };

    void validate(const Order& order, const PairListing& listing) const;
    template <class Levels>
    void match(const Order& order, std::size_t pair, Decimal& remaining, Levels& levels,
               std::vector<SimTrade>& out);

    const Universe* universe_;
    FeeModel fees_;
    std::string exchange_;
    std::vector<Book> books_;
    std::int64_t next_trade_id_ = 1;
};

/// Snapshot times 0, cadence, 2*cadence, ... not after `duration`.
[[nodiscard]] std::vector<TimestampMs> snapshot_times(TimestampMs duration, TimestampMs cadence);

}  // namespace arblens
