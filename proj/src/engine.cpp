#include "arblens/engine.hpp"

#include "arblens/error.hpp"

namespace arblens {

MatchingEngine::MatchingEngine(const Universe& universe, FeeModel fees, std::string exchange)
    : universe_(&universe), fees_(std::move(fees)), exchange_(std::move(exchange)), books_(universe.size()) {
    fees_.validate();
}

void MatchingEngine::validate(const Order& order, const PairListing& l) const {
    auto reject = [&](const std::string& why) {
        throw Error(Errc::InvalidOrder, "order " + std::to_string(order.order_id) + " on " + l.symbol + ": " + why);
    };
    if (!order.qty.is_positive()) reject("quantity must be > 0");
    if (order.qty < l.min_qty) reject("quantity below minimum " + l.min_qty.to_string());
    if (order.qty > l.max_qty) reject("quantity above maximum " + l.max_qty.to_string());
    if (!order.qty.is_multiple_of(l.qty_increment)) reject("quantity not a multiple of " + l.qty_increment.to_string());
    if (order.type == OrderType::Market) {
        if (order.price) reject("MARKET orders carry no price");
        return;
    }
    if (!order.price) reject("limit price required");
    const Decimal p = *order.price;
    if (p < l.min_price || p > l.max_price) reject("price outside listing range");
    if (!p.is_multiple_of(l.price_increment)) reject("price not a multiple of " + l.price_increment.to_string());
}

template <class Levels>
void MatchingEngine::match(const Order& order, std::size_t pair, Decimal& remaining, Levels& levels,
                           std::vector<SimTrade>& out) {
    const bool buying = order.side == Side::Buy;
    while (remaining.is_positive() && !levels.empty()) {
        auto level = levels.begin();
        const Decimal price = level->first;
        if (order.price && (buying ? price > *order.price : price < *order.price)) break;
        auto& queue = level->second;
        while (remaining.is_positive() && !queue.empty()) {
            Resting& maker = queue.front();
            const Decimal fill = min(remaining, maker.qty);
            SimTrade t;
            t.trade.id = next_trade_id_++;
            t.trade.exchange = exchange_;
            t.trade.pair = pair;
            t.trade.date = order.timestamp;
            t.trade.price = price;
            t.trade.amount = fill;
            t.trade.sell = !buying;
            t.maker = maker.owner;
            t.taker = order.owner;
            t.maker_order = maker.order_id;
            t.taker_order = order.order_id;
            const Decimal quote = price * fill;
            // Each side pays its fee on what it receives.
            t.taker_fee = (buying ? fill : quote) * fees_.rate(Role::Taker);
            t.maker_fee = (buying ? quote : fill) * fees_.rate(Role::Maker);
            out.push_back(std::move(t));
            remaining -= fill;
            maker.qty -= fill;
            if (maker.qty.is_zero()) queue.pop_front();
        }
        if (queue.empty()) levels.erase(level);
    }
}

std::vector<SimTrade> MatchingEngine::submit(const Order& order) {
    auto pair = universe_->index_of(order.symbol);
    if (!pair) throw Error(Errc::InvalidOrder, "unknown pair " + order.symbol);
    const auto& listing = universe_->listing(*pair);
    validate(order, listing);
    Book& book = books_[*pair];
    const bool buying = order.side == Side::Buy;

    if (order.type == OrderType::LimitMaker) {
        const bool crosses = buying ? (!book.asks.empty() && *order.price >= book.asks.begin()->first)
                                    : (!book.bids.empty() && *order.price <= book.bids.begin()->first);
        if (crosses) {
            throw Error(Errc::OrderRejected, "LIMIT_MAKER order " + std::to_string(order.order_id) + " would trade");
        }
    }
    if (order.type == OrderType::Market && (buying ? book.asks.empty() : book.bids.empty())) {
        throw Error(Errc::NoLiquidity, "MARKET order " + std::to_string(order.order_id) + " on empty side of " +
                                           order.symbol);
    }

    std::vector<SimTrade> out;
    Decimal remaining = order.qty;
    if (order.type != OrderType::LimitMaker) {
        if (buying) {
            match(order, *pair, remaining, book.asks, out);
        } else {
            match(order, *pair, remaining, book.bids, out);
        }
    }
    if (remaining.is_positive() && order.type != OrderType::Market) {
        Resting r{order.order_id, order.owner, remaining};
        if (buying) {
            book.bids[*order.price].push_back(std::move(r));
        } else {
            book.asks[*order.price].push_back(std::move(r));
        }
    }
    return out;
}

bool MatchingEngine::cancel(const std::string& symbol, std::int64_t order_id) {
    auto pair = universe_->index_of(symbol);
    if (!pair) return false;
    auto erase_from = [&](auto& levels) {
        for (auto it = levels.begin(); it != levels.end(); ++it) {
            auto& q = it->second;
            for (auto r = q.begin(); r != q.end(); ++r) {
                if (r->order_id == order_id) {
                    q.erase(r);
                    if (q.empty()) levels.erase(it);
                    return true;
                }
            }
        }
        return false;
    };
    Book& book = books_[*pair];
    return erase_from(book.bids) || erase_from(book.asks);
}

BookLevels MatchingEngine::levels(std::size_t pair) const {
    BookLevels out;
    const Book& book = books_.at(pair);
    auto total = [](const std::deque<Resting>& q) {
        Decimal sum;
        for (const auto& r : q) sum += r.qty;
        return sum;
    };
    for (const auto& [p, q] : book.bids) out.bids.push_back({p, total(q)});
    for (const auto& [p, q] : book.asks) out.asks.push_back({p, total(q)});
    return out;
}

BookTop MatchingEngine::top(std::size_t pair) const { return levels(pair).top(); }

std::vector<BookSnapshot> MatchingEngine::snapshot(TimestampMs t) const {
    std::vector<BookSnapshot> out;
    for (std::size_t i = 0; i < books_.size(); ++i) {
        if (books_[i].bids.empty() && books_[i].asks.empty()) continue;
        BookSnapshot s;
        s.pair = i;
        s.levels = levels(i);
        s.levels.timestamp = t;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TimestampMs> snapshot_times(TimestampMs duration, TimestampMs cadence) {
    if (cadence <= 0) throw Error(Errc::InvalidArgument, "snapshot cadence must be > 0");
    std::vector<TimestampMs> out;
    for (TimestampMs t = 0; t <= duration; t += cadence) out.push_back(t);
    return out;
}

}  // namespace arblens
