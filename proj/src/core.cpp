#include "arblens/core.hpp"

#include "arblens/error.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace arblens {

namespace {

const Level& require_bid(const Direction& dir, const BookTop& top) {
    if (!top.bid) throw Error(Errc::NoLiquidity, "no bid on " + dir.listing.symbol);
    return *top.bid;
}

const Level& require_ask(const Direction& dir, const BookTop& top) {
    if (!top.ask) throw Error(Errc::NoLiquidity, "no ask on " + dir.listing.symbol);
    if (!top.ask->price.is_positive()) throw Error(Errc::InvalidPrice, "non-positive ask on " + dir.listing.symbol);
    return *top.ask;
}

void require_non_negative(Decimal q, const char* what) {
    if (q.is_negative()) throw Error(Errc::InvalidArgument, std::string(what) + " must be >= 0");
}

// Base quantity actually sent to the exchange for q units of dir.from.
Decimal rounded_base(const Direction& dir, Decimal q, const BookTop& top) {
    return round_down(trade_quantity(dir, q, top), dir.listing.qty_increment);
}

const Coin& bnb_coin() {
    static const Coin kBnb{"BNB", AnchorClass::Bnb};
    return kBnb;
}

struct Evaluation {
    std::vector<Decimal> balances;
    Decimal residual_value;
    Decimal fee_value;
};

// Runs capital through `legs`, valuing residuals and BNB fees in `valuation` terms.
Evaluation evaluate(Decimal capital, const std::vector<Direction>& legs, const Market& market, const BnbRates& rates,
                    const FeeModel& fee, const Coin& valuation) {
    Evaluation ev;
    ev.balances = path_balances(capital, legs, market);
    for (std::size_t i = 0; i < legs.size(); ++i) {
        const auto& top = market.require_top(legs[i].listing.symbol);
        Decimal r = residual(legs[i], ev.balances[i], top);
        if (!r.is_zero()) ev.residual_value += r * market.ratio(legs[i].from, valuation);
    }
    if (!fee.bnb_flat.is_zero()) {
        Decimal bnb_to_valuation = market.ratio(bnb_coin(), valuation);
        Decimal sum;
        for (std::size_t i = 0; i < legs.size(); ++i) {
            sum += ev.balances[i + 1] * bnb_rate(legs[i].to, rates) * bnb_to_valuation;
        }
        ev.fee_value = fee.bnb_flat * sum;
    }
    return ev;
}

}  // namespace

Decimal round_down(Decimal x, Decimal inc) { return x.floor_to(inc); }

Decimal exchange_ratio(const Direction& dir, const BookTop& top) {
    if (dir.orientation == Orientation::FromIsQuote) return Decimal(1) / require_ask(dir, top).price;
    return require_bid(dir, top).price;
}

Decimal pair_capacity(const Direction& dir, const BookTop& top) {
    if (dir.orientation == Orientation::FromIsQuote) {
        const auto& ask = require_ask(dir, top);
        return ask.price * ask.qty;
    }
    return require_bid(dir, top).qty;
}

Decimal bid_ask_spread(const Direction& dir, const BookTop& top) {
    if (!top.bid || !top.ask) throw Error(Errc::NoLiquidity, "one-sided book on " + dir.listing.symbol);
    return top.ask->price - top.bid->price;
}

Decimal trade_quantity(const Direction& dir, Decimal q, const BookTop& top) {
    require_non_negative(q, "quantity");
    if (dir.orientation == Orientation::FromIsQuote) {
        return Decimal::div(q, require_ask(dir, top).price, Rounding::Floor);
    }
    return q;
}

Decimal residual(const Direction& dir, Decimal q, const BookTop& top) {
    Decimal base = rounded_base(dir, q, top);
    if (dir.orientation == Orientation::FromIsQuote) {
        // q - floor(T)*ask equals (T - floor(T))*ask; this form keeps r(q - r(q)) == 0 exact.
        return q - base * top.ask->price;
    }
    return q - base;
}

Decimal converted_amount(const Direction& dir, Decimal q, const BookTop& top) {
    Decimal base = rounded_base(dir, q, top);
    if (dir.orientation == Orientation::FromIsQuote) return base;
    return base * require_bid(dir, top).price;
}

LegResult convert_leg(Decimal q, const Direction& dir, const BookTop& top, const FeeModel& fee, Role role) {
    require_non_negative(q, "quantity");
    if (q.is_zero()) return {};
    Decimal base = rounded_base(dir, q, top);
    if (base.is_zero() || base < dir.listing.min_qty) {
        throw Error(Errc::BelowMinimum, dir.listing.symbol + ": " + base.to_string() + " below minimum lot " +
                                            dir.listing.min_qty.to_string());
    }
    LegResult out;
    out.gross = converted_amount(dir, q, top);
    out.fee_amount = out.gross * fee.rate(role);
    out.net = fee.pay_in_bnb ? out.gross : out.gross - out.fee_amount;
    out.residual = residual(dir, q, top);
    return out;
}

Decimal bnb_rate(const Coin& coin, const BnbRates& rates) {
    if (coin.symbol == "BNB") return Decimal(1);
    const auto* quote = rates.find(coin.symbol);
    if (!quote) throw Error(Errc::MissingRate, "no BNB rate for " + coin.symbol);
    return quote->bnb_is_base ? Decimal(1) / quote->price : quote->price;
}

Decimal path_capacity(const std::vector<Direction>& legs, const Market& market) {
    if (legs.empty()) throw Error(Errc::InvalidArgument, "no legs");
    std::vector<const BookTop*> tops;
    tops.reserve(legs.size());
    for (const auto& leg : legs) tops.push_back(&market.require_top(leg.listing.symbol));

    std::optional<Decimal> best;
    for (std::size_t i = 0; i < legs.size(); ++i) {
        Decimal x = pair_capacity(legs[i], *tops[i]);
        bool reachable = true;
        // Map eta_i back to first-coin terms; each step rounds down so the
        // forward push of the result never exceeds eta_i.
        for (std::size_t k = i; k-- > 0;) {
            if (legs[k].orientation == Orientation::FromIsQuote) {
                x = x * tops[k]->ask->price;
            } else {
                Decimal bid = require_bid(legs[k], *tops[k]).price;
                if (bid.is_zero()) {
                    reachable = false;
                    break;
                }
                x = Decimal::div(x, bid, Rounding::Floor);
            }
        }
        if (reachable && (!best || x < *best)) best = x;
    }
    return best.value_or(Decimal{});
}

Decimal cycle_capacity(const Cycle& cycle, const Market& market) {
    cycle.validate();
    return path_capacity(cycle.legs, market);
}

Decimal conversion_capacity(const ConversionPath& path, const Market& market) {
    path.validate();
    return path_capacity(path.legs, market);
}

std::vector<Decimal> path_balances(Decimal capital, const std::vector<Direction>& legs, const Market& market) {
    require_non_negative(capital, "capital");
    Decimal cap = path_capacity(legs, market);
    if (capital > cap) {
        throw Error(Errc::CapacityExceeded, capital.to_string() + " exceeds capacity " + cap.to_string());
    }
    std::vector<Decimal> q;
    q.reserve(legs.size() + 1);
    const auto& first = market.require_top(legs.front().listing.symbol);
    q.push_back(capital - residual(legs.front(), capital, first));
    for (const auto& leg : legs) {
        q.push_back(converted_amount(leg, q.back(), market.require_top(leg.listing.symbol)));
    }
    return q;
}

std::vector<Decimal> cycle_balances(Decimal capital, const Cycle& cycle, const Market& market) {
    cycle.validate();
    return path_balances(capital, cycle.legs, market);
}

GainBreakdown cycle_gain(Decimal capital, const Cycle& cycle, const Market& market, const BnbRates& rates,
                         const FeeModel& fee) {
    cycle.validate();
    Evaluation ev = evaluate(capital, cycle.legs, market, rates, fee, cycle.base());
    GainBreakdown g;
    g.gross_delta = ev.balances.back() - ev.balances.front();
    g.residual_value = ev.residual_value;
    g.fee_value = ev.fee_value;
    g.gain = g.gross_delta + g.residual_value - g.fee_value;
    g.classification = g.gain.is_positive() ? GainClass::Open : GainClass::ArbitrageFree;
    return g;
}

Decimal conversion_proceeds(Decimal q, const ConversionPath& path, const Market& market, const BnbRates& rates,
                            const FeeModel& fee) {
    path.validate();
    Evaluation ev = evaluate(q, path.legs, market, rates, fee, path.target());
    return ev.balances.back() + ev.residual_value - ev.fee_value;
}

Verdict compare_conversions(const ConversionPath& first, const ConversionPath& second, const Market& market,
                            const BnbRates& rates, const FeeModel& fee) {
    first.validate();
    second.validate();
    if (!(first.source() == second.source()) || !(first.target() == second.target())) {
        throw Error(Errc::InvalidComparison, "conversions do not share endpoints");
    }
    Verdict v;
    v.q_used = min(conversion_capacity(first, market), conversion_capacity(second, market));
    v.proceeds_first = conversion_proceeds(v.q_used, first, market, rates, fee);
    v.proceeds_second = conversion_proceeds(v.q_used, second, market, rates, fee);
    v.first_profitable = v.proceeds_first > v.proceeds_second;
    return v;
}

std::string_view cycle_bucket_name(CycleBucket b) {
    switch (b) {
        case CycleBucket::Btc: return "BTC";
        case CycleBucket::Bnb: return "BNB";
        case CycleBucket::Alts: return "ALTS";
        case CycleBucket::Stable: return "Stable coins";
        case CycleBucket::Other: return "Other coins";
    }
    return "Other coins";
}

CycleBucket bucket_of(const Coin& base) {
    switch (base.anchor_class) {
        case AnchorClass::Btc: return CycleBucket::Btc;
        case AnchorClass::Bnb: return CycleBucket::Bnb;
        case AnchorClass::Alts: return CycleBucket::Alts;
        case AnchorClass::Stable: return CycleBucket::Stable;
        case AnchorClass::None: return CycleBucket::Other;
    }
    return CycleBucket::Other;
}

CycleCensus enumerate_cycles(const Universe& universe, std::size_t length) {
    if (length < 2) throw Error(Errc::InvalidArgument, "cycle length must be >= 2");
    CycleCensus census;
    for (auto b : kCycleBuckets) census.counts[b] = 0;

    std::map<std::string, std::vector<std::string>> neighbors;
    for (const auto& l : universe.listings()) {
        neighbors[l.base.symbol].push_back(l.quote.symbol);
        neighbors[l.quote.symbol].push_back(l.base.symbol);
    }
    for (auto& [_, v] : neighbors) std::sort(v.begin(), v.end());

    std::vector<std::string> path;
    std::set<std::string> on_path;
    std::function<void()> extend = [&] {
        const std::string& here = path.back();
        if (path.size() == length) {
            auto it = std::find(neighbors[here].begin(), neighbors[here].end(), path.front());
            if (it == neighbors[here].end()) return;
            Cycle c;
            for (std::size_t i = 0; i < length; ++i) {
                c.legs.push_back(universe.require_direction(path[i], path[(i + 1) % length]));
            }
            census.counts[bucket_of(c.base())]++;
            census.cycles.push_back(std::move(c));
            return;
        }
        for (const auto& next : neighbors[here]) {
            if (on_path.count(next)) continue;
            path.push_back(next);
            on_path.insert(next);
            extend();
            on_path.erase(next);
            path.pop_back();
        }
    };
    for (const auto& coin : universe.coins()) {
        path = {coin.symbol};
        on_path = {coin.symbol};
        extend();
    }
    return census;
}

Decimal fill_ratio(Decimal price, bool sold_base) {
    if (!price.is_positive()) throw Error(Errc::InvalidPrice, "fill price must be > 0");
    return sold_base ? price : Decimal(1) / price;
}

Decimal net_return_bps(Decimal gross_ratio, Decimal fee_rate, std::size_t legs, Decimal reference) {
    if (!reference.is_positive()) throw Error(Errc::InvalidPrice, "reference ratio must be > 0");
    Decimal net = gross_ratio;
    for (std::size_t i = 0; i < legs; ++i) net = net * (Decimal(1) - fee_rate);
    return ((Decimal::div(net, reference, Rounding::HalfEven) - Decimal(1)) * Decimal(10'000))
        .round_to(8, Rounding::HalfEven);
}

}  // namespace arblens
