#include "arblens/scan.hpp"

#include "arblens/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace arblens {

nlohmann::json OpenCycle::to_json() const {
    return {{"type", "open_cycle"},
            {"date", date},
            {"coins", coins},
            {"capacity", capacity.to_string()},
            {"gross_delta", gain.gross_delta.to_string()},
            {"residual_value", gain.residual_value.to_string()},
            {"fee_value", gain.fee_value.to_string()},
            {"gain", gain.gain.to_string()},
            {"gain_bps", gain_bps.to_string()}};
}

nlohmann::json ScanReport::summary_json() const {
    nlohmann::json buckets = nlohmann::json::object();
    for (const auto& [b, n] : open_by_bucket) buckets[std::string(cycle_bucket_name(b))] = n;
    return {{"type", "summary"},
            {"snapshots", snapshots},
            {"evaluations", evaluations},
            {"unpriced", unpriced},
            {"open", open.size()},
            {"open_by_bucket", buckets}};
}

namespace {

std::optional<Decimal> mid(const BookTop& top) {
    if (top.bid && top.ask) return Decimal::div(top.bid->price + top.ask->price, Decimal(2), Rounding::HalfEven);
    if (top.bid) return top.bid->price;
    if (top.ask) return top.ask->price;
    return std::nullopt;
}

}  // namespace

ScanReport scan_books(const Universe& universe, const BookStream& books, const FeeSchedule& fees) {
    ScanReport r;
    for (auto b : kCycleBuckets) r.open_by_bucket[b] = 0;
    const auto census = enumerate_cycles(universe, 3);

    std::map<std::size_t, std::vector<std::size_t>> cycles_on_pair;
    for (std::size_t c = 0; c < census.cycles.size(); ++c) {
        for (const auto& leg : census.cycles[c].legs) cycles_on_pair[*universe.index_of(leg.listing.symbol)].push_back(c);
    }

    const auto& snaps = books.snapshots();
    std::vector<std::size_t> order(snaps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return snaps[a].levels.timestamp < snaps[b].levels.timestamp;
    });

    Market market(universe);
    BnbRates rates;
    for (std::size_t i = 0; i < order.size();) {
        const TimestampMs date = snaps[order[i]].levels.timestamp;
        std::set<std::size_t> touched;
        for (; i < order.size() && snaps[order[i]].levels.timestamp == date; ++i) {
            const auto& s = snaps[order[i]];
            const auto& l = universe.listing(s.pair);
            const BookTop top = s.levels.top();
            market.set_top(l.symbol, top);
            if (l.base.symbol == "BNB" || l.quote.symbol == "BNB") {
                if (auto m = mid(top)) {
                    const bool bnb_base = l.base.symbol == "BNB";
                    rates.set_listed_price(bnb_base ? l.quote.symbol : l.base.symbol, *m, bnb_base);
                }
            }
            auto it = cycles_on_pair.find(s.pair);
            if (it != cycles_on_pair.end()) touched.insert(it->second.begin(), it->second.end());
            ++r.snapshots;
        }
        const FeeModel fee = fees.at(date);
        for (auto c : touched) {
            const Cycle& cycle = census.cycles[c];
            ++r.evaluations;
            try {
                const Decimal cap = cycle_capacity(cycle, market);
                if (!cap.is_positive()) continue;
                const GainBreakdown g = cycle_gain(cap, cycle, market, rates, fee);
                if (g.classification != GainClass::Open) continue;
                OpenCycle o;
                o.date = date;
                for (const auto& leg : cycle.legs) o.coins.push_back(leg.from.symbol);
                o.coins.push_back(cycle.base().symbol);
                o.capacity = cap;
                o.gain = g;
                o.gain_bps = Decimal::div(g.gain * Decimal(10'000), cap, Rounding::HalfEven).round_to(8, Rounding::HalfEven);
                ++r.open_by_bucket[bucket_of(cycle.base())];
                r.open.push_back(std::move(o));
            } catch (const Error& e) {
                switch (e.code()) {
                    case Errc::MissingRate:
                    case Errc::NoLiquidity:
                    case Errc::BelowMinimum:
                    case Errc::CapacityExceeded:
                        ++r.unpriced;
                        break;
                    default:
                        throw;
                }
            }
        }
    }
    return r;
}

void write_scan(std::ostream& out, const ScanReport& report) {
    out << report.summary_json().dump() << '\n';
    for (const auto& o : report.open) out << o.to_json().dump() << '\n';
}

}  // namespace arblens
