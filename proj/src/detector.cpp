#include "arblens/detector.hpp"

#include "arblens/core.hpp"
#include "arblens/error.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace arblens {

// Per-range working state: leg indices by from-coin and trade consumption.
struct Detector::Pass {
    const Detector& d;
    Range range;
    const Universe& u;
    std::vector<TakerDirection> dirs;              // indexed by position - range.begin
    std::map<std::string, std::vector<std::size_t>> by_from;  // positions by (date, id)
    std::vector<char> consumed;
    DetectionResult out;

    Pass(const Detector& det, Range r) : d(det), range(r), u(det.trades_->universe()) {
        const auto& ts = *d.trades_;
        dirs.reserve(r.end - r.begin);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            dirs.push_back(taker_direction(ts[i], u));
            by_from[dirs.back().from].push_back(i);
        }
        for (auto& [_, v] : by_from) {
            std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
                return std::tie(ts[a].date, ts[a].id) < std::tie(ts[b].date, ts[b].id);
            });
        }
        consumed.assign(r.end - r.begin, 0);
    }

    const Trade& trade(std::size_t pos) const { return (*d.trades_)[pos]; }
    const TakerDirection& dir(std::size_t pos) const { return dirs[pos - range.begin]; }
    bool used(std::size_t pos) const { return consumed[pos - range.begin] != 0; }
    void use(std::size_t pos) { consumed[pos - range.begin] = 1; }
    Decimal taker_rate(TimestampMs t) const { return d.fees_.at(t).rate(Role::Taker); }

    // Unconsumed trades leaving `coin` in [from_date, from_date + window] after id `after`.
    template <class F>
    void scan(const std::string& coin, TimestampMs from_date, TimestampMs window, std::int64_t after, F&& visit) const {
        auto it = by_from.find(coin);
        if (it == by_from.end()) return;
        const auto& v = it->second;
        auto lo = std::lower_bound(v.begin(), v.end(), from_date,
                                   [&](std::size_t p, TimestampMs t) { return trade(p).date < t; });
        for (; lo != v.end() && trade(*lo).date <= from_date + window; ++lo) {
            if (used(*lo) || trade(*lo).id <= after) continue;
            if (visit(*lo)) return;
        }
    }

    bool chains(std::size_t a, std::size_t b) const {
        return quantities_match(trade(a), trade(b), u, taker_rate(trade(a).date)).match;
    }

    DetectedSequence make(SequenceKind kind, const std::vector<std::size_t>& legs) const {
        DetectedSequence s;
        s.kind = kind;
        s.coins.push_back(dir(legs.front()).from);
        for (std::size_t i = 0; i < legs.size(); ++i) {
            const Trade& t = trade(legs[i]);
            s.legs.push_back(t.id);
            s.coins.push_back(dir(legs[i]).to);
            s.quantities.push_back(t.amount);
            s.prices.push_back(t.price);
            if (i > 0) s.latencies.push_back(t.date - trade(legs[i - 1]).date);
        }
        if (kind == SequenceKind::Triangular) s.coins.pop_back();
        return s;
    }

    void triangular() {
        const TimestampMs dt = d.config_.delta_t;
        for (std::size_t a = range.begin; a < range.end; ++a) {
            if (used(a)) continue;
            const auto& da = dir(a);
            const Coin* c1 = u.coin(da.from);
            if (!c1 || !c1->is_anchor()) continue;
            std::optional<std::pair<std::size_t, std::size_t>> found;
            scan(da.to, trade(a).date, dt, trade(a).id, [&](std::size_t b) {
                if (dir(b).to == da.from || !chains(a, b)) return false;
                scan(dir(b).to, trade(b).date, dt, trade(b).id, [&](std::size_t c) {
                    if (dir(c).to != da.from || !chains(b, c)) return false;
                    found = {b, c};
                    return true;
                });
                return found.has_value();
            });
            if (!found) continue;
            auto seq = make(SequenceKind::Triangular, {a, found->first, found->second});
            Decimal gross(1);
            for (std::size_t p : {a, found->first, found->second}) {
                gross = gross * fill_ratio(trade(p).price, trade(p).sell);
                use(p);
            }
            seq.profitability_bps = net_return_bps(gross, taker_rate(trade(a).date), 3, Decimal(1));
            out.sequences.push_back(std::move(seq));
        }
    }

    void indirect() {
        const TimestampMs dt = d.config_.delta_t;
        for (std::size_t a = range.begin; a < range.end; ++a) {
            if (used(a)) continue;
            const auto& da = dir(a);
            std::optional<std::size_t> found;
            scan(da.to, trade(a).date, dt, trade(a).id, [&](std::size_t b) {
                if (dir(b).to == da.from || !u.pair_between(da.from, dir(b).to) || !chains(a, b)) return false;
                found = b;
                return true;
            });
            if (!found) continue;
            use(a);
            use(*found);
            auto seq = make(SequenceKind::Indirect, {a, *found});
            const auto ref = reference(da.from, seq.coins.back(), trade(a).date);
            seq.reference = ref.source;
            seq.profitability_bps = conversion_profitability(seq, ref, taker_rate(trade(a).date), u);
            out.sequences.push_back(std::move(seq));
        }
    }

    ReferencePrice reference(const std::string& from, const std::string& to, TimestampMs leg_time) const {
        const auto& c = d.config_;
        return reference_price(*u.pair_between(from, to), leg_time - c.reference_offset, c.vwap_window, *d.trades_,
                               *d.books_, c.book_tolerance);
    }

    std::optional<Decimal> direct_ratio(const std::string& from, const std::string& to, TimestampMs t) const {
        if (from == to) return Decimal(1);
        if (!u.pair_between(from, to)) return std::nullopt;
        return reference(from, to, t).ratio(u.require_direction(from, to));
    }

    // Realized return of a loser that spent leg 1 and left through `exits`.
    std::optional<Decimal> realized_bps(std::size_t leg1, const std::vector<std::size_t>& exits,
                                        const std::string& c3) const {
        const Trade& t1 = trade(leg1);
        const Decimal keep = Decimal(1) - taker_rate(t1.date);
        const auto direct = direct_ratio(dir(leg1).from, c3, t1.date);
        if (!direct || !direct->is_positive()) return std::nullopt;
        Decimal value;
        for (std::size_t e : exits) {
            const auto r = direct_ratio(dir(e).to, c3, trade(e).date);
            if (!r) return std::nullopt;
            value += taker_received(trade(e), u) * keep * *r;
        }
        const Decimal base = taker_spent(t1, u) * *direct;
        return ((Decimal::div(value * keep, base, Rounding::HalfEven) - Decimal(1)) * Decimal(10'000))
            .round_to(8, Rounding::HalfEven);
    }

    std::size_t position(std::int64_t id) const { return *d.trades_->position_of(id); }

    ExitClassification classify(std::size_t leg1, std::optional<std::size_t> own_leg2, std::int64_t winner_leg2,
                                const std::string& c3, std::set<std::size_t>& taken) {
        ExitClassification x;
        const Trade& t1 = trade(leg1);
        const std::string& c2 = dir(leg1).to;
        const Decimal q1 = taker_received(t1, u);
        const Decimal rate = taker_rate(t1.date);

        std::vector<std::size_t> candidates;
        auto available = [&](std::size_t p) { return (!used(p) || p == own_leg2) && !taken.count(p); };
        auto it = by_from.find(c2);
        if (it != by_from.end()) {
            for (std::size_t p : it->second) {
                const Trade& t = trade(p);
                if (t.date < t1.date || t.date > t1.date + d.config_.exit_window) continue;
                if (t.id <= winner_leg2 || !available(p)) continue;
                candidates.push_back(p);
            }
        }
        auto finish = [&](ExitKind kind, std::vector<std::size_t> exits) {
            std::sort(exits.begin(), exits.end());
            x.kind = kind;
            std::set<std::string> coins;
            for (std::size_t p : exits) {
                x.exits.push_back(trade(p).id);
                coins.insert(dir(p).to);
                taken.insert(p);
                if (dir(p).to != c3) x.other_targets = true;
            }
            x.coin_count = coins.size();
            x.realized_bps = realized_bps(leg1, exits, c3);
        };
        if (own_leg2 && chains(leg1, *own_leg2)) {
            finish(ExitKind::FullExit, {*own_leg2});
            return x;
        }
        for (std::size_t p : candidates) {
            if (chains(leg1, p)) {
                finish(ExitKind::FullExit, {p});
                return x;
            }
        }
        std::vector<std::size_t> smaller;
        std::vector<Decimal> qty;
        Decimal dx;
        for (std::size_t p : candidates) {
            const Decimal spent = taker_spent(trade(p), u);
            if (spent >= q1) continue;
            smaller.push_back(p);
            qty.push_back(spent);
            const auto& l = u.listing(trade(p).pair);
            dx = max(dx, l.base.symbol == c2 ? l.qty_increment : l.qty_increment * trade(p).price);
        }
        bool truncated = false;
        const auto subset = find_exit_subset(qty, q1 - q1 * rate - dx, q1 + dx, d.config_.max_subset_candidates,
                                             &truncated);
        if (truncated) {
            x.truncated = true;
            out.diagnostics.push_back("exit search for leg " + std::to_string(t1.id) + " truncated to " +
                                      std::to_string(d.config_.max_subset_candidates) + " of " +
                                      std::to_string(qty.size()) + " candidates");
        }
        if (subset && subset->size() >= 2) {
            std::vector<std::size_t> exits;
            for (std::size_t i : *subset) exits.push_back(smaller[i]);
            finish(ExitKind::PartialExit, exits);
        }
        return x;
    }

    void clusters() {
        // Indirect conversions grouped by their second-leg direction.
        std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < out.sequences.size(); ++i) {
            const auto& s = out.sequences[i];
            if (s.kind == SequenceKind::Indirect) groups[{s.coins[1], s.coins[2]}].push_back(i);
        }
        std::vector<CompetitionCluster> found;
        for (auto& [key, idx] : groups) {
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                const Trade& ta = trade(position(out.sequences[a].legs[0]));
                const Trade& tb = trade(position(out.sequences[b].legs[0]));
                return std::tie(ta.date, ta.id) < std::tie(tb.date, tb.id);
            });
            for (std::size_t i = 0; i < idx.size();) {
                const TimestampMs start = trade(position(out.sequences[idx[i]].legs[0])).date;
                std::size_t j = i;
                while (j < idx.size() &&
                       trade(position(out.sequences[idx[j]].legs[0])).date - start <= d.config_.competition_window) {
                    ++j;
                }
                found.push_back(build_cluster(key.first, key.second, {idx.begin() + i, idx.begin() + j}, start));
                i = j;
            }
        }
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
            return a.members.front().legs.front() < b.members.front().legs.front();
        });
        out.clusters = std::move(found);
    }

    CompetitionCluster build_cluster(const std::string& c2, const std::string& c3, std::vector<std::size_t> seqs,
                                     TimestampMs start) {
        CompetitionCluster c;
        c.c2 = c2;
        c.c3 = c3;
        std::optional<std::int64_t> winner_leg2;
        for (std::size_t i : seqs) {
            const auto& s = out.sequences[i];
            ClusterMember m;
            m.legs = s.legs;
            m.from = s.coins[0];
            m.q1 = taker_received(trade(position(s.legs[0])), u);
            m.profitability_bps = s.profitability_bps;
            if (s.profitability_bps) {
                m.role = s.profitability_bps->is_positive() ? MemberRole::Winner : MemberRole::Loser;
            }
            if (m.role == MemberRole::Winner && (!winner_leg2 || s.legs[1] < *winner_leg2)) winner_leg2 = s.legs[1];
            c.members.push_back(std::move(m));
        }
        if (!winner_leg2) return c;

        const bool exhausted = d.capacity_exhausted(*winner_leg2);
        std::set<std::size_t> taken;
        for (auto& m : c.members) {
            if (m.role != MemberRole::Loser) continue;
            m.capacity_exhausted = exhausted;
            if (exhausted) m.exit = classify(position(m.legs[0]), position(m.legs[1]), *winner_leg2, c3, taken);
        }
        // Attempts: first legs into c2 whose second leg never matched.
        if (exhausted) {
            for (std::size_t p = range.begin; p < range.end; ++p) {
                const Trade& t = trade(p);
                if (used(p) || dir(p).to != c2 || dir(p).from == c3) continue;
                if (t.date < start || t.date > start + d.config_.competition_window) continue;
                if (!u.pair_between(dir(p).from, c3)) continue;
                auto snapshot = taken;
                auto x = classify(p, std::nullopt, *winner_leg2, c3, taken);
                if (x.kind == ExitKind::None) {
                    taken = std::move(snapshot);
                    continue;
                }
                ClusterMember m;
                m.legs = {t.id};
                m.from = dir(p).from;
                m.q1 = taker_received(t, u);
                m.role = MemberRole::Loser;
                m.capacity_exhausted = true;
                m.exit = std::move(x);
                use(p);
                c.members.push_back(std::move(m));
            }
            for (std::size_t p : taken) use(p);
        }
        std::stable_sort(c.members.begin(), c.members.end(),
                         [](const auto& a, const auto& b) { return a.legs.front() < b.legs.front(); });
        return c;
    }
};

Detector::Detector(const TradeStream& trades, const BookStream& books, FeeSchedule fees, DetectorConfig config)
    : trades_(&trades), books_(&books), fees_(std::move(fees)), config_(config) {
    config_.validate();
    if (fees_.entries().empty()) throw Error(Errc::InvalidSchedule, "detector needs a fee schedule");
}

bool Detector::capacity_exhausted(std::int64_t winner_leg2) const {
    const auto pos = trades_->position_of(winner_leg2);
    if (!pos) throw Error(Errc::InvalidArgument, "unknown trade id " + std::to_string(winner_leg2));
    const Trade& w = (*trades_)[*pos];
    // Trades are held in id order, so the first later trade on the pair is the next one.
    for (std::size_t i = *pos + 1; i < trades_->size(); ++i) {
        const Trade& t = (*trades_)[i];
        if (t.pair == w.pair) return t.price != w.price;
    }
    return false;
}

std::vector<DetectedSequence> Detector::detect_triangular() const {
    Pass p(*this, {0, trades_->size()});
    p.triangular();
    return std::move(p.out.sequences);
}

std::vector<DetectedSequence> Detector::detect_indirect() const {
    Pass p(*this, {0, trades_->size()});
    p.triangular();
    p.out.sequences.clear();
    p.indirect();
    return std::move(p.out.sequences);
}

DetectionResult Detector::run_range(Range r) const {
    Pass p(*this, r);
    p.triangular();
    p.indirect();
    p.clusters();
    std::stable_sort(p.out.sequences.begin(), p.out.sequences.end(),
                     [](const auto& a, const auto& b) { return a.legs.front() < b.legs.front(); });
    return std::move(p.out);
}

std::vector<Detector::Range> Detector::shards() const {
    const std::size_t n = trades_->size();
    std::vector<Range> out;
    if (n == 0) return out;
    std::vector<TimestampMs> suffix_min(n);
    suffix_min[n - 1] = (*trades_)[n - 1].date;
    for (std::size_t i = n - 1; i-- > 0;) suffix_min[i] = std::min(suffix_min[i + 1], (*trades_)[i].date);
    const TimestampMs gap = config_.reach();
    std::size_t begin = 0;
    TimestampMs prefix_max = (*trades_)[0].date;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        prefix_max = std::max(prefix_max, (*trades_)[i].date);
        if (suffix_min[i + 1] - prefix_max > gap) {
            out.push_back({begin, i + 1});
            begin = i + 1;
        }
    }
    out.push_back({begin, n});
    return out;
}

DetectionResult Detector::run(unsigned threads) const {
    const auto ranges = shards();
    std::vector<DetectionResult> parts(ranges.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < ranges.size(); i = next++) parts[i] = run_range(ranges[i]);
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ranges.size())));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n);
        for (unsigned t = 0; t < n; ++t) {
            pool.emplace_back([&, t] {
                try {
                    work();
                } catch (...) {
                    errors[t] = std::current_exception();
                    next = ranges.size();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    DetectionResult merged;
    for (auto& part : parts) {
        for (auto& s : part.sequences) merged.sequences.push_back(std::move(s));
        for (auto& c : part.clusters) merged.clusters.push_back(std::move(c));
        for (auto& m : part.diagnostics) merged.diagnostics.push_back(std::move(m));
    }
    std::int64_t id = 1;
    for (auto& c : merged.clusters) c.id = id++;
    return merged;
}

void write_detections(std::ostream& out, const DetectionResult& result, const std::string& trades_digest,
                      const DetectorConfig& config) {
    const nlohmann::json header{{"type", "header"},
                                {"schema", "arblens.detection/1"},
                                {"trades_digest", trades_digest},
                                {"config", config.to_json()}};
    out << header.dump() << '\n';
    for (const auto& s : result.sequences) out << s.to_json().dump() << '\n';
    for (const auto& c : result.clusters) out << c.to_json().dump() << '\n';
    for (const auto& m : result.diagnostics) out << nlohmann::json{{"type", "diagnostic"}, {"message", m}}.dump() << '\n';
}

std::string detections_jsonl(const DetectionResult& result, const std::string& trades_digest,
                             const DetectorConfig& config) {
    std::ostringstream out;
    write_detections(out, result, trades_digest, config);
    return out.str();
}

}  // namespace arblens
