#include "arblens/simulator.hpp"

#include "arblens/core.hpp"
#include "arblens/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace arblens {

namespace {

constexpr TimestampMs kFootprintMargin = 60;
constexpr TimestampMs kTickGuardBefore = 10;
constexpr TimestampMs kTickGuardAfter = 250;
constexpr int kMaxAttempts = 2000;
constexpr TimestampMs kDecoyGapFloor = 50;
// Reference fills land in the VWAP window that ends this long before a leg.
constexpr TimestampMs kReferenceOffset = 50;

const std::string kMarketMaker = "mm";
const std::string kLiquidity = "lp";
const std::string kReference = "ref";

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::ScenarioConfig, what); }

Decimal round_to_increment(Decimal x, Decimal inc) {
    return Decimal::div(x, inc, Rounding::HalfEven).round_to(0, Rounding::HalfEven) * inc;
}

Decimal ceil_to(Decimal x, Decimal inc) { return -((-x).floor_to(inc)); }

// A taker fill the planner intends to produce.
struct Leg {
    std::size_t pair = 0;
    bool sell = false;  // aggressor sells the base
    Decimal price;
    Decimal qty;
    Decimal from_amount;
    Decimal to_amount;
    TimestampMs time = 0;
    bool against_mm = false;  // fills the market maker instead of a planted quote

    [[nodiscard]] Decimal ratio() const { return fill_ratio(price, sell); }
};

struct Action {
    TimestampMs time = 0;
    std::int64_t seq = 0;
    Order order;
    int slot = -1;  // planted fill recorded here
    std::optional<Decimal> expected_price;
};

struct PendingLabel {
    LabelKind kind;
    std::int64_t episode;
    std::string agent;
    std::vector<int> slots;
    std::optional<Decimal> bps;
    std::optional<Decimal> quantity;
    std::vector<TimestampMs> latencies;
};

class Planner {
public:
    explicit Planner(const ScenarioSpec& spec)
        : spec_(spec), u_(spec.universe), rng_(spec.seed), reserved_(u_.size()) {
        fee_rate_ = spec.fees.rate(Role::Taker);
        for (std::size_t i = 0; i < u_.size(); ++i) {
            const auto& l = u_.listing(i);
            Decimal fair = round_to_increment(
                Decimal::div(value(l.base.symbol), value(l.quote.symbol), Rounding::HalfEven), l.price_increment);
            fair = max(fair, l.min_price);
            fair_.push_back(fair);
            mm_bid_.push_back(max((fair * (Decimal(1) - spec.mm_half_spread)).floor_to(l.price_increment),
                                  l.min_price));
            mm_ask_.push_back(ceil_to(fair * (Decimal(1) + spec.mm_half_spread), l.price_increment));
        }
        coins_.reserve(u_.coins().size());
        for (const auto& c : u_.coins()) coins_.push_back(c.symbol);
    }

    ScenarioResult run();

private:
    Decimal value(const std::string& coin) const {
        auto it = spec_.fair_values.find(coin);
        if (it == spec_.fair_values.end()) config_error("no fair value for " + coin);
        return it->second;
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    TimestampMs uniform_ms(TimestampMs lo, TimestampMs hi) {
        return std::uniform_int_distribution<TimestampMs>(lo, hi)(rng_);
    }

    std::optional<std::size_t> pair(const std::string& a, const std::string& b) const {
        return u_.pair_between(a, b);
    }

    bool window_free(std::size_t p, TimestampMs lo, TimestampMs hi) const {
        for (const auto& [a, b] : reserved_[p]) {
            if (a <= hi && lo <= b) return false;
        }
        return true;
    }
    bool clear_of_ticks(TimestampMs lo, TimestampMs hi) const {
        const TimestampMs c = spec_.snapshot_cadence_ms;
        // First tick whose guard window could reach lo.
        TimestampMs k = (lo - kTickGuardAfter) / c;
        for (TimestampMs t = std::max<TimestampMs>(0, k * c); t <= hi + kTickGuardBefore; t += c) {
            if (t - kTickGuardBefore <= hi && lo <= t + kTickGuardAfter) return false;
        }
        return true;
    }
    bool place(const std::set<std::size_t>& pairs, TimestampMs lo, TimestampMs hi) {
        lo -= kFootprintMargin;
        hi += kFootprintMargin;
        if (lo < 1 || hi > spec_.duration_ms || !clear_of_ticks(lo, hi)) return false;
        for (auto p : pairs) {
            if (!window_free(p, lo, hi)) return false;
        }
        for (auto p : pairs) reserved_[p].emplace_back(lo, hi);
        return true;
    }

    // A fill converting up to `available` of `from` into `to` at `price`.
    std::optional<Leg> make_leg(const std::string& from, const std::string& to, Decimal price, Decimal available) {
        auto p = pair(from, to);
        if (!p) return std::nullopt;
        const auto& l = u_.listing(*p);
        Leg leg;
        leg.pair = *p;
        leg.sell = l.base.symbol == from;
        leg.price = price;
        if (leg.sell) {
            leg.qty = available.floor_to(l.qty_increment);
        } else {
            leg.qty = Decimal::div(available, price, Rounding::Floor).floor_to(l.qty_increment);
        }
        if (leg.qty < l.min_qty || leg.qty.is_zero() || leg.qty > l.max_qty) return std::nullopt;
        const Decimal quote = leg.qty * price;
        leg.from_amount = leg.sell ? leg.qty : quote;
        leg.to_amount = leg.sell ? quote : leg.qty;
        return leg;
    }

    // Price on pair `p` giving the aggressor from `from` the ratio `ratio`.
    Decimal price_for_ratio(std::size_t p, const std::string& from, Decimal ratio) const {
        const auto& l = u_.listing(p);
        const Decimal raw = l.base.symbol == from ? ratio : Decimal::div(Decimal(1), ratio, Rounding::HalfEven);
        return round_to_increment(raw, l.price_increment);
    }
    bool inside_spread(std::size_t p, Decimal price) const { return mm_bid_[p] < price && price < mm_ask_[p]; }

    // What the next leg may spend after receiving `to_amount`.
    Decimal carried(Decimal to_amount) const {
        return spec_.fees.pay_in_bnb ? to_amount : to_amount - to_amount * fee_rate_;
    }

    Decimal direct_ratio(const std::string& from, const std::string& to) const {
        const std::size_t p = *pair(from, to);
        return fill_ratio(fair_[p], u_.listing(p).base.symbol == from);
    }

    std::vector<std::string> eligible_bases(const AgentSpec& a, bool anchors_only) const {
        std::vector<std::string> out;
        if (!a.base_coins.empty()) return a.base_coins;
        for (const auto& c : u_.coins()) {
            if (!anchors_only || c.is_anchor()) out.push_back(c.symbol);
        }
        return out;
    }

    std::string pick_other(const std::vector<std::string>& exclude) {
        std::vector<std::string> options;
        for (const auto& c : coins_) {
            if (std::find(exclude.begin(), exclude.end(), c) == exclude.end()) options.push_back(c);
        }
        if (options.empty()) config_error("universe has too few coins for the roster");
        return options[pick(options.size())];
    }

    Decimal size_units(const std::string& coin, Decimal value_units) const {
        return Decimal::div(value_units, value(coin), Rounding::Floor);
    }

    int new_slot() { return next_slot_++; }

    void add_fill(const Leg& leg, const std::string& owner, int slot) {
        const auto& l = u_.listing(leg.pair);
        if (!leg.against_mm) {
            Order lp;
            lp.order_id = next_order_++;
            lp.symbol = l.symbol;
            lp.side = leg.sell ? Side::Buy : Side::Sell;
            lp.type = OrderType::LimitMaker;
            lp.price = leg.price;
            lp.qty = leg.qty;
            lp.timestamp = leg.time;
            lp.owner = kLiquidity;
            actions_.push_back({leg.time, next_seq_++, lp, -1, std::nullopt});
        }
        Order taker;
        taker.order_id = next_order_++;
        taker.symbol = l.symbol;
        taker.side = leg.sell ? Side::Sell : Side::Buy;
        taker.type = OrderType::Limit;
        taker.price = leg.price;
        taker.qty = leg.qty;
        taker.timestamp = leg.time;
        taker.owner = owner;
        actions_.push_back({leg.time, next_seq_++, taker, slot, leg.price});
    }

    // A small background fill at the fair price, used as the VWAP reference.
    void add_reference(std::size_t p, TimestampMs t) {
        const auto& l = u_.listing(p);
        Leg leg;
        leg.pair = p;
        leg.sell = uniform() < 0.5;
        leg.price = fair_[p];
        leg.qty = max(size_units(l.base.symbol, Decimal(20) + Decimal::from_double(uniform() * 200))
                          .floor_to(l.qty_increment),
                      l.min_qty);
        leg.time = t;
        add_fill(leg, kReference, -1);
    }

    std::vector<Decimal> planted_bps(const AgentSpec& a, std::size_t n) {
        std::vector<Decimal> out;
        for (std::size_t i = 0; i + 1 < n; i += 2) {
            const Decimal d = (a.bps.spread * Decimal::from_double(uniform())).round_to(4, Rounding::HalfEven);
            out.push_back(a.bps.mean + d);
            out.push_back(a.bps.mean - d);
        }
        if (out.size() < n) out.push_back(a.bps.mean);
        std::shuffle(out.begin(), out.end(), rng_);
        return out;
    }

    std::vector<Decimal> planted_sizes(const AgentSpec& a, const std::vector<Decimal>& bps) {
        const std::size_t n = bps.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return bps[x] < bps[y]; });
        std::vector<double> rank(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) rank[order[r]] = n > 1 ? static_cast<double>(r) / (n - 1) : 0.5;
        std::vector<Decimal> out;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = a.size.bps_correlation * rank[i] + (1 - a.size.bps_correlation) * uniform();
            out.push_back(a.size.min_value + (a.size.max_value - a.size.min_value) * Decimal::from_double(u));
        }
        return out;
    }

    void plan_triangular(const AgentSpec& a);
    void plan_indirect(const AgentSpec& a, bool decoy);
    void plan_competing(const AgentSpec& a);
    void plan_noise(const AgentSpec& a);
    bool try_competing(const AgentSpec& a, Decimal winner_bps, Decimal size);

    const ScenarioSpec& spec_;
    const Universe& u_;
    std::mt19937_64 rng_;
    Decimal fee_rate_;
    std::vector<Decimal> fair_, mm_bid_, mm_ask_;
    std::vector<std::string> coins_;
    std::vector<std::vector<std::pair<TimestampMs, TimestampMs>>> reserved_;
    std::vector<Action> actions_;
    std::vector<PendingLabel> labels_;
    std::int64_t next_order_ = 1;
    std::int64_t next_seq_ = 0;
    std::int64_t next_episode_ = 1;
    int next_slot_ = 0;
    std::vector<std::pair<std::size_t, TimestampMs>> add_reference_later_;
};

void Planner::plan_triangular(const AgentSpec& a) {
    const auto bps = planted_bps(a, a.count);
    const auto sizes = planted_sizes(a, bps);
    const auto bases = eligible_bases(a, /*anchors_only=*/true);
    if (a.count > 0 && bases.empty()) config_error("agent " + a.id + ": no anchor coin to start cycles from");
    for (std::size_t i = 0; i < a.count; ++i) {
        bool done = false;
        for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
            const std::string c1 = bases[pick(bases.size())];
            const std::string c2 = pick_other({c1});
            const std::string c3 = pick_other({c1, c2});
            auto p12 = pair(c1, c2), p23 = pair(c2, c3), p31 = pair(c3, c1);
            if (!p12 || !p23 || !p31) continue;

            auto leg1 = make_leg(c1, c2, fair_[*p12], size_units(c1, sizes[i]));
            if (!leg1) continue;
            auto leg2 = make_leg(c2, c3, fair_[*p23], carried(leg1->to_amount));
            if (!leg2) continue;
            const Decimal f3 = Decimal(1) - fee_rate_;
            const Decimal target = Decimal(1) + bps[i] / Decimal(10'000);
            const Decimal r31 = Decimal::div(target, leg1->ratio() * leg2->ratio() * f3 * f3 * f3, Rounding::HalfEven);
            const Decimal p3 = price_for_ratio(*p31, c3, r31);
            if (!inside_spread(*p31, p3)) continue;
            auto leg3 = make_leg(c3, c1, p3, carried(leg2->to_amount));
            if (!leg3) continue;

            const TimestampMs l1 = a.latency.sample(rng_), l2 = a.latency.sample(rng_);
            const TimestampMs t0 = uniform_ms(kFootprintMargin + 1, spec_.duration_ms - 500);
            if (!place({*p12, *p23, *p31}, t0, t0 + l1 + l2)) continue;
            leg1->time = t0;
            leg2->time = t0 + l1;
            leg3->time = t0 + l1 + l2;
            std::vector<int> slots{new_slot(), new_slot(), new_slot()};
            add_fill(*leg1, a.id, slots[0]);
            add_fill(*leg2, a.id, slots[1]);
            add_fill(*leg3, a.id, slots[2]);
            const Decimal achieved = net_return_bps(leg1->ratio() * leg2->ratio() * leg3->ratio(), fee_rate_, 3, Decimal(1));
            labels_.push_back({LabelKind::Triangular, next_episode_++, a.id, slots, achieved, leg1->from_amount, {l1, l2}});
            done = true;
        }
        if (!done) config_error("agent " + a.id + ": cannot place triangular episode " + std::to_string(i));
    }
}

void Planner::plan_indirect(const AgentSpec& a, bool decoy) {
    const auto bps = planted_bps(a, a.count);
    const auto sizes = planted_sizes(a, bps);
    const auto bases = eligible_bases(a, /*anchors_only=*/false);
    for (std::size_t i = 0; i < a.count; ++i) {
        bool done = false;
        for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
            const std::string x = bases[pick(bases.size())];
            const std::string c2 = pick_other({x});
            const std::string c3 = pick_other({x, c2});
            auto p12 = pair(x, c2), p23 = pair(c2, c3), p13 = pair(x, c3);
            if (!p12 || !p23 || !p13) continue;

            auto leg1 = make_leg(x, c2, fair_[*p12], size_units(x, sizes[i]));
            if (!leg1) continue;
            const Decimal direct = direct_ratio(x, c3);
            const Decimal f = Decimal(1) - fee_rate_;
            const Decimal target = direct * (Decimal(1) + bps[i] / Decimal(10'000));
            const Decimal r23 = Decimal::div(target, leg1->ratio() * f * f, Rounding::HalfEven);
            const Decimal p2 = price_for_ratio(*p23, c2, r23);
            if (!inside_spread(*p23, p2)) continue;
            auto leg2 = make_leg(c2, c3, p2, carried(leg1->to_amount));
            if (!leg2) continue;

            TimestampMs gap = a.latency.sample(rng_);
            if (decoy) gap = kDecoyGapFloor + uniform_ms(10, 40);
            const TimestampMs lead = kReferenceOffset + uniform_ms(1, 40);
            const TimestampMs t0 = uniform_ms(kFootprintMargin + lead + 1, spec_.duration_ms - 500);
            if (!place({*p12, *p23, *p13}, t0 - lead, t0 + gap)) continue;
            add_reference(*p13, t0 - lead);
            leg1->time = t0;
            leg2->time = t0 + gap;
            std::vector<int> slots{new_slot(), new_slot()};
            add_fill(*leg1, a.id, slots[0]);
            add_fill(*leg2, a.id, slots[1]);
            const Decimal achieved = net_return_bps(leg1->ratio() * leg2->ratio(), fee_rate_, 2, direct);
            labels_.push_back({decoy ? LabelKind::Noise : LabelKind::Indirect, next_episode_++, a.id, slots, achieved,
                               leg1->from_amount, {gap}});
            done = true;
        }
        if (!done) config_error("agent " + a.id + ": cannot place indirect episode " + std::to_string(i));
    }
}

bool Planner::try_competing(const AgentSpec& a, Decimal winner_bps, Decimal size) {
    // c2 must be the base of every pair the cluster touches, so the coins it
    // trades against are the lower-valued ones.
    add_reference_later_.clear();
    const std::string c2 = coins_[pick(coins_.size())];
    std::vector<std::string> lower;
    for (const auto& c : coins_) {
        auto p = pair(c, c2);
        if (c != c2 && p && u_.listing(*p).base.symbol == c2) lower.push_back(c);
    }
    if (lower.size() < 3) return false;
    const std::string c3 = lower[pick(lower.size())];
    std::vector<std::string> others;
    for (const auto& c : lower) {
        if (c != c3 && pair(c, c3)) others.push_back(c);
    }
    if (others.size() < 2) return false;

    const std::size_t n =
        std::uniform_int_distribution<std::size_t>(a.min_competitors, a.max_competitors)(rng_);
    const std::size_t p23 = *pair(c2, c3);
    const auto& l23 = u_.listing(p23);
    const Decimal dx = l23.qty_increment;

    struct Member {
        std::string x;
        Leg leg1;
        Decimal direct;
        TimestampMs ref_lead = 0;
        bool partial = false;
        std::vector<Leg> exits;
        std::vector<std::string> exit_coins;
    };
    std::vector<Member> members;
    std::set<Decimal> used_q;
    bool have_partial = false;
    for (std::size_t i = 0; i < n; ++i) {
        Member m;
        m.x = others[pick(others.size())];
        const std::size_t p12 = *pair(m.x, c2);
        const Decimal scale = Decimal::from_double(0.5 + uniform());
        auto leg1 = make_leg(m.x, c2, fair_[p12], size_units(m.x, size * scale));
        if (!leg1) return false;
        while (used_q.count(leg1->qty)) {
            leg1 = make_leg(m.x, c2, fair_[p12], leg1->from_amount + fair_[p12] * dx * Decimal(3));
            if (!leg1) return false;
        }
        used_q.insert(leg1->qty);
        m.leg1 = *leg1;
        m.direct = direct_ratio(m.x, c3);
        m.ref_lead = kReferenceOffset + uniform_ms(1, 40);
        if (i > 0 && !have_partial && uniform() >= a.full_exit_share) {
            m.partial = true;
            have_partial = true;
        }
        members.push_back(std::move(m));
    }

    // Winner: takes the only quote at the improved price on c2 -> c3.
    Member& w = members[0];
    const Decimal f = Decimal(1) - fee_rate_;
    const Decimal target = w.direct * (Decimal(1) + winner_bps / Decimal(10'000));
    const Decimal p2 = price_for_ratio(p23, c2, Decimal::div(target, w.leg1.ratio() * f * f, Rounding::HalfEven));
    if (!inside_spread(p23, p2)) return false;
    auto wleg2 = make_leg(c2, c3, p2, carried(w.leg1.to_amount));
    if (!wleg2) return false;

    const TimestampMs t0 = uniform_ms(kFootprintMargin + kReferenceOffset + 45, spec_.duration_ms - 1000);
    LatencyModel fast = a.latency;
    fast.max = std::min(fast.max, 30.0);
    fast.min = std::min(fast.min, fast.max);
    const TimestampMs w_gap = fast.sample(rng_);
    w.leg1.time = t0;
    wleg2->time = t0 + w_gap;

    TimestampMs end = wleg2->time;
    for (std::size_t i = 1; i < members.size(); ++i) {
        Member& m = members[i];
        m.leg1.time = t0 + uniform_ms(1, 40);
        TimestampMs t = std::max(m.leg1.time, wleg2->time) + uniform_ms(1, 10);
        const Decimal q1 = carried(m.leg1.to_amount);
        if (!m.partial) {
            auto exit = make_leg(c2, c3, mm_bid_[p23], q1);
            if (!exit) return false;
            exit->against_mm = true;
            exit->time = t;
            m.exits.push_back(*exit);
            m.exit_coins.push_back(c3);
        } else {
            const std::size_t max_k = std::min(a.max_exit_coins, others.size() + 1);
            if (max_k < a.min_exit_coins) return false;
            const std::size_t k = std::uniform_int_distribution<std::size_t>(a.min_exit_coins, max_k)(rng_);
            std::vector<std::string> pool = others;
            pool.erase(std::remove(pool.begin(), pool.end(), m.x), pool.end());
            if (pool.size() + 1 < k) return false;
            std::shuffle(pool.begin(), pool.end(), rng_);
            // Split q1 into k parts of at least 5% each.
            std::vector<double> w_parts;
            for (std::size_t j = 0; j < k; ++j) w_parts.push_back(1.0 + uniform());
            const double total = std::accumulate(w_parts.begin(), w_parts.end(), 0.0);
            Decimal left = q1.floor_to(dx);
            std::vector<Decimal> parts;
            for (std::size_t j = 0; j + 1 < k; ++j) {
                const Decimal part = (q1 * Decimal::from_double(w_parts[j] / total)).floor_to(dx);
                parts.push_back(part);
                left -= part;
            }
            parts.push_back(left);
            for (std::size_t j = 0; j < k; ++j) {
                const bool to_c3 = j == 0;
                const std::string d = to_c3 ? c3 : pool[j - 1];
                const std::size_t pd = *pair(c2, d);
                Leg exit;
                if (to_c3) {
                    auto e = make_leg(c2, d, mm_bid_[pd], parts[j]);
                    if (!e || e->qty != parts[j]) return false;
                    exit = *e;
                    exit.against_mm = true;
                } else {
                    const Decimal haircut = Decimal::from_double(0.0005 + 0.0025 * uniform()).round_to(6, Rounding::HalfEven);
                    const Decimal price = (fair_[pd] * (Decimal(1) - haircut)).floor_to(u_.listing(pd).price_increment);
                    if (!inside_spread(pd, price)) return false;
                    auto e = make_leg(c2, d, price, parts[j]);
                    if (!e || e->qty != parts[j]) return false;
                    exit = *e;
                    const TimestampMs lead = kReferenceOffset + uniform_ms(1, 40);
                    add_reference_later_.push_back({*pair(d, c3), t - lead});
                }
                exit.time = t;
                m.exits.push_back(exit);
                m.exit_coins.push_back(d);
                t += uniform_ms(1, 3);
            }
        }
        end = std::max(end, m.exits.back().time);
    }

    std::set<std::size_t> pairs;
    for (const auto& c : coins_) {
        if (auto p = pair(c, c2)) pairs.insert(*p);
    }
    TimestampMs start = t0;
    for (const auto& m : members) {
        pairs.insert(*pair(m.x, c3));
        start = std::min(start, m.leg1.time - m.ref_lead);
    }
    for (const auto& [p, t] : add_reference_later_) {
        pairs.insert(p);
        start = std::min(start, t);
    }
    if (!place(pairs, start, end)) {
        add_reference_later_.clear();
        return false;
    }

    const std::int64_t episode = next_episode_++;
    for (const auto& [p, t] : add_reference_later_) add_reference(p, t);
    add_reference_later_.clear();
    std::set<std::pair<std::size_t, TimestampMs>> refs;
    for (const auto& m : members) {
        const std::size_t p13 = *pair(m.x, c3);
        if (refs.insert({p13, m.leg1.time - m.ref_lead}).second) add_reference(p13, m.leg1.time - m.ref_lead);
    }

    // Winner legs.
    std::vector<int> w_slots{new_slot(), new_slot()};
    add_fill(w.leg1, a.id, w_slots[0]);
    add_fill(*wleg2, a.id, w_slots[1]);
    const Decimal w_bps = net_return_bps(w.leg1.ratio() * wleg2->ratio(), fee_rate_, 2, w.direct);
    labels_.push_back({LabelKind::Indirect, episode, a.id, w_slots, w_bps, w.leg1.from_amount, {w_gap}});
    labels_.push_back({LabelKind::CompetingWinner, episode, a.id, w_slots, w_bps, w.leg1.from_amount, {w_gap}});

    for (std::size_t i = 1; i < members.size(); ++i) {
        const Member& m = members[i];
        std::vector<int> slots{new_slot()};
        add_fill(m.leg1, a.id, slots[0]);
        for (const auto& e : m.exits) {
            slots.push_back(new_slot());
            add_fill(e, a.id, slots.back());
        }
        // Realized value in c3 terms against the direct conversion; the extra
        // factor f is the first leg's fee.
        Decimal value_c3;
        for (std::size_t j = 0; j < m.exits.size(); ++j) {
            const Decimal received = m.exits[j].to_amount * f;
            value_c3 += m.exit_coins[j] == c3 ? received : received * direct_ratio(m.exit_coins[j], c3);
        }
        const Decimal direct_value = m.leg1.from_amount * m.direct;
        const Decimal bps = ((Decimal::div(value_c3 * f, direct_value, Rounding::HalfEven) - Decimal(1)) *
                             Decimal(10'000))
                                .round_to(8, Rounding::HalfEven);
        std::vector<TimestampMs> gaps;
        for (const auto& e : m.exits) gaps.push_back(e.time - m.leg1.time);
        if (m.partial) {
            labels_.push_back({LabelKind::CompetingLoser, episode, a.id, slots, bps, m.leg1.from_amount, gaps});
            labels_.push_back({LabelKind::PartialExit, episode, a.id, slots, bps, m.leg1.from_amount, gaps});
        } else {
            const Decimal ind_bps = net_return_bps(m.leg1.ratio() * m.exits[0].ratio(), fee_rate_, 2, m.direct);
            labels_.push_back({LabelKind::Indirect, episode, a.id, slots, ind_bps, m.leg1.from_amount, gaps});
            labels_.push_back({LabelKind::CompetingLoser, episode, a.id, slots, ind_bps, m.leg1.from_amount, gaps});
            labels_.push_back({LabelKind::FullExit, episode, a.id, slots, ind_bps, m.leg1.from_amount, gaps});
        }
    }
    return true;
}

void Planner::plan_competing(const AgentSpec& a) {
    const auto bps = planted_bps(a, a.count);
    const auto sizes = planted_sizes(a, bps);
    for (std::size_t i = 0; i < a.count; ++i) {
        if (!bps[i].is_positive()) config_error("agent " + a.id + ": competing winners need positive bps");
        bool done = false;
        for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) done = try_competing(a, bps[i], sizes[i]);
        if (!done) config_error("agent " + a.id + ": cannot place competing cluster " + std::to_string(i));
    }
}

void Planner::plan_noise(const AgentSpec& a) {
    for (std::size_t i = 0; i < a.count; ++i) {
        bool done = false;
        for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
            const std::size_t p = pick(u_.size());
            const TimestampMs t = uniform_ms(1, spec_.duration_ms);
            if (!window_free(p, t, t)) continue;
            const auto& l = u_.listing(p);
            const Decimal value_units =
                a.size.min_value + (a.size.max_value - a.size.min_value) * Decimal::from_double(uniform());
            const Decimal qty = max(size_units(l.base.symbol, value_units).floor_to(l.qty_increment), l.min_qty);
            Order o;
            o.order_id = next_order_++;
            o.symbol = l.symbol;
            o.side = uniform() < 0.5 ? Side::Buy : Side::Sell;
            o.type = OrderType::Market;
            o.qty = qty;
            o.timestamp = t;
            o.owner = a.id;
            actions_.push_back({t, next_seq_++, o, -1, std::nullopt});
            done = true;
        }
        if (!done) config_error("agent " + a.id + ": no free window for noise trade " + std::to_string(i));
    }
}

ScenarioResult Planner::run() {
    ScenarioResult result;
    if (spec_.agents.empty()) return result;

    // Episodes first so noise can avoid their footprints.
    for (AgentKind kind : {AgentKind::Competing, AgentKind::Triangular, AgentKind::Indirect, AgentKind::Decoy}) {
        for (const auto& a : spec_.agents) {
            if (a.kind != kind) continue;
            if (kind == AgentKind::Competing) plan_competing(a);
            if (kind == AgentKind::Triangular) plan_triangular(a);
            if (kind == AgentKind::Indirect) plan_indirect(a, false);
            if (kind == AgentKind::Decoy) plan_indirect(a, true);
        }
    }
    for (const auto& a : spec_.agents) {
        if (a.kind == AgentKind::Noise) plan_noise(a);
    }
    std::sort(actions_.begin(), actions_.end(),
              [](const Action& x, const Action& y) { return std::tie(x.time, x.seq) < std::tie(y.time, y.seq); });

    MatchingEngine engine(u_, spec_.fees);
    // Market maker: one resting order per side and pair, reposted when run down.
    struct Quote {
        std::int64_t order_id = 0;
        Decimal left;
    };
    std::vector<Quote> bids(u_.size()), asks(u_.size());
    std::vector<Decimal> depth(u_.size());
    auto post = [&](std::size_t p, Side side, TimestampMs t) {
        const auto& l = u_.listing(p);
        Order o;
        o.order_id = next_order_++;
        o.symbol = l.symbol;
        o.side = side;
        o.type = OrderType::LimitMaker;
        o.price = side == Side::Buy ? mm_bid_[p] : mm_ask_[p];
        o.qty = depth[p];
        o.timestamp = t;
        o.owner = kMarketMaker;
        (void)engine.submit(o);
        (side == Side::Buy ? bids : asks)[p] = {o.order_id, depth[p]};
    };
    for (std::size_t p = 0; p < u_.size(); ++p) {
        const auto& l = u_.listing(p);
        depth[p] = min(l.max_qty, Decimal(100'000'000)).floor_to(l.qty_increment);
        post(p, Side::Buy, 0);
        post(p, Side::Sell, 0);
    }

    const auto ticks = snapshot_times(spec_.duration_ms, spec_.snapshot_cadence_ms);
    std::size_t next_tick = 0;
    auto emit_ticks_before = [&](TimestampMs t, bool inclusive) {
        while (next_tick < ticks.size() && (ticks[next_tick] < t || (inclusive && ticks[next_tick] == t))) {
            for (auto& s : engine.snapshot(ticks[next_tick])) result.snapshots.push_back(std::move(s));
            ++next_tick;
        }
    };

    std::map<int, std::int64_t> slot_trade;
    std::map<std::string, std::vector<std::int64_t>> by_owner;
    for (const auto& act : actions_) {
        emit_ticks_before(act.time, false);
        auto fills = engine.submit(act.order);
        if (act.expected_price) {
            if (fills.size() != 1 || fills[0].trade.price != *act.expected_price ||
                fills[0].trade.amount != act.order.qty) {
                throw Error(Errc::Consistency, "planted order " + std::to_string(act.order.order_id) + " on " +
                                                   act.order.symbol + " did not fill as planned");
            }
            if (act.slot >= 0) slot_trade[act.slot] = fills[0].trade.id;
        }
        for (auto& f : fills) {
            const std::size_t p = f.trade.pair;
            if (f.maker == kMarketMaker) {
                // A sell-initiated fill consumes the market maker's bid.
                Quote& q = f.trade.sell ? bids[p] : asks[p];
                q.left -= f.trade.amount;
                if (q.left * Decimal(10) < depth[p]) {
                    (void)engine.cancel(u_.listing(p).symbol, q.order_id);
                    post(p, f.trade.sell ? Side::Buy : Side::Sell, act.time);
                }
            }
            by_owner[f.taker].push_back(f.trade.id);
            result.trades.push_back(std::move(f));
        }
    }
    emit_ticks_before(spec_.duration_ms, true);

    for (const auto& l : labels_) {
        GroundTruthLabel g{l.kind, l.episode, l.agent, {}, l.bps, l.quantity, l.latencies};
        for (int s : l.slots) g.trade_ids.push_back(slot_trade.at(s));
        result.labels.push_back(std::move(g));
    }
    std::int64_t episode = next_episode_;
    auto noise_label = [&](const std::string& owner) {
        auto it = by_owner.find(owner);
        if (it == by_owner.end() || it->second.empty()) return;
        GroundTruthLabel g;
        g.kind = LabelKind::Noise;
        g.episode = episode++;
        g.agent = owner;
        g.trade_ids = it->second;
        result.labels.push_back(std::move(g));
    };
    for (const auto& a : spec_.agents) {
        if (a.kind == AgentKind::Noise) noise_label(a.id);
    }
    noise_label(kReference);
    std::stable_sort(result.labels.begin(), result.labels.end(), [](const auto& x, const auto& y) {
        return x.trade_ids.front() < y.trade_ids.front();
    });
    return result;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec) {
    spec.validate();
    return Planner(spec).run();
}

}  // namespace arblens
