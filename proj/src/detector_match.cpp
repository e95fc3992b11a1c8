#include "arblens/core.hpp"
#include "arblens/detector.hpp"
#include "arblens/error.hpp"

#include <algorithm>
#include <numeric>

namespace arblens {

void DetectorConfig::validate() const {
    auto positive = [](TimestampMs v, const char* name) {
        if (v <= 0) throw Error(Errc::InvalidArgument, std::string(name) + " must be > 0");
    };
    positive(delta_t, "delta_t");
    positive(competition_window, "competition_window");
    positive(exit_window, "exit_window");
    positive(vwap_window, "vwap_window");
    if (reference_offset < 0) throw Error(Errc::InvalidArgument, "reference_offset must be >= 0");
    if (book_tolerance < 0) throw Error(Errc::InvalidArgument, "book_tolerance must be >= 0");
    if (max_subset_candidates == 0) throw Error(Errc::InvalidArgument, "max_subset_candidates must be > 0");
}

TimestampMs DetectorConfig::reach() const { return std::max(2 * delta_t, competition_window + exit_window); }

DetectorConfig DetectorConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(Errc::Parse, "detector config must be a JSON object");
    DetectorConfig c;
    try {
        c.delta_t = j.value("delta_t_ms", c.delta_t);
        c.competition_window = j.value("competition_window_ms", c.competition_window);
        c.exit_window = j.value("exit_window_ms", c.exit_window);
        c.max_subset_candidates = j.value("max_subset_candidates", c.max_subset_candidates);
        c.reference_offset = j.value("reference_offset_ms", c.reference_offset);
        c.book_tolerance = j.value("book_tolerance_ms", c.book_tolerance);
        c.vwap_window = j.value("vwap_window_ms", c.vwap_window);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, std::string("detector config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json DetectorConfig::to_json() const {
    return {{"delta_t_ms", delta_t},
            {"competition_window_ms", competition_window},
            {"exit_window_ms", exit_window},
            {"max_subset_candidates", max_subset_candidates},
            {"reference_offset_ms", reference_offset},
            {"book_tolerance_ms", book_tolerance},
            {"vwap_window_ms", vwap_window}};
}

TakerDirection taker_direction(const Trade& t, const Universe& universe) {
    const auto& l = universe.listing(t.pair);
    return t.sell ? TakerDirection{l.base.symbol, l.quote.symbol} : TakerDirection{l.quote.symbol, l.base.symbol};
}

Decimal taker_spent(const Trade& t, const Universe&) { return t.sell ? t.amount : t.amount * t.price; }

Decimal taker_received(const Trade& t, const Universe&) { return t.sell ? t.amount * t.price : t.amount; }

QuantityMatch quantities_match(const Trade& a, const Trade& b, const Universe& universe, Decimal taker_rate) {
    const auto da = taker_direction(a, universe);
    const auto db = taker_direction(b, universe);
    if (da.to != db.from) {
        throw Error(Errc::InvalidPairing, "trades " + std::to_string(a.id) + " and " + std::to_string(b.id) +
                                              " do not chain through a common coin");
    }
    const auto& lb = universe.listing(b.pair);
    // One quantity increment of b, expressed in the common coin.
    const Decimal dx = lb.base.symbol == db.from ? lb.qty_increment : lb.qty_increment * b.price;
    const Decimal received = taker_received(a, universe);
    QuantityMatch m;
    m.diff = received - taker_spent(b, universe);
    m.lower = -dx;
    m.upper = received * taker_rate + dx;
    m.match = m.lower <= m.diff && m.diff <= m.upper;
    return m;
}

std::string_view sequence_kind_name(SequenceKind k) {
    return k == SequenceKind::Triangular ? "TRIANGULAR" : "INDIRECT";
}

namespace {

nlohmann::json decimals(const std::vector<Decimal>& v) {
    auto out = nlohmann::json::array();
    for (const auto& d : v) out.push_back(d.to_string());
    return out;
}

nlohmann::json optional_decimal(const std::optional<Decimal>& d) {
    return d ? nlohmann::json(d->to_string()) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json DetectedSequence::to_json() const {
    return {{"type", "sequence"},
            {"kind", sequence_kind_name(kind)},
            {"legs", legs},
            {"coins", coins},
            {"quantities", decimals(quantities)},
            {"prices", decimals(prices)},
            {"latencies_ms", latencies},
            {"profitability_bps", optional_decimal(profitability_bps)},
            {"reference", price_source_name(reference)}};
}

std::optional<Decimal> conversion_profitability(const DetectedSequence& seq, const ReferencePrice& ref,
                                                Decimal taker_rate, const Universe& universe) {
    if (!ref.available()) return std::nullopt;
    const auto direct = ref.ratio(universe.require_direction(seq.coins.front(), seq.coins.back()));
    if (!direct || !direct->is_positive()) return std::nullopt;
    Decimal gross(1);
    for (std::size_t i = 0; i < seq.prices.size(); ++i) {
        const auto& l = universe.listing(*universe.pair_between(seq.coins[i], seq.coins[i + 1]));
        gross = gross * fill_ratio(seq.prices[i], l.base.symbol == seq.coins[i]);
    }
    return net_return_bps(gross, taker_rate, seq.prices.size(), *direct);
}

std::string_view exit_kind_name(ExitKind k) {
    switch (k) {
        case ExitKind::FullExit: return "FULL_EXIT";
        case ExitKind::PartialExit: return "PARTIAL_EXIT";
        case ExitKind::None: break;
    }
    return "NONE";
}

nlohmann::json ExitClassification::to_json() const {
    nlohmann::json j{{"kind", exit_kind_name(kind)},
                     {"exits", exits},
                     {"coin_count", coin_count},
                     {"realized_bps", optional_decimal(realized_bps)}};
    if (kind == ExitKind::PartialExit) j["other_targets"] = other_targets;
    if (truncated) j["truncated"] = true;
    return j;
}

Decimal partial_exit_loss(const PartialExitProblem& problem) {
    if (problem.q.size() != problem.p.size()) {
        throw Error(Errc::InvalidArgument, "partial exit needs one price per quantity");
    }
    if (!problem.p12.is_positive() || !problem.p13.is_positive()) {
        throw Error(Errc::InvalidPrice, "p12 and p13 must be > 0");
    }
    Decimal loss;
    for (std::size_t j = 0; j < problem.q.size(); ++j) {
        if (!problem.p[j].is_positive()) {
            throw Error(Errc::InvalidPrice, "exit price " + std::to_string(j) + " must be > 0");
        }
        const Decimal num = Decimal::mul(problem.q[j], problem.p13, Rounding::HalfEven);
        const Decimal den = Decimal::mul(problem.p12, problem.p[j], Rounding::HalfEven);
        loss += Decimal::div(num, den, Rounding::HalfEven);
    }
    return loss;
}

std::optional<std::vector<std::size_t>> find_exit_subset(const std::vector<Decimal>& quantities, Decimal lo,
                                                         Decimal hi, std::size_t limit, bool* truncated) {
    const std::size_t n = std::min(limit, quantities.size());
    if (truncated) *truncated = quantities.size() > limit;
    // Largest first, so the running sum overshoots early and prunes.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quantities[b] < quantities[a]; });
    std::vector<Decimal> suffix(n + 1);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + quantities[order[i]];

    std::vector<std::size_t> chosen;
    auto dfs = [&](auto&& self, std::size_t pos, Decimal sum) -> bool {
        if (!chosen.empty() && lo <= sum && sum <= hi) return true;
        if (pos == n || sum + suffix[pos] < lo) return false;
        if (sum + quantities[order[pos]] <= hi) {
            chosen.push_back(order[pos]);
            if (self(self, pos + 1, sum + quantities[order[pos]])) return true;
            chosen.pop_back();
        }
        return self(self, pos + 1, sum);
    };
    if (!dfs(dfs, 0, Decimal())) return std::nullopt;
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::string_view member_role_name(MemberRole r) {
    switch (r) {
        case MemberRole::Winner: return "WINNER";
        case MemberRole::Loser: return "LOSER";
        case MemberRole::Undetermined: break;
    }
    return "UNDETERMINED";
}

std::size_t CompetitionCluster::winners() const {
    return static_cast<std::size_t>(std::count_if(members.begin(), members.end(),
                                                  [](const auto& m) { return m.role == MemberRole::Winner; }));
}

std::size_t CompetitionCluster::losers() const {
    return static_cast<std::size_t>(std::count_if(members.begin(), members.end(),
                                                  [](const auto& m) { return m.role == MemberRole::Loser; }));
}

nlohmann::json CompetitionCluster::to_json() const {
    auto ms = nlohmann::json::array();
    for (const auto& m : members) {
        ms.push_back({{"legs", m.legs},
                      {"from", m.from},
                      {"q1", m.q1.to_string()},
                      {"profitability_bps", optional_decimal(m.profitability_bps)},
                      {"role", member_role_name(m.role)},
                      {"capacity_exhausted", m.capacity_exhausted},
                      {"exit", m.exit.to_json()}});
    }
    return {{"type", "cluster"}, {"id", id}, {"c2", c2}, {"c3", c3}, {"members", ms}};
}

}  // namespace arblens
