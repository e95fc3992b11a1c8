#pragma once

// Exchange-ratio arithmetic for centralized order books: ratios, capacities,
// increment rounding, residuals, fees, cycle gain and conversion proceeds.
//
// Notation follows the usual convention for a conversion (c_i -> c_j) over a
// listed pair: when c_j/c_i is listed the holder buys the base at the ask
// (Orientation::FromIsQuote); when c_i/c_j is listed the holder sells the base
// at the bid (Orientation::FromIsBase). All functions are pure.

#include "arblens/model.hpp"
#include "arblens/universe.hpp"

#include <array>
#include <map>
#include <vector>

namespace arblens {

/// floor(x / inc) * inc. Throws Errc::InvalidIncrement when inc <= 0.
[[nodiscard]] Decimal round_down(Decimal x, Decimal inc);

/// psi: proceeds of converting one unit of `dir.from`.
[[nodiscard]] Decimal exchange_ratio(const Direction& dir, const BookTop& top);
/// eta: largest quantity of `dir.from` the top level absorbs.
[[nodiscard]] Decimal pair_capacity(const Direction& dir, const BookTop& top);
/// ask - bid of the listed pair; identical for both directions.
[[nodiscard]] Decimal bid_ask_spread(const Direction& dir, const BookTop& top);
/// T(q): the base quantity passed to the exchange (before increment rounding).
[[nodiscard]] Decimal trade_quantity(const Direction& dir, Decimal q, const BookTop& top);
/// r(q): the part of q (in `dir.from` units) stranded by quantity-increment rounding.
[[nodiscard]] Decimal residual(const Direction& dir, Decimal q, const BookTop& top);
/// psi * (q - r(q)), evaluated without the rounding error of a reciprocal psi.
[[nodiscard]] Decimal converted_amount(const Direction& dir, Decimal q, const BookTop& top);

/// One leg at top of book: round to increment, price, then charge the fee.
/// With `fee.pay_in_bnb` the fee is reported but not deducted from `net`.
[[nodiscard]] LegResult convert_leg(Decimal q, const Direction& dir, const BookTop& top, const FeeModel& fee,
                                    Role role);

/// b: value of one unit of `coin` in BNB.
[[nodiscard]] Decimal bnb_rate(const Coin& coin, const BnbRates& rates);

/// Largest quantity of the first coin that fits through every leg's top level.
[[nodiscard]] Decimal path_capacity(const std::vector<Direction>& legs, const Market& market);
[[nodiscard]] Decimal cycle_capacity(const Cycle& cycle, const Market& market);
[[nodiscard]] Decimal conversion_capacity(const ConversionPath& path, const Market& market);

/// Balances [q_1, ..., q_{n+1}] where q_1 = Q - r_1(Q) and
/// q_{i+1} = psi_i (q_i - r_i(q_i)). Throws Errc::CapacityExceeded when Q is
/// above the capacity of the legs.
[[nodiscard]] std::vector<Decimal> cycle_balances(Decimal capital, const Cycle& cycle, const Market& market);
[[nodiscard]] std::vector<Decimal> path_balances(Decimal capital, const std::vector<Direction>& legs,
                                                 const Market& market);

/// Gain in base-coin terms: balance delta plus residual value minus BNB fees
/// (flat rate `fee.bnb_flat`). Open iff the gain is strictly positive.
[[nodiscard]] GainBreakdown cycle_gain(Decimal capital, const Cycle& cycle, const Market& market,
                                       const BnbRates& rates, const FeeModel& fee);

/// Quantity of the target coin obtained from q units of the source, counting
/// residual value and BNB fees in target terms.
[[nodiscard]] Decimal conversion_proceeds(Decimal q, const ConversionPath& path, const Market& market,
                                          const BnbRates& rates, const FeeModel& fee);

struct Verdict {
    Decimal q_used;
    Decimal proceeds_first;
    Decimal proceeds_second;
    bool first_profitable = false;
};

/// Compares two conversions with common endpoints at the smaller capacity.
[[nodiscard]] Verdict compare_conversions(const ConversionPath& first, const ConversionPath& second,
                                          const Market& market, const BnbRates& rates, const FeeModel& fee);

enum class CycleBucket { Btc, Bnb, Alts, Stable, Other };
inline constexpr std::array<CycleBucket, 5> kCycleBuckets{CycleBucket::Btc, CycleBucket::Bnb, CycleBucket::Alts,
                                                          CycleBucket::Stable, CycleBucket::Other};
[[nodiscard]] std::string_view cycle_bucket_name(CycleBucket b);
[[nodiscard]] CycleBucket bucket_of(const Coin& base);

struct CycleCensus {
    std::vector<Cycle> cycles;
    std::map<CycleBucket, std::size_t> counts;  // every bucket present, possibly zero

    [[nodiscard]] std::size_t total() const { return cycles.size(); }
};

/// Every ordered cycle of `length` distinct coins over listed pairs, in a
/// deterministic order (base coin, then lexicographic path).
[[nodiscard]] CycleCensus enumerate_cycles(const Universe& universe, std::size_t length = 3);

/// Proceeds ratio of a fill seen from its aggressor: price when the aggressor
/// sold the base, 1/price when it bought.
[[nodiscard]] Decimal fill_ratio(Decimal price, bool sold_base);

/// 10^4 * (gross_ratio * (1 - fee_rate)^legs / reference - 1), rounded
/// half-even to 8 places. Throws Errc::InvalidPrice for a non-positive reference.
[[nodiscard]] Decimal net_return_bps(Decimal gross_ratio, Decimal fee_rate, std::size_t legs, Decimal reference);

}  // namespace arblens
