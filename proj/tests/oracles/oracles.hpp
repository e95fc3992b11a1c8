#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// evaluation paths (exact rationals, brute force, enumeration) so they can be
// used as independent checks.

#include "arblens/core.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

Rational to_rational(arblens::Decimal d);
double to_double(const Rational& r);

/// Rational exchange ratio, no truncation.
Rational exact_ratio(const arblens::Direction& dir, const arblens::BookTop& top);

/// Largest q (a multiple of `step`) whose forward push q * psi_1 * ... * psi_{i-1}
/// stays within every eta_i, found by binary search over exact rationals.
arblens::Decimal brute_force_capacity(const std::vector<arblens::Direction>& legs, const arblens::Market& market,
                                      arblens::Decimal step);

/// Net cycle gain rebuilt by replaying each leg through convert_leg with the fee charged
/// at the flat BNB rate, summed in exact rationals.
Rational replay_cycle_gain(arblens::Decimal capital, const arblens::Cycle& cycle, const arblens::Market& market,
                           const arblens::BnbRates& rates, arblens::Decimal flat_fee);

/// All ordered triangles found by trying every coin permutation.
std::set<std::vector<std::string>> exhaustive_triangles(const arblens::Universe& universe);

/// Every subset (as index set) of `values` whose sum lies in [lo, hi].
std::vector<std::vector<std::size_t>> exhaustive_subsets(const std::vector<arblens::Decimal>& values,
                                                         arblens::Decimal lo, arblens::Decimal hi);

/// Seeded random triangle: three coins, random orientations, prices with at
/// most 8 decimals, depth and increments drawn per leg.
struct RandomTriangle {
    arblens::Universe universe;
    std::vector<std::pair<std::string, arblens::BookTop>> tops;
    arblens::Cycle cycle;
};
RandomTriangle random_triangle(std::mt19937_64& rng);

arblens::Decimal random_decimal(std::mt19937_64& rng, std::int64_t lo_units, std::int64_t hi_units, int places);

}  // namespace oracle
