#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arblens {

enum class Errc {
    InvalidIncrement,
    NoLiquidity,
    BelowMinimum,
    MissingRate,
    CapacityExceeded,
    InvalidComparison,
    InvalidPairing,
    InvalidPrice,
    InvalidArgument,
    Parse,
    UnknownSymbol,
    DuplicateId,
    OutOfRange,
    InvalidSchedule,
    InvalidOrder,
    OrderRejected,
    ScenarioConfig,
    Consistency,
    Io,
};

[[nodiscard]] constexpr std::string_view errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::InvalidIncrement: return "invalid-increment";
        case Errc::NoLiquidity: return "no-liquidity";
        case Errc::BelowMinimum: return "below-minimum";
        case Errc::MissingRate: return "missing-rate";
        case Errc::CapacityExceeded: return "capacity-exceeded";
        case Errc::InvalidComparison: return "invalid-comparison";
        case Errc::InvalidPairing: return "invalid-pairing";
        case Errc::InvalidPrice: return "invalid-price";
        case Errc::InvalidArgument: return "invalid-argument";
        case Errc::Parse: return "parse";
        case Errc::UnknownSymbol: return "unknown-symbol";
        case Errc::DuplicateId: return "duplicate-id";
        case Errc::OutOfRange: return "out-of-range";
        case Errc::InvalidSchedule: return "invalid-schedule";
        case Errc::InvalidOrder: return "invalid-order";
        case Errc::OrderRejected: return "order-rejected";
        case Errc::ScenarioConfig: return "scenario-config";
        case Errc::Consistency: return "consistency";
        case Errc::Io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace arblens
