#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace arblens {

enum class Rounding {
    TowardZero,
    Floor,
    Ceil,
    HalfEven,
};

// Exact signed fixed-point number with 18 fractional digits.
//
// Exchange quantities and prices carry at most 8 fractional digits, so the
// product of any two of them is exact. Anything that can lose digits
// (multiplication, division, rescaling) takes an explicit Rounding; the
// operator forms truncate toward zero.
class Decimal {
public:
    using Raw = __int128;
    static constexpr int kScale = 18;
    static constexpr Raw kOne = static_cast<Raw>(1'000'000'000'000'000'000LL);

    constexpr Decimal() = default;
    constexpr explicit Decimal(std::int64_t units) : raw_(static_cast<Raw>(units) * kOne) {}

    [[nodiscard]] static constexpr Decimal from_raw(Raw raw) {
        Decimal d;
        d.raw_ = raw;
        return d;
    }
    /// 10^-places, e.g. pow10(-8) == 0.00000001. Valid for places in [-18, 18].
    [[nodiscard]] static Decimal pow10(int exponent);

    /// Accepts `[-+]digits[.digits]` and an optional `e[-+]digits` exponent.
    /// Digits beyond the 18th fractional place are rejected, not rounded.
    [[nodiscard]] static std::optional<Decimal> try_parse(std::string_view text);
    [[nodiscard]] static Decimal parse(std::string_view text);
    /// Nearest representable value; only for non-core paths (configs, RNG output).
    [[nodiscard]] static Decimal from_double(double value);

    [[nodiscard]] constexpr Raw raw() const { return raw_; }
    [[nodiscard]] double to_double() const;
    /// Canonical form: no trailing fractional zeros, "0" for zero.
    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] constexpr bool is_zero() const { return raw_ == 0; }
    [[nodiscard]] constexpr bool is_negative() const { return raw_ < 0; }
    [[nodiscard]] constexpr bool is_positive() const { return raw_ > 0; }
    [[nodiscard]] constexpr Decimal abs() const { return from_raw(raw_ < 0 ? -raw_ : raw_); }

    /// Rescale to `places` fractional digits (0..18).
    [[nodiscard]] Decimal round_to(int places, Rounding mode) const;
    /// Largest integer multiple of `increment` not above this value.
    [[nodiscard]] Decimal floor_to(Decimal increment) const;
    [[nodiscard]] bool is_multiple_of(Decimal increment) const;

    [[nodiscard]] static Decimal mul(Decimal a, Decimal b, Rounding mode);
    [[nodiscard]] static Decimal div(Decimal a, Decimal b, Rounding mode);

    constexpr auto operator<=>(const Decimal&) const = default;

    constexpr Decimal operator-() const { return from_raw(-raw_); }
    friend Decimal operator+(Decimal a, Decimal b);
    friend Decimal operator-(Decimal a, Decimal b);
    friend Decimal operator*(Decimal a, Decimal b) { return mul(a, b, Rounding::TowardZero); }
    friend Decimal operator/(Decimal a, Decimal b) { return div(a, b, Rounding::TowardZero); }
    Decimal& operator+=(Decimal o) { return *this = *this + o; }
    Decimal& operator-=(Decimal o) { return *this = *this - o; }

private:
    Raw raw_ = 0;
};

[[nodiscard]] inline Decimal min(Decimal a, Decimal b) { return b < a ? b : a; }
[[nodiscard]] inline Decimal max(Decimal a, Decimal b) { return a < b ? b : a; }

namespace literals {
inline Decimal operator""_d(const char* text, std::size_t len) {
    return Decimal::parse(std::string_view(text, len));
}
inline Decimal operator""_d(unsigned long long units) {
    return Decimal(static_cast<std::int64_t>(units));
}
}  // namespace literals

}  // namespace arblens

template <>
struct std::hash<arblens::Decimal> {
    std::size_t operator()(const arblens::Decimal& d) const noexcept {
        auto r = static_cast<unsigned __int128>(d.raw());
        return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(r) ^
                                          static_cast<std::uint64_t>(r >> 64) * 0x9e3779b97f4a7c15ULL);
    }
};
