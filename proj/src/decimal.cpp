#include "arblens/decimal.hpp"

#include "arblens/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstdio>
#include <limits>

namespace arblens {

namespace {

using Raw = Decimal::Raw;
using Wide = boost::multiprecision::int256_t;

constexpr Raw kRawMax = static_cast<Raw>((static_cast<unsigned __int128>(1) << 127) - 1);
constexpr Raw kRawMin = -kRawMax - 1;

template <class T>
T abs_of(const T& v) { return v < 0 ? T(-v) : v; }

// Quotient of n/d under `mode`. Relies on truncating `/` and numerator-signed `%`.
template <class T>
T rounded_quotient(const T& n, const T& d, Rounding mode) {
    T q = n / d;
    T r = n % d;
    if (r == 0) return q;
    const bool negative = (n < 0) != (d < 0);
    switch (mode) {
        case Rounding::TowardZero: return q;
        case Rounding::Floor: return negative ? T(q - 1) : q;
        case Rounding::Ceil: return negative ? q : T(q + 1);
        case Rounding::HalfEven: {
            T ar = abs_of(r);
            T rest = T(abs_of(d) - ar);
            bool up = ar > rest || (ar == rest && (q % 2) != 0);
            if (!up) return q;
            return negative ? T(q - 1) : T(q + 1);
        }
    }
    return q;
}

Wide widen(Raw v) {
    auto mag = static_cast<unsigned __int128>(v < 0 ? -(v + 1) : v);  // avoids overflow on kRawMin
    Wide w = Wide(static_cast<std::uint64_t>(mag >> 64));
    w <<= 64;
    w += Wide(static_cast<std::uint64_t>(mag));
    return v < 0 ? Wide(-w - 1) : w;
}

Raw narrow(const Wide& w) {
    if (w > widen(kRawMax) || w < widen(kRawMin)) {
        throw Error(Errc::OutOfRange, "decimal overflow");
    }
    const bool negative = w < 0;
    Wide mag = negative ? Wide(-(w + 1)) : w;
    auto lo = static_cast<std::uint64_t>(mag & Wide(std::numeric_limits<std::uint64_t>::max()));
    auto hi = static_cast<std::uint64_t>(mag >> 64);
    auto u = (static_cast<unsigned __int128>(hi) << 64) | lo;
    auto r = static_cast<Raw>(u);
    return negative ? -r - 1 : r;
}

Raw pow10_raw(int n) {
    Raw r = 1;
    for (int i = 0; i < n; ++i) r *= 10;
    return r;
}

std::string raw_to_digits(unsigned __int128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

}  // namespace

Decimal Decimal::pow10(int exponent) {
    if (exponent < -kScale || exponent > kScale) {
        throw Error(Errc::OutOfRange, "pow10 exponent " + std::to_string(exponent));
    }
    return from_raw(pow10_raw(kScale + exponent));
}

std::optional<Decimal> Decimal::try_parse(std::string_view text) {
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        negative = text[i] == '-';
        ++i;
    }
    std::string digits;
    int frac_digits = 0;
    bool seen_point = false;
    bool any_digit = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            any_digit = true;
            if (seen_point) ++frac_digits;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!any_digit) return std::nullopt;
    int exponent = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool exp_negative = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            exp_negative = text[i] == '-';
            ++i;
        }
        bool exp_digit = false;
        for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
            exponent = exponent * 10 + (text[i] - '0');
            if (exponent > 1000) return std::nullopt;
            exp_digit = true;
        }
        if (!exp_digit) return std::nullopt;
        if (exp_negative) exponent = -exponent;
    }
    if (i != text.size()) return std::nullopt;

    // value = digits * 10^(exponent - frac_digits); need raw = value * 10^18
    int shift = kScale + exponent - frac_digits;
    while (shift < 0) {
        if (digits.empty() || digits.back() != '0') return std::nullopt;
        digits.pop_back();
        ++shift;
    }
    Wide acc = 0;
    for (char c : digits) {
        acc = acc * 10 + (c - '0');
        if (acc > widen(kRawMax)) return std::nullopt;
    }
    for (int k = 0; k < shift; ++k) {
        acc *= 10;
        if (acc > widen(kRawMax)) return std::nullopt;
    }
    Raw raw = narrow(acc);
    return from_raw(negative ? -raw : raw);
}

Decimal Decimal::parse(std::string_view text) {
    auto d = try_parse(text);
    if (!d) throw Error(Errc::Parse, "not a decimal: '" + std::string(text) + "'");
    return *d;
}

Decimal Decimal::from_double(double value) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.18f", value);
    return parse(buf);
}

double Decimal::to_double() const {
    const Raw int_part = raw_ / kOne;
    const Raw frac_part = raw_ % kOne;
    return static_cast<double>(int_part) + static_cast<double>(frac_part) / 1e18;
}

std::string Decimal::to_string() const {
    const bool negative = raw_ < 0;
    auto mag = negative ? static_cast<unsigned __int128>(-(raw_ + 1)) + 1 : static_cast<unsigned __int128>(raw_);
    const auto one = static_cast<unsigned __int128>(kOne);
    std::string out = negative ? "-" : "";
    out += raw_to_digits(mag / one);
    auto frac = mag % one;
    if (frac != 0) {
        std::string f = raw_to_digits(frac);
        f.insert(0, static_cast<std::size_t>(kScale) - f.size(), '0');
        while (!f.empty() && f.back() == '0') f.pop_back();
        out += '.';
        out += f;
    }
    return out;
}

Decimal Decimal::round_to(int places, Rounding mode) const {
    if (places < 0 || places > kScale) throw Error(Errc::OutOfRange, "round_to places");
    const Raw unit = pow10_raw(kScale - places);
    return from_raw(rounded_quotient<Raw>(raw_, unit, mode) * unit);
}

Decimal Decimal::floor_to(Decimal increment) const {
    if (!increment.is_positive()) {
        throw Error(Errc::InvalidIncrement, "increment must be > 0, got " + increment.to_string());
    }
    return from_raw(rounded_quotient<Raw>(raw_, increment.raw_, Rounding::Floor) * increment.raw_);
}

bool Decimal::is_multiple_of(Decimal increment) const {
    if (!increment.is_positive()) {
        throw Error(Errc::InvalidIncrement, "increment must be > 0, got " + increment.to_string());
    }
    return raw_ % increment.raw_ == 0;
}

Decimal operator+(Decimal a, Decimal b) {
    Raw r;
    if (__builtin_add_overflow(a.raw(), b.raw(), &r)) throw Error(Errc::OutOfRange, "decimal overflow");
    return Decimal::from_raw(r);
}

Decimal operator-(Decimal a, Decimal b) {
    Raw r;
    if (__builtin_sub_overflow(a.raw(), b.raw(), &r)) throw Error(Errc::OutOfRange, "decimal overflow");
    return Decimal::from_raw(r);
}

Decimal Decimal::mul(Decimal a, Decimal b, Rounding mode) {
    Raw product;
    if (!__builtin_mul_overflow(a.raw_, b.raw_, &product)) {
        return from_raw(rounded_quotient<Raw>(product, kOne, mode));
    }
    Wide wide = widen(a.raw_) * widen(b.raw_);
    return from_raw(narrow(rounded_quotient<Wide>(wide, widen(kOne), mode)));
}

Decimal Decimal::div(Decimal a, Decimal b, Rounding mode) {
    if (b.is_zero()) throw Error(Errc::InvalidArgument, "division by zero");
    Raw scaled;
    if (!__builtin_mul_overflow(a.raw_, kOne, &scaled)) {
        return from_raw(rounded_quotient<Raw>(scaled, b.raw_, mode));
    }
    Wide wide = widen(a.raw_) * widen(kOne);
    return from_raw(narrow(rounded_quotient<Wide>(wide, widen(b.raw_), mode)));
}

}  // namespace arblens
