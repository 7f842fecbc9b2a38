#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace skewgraph {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational scalar used throughout the set/map algebra.
///
/// All fiber geometry (breakpoints, interval endpoints, composed slopes) is
/// kept in this type so that identities like image(compose(w), u) ==
/// iterated image hold as genuine equalities, not tolerance checks.
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }

inline BigInt num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt den(const Rational& r) { return boost::multiprecision::denominator(r); }

inline Rational rational_abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

/// Exact dyadic 2^-r, the d0 value of windows first disagreeing at radius r.
inline Rational dyadic_unit(std::int64_t r) {
    if (r < 0) throw std::invalid_argument("dyadic_unit needs r >= 0");
    return Rational(BigInt(1), BigInt(1) << static_cast<unsigned>(r));
}

/// floor(r) as a BigInt (works for negative values too).
inline BigInt rational_floor(const Rational& r) {
    BigInt n = num(r), d = den(r);
    BigInt q = n / d;
    if (n < 0 && q * d != n) --q;
    return q;
}

/// Largest grid point k/2^bits <= r. Used by the outward-rounded evaluation
/// paths to stop numerator/denominator growth on long iterations.
inline Rational round_down_dyadic(const Rational& r, unsigned bits) {
    BigInt scaled = rational_floor(Rational(num(r) << bits, den(r)));
    return Rational(scaled, BigInt(1) << bits);
}

/// Smallest grid point k/2^bits >= r.
inline Rational round_up_dyadic(const Rational& r, unsigned bits) {
    Rational down = round_down_dyadic(r, bits);
    if (down == r) return down;
    return down + Rational(1, BigInt(1) << bits);
}

/// Nearest grid point (ties toward -inf); for point orbits where the
/// direction of the error does not matter.
inline Rational round_nearest_dyadic(const Rational& r, unsigned bits) {
    Rational half(1, BigInt(1) << (bits + 1));
    return round_down_dyadic(r + half, bits);
}

/// Parses "p/q", decimal ("0.25", "-1.5e-3" is NOT accepted; plain decimals
/// only), or integer text into an exact Rational.
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        BigInt p(text.substr(0, slash));
        BigInt q(text.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
        return Rational(p, q);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(BigInt(text));
    std::string head = text.substr(0, dot), tail = text.substr(dot + 1);
    if (tail.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("bad decimal literal '" + text + "'");
    bool neg = !head.empty() && head[0] == '-';
    if (head == "-" || head.empty()) head = neg ? "-0" : "0";
    BigInt ipart(head);
    BigInt scale = 1;
    for (size_t i = 0; i < tail.size(); ++i) scale *= 10;
    BigInt frac = tail.empty() ? BigInt(0) : BigInt(tail);
    BigInt total = boost::multiprecision::abs(ipart) * scale + frac;
    if (neg || ipart < 0) total = -total;
    return Rational(total, scale);
}

/// Exact text form, "p/q" or plain integer when q == 1.
inline std::string rational_to_string(const Rational& r) {
    std::string s = num(r).str();
    if (den(r) != 1) s += "/" + den(r).str();
    return s;
}

}  // namespace skewgraph
