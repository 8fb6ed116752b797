#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace obm {

using BigInt = boost::multiprecision::cpp_int;

// Every probability, fractional degree and dual value in this library is an
// exact rational. All invariant checks compare rationals, never floats.
using Rat = boost::multiprecision::cpp_rational;

struct ObmError : std::runtime_error {
    explicit ObmError(const std::string& msg) : std::runtime_error(msg) {}
};

inline Rat rat(long long num, long long den = 1) { return Rat(BigInt(num), BigInt(den)); }

// 2^-e as an exact rational, e >= 0.
inline Rat pow2_inv(unsigned e) { return Rat(BigInt(1), BigInt(1) << e); }

// 2^e as an exact rational, e >= 0.
inline Rat pow2(unsigned e) { return Rat(BigInt(1) << e, BigInt(1)); }

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Canonical text form: "p" for integers, "p/q" otherwise.
inline std::string rat_to_string(const Rat& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

// Parses "p" or "p/q" with q > 0. Returns nullopt on malformed input.
inline std::optional<Rat> rat_from_string(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            return Rat(BigInt(s));
        }
        std::string num = s.substr(0, slash);
        std::string den = s.substr(slash + 1);
        if (num.empty() || den.empty()) return std::nullopt;
        BigInt q(den);
        if (q <= 0) return std::nullopt;
        return Rat(BigInt(num), q);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Minimal b such that r = a/2^b with integral a, if the reduced denominator is
// a power of two; nullopt otherwise.
inline std::optional<unsigned> dyadic_bits(const Rat& r) {
    BigInt d = denominator(r);
    unsigned b = 0;
    while (d > 1) {
        if (d % 2 != 0) return std::nullopt;
        d >>= 1;
        ++b;
    }
    return b;
}

}  // namespace obm
