#pragma once

#include <cstdint>
#include <string>

#include "scc/errors.hpp"

namespace scc {

inline constexpr std::uint64_t kDefaultModulus = 65537;

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    b %= m;
    while (e) {
        if (e & 1) r = mulmod(r, b, m);
        b = mulmod(b, b, m);
        e >>= 1;
    }
    return r;
}

} // namespace detail

/// Deterministic Miller-Rabin, exact for every 64-bit input.
inline bool is_prime(std::uint64_t v) {
    if (v < 2) return false;
    for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (v % q == 0) return v == q;
    }
    std::uint64_t d = v - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = detail::powmod(a, d, v);
        if (x == 1 || x == v - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = detail::mulmod(x, x, v);
            if (x == v - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

/// Arithmetic in GF(p) for a 64-bit prime p. Values are plain integers in [0, p).
/// Immutable once built, so one instance may be shared freely across threads.
class PrimeField {
public:
    explicit PrimeField(std::uint64_t p = kDefaultModulus) : p_(p) {
        if (!is_prime(p))
            throw InvalidArgument("field modulus " + std::to_string(p) + " is not prime");
    }

    std::uint64_t modulus() const { return p_; }

    std::uint64_t reduce(std::uint64_t v) const { return v % p_; }

    std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
        std::uint64_t s = a + b;
        return (s < a || s >= p_) ? s - p_ : s;
    }

    std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
        return a >= b ? a - b : a + (p_ - b);
    }

    std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : p_ - a; }

    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return detail::mulmod(a, b, p_); }

    /// Extended Euclid.
    std::uint64_t inv(std::uint64_t a) const {
        if (a % p_ == 0) throw DivisionByZero("inverse of zero in GF(" + std::to_string(p_) + ")");
        __int128 r0 = p_, r1 = a % p_;
        __int128 s0 = 0, s1 = 1;
        while (r1 != 0) {
            __int128 q = r0 / r1;
            __int128 r2 = r0 - q * r1;
            r0 = r1;
            r1 = r2;
            __int128 s2 = s0 - q * s1;
            s0 = s1;
            s1 = s2;
        }
        __int128 res = s0 % static_cast<__int128>(p_);
        if (res < 0) res += p_;
        return static_cast<std::uint64_t>(res);
    }

    std::uint64_t div(std::uint64_t a, std::uint64_t b) const { return mul(a, inv(b)); }

    std::uint64_t pow(std::uint64_t base, std::uint64_t e) const { return detail::powmod(base, e, p_); }

    bool operator==(const PrimeField& o) const { return p_ == o.p_; }

private:
    std::uint64_t p_;
};

/// A value tagged with its field; arithmetic across different moduli is a UsageError.
class FieldElement {
public:
    FieldElement(const PrimeField& field, std::uint64_t value)
        : field_(field), value_(field.reduce(value)) {}

    std::uint64_t value() const { return value_; }
    const PrimeField& field() const { return field_; }

    FieldElement inv() const { return {field_, field_.inv(value_)}; }

    friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
        check_same(a, b);
        return {a.field_, a.field_.add(a.value_, b.value_)};
    }
    friend FieldElement operator-(const FieldElement& a, const FieldElement& b) {
        check_same(a, b);
        return {a.field_, a.field_.sub(a.value_, b.value_)};
    }
    friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
        check_same(a, b);
        return {a.field_, a.field_.mul(a.value_, b.value_)};
    }
    friend FieldElement operator/(const FieldElement& a, const FieldElement& b) {
        check_same(a, b);
        return {a.field_, a.field_.div(a.value_, b.value_)};
    }
    friend bool operator==(const FieldElement& a, const FieldElement& b) {
        return a.field_ == b.field_ && a.value_ == b.value_;
    }

private:
    static void check_same(const FieldElement& a, const FieldElement& b) {
        if (!(a.field_ == b.field_))
            throw UsageError("field elements from GF(" + std::to_string(a.field_.modulus()) +
                             ") and GF(" + std::to_string(b.field_.modulus()) + ") mixed");
    }

    PrimeField field_;
    std::uint64_t value_;
};

} // namespace scc
