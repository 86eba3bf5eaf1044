#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>

#include "scc/errors.hpp"
#include "scc/field.hpp"

namespace scc {

/// An (n, k, z) system: n workers, any k reconstruct, any z colluding learn nothing.
struct SystemParams {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t z = 0;

    void validate() const {
        if (z < 1) throw InvalidArgument("z must be at least 1 (got " + std::to_string(z) + ")");
        if (!(z < k)) throw InvalidArgument("require z < k (got z=" + std::to_string(z) + ", k=" + std::to_string(k) + ")");
        if (!(k <= n)) throw InvalidArgument("require k <= n (got k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    }

    void validate_for(const PrimeField& field) const {
        validate();
        if (field.modulus() < n + 1)
            throw InvalidArgument("field modulus " + std::to_string(field.modulus()) + " must be at least n+1 = " +
                                  std::to_string(n + 1));
    }

    /// LCM{k-z+1, ..., n-z}; 1 when n == k.
    std::uint64_t subshare_count() const {
        std::uint64_t b = 1;
        for (std::size_t v = k - z + 1; v <= n - z; ++v) b = std::lcm(b, static_cast<std::uint64_t>(v));
        return b;
    }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;

    std::string to_string() const {
        return "(" + std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(z) + ")";
    }
};

/// A reduced nonnegative fraction.
struct Fraction {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    static Fraction make(std::uint64_t num, std::uint64_t den) {
        if (den == 0) throw InvalidArgument("zero denominator");
        std::uint64_t g = std::gcd(num, den);
        return {num / g, den / g};
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// CC(d) = alpha_d = (k - z) / (d - z), the fraction of each share downloaded from d workers.
inline Fraction communication_cost(std::size_t d, const SystemParams& params) {
    params.validate();
    if (d < params.k || d > params.n)
        throw InvalidArgument("d=" + std::to_string(d) + " outside {k..n} = {" + std::to_string(params.k) + ".." +
                              std::to_string(params.n) + "}");
    return Fraction::make(params.k - params.z, d - params.z);
}

/// Shifted exponential delay law of the whole task A x: shift c, rate lambda.
/// lambda = +inf is allowed and means the exponential part vanishes.
struct DelayParams {
    double lambda = 1.0;
    double c = 1.0;

    void validate() const {
        if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
        if (!(c >= 0) || std::isinf(c)) throw InvalidArgument("c must be finite and nonnegative");
    }
};

} // namespace scc
