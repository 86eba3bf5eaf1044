#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "scc/field.hpp"

namespace scc {

/// splitmix64 finaliser; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Exp(rate) by inverse CDF. rate = +inf yields 0.
inline double exponential(Rng& rng, double rate) {
    if (std::isinf(rate)) return 0.0;
    return -std::log1p(-uniform01(rng)) / rate;
}

/// Uniform element of GF(p) by rejection.
inline std::uint64_t uniform_element(Rng& rng, const PrimeField& field) {
    const std::uint64_t p = field.modulus();
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % p);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % p;
}

/// Source of key material for the codecs.
class KeySource {
public:
    virtual ~KeySource() = default;
    virtual std::uint64_t next(const PrimeField& field) = 0;
};

/// Reproducible keys from a seed.
class SeededKeys final : public KeySource {
public:
    explicit SeededKeys(std::uint64_t seed) : rng_(seed) {}
    std::uint64_t next(const PrimeField& field) override { return uniform_element(rng_, field); }

private:
    Rng rng_;
};

/// Keys from the operating system's entropy source.
class EntropyKeys final : public KeySource {
public:
    std::uint64_t next(const PrimeField& field) override {
        const std::uint64_t p = field.modulus();
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % p);
        std::uint64_t v;
        do {
            v = (static_cast<std::uint64_t>(dev_()) << 32) | dev_();
        } while (v >= limit);
        return v % p;
    }

private:
    std::random_device dev_;
};

/// All keys zero. Test hook for the key-free degenerate encodings.
class ZeroKeys final : public KeySource {
public:
    std::uint64_t next(const PrimeField&) override { return 0; }
};

} // namespace scc
