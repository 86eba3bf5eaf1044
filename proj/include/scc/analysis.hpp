#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <math.h>
#include <string>
#include <vector>

#include "scc/errors.hpp"
#include "scc/params.hpp"
#include "scc/quadrature.hpp"

namespace scc {

/// A scalar together with the d that attains it (0 when not applicable).
struct AnalysisResult {
    double value = 0;
    std::size_t d = 0;
};

/// H_n = 1 + 1/2 + ... + 1/n, H_0 = 0.
inline double harmonic(std::size_t n) {
    double h = 0;
    for (std::size_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
    return h;
}

namespace detail {

/// Reentrant log-gamma; std::lgamma may write the global signgam.
inline double log_gamma(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

inline double log_binomial(std::size_t n, std::size_t r) {
    return log_gamma(static_cast<double>(n) + 1) - log_gamma(static_cast<double>(r) + 1) -
           log_gamma(static_cast<double>(n - r) + 1);
}

inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

/// e^{-q lambda c / a}, with the convention that c = 0 gives 1 even for infinite lambda.
inline double decay(double q, const DelayParams& delay, double a) {
    if (delay.c == 0) return 1.0;
    return std::exp(-q * delay.lambda * delay.c / a);
}

inline void check_inputs(const SystemParams& params, const DelayParams& delay) {
    params.validate();
    delay.validate();
}

/// CDF of the exponential part of one worker's time, Exp(lambda (k - z)).
inline double residual_cdf(double x, const SystemParams& params, const DelayParams& delay) {
    if (!(x > 0)) return 0.0;
    return -std::expm1(-delay.lambda * static_cast<double>(params.k - params.z) * x);
}

/// t_j = max{((j - z) t - c) / (k - z), 0}: the residual time worker order statistic j may
/// take for decoding from j workers to finish by t.
inline double threshold(double t, std::size_t j, const SystemParams& params, const DelayParams& delay) {
    const double v = (static_cast<double>(j - params.z) * t - delay.c) / static_cast<double>(params.k - params.z);
    return v > 0 ? v : 0.0;
}

} // namespace detail

/// min_d (H_n - H_{n-d}) / (lambda (d - z)) + c / (d - z).
inline AnalysisResult upper_bound_mean_tsc(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    const double hn = harmonic(params.n);
    AnalysisResult best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t d = params.k; d <= params.n; ++d) {
        const double dz = static_cast<double>(d - params.z);
        const double v = (hn - harmonic(params.n - d)) / (delay.lambda * dz) + delay.c / dz;
        if (v < best.value) best = {v, d};
    }
    return best;
}

/// c/(n - z) + max_d sum_{i<k} C(n,i) sum_{j<=i} C(i,j) 2(-1)^j / (lambda (2(n-i+j)(d-z) + (n-d)(n-d+1))).
///
/// The inner alternating sum equals B(a/b, i+1)/b with a = 2(n-i)(d-z) + (n-d)(n-d+1) and
/// b = 2(d-z), which is evaluated instead to stay accurate for large n.
inline AnalysisResult lower_bound_mean_tsc(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    const std::size_t n = params.n, k = params.k, z = params.z;
    AnalysisResult best{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t d = k; d <= n; ++d) {
        const double b = 2.0 * static_cast<double>(d - z);
        double s = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = 2.0 * static_cast<double>((n - i) * (d - z)) + static_cast<double>((n - d) * (n - d + 1));
            s += std::exp(detail::log_binomial(n, i) + detail::log_beta(a / b, static_cast<double>(i) + 1)) / b;
        }
        const double v = 2.0 * s / delay.lambda;
        if (v > best.value) best = {v, d};
    }
    best.value += delay.c / static_cast<double>(n - z);
    return best;
}

/// Upper bound with H_n replaced by log bounds: log(n) < H_n < log(n+1).
inline AnalysisResult loose_upper_bound_mean_tsc(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    const double n = static_cast<double>(params.n);
    AnalysisResult best;
    {
        const double nz = static_cast<double>(params.n - params.z);
        best = {std::log(n + 1) / (delay.lambda * nz) + delay.c / nz, params.n};
    }
    for (std::size_t d = params.k; d < params.n; ++d) {
        const double dz = static_cast<double>(d - params.z);
        const double v = std::log((n + 1) / static_cast<double>(params.n - d)) / (delay.lambda * dz) + delay.c / dz;
        if (v < best.value) best = {v, d};
    }
    return best;
}

/// E[T_SS] = E[T_(k)] = (H_n - H_{n-k}) / (lambda (k - z)) + c / (k - z).
inline double mean_tss(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    const double kz = static_cast<double>(params.k - params.z);
    return (harmonic(params.n) - harmonic(params.n - params.k)) / (delay.lambda * kz) + delay.c / kz;
}

/// Exact E[T_SC] for n = k + 1.
inline double exact_mean_one_straggler(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    if (params.n != params.k + 1)
        throw InvalidArgument("one-straggler mean needs n = k + 1, got " + params.to_string());
    const std::size_t big_n = params.k + 1;
    const double a = static_cast<double>(params.k - params.z);
    // sum_{i>=1} (-1)^i C(N,i) / (a i + 1) and sum_{i>=1} (-1)^i C(N,i) i / (a i + 1)
    const double s_inv = std::exp(detail::log_beta(1.0 / a, static_cast<double>(big_n) + 1)) / a - 1.0;
    const double s_lin = (-1.0 - s_inv) / a;
    const double s_harm = -harmonic(big_n);
    return delay.c / (a + 1) + (detail::decay(1, delay, a) * s_lin - s_harm / (a + 1)) / delay.lambda;
}

/// Exact E[T_SC] for n = k + 2: the (k+2, k+1, z) mean plus a correction.
inline double exact_mean_two_stragglers(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    if (params.n != params.k + 2)
        throw InvalidArgument("two-straggler mean needs n = k + 2, got " + params.to_string());
    const std::size_t big_n = params.k + 2;
    const double a = static_cast<double>(params.k - params.z);
    // sum_{i>=2} (-1)^i C(N,i) C(i,2) / (a i + q) = C(N,2) B((2a + q)/a, N - 1) / a
    auto g = [&](double q) {
        return std::exp(detail::log_binomial(big_n, 2) + detail::log_beta((2 * a + q) / a, static_cast<double>(big_n) - 1)) / a;
    };
    const double base = exact_mean_one_straggler({params.n, params.k + 1, params.z}, delay);
    return base + (detail::decay(4, delay, a) * g(4) - 2 * detail::decay(3, delay, a) * g(3)) / delay.lambda;
}

/// P{T_SC <= t} for n = k + 1.
inline double cdf_tsc_one_straggler(double t, const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    if (params.n != params.k + 1) throw InvalidArgument("one-straggler CDF needs n = k + 1");
    const std::size_t k = params.k;
    const double fk = detail::residual_cdf(detail::threshold(t, k, params, delay), params, delay);
    const double fk1 = detail::residual_cdf(detail::threshold(t, k + 1, params, delay), params, delay);
    const double kd = static_cast<double>(k);
    return std::pow(fk1, kd + 1) + std::pow(fk, kd) * (1 - fk1) * (kd + 1);
}

/// P{T_SC <= t} for n = k + 2.
inline double cdf_tsc_two_stragglers(double t, const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    if (params.n != params.k + 2) throw InvalidArgument("two-straggler CDF needs n = k + 2");
    const std::size_t k = params.k;
    const double fk = detail::residual_cdf(detail::threshold(t, k, params, delay), params, delay);
    const double fk1 = detail::residual_cdf(detail::threshold(t, k + 1, params, delay), params, delay);
    const double fk2 = detail::residual_cdf(detail::threshold(t, k + 2, params, delay), params, delay);
    const double kd = static_cast<double>(k);
    return std::pow(fk2, kd + 2) +
           (kd + 2) * (1 - fk2) * (std::pow(fk1, kd + 1) + (kd + 1) * std::pow(fk, kd) * ((1 - fk1) - 0.5 * (1 - fk2)));
}

/// P{T_SC <= t} for n - k <= 3 by nested adaptive quadrature.
///
/// With u_j = F(t_j), P{T_SC > t} = P{U_(j) > u_j for all j = k..n} for n uniform order
/// statistics. Integrating out U_(1..k) in closed form leaves
///   n!/k! * int_{u_j < y_j, y_{k+1} < ... < y_n < 1} (y_{k+1}^k - u_k^k) dy_{k+1} ... dy_n,
/// whose n - k remaining dimensions are integrated numerically.
inline double cdf_tsc_general(double t, const SystemParams& params, const DelayParams& delay, double tol = 1e-9) {
    detail::check_inputs(params, delay);
    const std::size_t n = params.n, k = params.k;
    if (n - k > 3)
        throw UnsupportedDimension("quadrature CDF supports n - k <= 3, got n - k = " + std::to_string(n - k) +
                                   "; use Monte-Carlo instead");
    if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
    std::vector<double> u(n + 1, 0.0);
    for (std::size_t j = k; j <= n; ++j) u[j] = detail::residual_cdf(detail::threshold(t, j, params, delay), params, delay);
    if (u[n] == 0) return 0.0;
    if (u[k] >= 1) return 1.0;

    const double kd = static_cast<double>(k);
    const double uk_pow = std::pow(u[k], kd);
    std::function<double(std::size_t, double)> inner = [&](std::size_t j, double upper) -> double {
        if (j == k) return std::pow(upper, kd) - uk_pow;
        if (upper <= u[j]) return 0.0;
        return integrate([&](double y) { return inner(j - 1, y); }, u[j], upper, tol * 0.01, 1e-300).value;
    };
    double prefactor = 1;
    for (std::size_t j = k + 1; j <= n; ++j) prefactor *= static_cast<double>(j);
    const double tail = prefactor * inner(n, 1.0);
    const double cdf = 1.0 - tail;
    return cdf < 0 ? 0.0 : (cdf > 1 ? 1.0 : cdf);
}

/// 1 - min_d (k-z)(lambda c + H_n - H_{n-d}) / ((d-z)(lambda c + H_n - H_{n-k})), clamped at 0.
inline AnalysisResult savings_lower_bound(const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    const double lc = delay.lambda * delay.c, hn = harmonic(params.n);
    const double kz = static_cast<double>(params.k - params.z);
    const double den = lc + hn - harmonic(params.n - params.k);
    AnalysisResult best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t d = params.k; d <= params.n; ++d) {
        const double dz = static_cast<double>(d - params.z);
        const double ratio = std::isinf(lc) ? kz / dz : kz * (lc + hn - harmonic(params.n - d)) / (dz * den);
        if (ratio < best.value) best = {ratio, d};
    }
    best.value = std::max(0.0, 1.0 - best.value);
    return best;
}

/// Bound on P{|d - E d| > t}: 2 exp(-2 t^2 / (n (n - k)^2)). Not clamped to 1.
inline double concentration_bound(double t, const SystemParams& params) {
    params.validate();
    if (!(t >= 0)) throw InvalidArgument("deviation must be nonnegative");
    if (params.n == params.k) return t > 0 ? 0.0 : 2.0;
    const double n = static_cast<double>(params.n), gap = static_cast<double>(params.n - params.k);
    return 2.0 * std::exp(-2.0 * t * t / (n * gap * gap));
}

/// P{T'_(d) > x} = sum_{i<d} C(n,i) F(x)^i (1 - F(x))^{n-i}, T' the exponential part of a task time.
inline double order_statistic_tail(double x, std::size_t d, const SystemParams& params, const DelayParams& delay) {
    detail::check_inputs(params, delay);
    if (d < 1 || d > params.n) throw InvalidArgument("order statistic index outside 1..n");
    const double f = detail::residual_cdf(x, params, delay);
    if (f <= 0) return 1.0;
    if (f >= 1) return 0.0;
    double s = 0;
    for (std::size_t i = 0; i < d; ++i)
        s += std::exp(detail::log_binomial(params.n, i) + static_cast<double>(i) * std::log(f) +
                      static_cast<double>(params.n - i) * std::log1p(-f));
    return std::min(1.0, s);
}

} // namespace scc
