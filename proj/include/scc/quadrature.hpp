#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "scc/errors.hpp"

namespace scc {

struct QuadratureResult {
    double value = 0;
    double error = 0;      // estimated absolute error
    std::size_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780, 0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename F>
Panel gauss_kronrod(F& f, double a, double b) {
    const double centre = 0.5 * (a + b), half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double sum = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[i] * sum;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b]: bisects the panel with the
/// largest error estimate until the total estimate is below max(abs_tol, rel_tol * |value|).
template <typename F>
QuadratureResult integrate(F&& f, double a, double b, double rel_tol = 1e-10, double abs_tol = 1e-14,
                           std::size_t max_panels = 2000) {
    if (!(rel_tol > 0) && !(abs_tol > 0)) throw InvalidArgument("quadrature tolerance must be positive");
    QuadratureResult res;
    if (a == b) return res;
    std::priority_queue<detail::Panel> panels;
    panels.push(detail::gauss_kronrod(f, a, b));
    res.evaluations = 15;
    double value = panels.top().value, error = panels.top().error;
    while (error > std::max(abs_tol, rel_tol * std::abs(value)) && panels.size() < max_panels) {
        const detail::Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gauss_kronrod(f, worst.a, mid);
        const auto right = detail::gauss_kronrod(f, mid, worst.b);
        res.evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum to shed the rounding drift of the running totals.
    value = 0;
    error = 0;
    while (!panels.empty()) {
        value += panels.top().value;
        error += panels.top().error;
        panels.pop();
    }
    res.value = value;
    res.error = error;
    return res;
}

} // namespace scc
