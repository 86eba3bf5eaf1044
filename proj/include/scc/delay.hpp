#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scc/errors.hpp"
#include "scc/params.hpp"
#include "scc/random.hpp"

namespace scc {

/// Realized task times T_1..T_n of one run.
struct DelaySample {
    std::vector<double> times;
};

struct WaitingTime {
    double t_sc = 0;          // min_d alpha_d T_(d)
    double t_ss = 0;          // T_(k)
    std::size_t d_star = 0;   // smallest minimizing d
};

/// T_i = c/(k-z) + Exp(lambda (k-z)), i.i.d. over the n workers.
inline void sample_delays_into(std::span<double> out, const SystemParams& params, const DelayParams& delay, Rng& rng) {
    const double kz = static_cast<double>(params.k - params.z);
    const double shift = delay.c / kz, rate = delay.lambda * kz;
    for (auto& t : out) t = shift + exponential(rng, rate);
}

inline DelaySample sample_delays(const SystemParams& params, const DelayParams& delay, Rng& rng) {
    params.validate();
    delay.validate();
    DelaySample s;
    s.times.resize(params.n);
    sample_delays_into(s.times, params, delay, rng);
    return s;
}

inline std::vector<double> order_statistics(const DelaySample& s) {
    std::vector<double> sorted = s.times;
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

namespace detail {

inline void check_sample(std::size_t size, const SystemParams& params) {
    params.validate();
    if (size != params.n)
        throw InvalidArgument("delay sample has " + std::to_string(size) + " times, expected n=" + std::to_string(params.n));
}

inline double alpha_times(const SystemParams& params, std::size_t d, double t) {
    return t * (static_cast<double>(params.k - params.z) / static_cast<double>(d - params.z));
}

} // namespace detail

/// Waiting times from already sorted task times, restricted to d in `delta` (ascending, within k..n).
inline WaitingTime waiting_time_sorted(std::span<const double> sorted, const SystemParams& params,
                                       std::span<const std::size_t> delta) {
    WaitingTime w;
    w.t_ss = sorted[params.k - 1];
    w.t_sc = std::numeric_limits<double>::infinity();
    for (auto d : delta) {
        const double v = detail::alpha_times(params, d, sorted[d - 1]);
        if (v < w.t_sc) {
            w.t_sc = v;
            w.d_star = d;
        }
    }
    return w;
}

/// Same as above over the full range d = k..n.
inline WaitingTime waiting_time_sorted(std::span<const double> sorted, const SystemParams& params) {
    WaitingTime w;
    w.t_ss = sorted[params.k - 1];
    w.t_sc = w.t_ss;
    w.d_star = params.k;
    for (std::size_t d = params.k + 1; d <= params.n; ++d) {
        const double v = detail::alpha_times(params, d, sorted[d - 1]);
        if (v < w.t_sc) {
            w.t_sc = v;
            w.d_star = d;
        }
    }
    return w;
}

inline WaitingTime waiting_time_staircase(const DelaySample& s, const SystemParams& params) {
    detail::check_sample(s.times.size(), params);
    const auto sorted = order_statistics(s);
    return waiting_time_sorted(sorted, params);
}

/// T_SS = T_(k).
inline double waiting_time_classical(const DelaySample& s, const SystemParams& params) {
    detail::check_sample(s.times.size(), params);
    std::vector<double> t = s.times;
    std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(params.k - 1), t.end());
    return t[params.k - 1];
}

/// Checks and sorts a decoding set; throws when empty or outside k..n.
inline std::vector<std::size_t> normalize_delta(std::vector<std::size_t> delta, const SystemParams& params) {
    if (delta.empty()) throw InvalidArgument("decoding set is empty");
    std::sort(delta.begin(), delta.end());
    delta.erase(std::unique(delta.begin(), delta.end()), delta.end());
    if (delta.front() < params.k || delta.back() > params.n)
        throw InvalidArgument("decoding set must lie within {" + std::to_string(params.k) + ".." +
                              std::to_string(params.n) + "}");
    return delta;
}

/// Waiting time when the master may only decode from d in `delta`.
inline WaitingTime waiting_time_delta(const DelaySample& s, const SystemParams& params, std::vector<std::size_t> delta) {
    detail::check_sample(s.times.size(), params);
    delta = normalize_delta(std::move(delta), params);
    const auto sorted = order_statistics(s);
    return waiting_time_sorted(sorted, params, delta);
}

} // namespace scc
