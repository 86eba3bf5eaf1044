#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "scc/analysis.hpp"
#include "scc/delay.hpp"
#include "scc/errors.hpp"
#include "scc/params.hpp"
#include "scc/random.hpp"

namespace scc {

struct MeanEstimate {
    double mean = 0;
    double std_error = 0; // standard error of the mean

    double ci95() const { return 1.96 * std_error; }
};

/// Sample means of T_SC and T_SS over the same delay draws.
struct WaitingTimeEstimate {
    MeanEstimate tsc;
    MeanEstimate tss;
    std::size_t iterations = 0;
};

namespace detail {

class RunningMean {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    MeanEstimate estimate() const {
        const double var = n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
        return {mean_, std::sqrt(var / static_cast<double>(n_ ? n_ : 1))};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0, m2_ = 0;
};

inline void check_iterations(std::size_t iterations) {
    if (iterations < 1) throw InvalidArgument("iterations must be at least 1");
}

} // namespace detail

/// Generator for one (seed, n, k, z) stream.
inline Rng stream_rng(std::uint64_t seed, const SystemParams& params) {
    return Rng(stream_seed({seed, params.n, params.k, params.z}));
}

inline WaitingTimeEstimate estimate_waiting_times(const SystemParams& params, const DelayParams& delay,
                                                  std::size_t iterations, std::uint64_t seed) {
    params.validate();
    delay.validate();
    detail::check_iterations(iterations);
    Rng rng = stream_rng(seed, params);
    std::vector<double> t(params.n);
    detail::RunningMean sc, ss;
    for (std::size_t it = 0; it < iterations; ++it) {
        sample_delays_into(t, params, delay, rng);
        std::sort(t.begin(), t.end());
        const auto w = waiting_time_sorted(t, params);
        sc.add(w.t_sc);
        ss.add(w.t_ss);
    }
    return {sc.estimate(), ss.estimate(), iterations};
}

inline MeanEstimate estimate_mean_tsc(const SystemParams& params, const DelayParams& delay, std::size_t iterations,
                                      std::uint64_t seed) {
    return estimate_waiting_times(params, delay, iterations, seed).tsc;
}

/// Counts of the minimizing d over independent runs; counts[d] for d = 0..n.
struct DHistogram {
    SystemParams params;
    std::vector<std::size_t> counts;
    std::vector<std::uint16_t> samples; // d* of each run, in run order
    std::size_t iterations = 0;

    double mean() const {
        double s = 0;
        for (auto d : samples) s += d;
        return s / static_cast<double>(samples.size());
    }
    std::size_t mode() const {
        return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    /// Empirical P{|d - mean(d)| > t}.
    double deviation_tail(double t) const {
        const double m = mean();
        std::size_t hits = 0;
        for (auto d : samples) hits += std::abs(static_cast<double>(d) - m) > t;
        return static_cast<double>(hits) / static_cast<double>(samples.size());
    }
    /// True when counts rise to the mode and fall after it up to sampling noise: no pair of
    /// bins on the same side of the mode moves the wrong way by more than `sigmas` standard
    /// deviations of their difference.
    bool unimodal(double sigmas = 3.0) const {
        const std::size_t m = mode();
        auto significant = [&](std::size_t hi, std::size_t lo) {
            const double a = static_cast<double>(counts[hi]), b = static_cast<double>(counts[lo]);
            return a - b > sigmas * std::sqrt(a + b);
        };
        for (std::size_t j = 0; j <= m; ++j)
            for (std::size_t i = 0; i < j; ++i)
                if (significant(i, j)) return false;
        for (std::size_t i = m; i < counts.size(); ++i)
            for (std::size_t j = i + 1; j < counts.size(); ++j)
                if (significant(j, i)) return false;
        return true;
    }
};

inline DHistogram histogram_d(const SystemParams& params, const DelayParams& delay, std::size_t iterations,
                              std::uint64_t seed) {
    params.validate();
    delay.validate();
    detail::check_iterations(iterations);
    DHistogram h{params, std::vector<std::size_t>(params.n + 1, 0), {}, iterations};
    h.samples.reserve(iterations);
    Rng rng = stream_rng(seed, params);
    std::vector<double> t(params.n);
    for (std::size_t it = 0; it < iterations; ++it) {
        sample_delays_into(t, params, delay, rng);
        std::sort(t.begin(), t.end());
        const auto w = waiting_time_sorted(t, params);
        ++h.counts[w.d_star];
        h.samples.push_back(static_cast<std::uint16_t>(w.d_star));
    }
    return h;
}

/// Mean waiting time when decoding only from d in {d*-1, d*, d*+1} (d* the upper-bound
/// argmin, clipped to k..n) against unrestricted decoding, over the same draws.
struct DeltaGap {
    std::vector<std::size_t> delta;
    double mean_restricted = 0;
    double mean_full = 0;
    double normalized_gap() const { return (mean_restricted - mean_full) / mean_full; }
};

inline std::vector<std::size_t> neighbourhood_delta(const SystemParams& params, const DelayParams& delay) {
    const std::size_t d = upper_bound_mean_tsc(params, delay).d;
    std::vector<std::size_t> delta;
    for (std::size_t v = d > 1 ? d - 1 : d; v <= d + 1; ++v)
        if (v >= params.k && v <= params.n) delta.push_back(v);
    return delta;
}

inline DeltaGap delta_restriction_gap(const SystemParams& params, const DelayParams& delay, std::size_t iterations,
                                      std::uint64_t seed, std::vector<std::size_t> delta = {}) {
    params.validate();
    delay.validate();
    detail::check_iterations(iterations);
    if (delta.empty()) delta = neighbourhood_delta(params, delay);
    delta = normalize_delta(std::move(delta), params);
    Rng rng = stream_rng(seed, params);
    std::vector<double> t(params.n);
    detail::RunningMean restricted, full;
    for (std::size_t it = 0; it < iterations; ++it) {
        sample_delays_into(t, params, delay, rng);
        std::sort(t.begin(), t.end());
        full.add(waiting_time_sorted(t, params).t_sc);
        restricted.add(waiting_time_sorted(t, params, delta).t_sc);
    }
    return {delta, restricted.estimate().mean, full.estimate().mean};
}

enum class Regime { fixed_rate, fixed_parity };

/// Fixed rate k/n = 1/value, or fixed parity n - k = value.
struct ExperimentSpec {
    Regime regime = Regime::fixed_rate;
    std::size_t value = 2;
    std::vector<std::size_t> n_grid;
    std::size_t z = 1;
    DelayParams delay;
    std::size_t iterations = 10000;
    std::uint64_t seed = 42;
    std::size_t threads = 0; // 0: hardware concurrency

    std::size_t k_for(std::size_t n) const {
        if (regime == Regime::fixed_rate) {
            if (value == 0 || n % value != 0)
                throw InvalidArgument("n=" + std::to_string(n) + " is not a multiple of 1/rate=" + std::to_string(value));
            return n / value;
        }
        if (n <= value) throw InvalidArgument("n=" + std::to_string(n) + " leaves no room for " + std::to_string(value) + " parities");
        return n - value;
    }
};

/// n grids used for the rate 1/2, 1/4, 1/5 and parity 2, 5, 10 studies.
inline std::vector<std::size_t> default_grid(Regime regime, std::size_t value) {
    if (regime == Regime::fixed_rate) {
        switch (value) {
        case 2: return {4, 6, 8, 10, 14, 20, 24, 40, 50, 60, 80, 100};
        case 4: return {8, 12, 16, 20, 24, 40, 48, 52, 60, 80, 100};
        case 5: return {10, 15, 20, 25, 40, 50, 60, 80, 100};
        default: break;
        }
    } else {
        switch (value) {
        case 2: return {4, 6, 8, 10, 15, 20, 25, 40, 50, 60, 80, 100};
        case 5: return {8, 10, 14, 20, 24, 40, 50, 60, 80, 100};
        case 10: return {12, 16, 20, 24, 40, 48, 52, 60, 80, 100};
        default: break;
        }
    }
    throw InvalidArgument("no default grid for this regime; pass an explicit n grid");
}

struct SweepRow {
    SystemParams params;
    DelayParams delay;
    double mean_tsc_sim = 0;
    double mean_tss_sim = 0;
    double savings_sim = 0;
    double savings_bound = 0;
    double ub_thm1 = 0;
    double lb_thm1 = 0;
    double stderr_tsc = 0;
};

inline SweepRow sweep_row(const SystemParams& params, const DelayParams& delay, std::size_t iterations,
                          std::uint64_t seed) {
    const auto est = estimate_waiting_times(params, delay, iterations, seed);
    SweepRow r{params, delay};
    r.mean_tsc_sim = est.tsc.mean;
    r.mean_tss_sim = est.tss.mean;
    r.savings_sim = 1.0 - est.tsc.mean / est.tss.mean;
    r.savings_bound = savings_lower_bound(params, delay).value;
    r.ub_thm1 = upper_bound_mean_tsc(params, delay).value;
    r.lb_thm1 = lower_bound_mean_tsc(params, delay).value;
    r.stderr_tsc = est.tsc.std_error;
    return r;
}

/// One row per grid point. Rows run on a thread pool; each owns its generator, so the output
/// does not depend on scheduling.
inline std::vector<SweepRow> run_sweep(const ExperimentSpec& spec) {
    spec.delay.validate();
    detail::check_iterations(spec.iterations);
    const auto grid = spec.n_grid.empty() ? default_grid(spec.regime, spec.value) : spec.n_grid;
    std::vector<SystemParams> params;
    for (auto n : grid) {
        SystemParams p{n, spec.k_for(n), spec.z};
        p.validate();
        params.push_back(p);
    }
    std::vector<SweepRow> rows(params.size());
    std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, params.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < params.size();)
            rows[i] = sweep_row(params[i], spec.delay, spec.iterations, spec.seed);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return rows;
}

inline constexpr const char* kSweepHeader =
    "n,k,z,lambda,c,mean_tsc_sim,mean_tss_sim,savings_sim,savings_bound,ub_thm1,lb_thm1,stderr_tsc";

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepHeader << '\n';
    for (const auto& r : rows) {
        out << r.params.n << ',' << r.params.k << ',' << r.params.z << ',' << format_number(r.delay.lambda) << ','
            << format_number(r.delay.c) << ',' << format_number(r.mean_tsc_sim) << ',' << format_number(r.mean_tss_sim)
            << ',' << format_number(r.savings_sim) << ',' << format_number(r.savings_bound) << ','
            << format_number(r.ub_thm1) << ',' << format_number(r.lb_thm1) << ',' << format_number(r.stderr_tsc) << '\n';
    }
}

} // namespace scc
