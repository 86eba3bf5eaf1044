/// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "scc/scc.hpp"
#include "test_util.hpp"

using namespace scc;
using scc::testing::for_each_subset;
using scc::testing::ListKeys;
using scc::testing::random_matrix;

namespace {

const DelayParams kUnit{1.0, 1.0};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double best = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        best = std::max({best, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    return best;
}

Outcome reference_analytics() {
    const auto t0 = std::chrono::steady_clock::now();
    struct Row {
        const char* name;
        double got, want;
    };
    const Row rows[] = {
        {"ub(4,2,1)", upper_bound_mean_tsc({4, 2, 1}, kUnit).value, 1.02777778},
        {"ub(6,4,1)", upper_bound_mean_tsc({6, 4, 1}, kUnit).value, 0.6125},
        {"ub(8,6,1)", upper_bound_mean_tsc({8, 6, 1}, kUnit).value, 0.44357143},
        {"lb(4,2,1)", lower_bound_mean_tsc({4, 2, 1}, kUnit).value, 0.57142857},
        {"exact(4,2,1)", exact_mean_two_stragglers({4, 2, 1}, kUnit), 0.89951033},
        {"exact(10,8,1)", exact_mean_two_stragglers({10, 8, 1}, kUnit), 0.33105889},
    };
    Outcome o{true, ""};
    double worst = 0;
    for (const auto& r : rows) {
        const double err = std::abs(r.got - r.want);
        worst = std::max(worst, err);
        if (!(err <= 1e-6)) {
            o.pass = false;
            o.detail += std::string(r.name) + "=" + fmt("%.9f", r.got) + " ";
        }
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs < 1.0;
    o.detail += "max error " + fmt("%.2e", worst) + ", " + fmt("%.3f", secs) + "s";
    return o;
}

Outcome savings_bound() {
    const double a = savings_lower_bound({4, 2, 1}, {1, 100}).value;
    const double b = savings_lower_bound({4, 2, 1}, {1, 1}).value;
    const double c = savings_lower_bound({10, 5, 1}, {1, 0.001}).value;
    const bool pass = std::abs(a - 0.66169566) <= 1e-6 && std::abs(b - 0.35087719) <= 1e-6 && c == 0.0;
    return {pass, "(4,2,1) lc=100: " + fmt("%.8f", a) + ", lc=1: " + fmt("%.8f", b) + ", (10,5,1) lc=0.001: " +
                      fmt("%.8f", c)};
}

Outcome monte_carlo_mean() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = estimate_mean_tsc({4, 2, 1}, kUnit, 1000000, 42);
    const double secs = seconds_since(t0);
    const double err = std::abs(est.mean - 0.8995103);
    return {err <= 1e-2 && secs < 30.0, "mean " + fmt("%.6f", est.mean) + " +/- " + fmt("%.6f", est.ci95()) +
                                            ", error " + fmt("%.2e", err) + ", " + fmt("%.2f", secs) + "s"};
}

Outcome cdf_agreement() {
    double worst_ks = 0, worst_quad = 0;
    for (const SystemParams p : {SystemParams{3, 2, 1}, SystemParams{4, 2, 1}}) {
        auto closed = [&](double t) {
            return p.n == p.k + 1 ? cdf_tsc_one_straggler(t, p, kUnit) : cdf_tsc_two_stragglers(t, p, kUnit);
        };
        Rng rng(stream_seed({4, p.n, p.k}));
        std::vector<double> samples;
        for (int i = 0; i < 100000; ++i) samples.push_back(waiting_time_staircase(sample_delays(p, kUnit, rng), p).t_sc);
        worst_ks = std::max(worst_ks, ks_distance(samples, closed));
        for (int i = 0; i < 50; ++i) {
            const double t = 0.1 + i * 0.08;
            worst_quad = std::max(worst_quad, std::abs(cdf_tsc_general(t, p, kUnit) - closed(t)));
        }
    }
    return {worst_ks < 0.01 && worst_quad <= 1e-6,
            "max KS " + fmt("%.4f", worst_ks) + ", max quadrature gap " + fmt("%.2e", worst_quad)};
}

Outcome codec_exhaustive() {
    const auto t0 = std::chrono::steady_clock::now();
    const PrimeField f(65537);
    std::size_t decodes = 0, failures = 0;
    for (const SystemParams p : {SystemParams{3, 2, 1}, {4, 2, 1}, {5, 3, 1}, {6, 4, 2}}) {
        const std::size_t unit = p.subshare_count() * (p.k - p.z);
        for (std::size_t m = 1; m <= 4 * unit; ++m) {
            const Matrix a = random_matrix(f, m, 8, m * 31 + p.n);
            SeededKeys keys(m + p.k);
            const auto sc = staircase_encode(a, p, keys);
            const auto lay = staircase_layout(p, m, 8);
            for (std::size_t d = p.k; d <= p.n; ++d)
                for_each_subset(p.n, d, [&](const std::vector<std::size_t>& subset) {
                    StaircaseResponses resp;
                    for (auto w : subset) {
                        const auto& s = sc[w - 1].subshares;
                        resp[w] = {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(lay.prefix_for(d))};
                    }
                    ++decodes;
                    if (!(staircase_decode(resp, d, p, m) == a)) ++failures;
                });
            SeededKeys ckeys(m + 7);
            const auto cl = classical_encode(a, p, ckeys);
            for_each_subset(p.n, p.k, [&](const std::vector<std::size_t>& subset) {
                std::vector<ClassicalShare> chosen;
                for (auto w : subset) chosen.push_back(cl[w - 1]);
                ++decodes;
                if (!(classical_decode(chosen, p) == a)) ++failures;
            });
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 60.0, std::to_string(decodes) + " decodes, " + std::to_string(failures) +
                                              " mismatches, " + fmt("%.2f", secs) + "s"};
}

/// For every z-subset, the distribution of the subset's shares must not depend on the secret.
Outcome perfect_secrecy() {
    const PrimeField f(5);
    const SystemParams p{3, 2, 1};
    using Tuple = std::vector<std::uint64_t>;
    auto check = [&](bool staircase, std::size_t key_count) {
        std::vector<std::map<std::size_t, std::map<Tuple, int>>> per_secret(5); // secret -> worker -> counts
        std::size_t combos = 1;
        for (std::size_t i = 0; i < key_count; ++i) combos *= 5;
        for (std::uint64_t s = 0; s < 5; ++s)
            for (std::size_t c = 0; c < combos; ++c) {
                std::vector<std::uint64_t> keyv;
                for (std::size_t i = 0, v = c; i < key_count; ++i, v /= 5) keyv.push_back(v % 5);
                const Matrix a(f, 1, 1, {s});
                for (std::size_t w = 1; w <= p.n; ++w) {
                    Tuple t;
                    if (staircase) {
                        ListKeys k2(keyv);
                        const auto shares = staircase_encode(a, p, k2);
                        for (const auto& sub : shares[w - 1].subshares) t.push_back(sub(0, 0));
                    } else {
                        ListKeys k2(keyv);
                        t.push_back(classical_encode(a, p, k2)[w - 1].block(0, 0));
                    }
                    ++per_secret[s][w][t];
                }
            }
        for (std::uint64_t s = 1; s < 5; ++s)
            if (per_secret[s] != per_secret[0]) return false;
        return true;
    };
    const bool sc = check(true, p.z * p.subshare_count());
    const bool cl = check(false, p.z);
    return {sc && cl, std::string("staircase ") + (sc ? "uniform" : "LEAKS") + ", classical " + (cl ? "uniform" : "LEAKS")};
}

Outcome pathwise_dominance() {
    const SystemParams p{10, 5, 1};
    Rng rng(stream_seed({7, p.n, p.k}));
    std::size_t violations = 0;
    for (int i = 0; i < 100000; ++i) {
        const auto s = sample_delays(p, kUnit, rng);
        if (waiting_time_staircase(s, p).t_sc > waiting_time_classical(s, p)) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations in 100000 samples"};
}

Outcome concentration() {
    const SystemParams p{20, 10, 1};
    const auto h = histogram_d(p, kUnit, 10000, 42);
    std::size_t bad = 0;
    for (int t = 0; t <= static_cast<int>(p.n); ++t)
        if (h.deviation_tail(t) > concentration_bound(t, p)) ++bad;
    const auto big = histogram_d({100, 50, 1}, kUnit, 10000, 42);
    const bool shape = big.unimodal() && big.mode() >= 65 && big.mode() <= 75;
    return {bad == 0 && shape, std::to_string(bad) + " tail violations for (20,10,1); (100,50,1) mode " +
                                   std::to_string(big.mode()) + (big.unimodal() ? ", unimodal" : ", NOT unimodal")};
}

Outcome delta_restriction() {
    double worst = 0;
    std::size_t worst_n = 0;
    for (std::size_t n = 8; n <= 100; n += 2) {
        const auto g = delta_restriction_gap({n, n / 2, 1}, kUnit, 10000, 42);
        if (g.normalized_gap() > worst) {
            worst = g.normalized_gap();
            worst_n = n;
        }
    }
    return {worst <= 0.05, "max normalized gap " + fmt("%.4f", worst) + " at n=" + std::to_string(worst_n)};
}

std::vector<ShareRecord> encode_records(const Matrix& a, const SystemParams& p, Scheme scheme, std::uint64_t seed) {
    SeededKeys keys(seed);
    std::vector<ShareRecord> out;
    if (scheme == Scheme::classical)
        for (const auto& s : classical_encode(a, p, keys)) out.push_back(to_record(s, p));
    else
        for (const auto& s : staircase_encode(a, p, keys)) out.push_back(to_record(s, p));
    return out;
}

struct LocalGroup {
    std::vector<std::unique_ptr<WorkerThread>> workers;
    std::vector<net::Address> addresses;

    LocalGroup(const std::vector<ShareRecord>& shares, const WorkerOptions& opt) {
        for (const auto& s : shares) {
            workers.push_back(std::make_unique<WorkerThread>(s, opt));
            addresses.push_back(workers.back()->address());
        }
    }
};

Outcome cluster_end_to_end() {
    const PrimeField f(65537);
    const SystemParams p{4, 2, 1};
    const Matrix a = random_matrix(f, 120, 32, 1);
    WorkerOptions opt;
    opt.delay = kUnit;
    opt.time_unit_ms = 4;
    opt.seed = 2024;
    LocalGroup sc(encode_records(a, p, Scheme::staircase, 1), opt);
    LocalGroup ss(encode_records(a, p, Scheme::classical, 1), opt);
    Master msc(sc.addresses), mss(ss.addresses);

    const std::size_t rounds = 500;
    std::size_t wrong = 0;
    double tsc = 0, tss = 0;
    for (std::size_t r = 0; r < rounds; ++r) {
        const Matrix x = random_matrix(f, 32, 1, 1000 + r);
        const Matrix want = matmul(a, x);
        const auto rs = msc.round(x);
        const auto rc = mss.round(x);
        wrong += !(rs.ax == want) + !(rc.ax == want);
        tsc += rs.seconds_to_decodable;
        tss += rc.seconds_to_decodable;
    }
    const double ratio = tsc / tss;

    // hidden x over two independently encoded groups
    std::vector<std::vector<std::uint8_t>> transcript;
    std::mutex mu;
    MasterOptions mopt;
    mopt.on_send = [&](std::size_t, std::span<const std::uint8_t> bytes) {
        std::lock_guard lock(mu);
        transcript.emplace_back(bytes.begin(), bytes.end());
    };
    WorkerOptions fast;
    LocalGroup g1(encode_records(a, p, Scheme::staircase, 11), fast);
    LocalGroup g2(encode_records(a, p, Scheme::staircase, 12), fast);
    Master m1(g1.addresses, mopt), m2(g2.addresses, mopt);
    SeededKeys masks(99);
    std::size_t hidden_wrong = 0, leaks = 0;
    for (std::size_t r = 0; r < 50; ++r) {
        const Matrix x = random_matrix(f, 32, 1, 5000 + r);
        if (!(master_round_hidden(m1, m2, x, masks).ax == matmul(a, x))) ++hidden_wrong;
        ByteWriter w;
        for (auto v : x.data()) w.u64(v);
        const auto needle = w.take();
        std::lock_guard lock(mu);
        for (const auto& frame : transcript)
            if (std::search(frame.begin(), frame.end(), needle.begin(), needle.end()) != frame.end()) ++leaks;
        transcript.clear();
    }
    const bool pass = wrong == 0 && ratio < 1.0 && hidden_wrong == 0 && leaks == 0;
    return {pass, std::to_string(rounds) + " rounds, " + std::to_string(wrong) + " wrong results, mean time ratio " +
                      fmt("%.3f", ratio) + "; hidden-x: " + std::to_string(hidden_wrong) + " wrong, " +
                      std::to_string(leaks) + " frames containing x"};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"closed-form reference values", reference_analytics},
        {"savings lower bound", savings_bound},
        {"Monte-Carlo mean vs closed form", monte_carlo_mean},
        {"CDF agreement", cdf_agreement},
        {"codec correctness (exhaustive)", codec_exhaustive},
        {"perfect secrecy over GF(5)", perfect_secrecy},
        {"pathwise dominance", pathwise_dominance},
        {"concentration of d", concentration},
        {"decoding-set restriction", delta_restriction},
        {"cluster end-to-end", cluster_end_to_end},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %2zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("criterion 11 NOTE: cloud-cluster latency measurements are not reproducible locally; "
                "criterion 10 runs the same protocol with injected model delays instead\n");
    return failed == 0 ? 0 : 1;
}
