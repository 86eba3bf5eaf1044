#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scc/scc.hpp"

namespace fs = std::filesystem;
using namespace scc;

namespace {

enum Exit { ok = 0, failure = 1, usage = 2, insufficient = 3, integrity = 4, io = 5, protocol = 6 };

struct Common {
    std::optional<std::size_t> n, k;
    std::size_t z = 1;
    double lambda = 1.0;
    double c = 1.0;
    std::uint64_t seed = 42;
    std::uint64_t modulus = 65537;
    bool entropy = false;

    SystemParams params() const {
        if (!n) throw UsageError("--n is required");
        if (!k) throw UsageError("--k is required");
        SystemParams p{*n, *k, z};
        p.validate();
        return p;
    }
    DelayParams delay() const {
        DelayParams d{lambda, c};
        d.validate();
        return d;
    }
    PrimeField field() const { return PrimeField(modulus); }
    std::unique_ptr<KeySource> keys() const {
        if (entropy) return std::make_unique<EntropyKeys>();
        return std::make_unique<SeededKeys>(seed);
    }
};

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

SystemParams parse_group(const std::string& spec) {
    std::vector<std::size_t> v;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ',');) {
        try {
            std::size_t used = 0;
            v.push_back(std::stoul(part, &used));
            if (used != part.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw UsageError("group '" + spec + "' is not n,k,z");
        }
    }
    if (v.size() != 3) throw UsageError("group '" + spec + "' is not n,k,z");
    SystemParams p{v[0], v[1], v[2]};
    p.validate();
    return p;
}

std::vector<net::Address> parse_addresses(const std::vector<std::string>& list) {
    std::vector<net::Address> out;
    for (const auto& item : list) {
        std::stringstream ss(item);
        for (std::string part; std::getline(ss, part, ',');)
            if (!part.empty()) out.push_back(net::Address::parse(part));
    }
    return out;
}

void print_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
        out << '\n';
    }
}

// analyze

void analyze(const Common& o) {
    const auto p = o.params();
    const auto delay = o.delay();
    std::cout << "params=" << p.to_string() << " lambda=" << format_number(delay.lambda)
              << " c=" << format_number(delay.c) << '\n';
    const auto ub = upper_bound_mean_tsc(p, delay);
    const auto lb = lower_bound_mean_tsc(p, delay);
    std::cout << "ub=" << fixed6(ub.value) << " (d=" << ub.d << ")\n";
    if (p.n - p.k == 1) std::cout << "exact=" << fixed6(exact_mean_one_straggler(p, delay)) << '\n';
    if (p.n - p.k == 2) std::cout << "exact=" << fixed6(exact_mean_two_stragglers(p, delay)) << '\n';
    std::cout << "lb=" << fixed6(lb.value) << " (d=" << lb.d << ")\n";
    std::cout << "mean_tss=" << fixed6(mean_tss(p, delay)) << '\n';
    const auto sav = savings_lower_bound(p, delay);
    std::cout << "savings_bound=" << fixed6(sav.value) << " (d=" << sav.d << ")\n";
    std::cout << "b=" << p.subshare_count() << '\n';
    for (std::size_t d = p.k; d <= p.n; ++d) {
        const auto cc = communication_cost(d, p);
        std::cout << "CC(" << d << ")=" << format_number(cc.value()) << " (" << cc.num << "/" << cc.den << ")\n";
    }
}

// simulate

struct SimulateArgs {
    std::string regime = "fixed-rate";
    std::size_t value = 2;
    std::vector<std::size_t> grid;
    std::size_t iters = 10000;
    std::size_t threads = 0;
    std::string out;
};

void simulate(const Common& o, const SimulateArgs& a) {
    ExperimentSpec spec;
    if (a.regime == "fixed-rate") spec.regime = Regime::fixed_rate;
    else if (a.regime == "fixed-parity") spec.regime = Regime::fixed_parity;
    else throw UsageError("--regime must be fixed-rate or fixed-parity");
    spec.value = a.value;
    spec.n_grid = a.grid;
    spec.z = o.z;
    spec.delay = o.delay();
    spec.iterations = a.iters;
    spec.seed = o.seed;
    spec.threads = a.threads;
    const auto rows = run_sweep(spec);
    if (a.out.empty() || a.out == "-") {
        write_sweep_csv(std::cout, rows);
        return;
    }
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw IoError("cannot write " + a.out);
    write_sweep_csv(out, rows);
    if (!out.flush()) throw IoError("write failed for " + a.out);
}

// random-matrix

void random_matrix_cmd(const Common& o, std::size_t rows, std::size_t cols, const std::string& out) {
    if (rows == 0 || cols == 0) throw UsageError("--rows and --cols must be positive");
    const auto f = o.field();
    Matrix m(f, rows, cols);
    auto keys = o.keys();
    for (auto& v : m.data()) v = keys->next(f);
    save_matrix(out, m);
}

// encode / apply / decode

Scheme parse_scheme(const std::string& s) {
    if (s == "staircase") return Scheme::staircase;
    if (s == "classical") return Scheme::classical;
    throw UsageError("--scheme must be staircase or classical");
}

std::string share_name(std::size_t index) { return "share_" + std::to_string(index) + ".scs"; }

void encode(const Common& o, const std::string& in, const std::string& out_dir, const std::string& scheme) {
    const Matrix a = load_matrix(in);
    const auto p = o.params();
    auto keys = o.keys();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    std::vector<ShareRecord> records;
    if (parse_scheme(scheme) == Scheme::staircase)
        for (const auto& s : staircase_encode(a, p, *keys)) records.push_back(to_record(s, p));
    else
        for (const auto& s : classical_encode(a, p, *keys)) records.push_back(to_record(s, p));
    for (const auto& r : records) save_share(fs::path(out_dir) / share_name(r.worker_index), r);
    std::cout << "wrote " << records.size() << " " << scheme << " shares " << p.to_string() << " b="
              << records[0].subshares.size() << " to " << out_dir << '\n';
}

/// Replaces each sub-share S by the sub-result S x; the output decodes to A x.
void apply(const std::string& share_path, const std::string& x_path, const std::string& out) {
    ShareRecord rec = load_share(share_path);
    const Matrix x = load_matrix(x_path);
    if (!(x.field() == rec.field())) throw UsageError("vector and share use different fields");
    if (x.rows() != rec.cols()) throw InvalidArgument("vector length " + std::to_string(x.rows()) +
                                                      " does not match data width " + std::to_string(rec.cols()));
    for (auto& s : rec.subshares) s = matmul(s, x);
    save_share(out, rec);
}

std::vector<ShareRecord> load_share_set(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".scs") files.push_back(e.path());
        } else {
            files.emplace_back(in);
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<ShareRecord> out;
    for (const auto& f : files) out.push_back(load_share(f));
    return out;
}

Matrix decode_records(const std::vector<ShareRecord>& recs, std::optional<std::size_t> d) {
    if (recs.empty()) throw InsufficientShares("no share files found");
    const auto& first = recs[0];
    for (const auto& r : recs)
        if (r.scheme != first.scheme || !(r.params == first.params) || r.original_rows != first.original_rows ||
            !(r.field() == first.field()))
            throw IntegrityError("share files come from different encodings");
    const auto& p = first.params;
    if (first.scheme == Scheme::classical) {
        std::vector<ClassicalShare> shares;
        for (const auto& r : recs) shares.push_back(to_classical(r));
        return classical_decode(shares, p);
    }
    StaircaseResponses responses;
    for (const auto& r : recs) {
        if (responses.count(r.worker_index)) throw InvalidArgument("two files hold share " + std::to_string(r.worker_index));
        responses[r.worker_index] = r.subshares;
    }
    const std::size_t use = d.value_or(std::clamp(recs.size(), p.k, p.n));
    return staircase_decode(responses, use, p, first.original_rows);
}

// worker / master

std::atomic<bool> g_stop{false};

void worker(const Common& o, const std::string& listen, const std::string& share_path, bool inject,
            double time_unit_ms, bool once, const std::string& port_file) {
    const ShareRecord share = load_share(share_path);
    WorkerOptions opt;
    if (inject) opt.delay = o.delay();
    opt.seed = o.seed;
    opt.time_unit_ms = time_unit_ms;
    opt.once = once;
    opt.stop = &g_stop;
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    net::Listener listener(net::Address::parse(listen));
    if (!port_file.empty()) {
        const std::string port = std::to_string(listener.bound_port()) + "\n";
        write_file(port_file + ".tmp", std::span(reinterpret_cast<const std::uint8_t*>(port.data()), port.size()));
        fs::rename(port_file + ".tmp", port_file);
    }
    std::cerr << "worker " << share.worker_index << " (" << scheme_name(share.scheme) << " " << share.params.to_string()
              << ") listening on " << listener.address().to_string() << '\n';
    worker_serve(listener, share, opt);
}

struct MasterArgs {
    std::vector<std::string> workers;
    std::string x;
    std::string out;
    std::size_t rounds = 1;
    bool hide_x = false;
    std::string group1, group2;
};

void report(std::size_t round, const RoundResult& r) {
    std::cerr << "round " << round << " d*=" << r.d_star << " decodable_after=" << format_number(r.seconds_to_decodable)
              << "s total=" << format_number(r.seconds_total) << "s\n";
}

void master(const Common& o, const MasterArgs& a) {
    const auto addresses = parse_addresses(a.workers);
    const Matrix x = load_matrix(a.x);
    if (x.cols() != 1) throw InvalidArgument("the vector file must have one column");
    Matrix ax;
    if (!a.hide_x) {
        if (!a.group1.empty() || !a.group2.empty()) throw UsageError("--group1/--group2 need --hide-x");
        Master m(addresses);
        for (std::size_t r = 0; r < a.rounds; ++r) {
            auto res = m.round(x);
            report(r, res);
            ax = std::move(res.ax);
        }
    } else {
        if (a.group1.empty() || a.group2.empty()) throw UsageError("--hide-x needs --group1 and --group2");
        const auto g1 = parse_group(a.group1), g2 = parse_group(a.group2);
        if (addresses.size() != g1.n + g2.n)
            throw UsageError("expected " + std::to_string(g1.n + g2.n) + " worker addresses, got " +
                             std::to_string(addresses.size()));
        Master m1({addresses.begin(), addresses.begin() + static_cast<std::ptrdiff_t>(g1.n)});
        Master m2({addresses.begin() + static_cast<std::ptrdiff_t>(g1.n), addresses.end()});
        if (!(m1.params() == g1) || !(m2.params() == g2)) throw ProtocolError("group parameters do not match the workers' shares");
        auto masks = o.keys();
        for (std::size_t r = 0; r < a.rounds; ++r) {
            auto res = master_round_hidden(m1, m2, x, *masks);
            report(r, res.group1);
            report(r, res.group2);
            ax = std::move(res.ax);
        }
    }
    if (!a.out.empty()) save_matrix(a.out, ax);
    print_matrix(std::cout, ax);
}

int exit_code(const std::exception& e, int code) {
    std::cerr << "scc: " << e.what() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Staircase and classical secret-shared matrix-vector multiplication"};
    app.require_subcommand(1);
    app.fallthrough();

    Common o;
    app.add_option("--n", o.n, "number of workers");
    app.add_option("--k", o.k, "workers needed to decode");
    app.add_option("--z", o.z, "colluding workers tolerated")->capture_default_str();
    app.add_option("--lambda", o.lambda, "exponential rate of the delay model")->capture_default_str();
    app.add_option("--c", o.c, "shift of the delay model")->capture_default_str();
    app.add_option("--seed", o.seed, "random seed")->envname("SCC_SEED")->capture_default_str();
    app.add_option("--field-modulus", o.modulus, "prime field modulus")->capture_default_str();
    app.add_flag("--entropy", o.entropy, "draw keys and masks from the OS entropy source instead of --seed");

    auto* an = app.add_subcommand("analyze", "closed-form bounds, exact means, savings and CC(d)");

    SimulateArgs sim;
    auto* si = app.add_subcommand("simulate", "Monte-Carlo sweep written as CSV");
    si->add_option("--regime", sim.regime, "fixed-rate or fixed-parity")->capture_default_str();
    si->add_option("--value", sim.value, "1/rate for fixed-rate, n-k for fixed-parity")->capture_default_str();
    si->add_option("--grid", sim.grid, "values of n (default: built-in grid)")->delimiter(',');
    si->add_option("--iters", sim.iters, "iterations per grid point")->capture_default_str();
    si->add_option("--threads", sim.threads, "worker threads (0: all cores)")->capture_default_str();
    si->add_option("--out", sim.out, "CSV path, '-' for stdout");

    std::size_t rows = 0, cols = 0;
    std::string rm_out;
    auto* rm = app.add_subcommand("random-matrix", "write a uniformly random matrix file");
    rm->add_option("--rows", rows)->required();
    rm->add_option("--cols", cols)->required();
    rm->add_option("--out", rm_out)->required();

    std::string enc_in, enc_out, scheme = "staircase";
    auto* en = app.add_subcommand("encode", "split a matrix file into n share files");
    en->add_option("--in", enc_in, "matrix file")->required();
    en->add_option("--out", enc_out, "output directory")->required();
    en->add_option("--scheme", scheme, "staircase or classical")->capture_default_str();

    std::string ap_share, ap_x, ap_out;
    auto* ap = app.add_subcommand("apply", "turn a share file into a sub-result file for vector x");
    ap->add_option("--share", ap_share)->required();
    ap->add_option("--x", ap_x, "vector file")->required();
    ap->add_option("--out", ap_out)->required();

    std::vector<std::string> dec_in;
    std::string dec_out;
    std::optional<std::size_t> dec_d;
    auto* de = app.add_subcommand("decode", "reconstruct from share or sub-result files");
    de->add_option("inputs", dec_in, "share files or directories")->required();
    de->add_option("--out", dec_out, "matrix file to write (default: print)");
    de->add_option("--d", dec_d, "staircase: decode from this many workers");

    std::string listen = "127.0.0.1:0", wk_share, port_file;
    bool inject = false, once = false;
    double time_unit_ms = 1000;
    auto* wk = app.add_subcommand("worker", "serve one share over TCP");
    wk->add_option("--listen", listen, "host:port, port 0 picks a free port")->capture_default_str();
    wk->add_option("--share", wk_share)->required();
    wk->add_flag("--inject-delay", inject, "sleep according to the --lambda/--c delay model");
    wk->add_option("--time-unit-ms", time_unit_ms, "milliseconds per delay-model time unit")->capture_default_str();
    wk->add_flag("--once", once, "exit after the first master disconnects");
    wk->add_option("--port-file", port_file, "write the bound port here once listening");

    MasterArgs ma;
    auto* ms = app.add_subcommand("master", "run rounds against a set of workers");
    ms->add_option("--workers", ma.workers, "host:port list")->required()->delimiter(',');
    ms->add_option("--x", ma.x, "vector file")->required();
    ms->add_option("--out", ma.out, "matrix file for A x");
    ms->add_option("--rounds", ma.rounds)->capture_default_str();
    ms->add_flag("--hide-x", ma.hide_x, "mask x across two worker groups");
    ms->add_option("--group1", ma.group1, "n,k,z of the first group");
    ms->add_option("--group2", ma.group2, "n,k,z of the second group");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*an) analyze(o);
        else if (*si) simulate(o, sim);
        else if (*rm) random_matrix_cmd(o, rows, cols, rm_out);
        else if (*en) encode(o, enc_in, enc_out, scheme);
        else if (*ap) apply(ap_share, ap_x, ap_out);
        else if (*de) {
            const Matrix m = decode_records(load_share_set(dec_in), dec_d);
            if (dec_out.empty()) print_matrix(std::cout, m);
            else save_matrix(dec_out, m);
        } else if (*wk) worker(o, listen, wk_share, inject, time_unit_ms, once, port_file);
        else if (*ms) master(o, ma);
    } catch (const UsageError& e) {
        return exit_code(e, usage);
    } catch (const InvalidArgument& e) {
        return exit_code(e, usage);
    } catch (const InsufficientShares& e) {
        return exit_code(e, insufficient);
    } catch (const IntegrityError& e) {
        return exit_code(e, integrity);
    } catch (const IoError& e) {
        return exit_code(e, io);
    } catch (const fs::filesystem_error& e) {
        return exit_code(e, io);
    } catch (const ProtocolError& e) {
        return exit_code(e, protocol);
    } catch (const std::exception& e) {
        return exit_code(e, failure);
    }
    return ok;
}
