#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>

#include "scc/errors.hpp"
#include "scc/io.hpp"
#include "scc/net.hpp"
#include "scc/params.hpp"
#include "scc/random.hpp"
#include "scc/wire.hpp"

namespace scc {

struct WorkerOptions {
    std::optional<DelayParams> delay; // injected T_i per round; none = reply as fast as possible
    std::uint64_t seed = 42;
    double time_unit_ms = 1000;       // wall-clock length of one delay-model time unit
    bool once = false;                // return after the first master disconnects
    const std::atomic<bool>* stop = nullptr;
};

/// Injected task time of worker `index` in round `round_id`, in delay-model units.
inline double injected_delay(const ShareRecord& share, const WorkerOptions& opt, std::uint64_t round_id) {
    if (!opt.delay) return 0.0;
    Rng rng(stream_seed({opt.seed, share.worker_index, round_id}));
    const double kz = static_cast<double>(share.params.k - share.params.z);
    return opt.delay->c / kz + exponential(rng, opt.delay->lambda * kz);
}

namespace detail {

class WorkerConnection {
public:
    WorkerConnection(net::Socket sock, const ShareRecord& share, const WorkerOptions& opt)
        : sock_(std::move(sock)), share_(share), opt_(opt) {}

    void run() {
        try {
            wire::Frame f;
            while (wait_for_frame(std::chrono::milliseconds(-1)) && net::read_frame(sock_, f)) {
                switch (f.type) {
                case wire::MessageType::setup:
                    send({wire::MessageType::setup, f.round_id, wire::setup_payload(wire::describe(share_))});
                    break;
                case wire::MessageType::task:
                    if (!run_task(f)) return;
                    break;
                case wire::MessageType::cancel:
                    break; // the round already finished
                default:
                    fail(f.round_id, std::string("unexpected ") + wire::type_name(f.type) + " from master");
                    return;
                }
            }
        } catch (const ProtocolError& e) {
            fail(0, e.what());
        } catch (const IoError&) {
            // connection gone
        }
    }

private:
    void send(const wire::Frame& f) { net::write_frame(sock_, f); }

    void fail(std::uint64_t round, const std::string& why) {
        try {
            send({wire::MessageType::error, round, wire::text_payload(why)});
        } catch (const Error&) {
        }
        sock_.close();
    }

    /// Polls in short slices so that a stop request is noticed. Returns false when stopping.
    bool wait_for_frame(std::chrono::milliseconds timeout) {
        using namespace std::chrono;
        const auto deadline = timeout.count() < 0 ? steady_clock::time_point::max() : steady_clock::now() + timeout;
        while (true) {
            if (opt_.stop && opt_.stop->load()) return false;
            const auto now = steady_clock::now();
            if (now >= deadline) return false;
            auto slice = milliseconds(100);
            if (deadline != steady_clock::time_point::max())
                slice = std::min(slice, duration_cast<milliseconds>(deadline - now) + milliseconds(1));
            if (sock_.wait_readable(slice)) return true;
        }
    }

    /// Returns false when the connection should be closed.
    bool run_task(const wire::Frame& task) {
        using namespace std::chrono;
        const auto start = steady_clock::now();
        const auto x_values = wire::parse_task(task.payload);
        const auto& field = share_.field();
        if (x_values.size() != share_.cols()) {
            send({wire::MessageType::error, task.round_id,
                  wire::text_payload("vector length " + std::to_string(x_values.size()) + " does not match share width " +
                                     std::to_string(share_.cols()))});
            return true;
        }
        for (auto v : x_values)
            if (v >= field.modulus()) {
                send({wire::MessageType::error, task.round_id, wire::text_payload("vector element outside the field")});
                return true;
            }
        const Matrix x(field, x_values.size(), 1, x_values);
        const double total_ms = injected_delay(share_, opt_, task.round_id) * opt_.time_unit_ms;
        const std::size_t b = share_.subshares.size();

        std::uint32_t sent = 0;
        for (std::size_t j = 0; j < b; ++j) {
            const auto due = start + duration_cast<steady_clock::duration>(
                                         duration<double, std::milli>(total_ms * static_cast<double>(j + 1) / b));
            while (true) {
                const auto now = steady_clock::now();
                if (now >= due) break;
                if (!wait_for_frame(duration_cast<milliseconds>(due - now) + milliseconds(1))) {
                    if (opt_.stop && opt_.stop->load()) return false;
                    continue;
                }
                wire::Frame f;
                if (!net::read_frame(sock_, f)) return false;
                if (f.type == wire::MessageType::cancel && f.round_id == task.round_id) {
                    send({wire::MessageType::result_ack, task.round_id, wire::ack_payload(sent)});
                    return true;
                }
                if (f.type != wire::MessageType::cancel) {
                    fail(f.round_id, std::string("unexpected ") + wire::type_name(f.type) + " during a round");
                    return false;
                }
            }
            const Matrix result = matmul(share_.subshares[j], x);
            send({wire::MessageType::partial, task.round_id, wire::partial_payload(static_cast<std::uint32_t>(j), result)});
            ++sent;
        }
        send({wire::MessageType::result_ack, task.round_id, wire::ack_payload(sent)});
        return true;
    }

    net::Socket sock_;
    const ShareRecord& share_;
    const WorkerOptions& opt_;
};

} // namespace detail

/// Serves masters one connection at a time until stopped (or after one session with `once`).
inline void worker_serve(const net::Listener& listener, const ShareRecord& share, const WorkerOptions& opt) {
    if (opt.delay) opt.delay->validate();
    if (!(opt.time_unit_ms >= 0)) throw InvalidArgument("time unit must be nonnegative");
    while (true) {
        if (opt.stop && opt.stop->load()) return;
        if (!listener.socket().wait_readable(std::chrono::milliseconds(100))) continue;
        detail::WorkerConnection conn(listener.accept(), share, opt);
        conn.run();
        if (opt.once) return;
    }
}

/// A worker serving on a background thread; for tests and single-process demos.
class WorkerThread {
public:
    WorkerThread(ShareRecord share, WorkerOptions opt, const net::Address& bind = {"127.0.0.1", 0})
        : share_(std::move(share)), opt_(std::move(opt)), listener_(bind) {
        opt_.stop = &stop_;
        thread_ = std::thread([this] { worker_serve(listener_, share_, opt_); });
    }
    WorkerThread(const WorkerThread&) = delete;
    WorkerThread& operator=(const WorkerThread&) = delete;
    ~WorkerThread() {
        stop_ = true;
        if (thread_.joinable()) thread_.join();
    }

    net::Address address() const { return listener_.address(); }

private:
    ShareRecord share_;
    WorkerOptions opt_;
    std::atomic<bool> stop_{false};
    net::Listener listener_;
    std::thread thread_;
};

} // namespace scc
