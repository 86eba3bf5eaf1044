#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "scc/classical.hpp"
#include "scc/errors.hpp"
#include "scc/io.hpp"
#include "scc/net.hpp"
#include "scc/random.hpp"
#include "scc/staircase.hpp"
#include "scc/wire.hpp"

namespace scc {

/// Per-round bookkeeping of how many leading sub-results each worker has delivered.
class RoundState {
public:
    RoundState(const SystemParams& params, Scheme scheme, std::size_t subshares)
        : params_(params), scheme_(scheme), b_(subshares), prefix_(params.n + 1, 0) {
        params.validate();
        if (scheme == Scheme::classical && b_ != 1) throw InvalidArgument("classical shares have one sub-share");
        if (scheme == Scheme::staircase && b_ != params.subshare_count())
            throw InvalidArgument("staircase sub-share count does not match the parameters");
    }

    /// Registers sub-result `sub_index` of `worker`; sub-results must arrive in order.
    void record(std::size_t worker, std::size_t sub_index) {
        if (worker < 1 || worker > params_.n) throw ProtocolError("worker index out of range");
        if (sub_index != prefix_[worker])
            throw ProtocolError("worker " + std::to_string(worker) + " sent sub-result " + std::to_string(sub_index) +
                                " but " + std::to_string(prefix_[worker]) + " was expected");
        if (sub_index >= b_) throw ProtocolError("sub-result index beyond the share");
        ++prefix_[worker];
    }

    std::size_t prefix(std::size_t worker) const { return prefix_.at(worker); }

    /// Leading sub-results needed from each of d workers.
    std::size_t need(std::size_t d) const {
        if (scheme_ == Scheme::classical) return 1;
        return (params_.k - params_.z) * b_ / (d - params_.z);
    }

    /// Smallest d that the received prefixes can decode from.
    std::optional<std::size_t> decodable() const {
        const std::size_t top = scheme_ == Scheme::classical ? params_.k : params_.n;
        for (std::size_t d = params_.k; d <= top; ++d) {
            const std::size_t want = need(d);
            std::size_t have = 0;
            for (std::size_t w = 1; w <= params_.n; ++w) have += prefix_[w] >= want;
            if (have >= d) return d;
        }
        return std::nullopt;
    }

private:
    SystemParams params_;
    Scheme scheme_;
    std::size_t b_;
    std::vector<std::size_t> prefix_;
};

struct RoundResult {
    Matrix ax;
    std::uint64_t round_id = 0;
    std::size_t d_star = 0;
    double seconds_to_decodable = 0; // TASK broadcast until the deciding PARTIAL arrived
    double seconds_total = 0;        // including decode
    std::map<std::size_t, std::size_t> prefixes; // worker -> sub-results used
};

struct MasterOptions {
    /// Called with (worker slot, frame bytes) for every frame the master sends.
    std::function<void(std::size_t, std::span<const std::uint8_t>)> on_send;
    std::chrono::milliseconds connect_patience{5000};
    std::chrono::milliseconds round_timeout{120000};
};

/// A master session over a fixed set of workers that hold shares from one encode run.
class Master {
public:
    Master(const std::vector<net::Address>& workers, MasterOptions opt = {}) : opt_(std::move(opt)) {
        if (workers.empty()) throw InvalidArgument("no workers given");
        for (const auto& a : workers) conns_.push_back({net::connect(a, opt_.connect_patience), a, {}, true});
        for (std::size_t i = 0; i < conns_.size(); ++i) {
            send(i, {wire::MessageType::setup, 0, {}});
            wire::Frame reply;
            if (!net::read_frame(conns_[i].sock, reply)) throw ProtocolError("worker " + conns_[i].address.to_string() + " closed during setup");
            if (reply.type == wire::MessageType::error) throw ProtocolError("worker setup failed: " + wire::parse_text(reply.payload));
            if (reply.type != wire::MessageType::setup) throw ProtocolError("expected SETUP reply");
            conns_[i].desc = wire::parse_setup(reply.payload);
        }
        check_descriptors();
        for (std::size_t i = 0; i < conns_.size(); ++i) readers_.emplace_back([this, i] { read_loop(i); });
    }

    Master(const Master&) = delete;
    Master& operator=(const Master&) = delete;

    ~Master() {
        for (auto& c : conns_) c.sock.shutdown();
        for (auto& t : readers_) t.join();
    }

    const SystemParams& params() const { return desc().params; }
    Scheme scheme() const { return static_cast<Scheme>(desc().scheme); }
    std::size_t subshares() const { return desc().subshares; }
    std::size_t cols() const { return desc().cols; }
    const PrimeField& field() const { return field_; }

    /// Broadcasts x, decodes A x at the first moment some d is decodable, cancels the rest.
    RoundResult round(const Matrix& x) {
        using clock = std::chrono::steady_clock;
        if (x.cols() != 1 || x.rows() != cols()) throw InvalidArgument("vector length must equal the data width");
        if (!(x.field() == field_)) throw UsageError("vector over a different field");
        const std::uint64_t round_id = ++round_counter_;
        const auto& d = desc();
        RoundState state(d.params, scheme(), d.subshares);
        std::map<std::size_t, std::vector<Matrix>> responses;
        std::vector<bool> done(conns_.size(), false);

        const auto start = clock::now();
        const auto payload = wire::task_payload(x);
        for (std::size_t i = 0; i < conns_.size(); ++i) {
            if (!conns_[i].alive) {
                done[i] = true;
                continue;
            }
            try {
                send(i, {wire::MessageType::task, round_id, payload});
            } catch (const IoError&) {
                conns_[i].alive = false;
                done[i] = true;
            }
        }

        RoundResult result;
        result.round_id = round_id;
        std::optional<std::exception_ptr> failure;
        bool decoded = false;
        auto all_done = [&] {
            for (bool v : done)
                if (!v) return false;
            return true;
        };

        while (!(decoded && all_done())) {
            if (!decoded && all_done()) {
                failure = std::make_exception_ptr(InsufficientShares(
                    "round " + std::to_string(round_id) + " failed: responses never became decodable"));
                break;
            }
            Event ev;
            if (!pop(ev, start + opt_.round_timeout)) {
                failure = std::make_exception_ptr(ProtocolError("round " + std::to_string(round_id) + " timed out"));
                break;
            }
            auto& conn = conns_[ev.slot];
            if (!ev.frame) {
                conn.alive = false;
                done[ev.slot] = true;
                continue;
            }
            const auto& f = *ev.frame;
            if (f.round_id != round_id) continue; // stale
            switch (f.type) {
            case wire::MessageType::partial: {
                if (decoded) break;
                const auto part = wire::parse_partial(f.payload);
                if (part.values.size() != d.subshare_rows) throw ProtocolError("PARTIAL has the wrong number of rows");
                state.record(conn.desc.worker_index, part.sub_index);
                responses[conn.desc.worker_index].push_back(Matrix(field_, part.values.size(), 1, part.values));
                if (auto dd = state.decodable()) {
                    result.d_star = *dd;
                    result.seconds_to_decodable = std::chrono::duration<double>(clock::now() - start).count();
                    cancel_unfinished(round_id, done);
                    try {
                        result.ax = decode(responses, *dd, state, result.prefixes);
                    } catch (...) {
                        failure = std::current_exception();
                    }
                    result.seconds_total = std::chrono::duration<double>(clock::now() - start).count();
                    decoded = true;
                }
                break;
            }
            case wire::MessageType::result_ack:
            case wire::MessageType::error:
                done[ev.slot] = true;
                break;
            default:
                throw ProtocolError(std::string("unexpected ") + wire::type_name(f.type) + " from worker");
            }
        }
        if (failure) {
            if (!decoded) cancel_unfinished(round_id, done);
            std::rethrow_exception(*failure);
        }
        return result;
    }

private:
    struct Conn {
        net::Socket sock;
        net::Address address;
        wire::ShareDescriptor desc;
        bool alive;
    };

    struct Event {
        std::size_t slot = 0;
        std::optional<wire::Frame> frame; // empty: connection closed or broken
    };

    const wire::ShareDescriptor& desc() const { return conns_.front().desc; }

    void check_descriptors() {
        const auto& first = conns_.front().desc;
        first.params.validate();
        field_ = PrimeField(first.modulus);
        first.params.validate_for(field_);
        std::set<std::size_t> seen;
        for (const auto& c : conns_) {
            auto d = c.desc;
            d.worker_index = first.worker_index;
            if (!(d == first)) throw ProtocolError("worker " + c.address.to_string() + " holds a share from a different encoding");
            if (!seen.insert(c.desc.worker_index).second)
                throw ProtocolError("two workers hold share " + std::to_string(c.desc.worker_index));
            if (c.desc.worker_index < 1 || c.desc.worker_index > first.params.n) throw ProtocolError("worker index out of range");
        }
        if (conns_.size() < first.params.k)
            throw InsufficientShares("only " + std::to_string(conns_.size()) + " workers for k=" + std::to_string(first.params.k));
        const std::size_t expected_b = first.scheme == 0 ? 1 : first.params.subshare_count();
        if (first.subshares != expected_b) throw ProtocolError("sub-share count does not match the parameters");
    }

    void send(std::size_t slot, const wire::Frame& f) {
        const auto bytes = wire::encode(f);
        if (opt_.on_send) opt_.on_send(slot, bytes);
        conns_[slot].sock.send_all(bytes);
    }

    void cancel_unfinished(std::uint64_t round_id, const std::vector<bool>& done) {
        for (std::size_t i = 0; i < conns_.size(); ++i) {
            if (done[i] || !conns_[i].alive) continue;
            try {
                send(i, {wire::MessageType::cancel, round_id, {}});
            } catch (const IoError&) {
            }
        }
    }

    Matrix decode(const std::map<std::size_t, std::vector<Matrix>>& responses, std::size_t d, const RoundState& state,
                  std::map<std::size_t, std::size_t>& used) {
        const auto& ds = desc();
        const std::size_t want = state.need(d);
        for (const auto& [w, subs] : responses)
            if (subs.size() >= want) used[w] = want;
        if (scheme() == Scheme::classical) {
            std::vector<ClassicalShare> shares;
            for (const auto& [w, subs] : responses) shares.push_back({w, subs[0], ds.original_rows});
            return classical_decode(shares, ds.params);
        }
        StaircaseResponses trimmed;
        for (const auto& [w, subs] : responses)
            if (subs.size() >= want) trimmed[w] = std::vector<Matrix>(subs.begin(), subs.begin() + static_cast<std::ptrdiff_t>(want));
        return staircase_decode(trimmed, d, ds.params, ds.original_rows);
    }

    void read_loop(std::size_t slot) {
        while (true) {
            Event ev{slot, std::nullopt};
            try {
                wire::Frame f;
                if (net::read_frame(conns_[slot].sock, f)) ev.frame = std::move(f);
            } catch (const Error&) {
            }
            const bool closed = !ev.frame;
            push(std::move(ev));
            if (closed) return;
        }
    }

    void push(Event ev) {
        {
            std::lock_guard lock(mu_);
            events_.push_back(std::move(ev));
        }
        cv_.notify_one();
    }

    bool pop(Event& out, std::chrono::steady_clock::time_point deadline) {
        std::unique_lock lock(mu_);
        if (!cv_.wait_until(lock, deadline, [&] { return !events_.empty(); })) return false;
        out = std::move(events_.front());
        events_.pop_front();
        return true;
    }

    MasterOptions opt_;
    std::vector<Conn> conns_;
    std::vector<std::thread> readers_;
    PrimeField field_;
    std::uint64_t round_counter_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Event> events_;
};

/// x hidden from the workers: group 1 computes A(x + u), group 2 computes A u, the master
/// subtracts. Both groups hold independent encodings of the same A.
struct HiddenRoundResult {
    Matrix ax;
    RoundResult group1;
    RoundResult group2;
};

inline HiddenRoundResult master_round_hidden(Master& group1, Master& group2, const Matrix& x, KeySource& mask_source) {
    if (!(group1.field() == group2.field()) || !(x.field() == group1.field())) throw UsageError("groups use different fields");
    if (group1.cols() != group2.cols()) throw InvalidArgument("groups hold data of different widths");
    Matrix u(x.field(), x.rows(), 1);
    for (auto& v : u.data()) v = mask_source.next(x.field());
    const Matrix masked = x + u;
    auto first = std::async(std::launch::async, [&] { return group1.round(masked); });
    RoundResult second = group2.round(u);
    RoundResult one = first.get();
    if (one.ax.rows() != second.ax.rows()) throw IntegrityError("groups decoded results of different lengths");
    return {one.ax - second.ax, std::move(one), std::move(second)};
}

} // namespace scc
