#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <memory>
#include <random>

#include "scc/master.hpp"
#include "scc/worker.hpp"
#include "test_util.hpp"

using namespace scc;
using scc::testing::ListKeys;

namespace {

struct LocalCluster {
    std::vector<std::unique_ptr<WorkerThread>> workers;
    std::vector<net::Address> addresses;
};

std::vector<ShareRecord> encode_records(const Matrix& a, const SystemParams& p, Scheme scheme, std::uint64_t seed) {
    SeededKeys keys(seed);
    std::vector<ShareRecord> out;
    if (scheme == Scheme::classical)
        for (const auto& s : classical_encode(a, p, keys)) out.push_back(to_record(s, p));
    else
        for (const auto& s : staircase_encode(a, p, keys)) out.push_back(to_record(s, p));
    return out;
}

LocalCluster start(const std::vector<ShareRecord>& shares, const std::vector<WorkerOptions>& opts) {
    LocalCluster c;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        c.workers.push_back(std::make_unique<WorkerThread>(shares[i], opts.size() == 1 ? opts[0] : opts[i]));
        c.addresses.push_back(c.workers.back()->address());
    }
    return c;
}

WorkerOptions fixed_delay(double units, double unit_ms) {
    WorkerOptions o;
    o.delay = DelayParams{std::numeric_limits<double>::infinity(), units};
    o.time_unit_ms = unit_ms;
    return o;
}

std::vector<std::uint8_t> raw_bytes(const Matrix& x) {
    ByteWriter w;
    for (auto v : x.data()) w.u64(v);
    return w.take();
}

bool contains(std::span<const std::uint8_t> hay, std::span<const std::uint8_t> needle) {
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

} // namespace

TEST(Wire, FrameBytes) {
    const wire::Frame f{wire::MessageType::result_ack, 0x0102030405060708ull, wire::ack_payload(3)};
    const auto bytes = wire::encode(f);
    const std::vector<std::uint8_t> expected{'S', 'C', 'W', '1', 1, 0, 4, 8, 7, 6, 5, 4, 3, 2, 1, 4, 0, 0, 0, 3, 0, 0, 0};
    EXPECT_EQ(bytes, expected);
    const auto back = wire::decode(bytes);
    EXPECT_EQ(back.type, f.type);
    EXPECT_EQ(back.round_id, f.round_id);
    EXPECT_EQ(wire::parse_ack(back.payload), 3u);
}

TEST(Wire, RejectsMalformed) {
    auto bytes = wire::encode({wire::MessageType::cancel, 1, {}});
    auto bad_type = bytes;
    bad_type[6] = 6;
    EXPECT_THROW(wire::decode(bad_type), ProtocolError);
    auto bad_magic = bytes;
    bad_magic[3] = '2';
    EXPECT_THROW(wire::decode(bad_magic), ProtocolError);
    auto bad_version = bytes;
    bad_version[4] = 2;
    EXPECT_THROW(wire::decode(bad_version), ProtocolError);
    auto long_len = bytes;
    long_len[15] = 1;
    EXPECT_THROW(wire::decode(long_len), ProtocolError);
    EXPECT_THROW(wire::decode(std::span(bytes).first(10)), ProtocolError);
    EXPECT_THROW(wire::parse_partial(std::vector<std::uint8_t>{0, 0, 0, 0, 2, 0, 0, 0, 1}), ProtocolError);
    EXPECT_THROW(wire::parse_task(std::vector<std::uint8_t>{1, 0, 0, 0}), ProtocolError);
}

TEST(Wire, PayloadRoundTrips) {
    PrimeField f(65537);
    const Matrix x(f, 3, 1, {1, 2, 65536});
    EXPECT_EQ(wire::parse_task(wire::task_payload(x)), (std::vector<std::uint64_t>{1, 2, 65536}));
    const auto part = wire::parse_partial(wire::partial_payload(5, x));
    EXPECT_EQ(part.sub_index, 5u);
    EXPECT_EQ(part.values, (std::vector<std::uint64_t>{1, 2, 65536}));
    const wire::ShareDescriptor d{1, {4, 2, 1}, 3, 6, 2, 8, 12, 65537};
    EXPECT_EQ(wire::parse_setup(wire::setup_payload(d)), d);
}

TEST(RoundState, ThreeTwoOneOrderings) {
    const SystemParams p{3, 2, 1};
    {
        RoundState s(p, Scheme::staircase, 2);
        s.record(1, 0);
        s.record(2, 0);
        EXPECT_FALSE(s.decodable());
        s.record(3, 0);
        EXPECT_EQ(s.decodable(), 3u);
    }
    {
        RoundState s(p, Scheme::staircase, 2);
        s.record(1, 0);
        s.record(1, 1);
        s.record(2, 0);
        EXPECT_FALSE(s.decodable());
        s.record(2, 1);
        EXPECT_EQ(s.decodable(), 2u);
        EXPECT_THROW(s.record(3, 1), ProtocolError);
        EXPECT_THROW(s.record(1, 2), ProtocolError);
    }
    {
        RoundState s(p, Scheme::classical, 1);
        s.record(3, 0);
        EXPECT_FALSE(s.decodable());
        s.record(1, 0);
        EXPECT_EQ(s.decodable(), 2u);
    }
}

TEST(RoundState, FirstDecodableInstantMatchesBruteForce) {
    std::mt19937_64 rng(8);
    for (const SystemParams p : {SystemParams{4, 2, 1}, {5, 3, 1}, {6, 4, 2}}) {
        const std::size_t b = p.subshare_count();
        for (int trial = 0; trial < 300; ++trial) {
            std::vector<std::size_t> order;
            for (std::size_t w = 1; w <= p.n; ++w)
                for (std::size_t j = 0; j < b; ++j) order.push_back(w);
            std::shuffle(order.begin(), order.end(), rng);
            RoundState s(p, Scheme::staircase, b);
            std::vector<std::size_t> prefix(p.n + 1, 0);
            bool seen = false;
            for (auto w : order) {
                s.record(w, prefix[w]++);
                std::optional<std::size_t> oracle;
                for (std::size_t d = p.k; d <= p.n && !oracle; ++d) {
                    const std::size_t need = (p.k - p.z) * b / (d - p.z);
                    std::size_t have = 0;
                    for (std::size_t v = 1; v <= p.n; ++v) have += prefix[v] >= need;
                    if (have >= d) oracle = d;
                }
                ASSERT_EQ(s.decodable(), oracle);
                if (oracle) seen = true;
            }
            EXPECT_TRUE(seen);
        }
    }
}

TEST(Worker, WorkerOnePartialsOverGF5) {
    PrimeField f(5);
    const SystemParams p{3, 2, 1};
    ListKeys keys({4, 1});
    const auto shares = staircase_encode(Matrix(f, 2, 1, {2, 3}), p, keys);
    WorkerThread worker(to_record(shares[0], p), {});
    const auto sock = net::connect(worker.address());
    net::write_frame(sock, {wire::MessageType::task, 7, wire::task_payload(Matrix(f, 1, 1, {1}))});
    wire::Frame f1, f2, ack;
    ASSERT_TRUE(net::read_frame(sock, f1));
    ASSERT_TRUE(net::read_frame(sock, f2));
    ASSERT_TRUE(net::read_frame(sock, ack));
    EXPECT_EQ(f1.type, wire::MessageType::partial);
    EXPECT_EQ(f1.round_id, 7u);
    EXPECT_EQ(wire::parse_partial(f1.payload).values, (std::vector<std::uint64_t>{(2 + 3 + 4) % 5}));
    EXPECT_EQ(wire::parse_partial(f2.payload).sub_index, 1u);
    EXPECT_EQ(wire::parse_partial(f2.payload).values, (std::vector<std::uint64_t>{(4 + 1) % 5}));
    EXPECT_EQ(ack.type, wire::MessageType::result_ack);
    EXPECT_EQ(wire::parse_ack(ack.payload), 2u);
}

TEST(Worker, ClassicalShareSendsOnePartial) {
    PrimeField f(65537);
    const SystemParams p{3, 2, 1};
    const auto recs = encode_records(scc::testing::random_matrix(f, 4, 2, 1), p, Scheme::classical, 1);
    WorkerThread worker(recs[1], {});
    const auto sock = net::connect(worker.address());
    net::write_frame(sock, {wire::MessageType::task, 1, wire::task_payload(Matrix(f, 2, 1, {1, 1}))});
    wire::Frame a, b;
    ASSERT_TRUE(net::read_frame(sock, a));
    ASSERT_TRUE(net::read_frame(sock, b));
    EXPECT_EQ(a.type, wire::MessageType::partial);
    EXPECT_EQ(b.type, wire::MessageType::result_ack);
    EXPECT_EQ(wire::parse_ack(b.payload), 1u);
}

TEST(Worker, CancelStopsRemainingSubtasks) {
    PrimeField f(65537);
    const SystemParams p{4, 2, 1};
    const auto recs = encode_records(scc::testing::random_matrix(f, 6, 2, 1), p, Scheme::staircase, 1);
    WorkerThread worker(recs[0], fixed_delay(1, 600)); // six sub-results, 100 ms apart
    const auto sock = net::connect(worker.address());
    net::write_frame(sock, {wire::MessageType::task, 3, wire::task_payload(Matrix(f, 2, 1, {1, 2}))});
    wire::Frame first;
    ASSERT_TRUE(net::read_frame(sock, first));
    EXPECT_EQ(first.type, wire::MessageType::partial);
    net::write_frame(sock, {wire::MessageType::cancel, 3, {}});
    wire::Frame ack;
    ASSERT_TRUE(net::read_frame(sock, ack));
    EXPECT_EQ(ack.type, wire::MessageType::result_ack);
    EXPECT_EQ(wire::parse_ack(ack.payload), 1u);
}

TEST(Worker, ErrorsOnBadInput) {
    PrimeField f(65537);
    const SystemParams p{3, 2, 1};
    const auto recs = encode_records(scc::testing::random_matrix(f, 4, 2, 1), p, Scheme::staircase, 1);
    WorkerThread worker(recs[0], {});
    {
        const auto sock = net::connect(worker.address());
        net::write_frame(sock, {wire::MessageType::task, 1, wire::task_payload(Matrix(f, 3, 1, {1, 1, 1}))});
        wire::Frame e;
        ASSERT_TRUE(net::read_frame(sock, e));
        EXPECT_EQ(e.type, wire::MessageType::error);
        EXPECT_NE(wire::parse_text(e.payload).find("does not match"), std::string::npos);
    }
    {
        const auto sock = net::connect(worker.address());
        const std::vector<std::uint8_t> junk{'J', 'U', 'N', 'K', 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
        sock.send_all(junk);
        wire::Frame e;
        ASSERT_TRUE(net::read_frame(sock, e));
        EXPECT_EQ(e.type, wire::MessageType::error);
        wire::Frame after;
        EXPECT_FALSE(net::read_frame(sock, after)); // connection closed
    }
}

TEST(Cluster, EndToEndBothSchemes) {
    PrimeField f(65537);
    for (const auto scheme : {Scheme::staircase, Scheme::classical})
        for (const auto& [p, rows] : {std::pair{SystemParams{4, 2, 1}, 1000}, {SystemParams{5, 3, 1}, 37}}) {
            const Matrix a = scc::testing::random_matrix(f, rows, 16, rows);
            const auto recs = encode_records(a, p, scheme, 3);
            auto cluster = start(recs, {WorkerOptions{}});
            Master master(cluster.addresses);
            EXPECT_EQ(master.scheme(), scheme);
            for (int r = 0; r < 5; ++r) {
                const Matrix x = scc::testing::random_matrix(f, 16, 1, 100 + r);
                const auto res = master.round(x);
                EXPECT_EQ(res.ax, matmul(a, x));
                EXPECT_GE(res.d_star, p.k);
            }
        }
}

TEST(Cluster, StalledWorkerLeavesTwo) {
    PrimeField f(65537);
    const SystemParams p{3, 2, 1};
    const Matrix a = scc::testing::random_matrix(f, 8, 4, 1);
    const auto recs = encode_records(a, p, Scheme::staircase, 2);
    auto cluster = start(recs, {WorkerOptions{}, WorkerOptions{}, fixed_delay(1, 2000)});
    Master master(cluster.addresses);
    const Matrix x = scc::testing::random_matrix(f, 4, 1, 2);
    const auto res = master.round(x);
    EXPECT_EQ(res.d_star, 2u);
    EXPECT_EQ(res.ax, matmul(a, x));
    EXPECT_EQ(res.prefixes.size(), 2u);
    EXPECT_LT(res.seconds_total, 1.0); // did not wait for the straggler
}

TEST(Cluster, EqualSpeedDecodesFromAll) {
    PrimeField f(65537);
    const SystemParams p{3, 2, 1};
    const Matrix a = scc::testing::random_matrix(f, 8, 4, 1);
    const auto recs = encode_records(a, p, Scheme::staircase, 2);
    auto cluster = start(recs, {fixed_delay(1, 200)}); // first sub-result at 100 ms, second at 200 ms
    Master master(cluster.addresses);
    const Matrix x = scc::testing::random_matrix(f, 4, 1, 3);
    const auto res = master.round(x);
    EXPECT_EQ(res.d_star, 3u);
    for (const auto& [w, used] : res.prefixes) EXPECT_EQ(used, 1u) << w;
    EXPECT_EQ(res.ax, matmul(a, x));
}

TEST(Cluster, TooFewWorkers) {
    PrimeField f(65537);
    const SystemParams p{3, 2, 1};
    const auto recs = encode_records(scc::testing::random_matrix(f, 4, 2, 1), p, Scheme::staircase, 2);
    WorkerThread only(recs[0], {});
    EXPECT_THROW(Master({only.address()}), InsufficientShares);
}

TEST(Cluster, MixedEncodingsRejected) {
    PrimeField f(65537);
    const SystemParams p{3, 2, 1};
    const auto a = encode_records(scc::testing::random_matrix(f, 4, 2, 1), p, Scheme::staircase, 2);
    const auto b = encode_records(scc::testing::random_matrix(f, 4, 2, 1), p, Scheme::classical, 2);
    WorkerThread w1(a[0], {}), w2(b[1], {});
    EXPECT_THROW(Master({w1.address(), w2.address()}), ProtocolError);
}

TEST(Cluster, StaircaseNotSlowerThanClassicalOnSameDelays) {
    PrimeField f(65537);
    const SystemParams p{4, 2, 1};
    const Matrix a = scc::testing::random_matrix(f, 12, 4, 1);
    WorkerOptions opt;
    opt.delay = DelayParams{1, 1};
    opt.time_unit_ms = 10;
    opt.seed = 77;
    auto sc = start(encode_records(a, p, Scheme::staircase, 1), {opt});
    auto ss = start(encode_records(a, p, Scheme::classical, 1), {opt});
    Master msc(sc.addresses), mss(ss.addresses);
    double tsc = 0, tss = 0;
    for (int r = 0; r < 30; ++r) {
        const Matrix x = scc::testing::random_matrix(f, 4, 1, r);
        const auto rs = msc.round(x);
        const auto rc = mss.round(x);
        EXPECT_EQ(rs.ax, rc.ax);
        tsc += rs.seconds_to_decodable;
        tss += rc.seconds_to_decodable;
    }
    EXPECT_LT(tsc, tss);
}

TEST(Cluster, HiddenVector) {
    PrimeField f(65537);
    const Matrix a = scc::testing::random_matrix(f, 10, 6, 5);
    const SystemParams g1{3, 2, 1}, g2{4, 2, 1};
    auto c1 = start(encode_records(a, g1, Scheme::staircase, 11), {WorkerOptions{}});
    auto c2 = start(encode_records(a, g2, Scheme::staircase, 12), {WorkerOptions{}});
    std::vector<std::vector<std::uint8_t>> transcript;
    std::mutex mu;
    MasterOptions opt;
    opt.on_send = [&](std::size_t, std::span<const std::uint8_t> bytes) {
        std::lock_guard lock(mu);
        transcript.emplace_back(bytes.begin(), bytes.end());
    };
    Master m1(c1.addresses, opt), m2(c2.addresses, opt);
    const Matrix x = scc::testing::random_matrix(f, 6, 1, 9);
    {
        SeededKeys masks(4);
        const auto res = master_round_hidden(m1, m2, x, masks);
        EXPECT_EQ(res.ax, matmul(a, x));
        for (const auto& frame : transcript) EXPECT_FALSE(contains(frame, raw_bytes(x)));
    }
    transcript.clear();
    {
        ZeroKeys no_mask;
        const auto res = master_round_hidden(m1, m2, x, no_mask);
        EXPECT_EQ(res.ax, matmul(a, x));
        bool leaked = false;
        for (const auto& frame : transcript) leaked |= contains(frame, raw_bytes(x));
        EXPECT_TRUE(leaked); // without a mask group 1 sees x itself
    }
}
