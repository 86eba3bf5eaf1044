#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scc/errors.hpp"
#include "scc/io.hpp"
#include "scc/matrix.hpp"
#include "scc/params.hpp"

namespace scc::wire {

inline constexpr std::string_view kMagic = "SCW1";
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 8 + 4;
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

enum class MessageType : std::uint8_t { setup = 0, task = 1, partial = 2, cancel = 3, result_ack = 4, error = 5 };

inline const char* type_name(MessageType t) {
    switch (t) {
    case MessageType::setup: return "SETUP";
    case MessageType::task: return "TASK";
    case MessageType::partial: return "PARTIAL";
    case MessageType::cancel: return "CANCEL";
    case MessageType::result_ack: return "RESULT_ACK";
    case MessageType::error: return "ERROR";
    }
    return "?";
}

struct Frame {
    MessageType type = MessageType::setup;
    std::uint64_t round_id = 0;
    std::vector<std::uint8_t> payload;
};

struct Header {
    MessageType type;
    std::uint64_t round_id;
    std::uint32_t length;
};

inline std::vector<std::uint8_t> encode(const Frame& f) {
    if (f.payload.size() > kMaxPayload) throw ProtocolError("payload too large");
    ByteWriter w;
    w.bytes(kMagic);
    w.u16(kVersion);
    w.u8(static_cast<std::uint8_t>(f.type));
    w.u64(f.round_id);
    w.u32(static_cast<std::uint32_t>(f.payload.size()));
    w.bytes(f.payload);
    return w.take();
}

inline Header decode_header(std::span<const std::uint8_t> bytes) {
    ByteReader<ProtocolError> r(bytes);
    if (r.str(4) != kMagic) throw ProtocolError("bad frame magic");
    const auto version = r.u16();
    if (version != kVersion) throw ProtocolError("unsupported protocol version " + std::to_string(version));
    const auto type = r.u8();
    if (type > static_cast<std::uint8_t>(MessageType::error))
        throw ProtocolError("unknown message type " + std::to_string(type));
    Header h{static_cast<MessageType>(type), r.u64(), r.u32()};
    if (h.length > kMaxPayload) throw ProtocolError("frame payload length " + std::to_string(h.length) + " too large");
    return h;
}

/// Parses one complete frame; trailing bytes or a short payload are protocol errors.
inline Frame decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) throw ProtocolError("truncated frame header");
    const Header h = decode_header(bytes.first(kHeaderSize));
    if (bytes.size() != kHeaderSize + h.length) throw ProtocolError("frame length does not match its header");
    return {h.type, h.round_id, {bytes.begin() + kHeaderSize, bytes.end()}};
}

// TASK payload: u32 length, then that many u64 field elements.

inline std::vector<std::uint8_t> task_payload(const Matrix& x) {
    if (x.cols() != 1) throw InvalidArgument("task vector must be a column");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(x.rows()));
    for (auto v : x.data()) w.u64(v);
    return w.take();
}

inline std::vector<std::uint64_t> parse_task(std::span<const std::uint8_t> payload) {
    ByteReader<ProtocolError> r(payload);
    const std::size_t len = r.u32();
    if (r.remaining() != len * 8) throw ProtocolError("TASK payload length mismatch");
    std::vector<std::uint64_t> x(len);
    for (auto& v : x) v = r.u64();
    return x;
}

// PARTIAL payload: u32 sub-share index (0-based), u32 rows, then rows u64 elements.

struct Partial {
    std::uint32_t sub_index = 0;
    std::vector<std::uint64_t> values;
};

inline std::vector<std::uint8_t> partial_payload(std::uint32_t sub_index, const Matrix& result) {
    ByteWriter w;
    w.u32(sub_index);
    w.u32(static_cast<std::uint32_t>(result.rows()));
    for (auto v : result.data()) w.u64(v);
    return w.take();
}

inline Partial parse_partial(std::span<const std::uint8_t> payload) {
    ByteReader<ProtocolError> r(payload);
    Partial p;
    p.sub_index = r.u32();
    const std::size_t rows = r.u32();
    if (r.remaining() != rows * 8) throw ProtocolError("PARTIAL payload length mismatch");
    p.values.resize(rows);
    for (auto& v : p.values) v = r.u64();
    return p;
}

// RESULT_ACK payload: u32 number of PARTIALs the worker sent this round.

inline std::vector<std::uint8_t> ack_payload(std::uint32_t sent) {
    ByteWriter w;
    w.u32(sent);
    return w.take();
}

inline std::uint32_t parse_ack(std::span<const std::uint8_t> payload) {
    ByteReader<ProtocolError> r(payload);
    const auto v = r.u32();
    if (r.remaining() != 0) throw ProtocolError("RESULT_ACK payload length mismatch");
    return v;
}

/// What a worker reports about its share in reply to SETUP.
struct ShareDescriptor {
    std::uint8_t scheme = 0;
    SystemParams params;
    std::size_t worker_index = 0;
    std::size_t subshares = 0;
    std::size_t subshare_rows = 0;
    std::size_t cols = 0;
    std::size_t original_rows = 0;
    std::uint64_t modulus = 0;

    friend bool operator==(const ShareDescriptor&, const ShareDescriptor&) = default;
};

inline ShareDescriptor describe(const ShareRecord& rec) {
    return {static_cast<std::uint8_t>(rec.scheme), rec.params, rec.worker_index, rec.subshares.size(),
            rec.subshare_rows(), rec.cols(), rec.original_rows, rec.field().modulus()};
}

inline std::vector<std::uint8_t> setup_payload(const ShareDescriptor& d) {
    ByteWriter w;
    w.u8(d.scheme);
    w.u16(static_cast<std::uint16_t>(d.params.n));
    w.u16(static_cast<std::uint16_t>(d.params.k));
    w.u16(static_cast<std::uint16_t>(d.params.z));
    w.u16(static_cast<std::uint16_t>(d.worker_index));
    w.u32(static_cast<std::uint32_t>(d.subshares));
    w.u32(static_cast<std::uint32_t>(d.subshare_rows));
    w.u32(static_cast<std::uint32_t>(d.cols));
    w.u64(d.original_rows);
    w.u64(d.modulus);
    return w.take();
}

inline ShareDescriptor parse_setup(std::span<const std::uint8_t> payload) {
    ByteReader<ProtocolError> r(payload);
    ShareDescriptor d;
    d.scheme = r.u8();
    d.params.n = r.u16();
    d.params.k = r.u16();
    d.params.z = r.u16();
    d.worker_index = r.u16();
    d.subshares = r.u32();
    d.subshare_rows = r.u32();
    d.cols = r.u32();
    d.original_rows = r.u64();
    d.modulus = r.u64();
    if (r.remaining() != 0) throw ProtocolError("SETUP payload length mismatch");
    if (d.scheme > 1) throw ProtocolError("unknown scheme in SETUP reply");
    return d;
}

inline std::vector<std::uint8_t> text_payload(std::string_view s) { return {s.begin(), s.end()}; }

inline std::string parse_text(std::span<const std::uint8_t> payload) { return {payload.begin(), payload.end()}; }

} // namespace scc::wire
