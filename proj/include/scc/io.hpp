#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scc/classical.hpp"
#include "scc/errors.hpp"
#include "scc/matrix.hpp"
#include "scc/params.hpp"
#include "scc/staircase.hpp"

namespace scc {

/// Little-endian byte sink.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void bytes(std::span<const std::uint8_t> s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    std::size_t size() const { return buf_.size(); }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

/// Little-endian byte source over a borrowed buffer. Overruns throw the given error type.
template <typename Err = IoError>
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    void seek(std::size_t pos) {
        if (pos > data_.size()) throw Err("seek past end of buffer");
        pos_ = pos;
    }

private:
    void need(std::size_t n) const {
        if (n > data_.size() - pos_) throw Err("truncated input: need " + std::to_string(n) + " more bytes");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

// Matrix file: "SCMX", version u16 = 1, modulus u64, rows u32, cols u32, rows*cols u64 elements.

inline constexpr std::string_view kMatrixMagic = "SCMX";
inline constexpr std::uint16_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderSize = 4 + 2 + 8 + 4 + 4;

inline void encode_matrix(ByteWriter& w, const Matrix& m) {
    w.bytes(kMatrixMagic);
    w.u16(kMatrixVersion);
    w.u64(m.field().modulus());
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (auto v : m.data()) w.u64(v);
}

template <typename Err>
Matrix decode_matrix(ByteReader<Err>& r) {
    if (r.str(4) != kMatrixMagic) throw Err("bad matrix magic");
    const auto version = r.u16();
    if (version != kMatrixVersion) throw Err("unsupported matrix version " + std::to_string(version));
    const std::uint64_t p = r.u64();
    const std::size_t rows = r.u32(), cols = r.u32();
    if (rows * cols > r.remaining() / 8) throw Err("matrix body truncated");
    std::vector<std::uint64_t> data(rows * cols);
    for (auto& v : data) v = r.u64();
    try {
        return Matrix(PrimeField(p), rows, cols, std::move(data));
    } catch (const InvalidArgument& e) {
        throw Err(std::string("malformed matrix: ") + e.what());
    }
}

inline void save_matrix(const std::filesystem::path& path, const Matrix& m) {
    ByteWriter w;
    encode_matrix(w, m);
    write_file(path, w.buffer());
}

inline Matrix load_matrix(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    ByteReader<IoError> r(bytes);
    return decode_matrix(r);
}

// Share file: a complete matrix file (the share's sub-shares stacked vertically) followed by
//   scheme u8 (0 classical, 1 staircase), n u16, k u16, z u16, worker_index u16, original_m u64
// and, for staircase shares only, b u32 followed by b u64 absolute file offsets of the first
// element of each sub-share.

enum class Scheme : std::uint8_t { classical = 0, staircase = 1 };

inline const char* scheme_name(Scheme s) { return s == Scheme::classical ? "classical" : "staircase"; }

/// Scheme-neutral view of a share; classical shares have a single sub-share.
struct ShareRecord {
    Scheme scheme = Scheme::classical;
    SystemParams params;
    std::size_t worker_index = 0;
    std::size_t original_rows = 0;
    std::vector<Matrix> subshares;

    const PrimeField& field() const { return subshares.at(0).field(); }
    std::size_t subshare_rows() const { return subshares.at(0).rows(); }
    std::size_t cols() const { return subshares.at(0).cols(); }
};

inline ShareRecord to_record(const ClassicalShare& s, const SystemParams& params) {
    return {Scheme::classical, params, s.worker_index, s.original_rows, {s.block}};
}

inline ShareRecord to_record(const StaircaseShare& s, const SystemParams& params) {
    return {Scheme::staircase, params, s.worker_index, s.original_rows, s.subshares};
}

inline ClassicalShare to_classical(const ShareRecord& r) {
    if (r.scheme != Scheme::classical || r.subshares.size() != 1) throw InvalidArgument("not a classical share");
    return {r.worker_index, r.subshares[0], r.original_rows};
}

inline StaircaseShare to_staircase(const ShareRecord& r) {
    if (r.scheme != Scheme::staircase) throw InvalidArgument("not a staircase share");
    return {r.worker_index, r.subshares, r.original_rows};
}

inline std::vector<std::uint8_t> encode_share(const ShareRecord& rec) {
    if (rec.subshares.empty()) throw InvalidArgument("share has no sub-shares");
    const std::size_t sub_rows = rec.subshare_rows();
    const Matrix stacked = vstack(std::span<const Matrix>(rec.subshares));
    ByteWriter w;
    encode_matrix(w, stacked);
    w.u8(static_cast<std::uint8_t>(rec.scheme));
    w.u16(static_cast<std::uint16_t>(rec.params.n));
    w.u16(static_cast<std::uint16_t>(rec.params.k));
    w.u16(static_cast<std::uint16_t>(rec.params.z));
    w.u16(static_cast<std::uint16_t>(rec.worker_index));
    w.u64(rec.original_rows);
    if (rec.scheme == Scheme::staircase) {
        w.u32(static_cast<std::uint32_t>(rec.subshares.size()));
        for (std::size_t j = 0; j < rec.subshares.size(); ++j)
            w.u64(kMatrixHeaderSize + j * sub_rows * stacked.cols() * 8);
    }
    return w.take();
}

inline ShareRecord decode_share(std::span<const std::uint8_t> bytes) {
    ByteReader<IoError> r(bytes);
    const Matrix stacked = decode_matrix(r);
    ShareRecord rec;
    const auto scheme = r.u8();
    if (scheme > 1) throw IoError("unknown share scheme " + std::to_string(scheme));
    rec.scheme = static_cast<Scheme>(scheme);
    rec.params.n = r.u16();
    rec.params.k = r.u16();
    rec.params.z = r.u16();
    rec.worker_index = r.u16();
    rec.original_rows = r.u64();
    try {
        rec.params.validate();
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("share header: ") + e.what());
    }
    std::size_t b = 1;
    if (rec.scheme == Scheme::staircase) {
        b = r.u32();
        if (b == 0 || stacked.rows() % b != 0) throw IoError("share rows not divisible by sub-share count");
        const std::size_t sub_rows = stacked.rows() / b;
        for (std::size_t j = 0; j < b; ++j)
            if (r.u64() != kMatrixHeaderSize + j * sub_rows * stacked.cols() * 8) throw IoError("bad sub-share offset");
    }
    const std::size_t sub_rows = stacked.rows() / b;
    for (std::size_t j = 0; j < b; ++j) rec.subshares.push_back(stacked.row_block(j * sub_rows, sub_rows));
    return rec;
}

inline void save_share(const std::filesystem::path& path, const ShareRecord& rec) { write_file(path, encode_share(rec)); }

inline ShareRecord load_share(const std::filesystem::path& path) { return decode_share(read_file(path)); }

} // namespace scc
