#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scc/errors.hpp"
#include "scc/field.hpp"

namespace scc {

/// Dense row-major matrix over GF(p).
class Matrix {
public:
    Matrix() = default;

    Matrix(const PrimeField& field, std::size_t rows, std::size_t cols)
        : field_(field), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    Matrix(const PrimeField& field, std::size_t rows, std::size_t cols, std::vector<std::uint64_t> data)
        : field_(field), rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows * cols)
            throw InvalidArgument("matrix data has " + std::to_string(data_.size()) + " elements, expected " +
                                  std::to_string(rows * cols));
        for (auto v : data_)
            if (v >= field_.modulus())
                throw InvalidArgument("matrix element " + std::to_string(v) + " outside GF(" +
                                      std::to_string(field_.modulus()) + ")");
    }

    static Matrix identity(const PrimeField& field, std::size_t n) {
        Matrix m(field, n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    /// Column vector from raw values.
    static Matrix column(const PrimeField& field, std::vector<std::uint64_t> values) {
        const std::size_t n = values.size();
        return Matrix(field, n, 1, std::move(values));
    }

    const PrimeField& field() const { return field_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::uint64_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    std::uint64_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<std::uint64_t> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const std::uint64_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const std::uint64_t> data() const { return data_; }
    std::span<std::uint64_t> data() { return data_; }

    /// Rows [first, first + count).
    Matrix row_block(std::size_t first, std::size_t count) const {
        if (first + count > rows_) throw InvalidArgument("row block out of range");
        return Matrix(field_, count, cols_,
                      std::vector<std::uint64_t>(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                                                 data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_)));
    }

    /// Same elements, reinterpreted with a new shape.
    Matrix reshaped(std::size_t rows, std::size_t cols) const {
        if (rows * cols != data_.size()) throw InvalidArgument("reshape changes element count");
        Matrix m = *this;
        m.rows_ = rows;
        m.cols_ = cols;
        return m;
    }

    /// Appends zero rows until the row count is a multiple of `multiple`.
    Matrix zero_padded(std::size_t multiple) const {
        std::size_t target = (rows_ + multiple - 1) / multiple * multiple;
        Matrix m = *this;
        m.rows_ = target;
        m.data_.resize(target * cols_, 0);
        return m;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = field_.add(data_[i], o.data_[i]);
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = field_.sub(data_[i], o.data_[i]);
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

    /// this += s * o
    void add_scaled(std::uint64_t s, const Matrix& o) {
        check_same_shape(o);
        if (s == 0) return;
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = field_.add(data_[i], field_.mul(s, o.data_[i]));
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.field_ == b.field_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void check_same_shape(const Matrix& o) const {
        if (!(field_ == o.field_)) throw UsageError("matrices over different fields");
        if (rows_ != o.rows_ || cols_ != o.cols_) throw InvalidArgument("matrix shapes differ");
    }

    PrimeField field_{};
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint64_t> data_;
};

/// Stacks matrices with equal column counts vertically.
inline Matrix vstack(std::span<const Matrix> parts) {
    if (parts.empty()) throw InvalidArgument("vstack of nothing");
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != parts[0].cols()) throw InvalidArgument("vstack column mismatch");
        if (!(p.field() == parts[0].field())) throw UsageError("vstack over different fields");
        rows += p.rows();
    }
    std::vector<std::uint64_t> data;
    data.reserve(rows * parts[0].cols());
    for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
    return Matrix(parts[0].field(), rows, parts[0].cols(), std::move(data));
}

/// Entry (i, j) = points[i]^j.
inline Matrix vandermonde(const PrimeField& field, std::span<const std::uint64_t> points, std::size_t rows,
                          std::size_t cols) {
    if (points.size() != rows) throw InvalidArgument("vandermonde needs exactly one point per row");
    for (std::size_t i = 0; i < rows; ++i) {
        if (points[i] >= field.modulus()) throw InvalidArgument("vandermonde point outside the field");
        if (points[i] == 0) throw InvalidArgument("vandermonde point must be nonzero");
        for (std::size_t j = 0; j < i; ++j)
            if (points[i] == points[j]) throw InvalidArgument("vandermonde points must be distinct");
    }
    Matrix v(field, rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::uint64_t x = 1;
        for (std::size_t j = 0; j < cols; ++j) {
            v(i, j) = x;
            x = field.mul(x, points[i]);
        }
    }
    return v;
}

/// Points 1..n, the evaluation points both codecs use.
inline std::vector<std::uint64_t> worker_points(std::size_t n) {
    std::vector<std::uint64_t> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = i + 1;
    return pts;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (!(a.field() == b.field())) throw UsageError("matmul over different fields");
    if (a.cols() != b.rows())
        throw InvalidArgument("matmul shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    const auto& f = a.field();
    Matrix out(f, a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t t = 0; t < a.cols(); ++t) {
            const std::uint64_t s = a(i, t);
            if (s == 0) continue;
            auto src = b.row(t);
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] = f.add(dst[j], f.mul(s, src[j]));
        }
    }
    return out;
}

/// Solves coeffs * X = rhs exactly.
///
/// `coeffs` is square or tall. Gaussian elimination picks the first nonzero pivot in each
/// column; for tall systems the rows left over after elimination must reduce to 0 = 0,
/// otherwise the system is inconsistent. Throws SingularMatrix when the column rank is
/// deficient and IntegrityError when redundant rows disagree.
inline Matrix solve(const Matrix& coeffs, const Matrix& rhs) {
    if (!(coeffs.field() == rhs.field())) throw UsageError("solve over different fields");
    if (coeffs.rows() != rhs.rows()) throw InvalidArgument("solve: coefficient and rhs row counts differ");
    const auto& f = coeffs.field();
    const std::size_t m = coeffs.rows(), k = coeffs.cols(), c = rhs.cols();
    if (m < k) throw SingularMatrix("underdetermined system: " + std::to_string(m) + " equations for " +
                                    std::to_string(k) + " unknowns");

    const std::size_t w = k + c;
    std::vector<std::uint64_t> aug(m * w);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(coeffs.row(i).begin(), coeffs.row(i).end(), aug.begin() + static_cast<std::ptrdiff_t>(i * w));
        std::copy(rhs.row(i).begin(), rhs.row(i).end(), aug.begin() + static_cast<std::ptrdiff_t>(i * w + k));
    }
    auto at = [&](std::size_t r, std::size_t col) -> std::uint64_t& { return aug[r * w + col]; };

    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        while (pivot < m && at(pivot, col) == 0) ++pivot;
        if (pivot == m) throw SingularMatrix("coefficient matrix is rank deficient (column " + std::to_string(col) + ")");
        if (pivot != col)
            for (std::size_t j = col; j < w; ++j) std::swap(at(pivot, j), at(col, j));
        const std::uint64_t inv = f.inv(at(col, col));
        for (std::size_t j = col; j < w; ++j) at(col, j) = f.mul(at(col, j), inv);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const std::uint64_t factor = at(r, col);
            if (factor == 0) continue;
            for (std::size_t j = col; j < w; ++j) at(r, j) = f.sub(at(r, j), f.mul(factor, at(col, j)));
        }
    }
    for (std::size_t r = k; r < m; ++r)
        for (std::size_t j = k; j < w; ++j)
            if (at(r, j) != 0) throw IntegrityError("overdetermined system is inconsistent");

    Matrix x(f, k, c);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < c; ++j) x(i, j) = at(i, k + j);
    return x;
}

} // namespace scc
