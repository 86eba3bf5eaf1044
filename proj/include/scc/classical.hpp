#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scc/errors.hpp"
#include "scc/matrix.hpp"
#include "scc/params.hpp"
#include "scc/random.hpp"

namespace scc {

/// One worker's share under threshold secret sharing.
struct ClassicalShare {
    std::size_t worker_index = 0; // 1..n
    Matrix block;                 // (m' / (k - z)) x l, m' = m zero-padded
    std::size_t original_rows = 0;
};

namespace detail {

inline std::string worker_list(std::span<const std::size_t> workers) {
    std::string s = "{";
    for (std::size_t i = 0; i < workers.size(); ++i) s += (i ? "," : "") + std::to_string(workers[i]);
    return s + "}";
}

inline Matrix random_matrix(const PrimeField& field, std::size_t rows, std::size_t cols, KeySource& keys) {
    Matrix m(field, rows, cols);
    for (auto& v : m.data()) v = keys.next(field);
    return m;
}

inline void check_workers(std::span<const std::size_t> workers, std::size_t n) {
    for (std::size_t i = 0; i < workers.size(); ++i) {
        if (workers[i] < 1 || workers[i] > n)
            throw InvalidArgument("worker index " + std::to_string(workers[i]) + " outside 1.." + std::to_string(n));
        for (std::size_t j = 0; j < i; ++j)
            if (workers[i] == workers[j]) throw InvalidArgument("duplicate worker index " + std::to_string(workers[i]));
    }
}

} // namespace detail

/// Share i is row i of V * [A_1; ...; A_{k-z}; R_1; ...; R_z] with V the n x k Vandermonde
/// matrix on points 1..n. A is zero-padded to a multiple of k - z rows.
inline std::vector<ClassicalShare> classical_encode(const Matrix& a, const SystemParams& params, KeySource& keys) {
    const auto& field = a.field();
    params.validate_for(field);
    if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("cannot share an empty matrix");

    const std::size_t parts = params.k - params.z;
    const Matrix padded = a.zero_padded(parts);
    const std::size_t block_rows = padded.rows() / parts;

    std::vector<Matrix> secret_and_keys;
    secret_and_keys.reserve(params.k);
    for (std::size_t j = 0; j < parts; ++j) secret_and_keys.push_back(padded.row_block(j * block_rows, block_rows));
    for (std::size_t j = 0; j < params.z; ++j)
        secret_and_keys.push_back(detail::random_matrix(field, block_rows, a.cols(), keys));

    const auto pts = worker_points(params.n);
    const Matrix v = vandermonde(field, pts, params.n, params.k);

    std::vector<ClassicalShare> shares;
    shares.reserve(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        Matrix block(field, block_rows, a.cols());
        for (std::size_t j = 0; j < params.k; ++j) block.add_scaled(v(i, j), secret_and_keys[j]);
        shares.push_back({i + 1, std::move(block), a.rows()});
    }
    return shares;
}

/// Recovers A (or A x, when the shares are worker responses S_i x) from at least k shares.
/// Every supplied share is used; surplus shares must agree with the rest.
inline Matrix classical_decode(std::span<const ClassicalShare> shares, const SystemParams& params) {
    params.validate();
    if (shares.size() < params.k)
        throw InsufficientShares("classical decode needs " + std::to_string(params.k) + " shares, got " +
                                 std::to_string(shares.size()));
    std::vector<std::size_t> workers;
    for (const auto& s : shares) workers.push_back(s.worker_index);
    detail::check_workers(workers, params.n);

    const auto& field = shares[0].block.field();
    params.validate_for(field);
    const std::size_t rows = shares[0].block.rows(), cols = shares[0].block.cols();
    for (const auto& s : shares)
        if (s.block.rows() != rows || s.block.cols() != cols || !(s.block.field() == field))
            throw InvalidArgument("share blocks differ in shape or field");

    const auto pts = worker_points(params.n);
    const Matrix v = vandermonde(field, pts, params.n, params.k);
    Matrix coeffs(field, shares.size(), params.k);
    Matrix rhs(field, shares.size(), rows * cols);
    for (std::size_t i = 0; i < shares.size(); ++i) {
        for (std::size_t j = 0; j < params.k; ++j) coeffs(i, j) = v(shares[i].worker_index - 1, j);
        std::copy(shares[i].block.data().begin(), shares[i].block.data().end(), rhs.row(i).begin());
    }

    Matrix x;
    try {
        x = solve(coeffs, rhs);
    } catch (const IntegrityError&) {
        throw IntegrityError("shares from workers " + detail::worker_list(workers) + " are inconsistent");
    }

    const std::size_t parts = params.k - params.z;
    Matrix secret = x.row_block(0, parts).reshaped(parts * rows, cols);
    const std::size_t orig = shares[0].original_rows;
    const std::size_t keep = orig == 0 ? secret.rows() : std::min(orig, secret.rows());
    return secret.row_block(0, keep);
}

} // namespace scc
