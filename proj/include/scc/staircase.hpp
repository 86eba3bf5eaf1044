#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scc/classical.hpp"
#include "scc/errors.hpp"
#include "scc/matrix.hpp"
#include "scc/params.hpp"
#include "scc/random.hpp"

namespace scc {

/// What sits in one cell of the n x b block grid M_SC.
struct StaircaseCell {
    enum class Kind : std::uint8_t { zero, data, key };
    Kind kind = Kind::zero;
    std::size_t index = 0; // data block A_{index+1} or key block R_{index+1}

    friend bool operator==(const StaircaseCell&, const StaircaseCell&) = default;
};

/// Block map of M_SC = [M_1 ... M_h] for a universal Staircase code.
///
/// All widths are counted in sub-shares (one column of the grid). Group i (1-based) has
/// width (k-z)b / (b_i b_{i-1}) with b_0 = 1, b_i = d_i - z and d_i = n - i + 1, so
/// downloading groups 1..i from each of d_i workers reads alpha_{d_i} b sub-shares.
///
/// M_1 = [S; R_1], M_j = [D_{j-1}; R_j; 0]. S, R_j and D_j are filled column-major; D_j
/// holds row n-j+1 of [M_1 ... M_j] read left to right.
struct StaircaseLayout {
    SystemParams params;
    std::size_t b = 0;                   // sub-shares per share
    std::size_t h = 0;                   // n - k + 1 groups
    std::vector<std::size_t> d;          // d_i, i = 1..h (index 0 holds d_1 = n)
    std::vector<std::size_t> group_width;
    std::vector<std::size_t> group_end;  // cumulative width W_i
    std::vector<StaircaseCell> cells;    // n x b, row-major
    std::size_t original_rows = 0;
    std::size_t padded_rows = 0;
    std::size_t block_rows = 0;          // rows of each A_j, R_j and sub-share
    std::size_t cols = 0;

    std::size_t data_blocks() const { return (params.k - params.z) * b; }
    std::size_t key_blocks() const { return params.z * b; }

    const StaircaseCell& cell(std::size_t row, std::size_t col) const { return cells[row * b + col]; }

    /// alpha_d b: leading sub-shares needed from each of d workers.
    std::size_t prefix_for(std::size_t d_workers) const {
        check_d(d_workers);
        return (params.k - params.z) * b / (d_workers - params.z);
    }

    /// Number of groups M_1..M_i downloaded when decoding from d workers.
    std::size_t groups_for(std::size_t d_workers) const {
        check_d(d_workers);
        return params.n - d_workers + 1;
    }

    /// Key blocks R_1 .. R_i that a decode from d workers recovers along with A.
    std::size_t keys_recovered(std::size_t d_workers) const { return params.z * prefix_for(d_workers); }

private:
    void check_d(std::size_t d_workers) const {
        if (d_workers < params.k || d_workers > params.n)
            throw InvalidArgument("d=" + std::to_string(d_workers) + " outside {" + std::to_string(params.k) + ".." +
                                  std::to_string(params.n) + "}");
    }
};

inline StaircaseLayout staircase_layout(const SystemParams& params, std::size_t m, std::size_t l) {
    params.validate();
    StaircaseLayout lay;
    lay.params = params;
    const std::size_t n = params.n, k = params.k, z = params.z, kz = k - z;
    lay.b = static_cast<std::size_t>(params.subshare_count());
    lay.h = n - k + 1;
    const std::size_t b = lay.b;

    for (std::size_t dd = k; dd <= n; ++dd)
        if ((kz * b) % (dd - z) != 0) throw InvalidArgument("alpha_d * b is not integral"); // unreachable by LCM choice

    std::vector<std::size_t> bi(lay.h + 1);
    bi[0] = 1;
    for (std::size_t i = 1; i <= lay.h; ++i) {
        lay.d.push_back(n - i + 1);
        bi[i] = n - i + 1 - z;
    }
    std::size_t acc = 0;
    for (std::size_t i = 1; i <= lay.h; ++i) {
        const std::size_t w = (i == 1) ? kz * b / bi[1] : kz * b / (bi[i] * bi[i - 1]);
        lay.group_width.push_back(w);
        acc += w;
        lay.group_end.push_back(acc);
    }
    if (acc != b) throw InvalidArgument("staircase group widths do not sum to b"); // invariant

    lay.cells.assign(n * b, StaircaseCell{});
    auto put = [&](std::size_t r, std::size_t c, StaircaseCell cell) { lay.cells[r * b + c] = cell; };

    std::size_t next_key = 0;
    auto fill_keys = [&](std::size_t row0, std::size_t col0, std::size_t width) {
        for (std::size_t c = 0; c < width; ++c)
            for (std::size_t r = 0; r < z; ++r) put(row0 + r, col0 + c, {StaircaseCell::Kind::key, next_key++});
    };

    // M_1 = [S; R_1]
    const std::size_t w1 = lay.group_width[0];
    for (std::size_t c = 0; c < w1; ++c)
        for (std::size_t r = 0; r < bi[1]; ++r) put(r, c, {StaircaseCell::Kind::data, c * bi[1] + r});
    fill_keys(bi[1], 0, w1);

    // M_j = [D_{j-1}; R_j; 0]
    for (std::size_t j = 2; j <= lay.h; ++j) {
        const std::size_t col0 = lay.group_end[j - 2];
        const std::size_t width = lay.group_width[j - 1];
        const std::size_t src_row = n - j + 1; // 0-based row n-(j-1)+1
        const std::size_t height = bi[j];
        for (std::size_t t = 0; t < col0; ++t) {
            const std::size_t r = t % height, c = t / height;
            put(r, col0 + c, lay.cell(src_row, t));
        }
        fill_keys(height, col0, width);
    }
    if (next_key != z * b) throw InvalidArgument("staircase key count mismatch"); // invariant

    const std::size_t unit = b * kz;
    lay.original_rows = m;
    lay.padded_rows = (m + unit - 1) / unit * unit;
    lay.block_rows = lay.padded_rows / unit;
    lay.cols = l;
    return lay;
}

/// One worker's share: b ordered sub-shares, each block_rows x l.
struct StaircaseShare {
    std::size_t worker_index = 0; // 1..n
    std::vector<Matrix> subshares;
    std::size_t original_rows = 0;
};

/// Share i is row i of C = V M_SC with V the n x n Vandermonde matrix on points 1..n,
/// cut into its b column blocks.
inline std::vector<StaircaseShare> staircase_encode(const Matrix& a, const SystemParams& params, KeySource& keys) {
    const auto& field = a.field();
    params.validate_for(field);
    if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("cannot share an empty matrix");
    const StaircaseLayout lay = staircase_layout(params, a.rows(), a.cols());

    const Matrix padded = a.zero_padded(lay.b * (params.k - params.z));
    std::vector<Matrix> data, key;
    data.reserve(lay.data_blocks());
    for (std::size_t j = 0; j < lay.data_blocks(); ++j) data.push_back(padded.row_block(j * lay.block_rows, lay.block_rows));
    key.reserve(lay.key_blocks());
    for (std::size_t j = 0; j < lay.key_blocks(); ++j)
        key.push_back(detail::random_matrix(field, lay.block_rows, a.cols(), keys));

    const auto pts = worker_points(params.n);
    const Matrix v = vandermonde(field, pts, params.n, params.n);

    std::vector<StaircaseShare> shares;
    shares.reserve(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        StaircaseShare s{i + 1, {}, a.rows()};
        s.subshares.reserve(lay.b);
        for (std::size_t col = 0; col < lay.b; ++col) {
            Matrix sub(field, lay.block_rows, a.cols());
            for (std::size_t r = 0; r < params.n; ++r) {
                const auto& cell = lay.cell(r, col);
                if (cell.kind == StaircaseCell::Kind::data) sub.add_scaled(v(i, r), data[cell.index]);
                else if (cell.kind == StaircaseCell::Kind::key) sub.add_scaled(v(i, r), key[cell.index]);
            }
            s.subshares.push_back(std::move(sub));
        }
        shares.push_back(std::move(s));
    }
    return shares;
}

/// Worker index -> leading sub-shares (or sub-share responses) received from it.
using StaircaseResponses = std::map<std::size_t, std::vector<Matrix>>;

/// Recovers A (or A x from sub-share responses) from d workers' alpha_d b leading sub-shares.
///
/// Unknowns are the data blocks plus the key blocks appearing in M_1..M_i; every worker that
/// supplied at least alpha_d b sub-shares contributes alpha_d b equations per block element.
/// Extra workers make the system overdetermined and are cross-checked.
inline Matrix staircase_decode(const StaircaseResponses& responses, std::size_t d_workers, const SystemParams& params,
                               std::size_t original_rows = 0) {
    params.validate();
    const StaircaseLayout lay = staircase_layout(params, 0, 0);
    const std::size_t need = lay.prefix_for(d_workers);

    std::vector<std::size_t> workers;
    for (const auto& [w, subs] : responses)
        if (subs.size() >= need) workers.push_back(w);
    if (workers.size() < d_workers)
        throw InsufficientShares("decoding from d=" + std::to_string(d_workers) + " needs " + std::to_string(d_workers) +
                                 " workers with " + std::to_string(need) + " leading sub-shares, have " +
                                 std::to_string(workers.size()));
    detail::check_workers(workers, params.n);

    const Matrix& first = responses.at(workers[0])[0];
    const auto& field = first.field();
    params.validate_for(field);
    const std::size_t rows = first.rows(), cols = first.cols();
    for (auto w : workers)
        for (std::size_t c = 0; c < need; ++c) {
            const Matrix& m = responses.at(w)[c];
            if (m.rows() != rows || m.cols() != cols || !(m.field() == field))
                throw InvalidArgument("sub-shares differ in shape or field");
        }

    const std::size_t data_unknowns = lay.data_blocks();
    const std::size_t unknowns = data_unknowns + lay.keys_recovered(d_workers);
    const auto pts = worker_points(params.n);
    const Matrix v = vandermonde(field, pts, params.n, params.n);

    Matrix coeffs(field, workers.size() * need, unknowns);
    Matrix rhs(field, workers.size() * need, rows * cols);
    std::size_t eq = 0;
    for (auto w : workers) {
        const auto& subs = responses.at(w);
        for (std::size_t col = 0; col < need; ++col, ++eq) {
            for (std::size_t r = 0; r < params.n; ++r) {
                const auto& cell = lay.cell(r, col);
                if (cell.kind == StaircaseCell::Kind::zero) continue;
                const std::size_t u = cell.kind == StaircaseCell::Kind::data ? cell.index : data_unknowns + cell.index;
                coeffs(eq, u) = field.add(coeffs(eq, u), v(w - 1, r));
            }
            std::copy(subs[col].data().begin(), subs[col].data().end(), rhs.row(eq).begin());
        }
    }

    Matrix x;
    try {
        x = solve(coeffs, rhs);
    } catch (const IntegrityError&) {
        throw IntegrityError("sub-shares from workers " + detail::worker_list(workers) + " are inconsistent");
    }

    Matrix secret = x.row_block(0, data_unknowns).reshaped(data_unknowns * rows, cols);
    const std::size_t keep = original_rows == 0 ? secret.rows() : std::min(original_rows, secret.rows());
    return secret.row_block(0, keep);
}

/// Convenience overload: the leading alpha_d b sub-shares of the given full shares.
inline Matrix staircase_decode(std::span<const StaircaseShare> shares, std::size_t d_workers,
                               const SystemParams& params) {
    if (shares.empty()) throw InsufficientShares("no shares supplied");
    StaircaseResponses responses;
    for (const auto& s : shares) responses[s.worker_index] = s.subshares;
    return staircase_decode(responses, d_workers, params, shares[0].original_rows);
}

} // namespace scc
