#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nrsi/dense.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/numeric.hpp"

namespace nrsi {

// Coordinate-format sparse 3-mode tensor.  Entries are kept sorted by
// (i, j, k), duplicates are summed at construction, zeros are never stored,
// and every stored value is strictly positive and finite.
class SparseTensor3 {
public:
    struct Entry {
        std::size_t i, j, k;
        double value;
    };

    SparseTensor3() : shape_{0, 0, 0} {}

    SparseTensor3(std::array<std::size_t, 3> shape, std::vector<Entry> entries)
        : shape_(shape), entries_(std::move(entries)) {
        for (const Entry& e : entries_) {
            if (e.i >= shape_[0] || e.j >= shape_[1] || e.k >= shape_[2])
                throw shape_error("sparse tensor entry (" + std::to_string(e.i) + "," +
                                  std::to_string(e.j) + "," + std::to_string(e.k) +
                                  ") outside shape " + shape_string(shape_));
            if (!std::isfinite(e.value)) throw data_error("sparse tensor entry is not finite");
            if (e.value < 0.0) throw data_error("sparse tensor entry is negative");
        }
        std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
            return std::tie(a.i, a.j, a.k) < std::tie(b.i, b.j, b.k);
        });
        // Sum duplicate coordinates, then drop anything that is not strictly positive.
        std::size_t out = 0;
        for (std::size_t in = 0; in < entries_.size();) {
            Entry merged = entries_[in];
            std::size_t next = in + 1;
            while (next < entries_.size() && entries_[next].i == merged.i &&
                   entries_[next].j == merged.j && entries_[next].k == merged.k) {
                merged.value += entries_[next].value;
                ++next;
            }
            if (merged.value > 0.0) entries_[out++] = merged;
            in = next;
        }
        entries_.resize(out);
    }

    const std::array<std::size_t, 3>& shape() const { return shape_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t nnz() const { return entries_.size(); }

private:
    std::array<std::size_t, 3> shape_;
    std::vector<Entry> entries_;
};

// Sparse matrix in coordinate form, as produced by matricize.
struct SparseMatrixCoo {
    struct Entry {
        std::size_t row, col;
        double value;
    };
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Entry> entries;
};

// Mode-n unfolding.  Element (i1, i2, i3) lands in row i_n; the two remaining
// modes, taken in ascending order, index the column with the earlier mode
// varying fastest:
//   mode 1: col = i2 + i3 * n2     (shape n1 x n2*n3)
//   mode 2: col = i1 + i3 * n1     (shape n2 x n1*n3)
//   mode 3: col = i1 + i2 * n1     (shape n3 x n1*n2)
inline SparseMatrixCoo matricize(const SparseTensor3& t, int mode) {
    if (mode < 1 || mode > 3) throw config_error("matricize: mode must be 1, 2, or 3");
    const auto& s = t.shape();
    SparseMatrixCoo out;
    switch (mode) {
        case 1: out.rows = s[0]; out.cols = s[1] * s[2]; break;
        case 2: out.rows = s[1]; out.cols = s[0] * s[2]; break;
        default: out.rows = s[2]; out.cols = s[0] * s[1]; break;
    }
    out.entries.reserve(t.nnz());
    for (const auto& e : t.entries()) {
        std::size_t row = 0, col = 0;
        switch (mode) {
            case 1: row = e.i; col = e.j + e.k * s[1]; break;
            case 2: row = e.j; col = e.i + e.k * s[0]; break;
            default: row = e.k; col = e.i + e.j * s[0]; break;
        }
        out.entries.push_back({row, col, e.value});
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const SparseMatrixCoo::Entry& a, const SparseMatrixCoo::Entry& b) {
                  return std::tie(a.row, a.col) < std::tie(b.row, b.col);
              });
    return out;
}

// Mode product against a sparse tensor, same orientation as the dense ttm:
// contracts mode `mode` against the rows of `m` (m.rows == t.shape[mode]);
// the result's mode dimension is m.cols.
inline DenseTensor3 ttm(const SparseTensor3& t, const DenseMatrix& m, int mode) {
    if (mode < 1 || mode > 3) throw config_error("ttm: mode must be 1, 2, or 3");
    const std::size_t axis = static_cast<std::size_t>(mode - 1);
    if (m.rows() != t.shape()[axis])
        throw shape_error("ttm: matrix rows " + std::to_string(m.rows()) +
                          " != tensor mode dimension " + std::to_string(t.shape()[axis]));
    std::array<std::size_t, 3> out_shape = t.shape();
    out_shape[axis] = m.cols();
    DenseTensor3 out(out_shape);
    std::vector<double> comp(out.size(), 0.0);
    for (const auto& e : t.entries()) {
        std::array<std::size_t, 3> idx{e.i, e.j, e.k};
        const std::size_t r = idx[axis];
        for (std::size_t c = 0; c < m.cols(); ++c) {
            idx[axis] = c;
            const std::size_t flat = (idx[0] * out_shape[1] + idx[1]) * out_shape[2] + idx[2];
            compensated_add(out.values()[flat], comp[flat], e.value * m(r, c));
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += comp[i];
    return out;
}

// Fused t x1 pᵀ x2 qᵀ; equals ttm(ttm(t, p, 1), q, 2) without the large
// intermediate.  p.rows == t.shape[0], q.rows == t.shape[1]; the result is
// p.cols x q.cols x t.shape[2].
inline DenseTensor3 project_to_core(const SparseTensor3& t, const DenseMatrix& p,
                                    const DenseMatrix& q) {
    if (p.rows() != t.shape()[0] || q.rows() != t.shape()[1])
        throw shape_error("project_to_core: factor rows do not match tensor shape " +
                          shape_string(t.shape()));
    const std::size_t ra = p.cols(), rb = q.cols(), m = t.shape()[2];
    DenseTensor3 out({ra, rb, m});
    std::vector<double> comp(out.size(), 0.0);
    for (const auto& e : t.entries()) {
        for (std::size_t a = 0; a < ra; ++a) {
            const double va = e.value * p(e.i, a);
            for (std::size_t b = 0; b < rb; ++b) {
                const std::size_t flat = (a * rb + b) * m + e.k;
                compensated_add(out.values()[flat], comp[flat], va * q(e.j, b));
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += comp[i];
    return out;
}

inline double frobenius_norm_squared(const SparseTensor3& t) {
    Accumulator acc;
    for (const auto& e : t.entries()) acc.add(e.value * e.value);
    return acc.value();
}

inline double frobenius_norm(const SparseTensor3& t) {
    return std::sqrt(frobenius_norm_squared(t));
}

inline double sum(const SparseTensor3& t) {
    Accumulator acc;
    for (const auto& e : t.entries()) acc.add(e.value);
    return acc.value();
}

// Dense expansion, for small tensors and diagnostics.
inline DenseTensor3 densify(const SparseTensor3& t) {
    DenseTensor3 out(t.shape());
    for (const auto& e : t.entries()) out(e.i, e.j, e.k) = e.value;
    return out;
}

}  // namespace nrsi
