#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "nrsi/errors.hpp"
#include "nrsi/numeric.hpp"

namespace nrsi {

// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    DenseMatrix transposed() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

// Dense 3-mode tensor, layout ((i * d2) + j) * d3 + k.
class DenseTensor3 {
public:
    DenseTensor3() : shape_{0, 0, 0} {}

    explicit DenseTensor3(std::array<std::size_t, 3> shape, double fill = 0.0)
        : shape_(shape), values_(shape[0] * shape[1] * shape[2], fill) {}

    const std::array<std::size_t, 3>& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const DenseTensor3& o) const { return shape_ == o.shape_; }

private:
    std::array<std::size_t, 3> shape_;
    std::vector<double> values_;
};

inline std::string shape_string(const std::array<std::size_t, 3>& s) {
    return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw shape_error("matmul: " + std::to_string(a.cols()) + " != " + std::to_string(b.rows()));
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            Accumulator acc;
            for (std::size_t k = 0; k < a.cols(); ++k) acc.add(a(i, k) * b(k, j));
            out(i, j) = acc.value();
        }
    }
    return out;
}

// mᵀm, symmetric cols x cols.
inline DenseMatrix gram(const DenseMatrix& m) {
    DenseMatrix out(m.cols(), m.cols());
    for (std::size_t a = 0; a < m.cols(); ++a) {
        for (std::size_t b = a; b < m.cols(); ++b) {
            Accumulator acc;
            for (std::size_t i = 0; i < m.rows(); ++i) acc.add(m(i, a) * m(i, b));
            out(a, b) = acc.value();
            out(b, a) = out(a, b);
        }
    }
    return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw shape_error("matrix add: shape mismatch");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
    return out;
}

inline double frobenius_norm_squared(const DenseMatrix& m) {
    Accumulator acc;
    for (double v : m.values()) acc.add(v * v);
    return acc.value();
}

inline double frobenius_norm(const DenseMatrix& m) { return std::sqrt(frobenius_norm_squared(m)); }

// Mode product against a dense tensor: contracts mode `mode` of `t` against
// the rows of `m` (m.rows == t.shape[mode]); the result's mode dimension is
// m.cols.  out[.., c, ..] = sum_r t[.., r, ..] * m(r, c).
inline DenseTensor3 ttm(const DenseTensor3& t, const DenseMatrix& m, int mode) {
    if (mode < 1 || mode > 3) throw config_error("ttm: mode must be 1, 2, or 3");
    const std::size_t axis = static_cast<std::size_t>(mode - 1);
    if (m.rows() != t.shape()[axis])
        throw shape_error("ttm: matrix rows " + std::to_string(m.rows()) +
                          " != tensor mode dimension " + std::to_string(t.shape()[axis]));
    std::array<std::size_t, 3> out_shape = t.shape();
    out_shape[axis] = m.cols();
    DenseTensor3 out(out_shape);
    std::array<std::size_t, 3> idx{};
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (std::size_t u = 0; u < out_shape[(axis + 1) % 3]; ++u) {
            for (std::size_t v = 0; v < out_shape[(axis + 2) % 3]; ++v) {
                idx[axis] = c;
                idx[(axis + 1) % 3] = u;
                idx[(axis + 2) % 3] = v;
                Accumulator acc;
                std::array<std::size_t, 3> src = idx;
                for (std::size_t r = 0; r < t.shape()[axis]; ++r) {
                    src[axis] = r;
                    acc.add(t(src[0], src[1], src[2]) * m(r, c));
                }
                out(idx[0], idx[1], idx[2]) = acc.value();
            }
        }
    }
    return out;
}

// Mode-3 slice as a d1 x d2 matrix.
inline DenseMatrix slice_mode3(const DenseTensor3& t, std::size_t p) {
    if (p >= t.shape()[2]) throw shape_error("slice_mode3: index out of range");
    DenseMatrix out(t.shape()[0], t.shape()[1]);
    for (std::size_t i = 0; i < t.shape()[0]; ++i)
        for (std::size_t j = 0; j < t.shape()[1]; ++j) out(i, j) = t(i, j, p);
    return out;
}

inline double inner(const DenseTensor3& a, const DenseTensor3& b) {
    if (!a.same_shape(b)) throw shape_error("inner: shape mismatch");
    Accumulator acc;
    for (std::size_t i = 0; i < a.size(); ++i) acc.add(a.values()[i] * b.values()[i]);
    return acc.value();
}

inline double frobenius_norm_squared(const DenseTensor3& t) {
    Accumulator acc;
    for (double v : t.values()) acc.add(v * v);
    return acc.value();
}

inline double frobenius_norm(const DenseTensor3& t) { return std::sqrt(frobenius_norm_squared(t)); }

}  // namespace nrsi
