#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <tuple>

#include "nrsi/corpus.hpp"
#include "nrsi/dense.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/numeric.hpp"
#include "nrsi/sparse_tensor.hpp"

namespace nrsi {

// Floor applied to update denominators and to factor-matrix entries so the
// multiplicative rules never divide by zero or lock onto absorbed zeros.
// Core tensors are not floored on output: a zero core cell stays zero.
inline constexpr double kEpsilonFloor = 1e-12;

// Latent category counts for subject / object / other noun phrases.
struct Ranks {
    std::size_t subjects = 1;
    std::size_t objects = 1;
    std::size_t others = 1;
};

struct Regularizers {
    double lambda_subjects = 0.0;
    double lambda_objects = 0.0;
    double lambda_others = 0.0;
};

// Shared factor matrices and the three per-relation core tensors.  The
// relation mode always carries the identity factor, so each tensor is
// approximated as  core x1 row-factor x2 column-factor:
//   obj_oth  ~= core_obj_oth  x1 objects  x2 others
//   subj_oth ~= core_subj_oth x1 subjects x2 others
//   subj_obj ~= core_subj_obj x1 subjects x2 objects
struct FactorSet {
    DenseMatrix subjects;       // n1 x r1
    DenseMatrix objects;        // n2 x r2
    DenseMatrix others;         // n3 x r3
    DenseTensor3 core_obj_oth;  // r2 x r3 x m
    DenseTensor3 core_subj_oth; // r1 x r3 x m
    DenseTensor3 core_subj_obj; // r1 x r2 x m
};

struct FitReport {
    double fit_obj_oth = 0.0;
    double fit_subj_oth = 0.0;
    double fit_subj_obj = 0.0;
    double avg_fit = 0.0;
    double objective = 0.0;
    std::size_t iterations_run = 0;
};

struct SolveOptions {
    std::size_t max_iters = 500;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    std::size_t init_iters = 50;
    std::size_t init_restarts = 4;
};

namespace detail {

inline void check_factor_shapes(const BackoffTensors& t, const FactorSet& f) {
    const auto& x1 = t.obj_oth.shape();
    const auto& x2 = t.subj_oth.shape();
    const auto& x3 = t.subj_obj.shape();
    const std::size_t m = x1[2];
    const bool ok =
        f.subjects.rows() == x2[0] && f.subjects.rows() == x3[0] &&
        f.objects.rows() == x1[0] && f.objects.rows() == x3[1] &&
        f.others.rows() == x1[1] && f.others.rows() == x2[1] &&
        x2[2] == m && x3[2] == m &&
        f.core_obj_oth.shape() ==
            std::array<std::size_t, 3>{f.objects.cols(), f.others.cols(), m} &&
        f.core_subj_oth.shape() ==
            std::array<std::size_t, 3>{f.subjects.cols(), f.others.cols(), m} &&
        f.core_subj_obj.shape() ==
            std::array<std::size_t, 3>{f.subjects.cols(), f.objects.cols(), m};
    if (!ok) throw shape_error("factor set is inconsistent with the back-off tensors");
}

// out = X_(1) * ((G x2 Q)_(1))ᵀ, accumulated straight off the stored entries:
// out[i, a] = sum over entries (i, j, p) of v * sum_b G(a, b, p) Q(j, b).
inline DenseMatrix factor_numerator_mode1(const SparseTensor3& x, const DenseTensor3& g,
                                          const DenseMatrix& q) {
    const std::size_t ra = g.shape()[0], rb = g.shape()[1];
    DenseMatrix out(x.shape()[0], ra);
    std::vector<double> comp(out.size(), 0.0);
    for (const auto& e : x.entries()) {
        for (std::size_t a = 0; a < ra; ++a) {
            Accumulator acc;
            for (std::size_t b = 0; b < rb; ++b) acc.add(g(a, b, e.k) * q(e.j, b));
            const std::size_t flat = e.i * ra + a;
            compensated_add(out.values()[flat], comp[flat], e.value * acc.value());
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += comp[i];
    return out;
}

// out = X_(2) * ((G x1 P)_(2))ᵀ:
// out[j, b] = sum over entries (i, j, p) of v * sum_a P(i, a) G(a, b, p).
inline DenseMatrix factor_numerator_mode2(const SparseTensor3& x, const DenseTensor3& g,
                                          const DenseMatrix& p) {
    const std::size_t ra = g.shape()[0], rb = g.shape()[1];
    DenseMatrix out(x.shape()[1], rb);
    std::vector<double> comp(out.size(), 0.0);
    for (const auto& e : x.entries()) {
        for (std::size_t b = 0; b < rb; ++b) {
            Accumulator acc;
            for (std::size_t a = 0; a < ra; ++a) acc.add(p(e.i, a) * g(a, b, e.k));
            const std::size_t flat = e.j * rb + b;
            compensated_add(out.values()[flat], comp[flat], e.value * acc.value());
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += comp[i];
    return out;
}

// free_mode 1: sum_p G_p S G_pᵀ (S spans mode 2); free_mode 2: sum_p G_pᵀ S G_p.
inline DenseMatrix core_gram(const DenseTensor3& g, const DenseMatrix& s, int free_mode) {
    const std::size_t d1 = g.shape()[0], d2 = g.shape()[1], m = g.shape()[2];
    const std::size_t r = free_mode == 1 ? d1 : d2;
    const std::size_t q = free_mode == 1 ? d2 : d1;
    if (s.rows() != q || s.cols() != q) throw shape_error("core_gram: gram matrix size mismatch");
    DenseMatrix out(r, r);
    std::vector<double> comp(out.size(), 0.0);
    DenseMatrix tmp(r, q);
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t u = 0; u < r; ++u) {
            for (std::size_t w = 0; w < q; ++w) {
                Accumulator acc;
                for (std::size_t v = 0; v < q; ++v) {
                    const double gv = free_mode == 1 ? g(u, v, p) : g(v, u, p);
                    acc.add(gv * s(v, w));
                }
                tmp(u, w) = acc.value();
            }
        }
        for (std::size_t u = 0; u < r; ++u) {
            for (std::size_t w = 0; w < r; ++w) {
                Accumulator acc;
                for (std::size_t v = 0; v < q; ++v) {
                    const double gv = free_mode == 1 ? g(w, v, p) : g(v, w, p);
                    acc.add(tmp(u, v) * gv);
                }
                compensated_add(out.values()[u * r + w], comp[u * r + w], acc.value());
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += comp[i];
    return out;
}

inline DenseMatrix hadamard_update(const DenseMatrix& current, const DenseMatrix& numerator,
                                   const DenseMatrix& denominator, bool floor_output) {
    DenseMatrix out(current.rows(), current.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double den = std::max(denominator.values()[i], kEpsilonFloor);
        double v = current.values()[i] * (numerator.values()[i] / den);
        if (floor_output) v = std::max(v, kEpsilonFloor);
        out.values()[i] = v;
    }
    return out;
}

inline DenseTensor3 hadamard_update(const DenseTensor3& current, const DenseTensor3& numerator,
                                    const DenseTensor3& denominator) {
    DenseTensor3 out(current.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double den = std::max(denominator.values()[i], kEpsilonFloor);
        out.values()[i] = current.values()[i] * (numerator.values()[i] / den);
    }
    return out;
}

// Residual ||X - G x1 P x2 Q||² expanded as ||X||² - 2<X x1 Pᵀ x2 Qᵀ, G> +
// <G x1 PᵀP x2 QᵀQ, G>, so only stored entries of X are ever touched.
inline double residual_squared(const SparseTensor3& x, const DenseTensor3& g,
                               const DenseMatrix& p, const DenseMatrix& q) {
    const double xsq = frobenius_norm_squared(x);
    const DenseTensor3 projected = project_to_core(x, p, q);
    const DenseTensor3 reconstructed = ttm(ttm(g, gram(p), 1), gram(q), 2);
    Accumulator acc;
    acc.add(xsq);
    acc.add(-2.0 * inner(projected, g));
    acc.add(inner(reconstructed, g));
    return std::max(acc.value(), 0.0);
}

}  // namespace detail

// Value of the coupled objective: the three reconstruction residuals plus
// the Tikhonov terms on the factor matrices.
inline double objective(const BackoffTensors& t, const FactorSet& f, const Regularizers& reg) {
    detail::check_factor_shapes(t, f);
    Accumulator acc;
    acc.add(detail::residual_squared(t.obj_oth, f.core_obj_oth, f.objects, f.others));
    acc.add(detail::residual_squared(t.subj_oth, f.core_subj_oth, f.subjects, f.others));
    acc.add(detail::residual_squared(t.subj_obj, f.core_subj_obj, f.subjects, f.objects));
    acc.add(reg.lambda_subjects * frobenius_norm_squared(f.subjects));
    acc.add(reg.lambda_objects * frobenius_norm_squared(f.objects));
    acc.add(reg.lambda_others * frobenius_norm_squared(f.others));
    return acc.value();
}

// Multiplicative update of the subject factor.  Numerator couples the
// subj_obj and subj_oth tensors; denominator is the matched Gram product
// plus the regularizer.  Output entries are floored at kEpsilonFloor.
inline DenseMatrix update_subject_factor(const BackoffTensors& t, const FactorSet& f,
                                         const Regularizers& reg) {
    detail::check_factor_shapes(t, f);
    const DenseMatrix num =
        add(detail::factor_numerator_mode1(t.subj_obj, f.core_subj_obj, f.objects),
            detail::factor_numerator_mode1(t.subj_oth, f.core_subj_oth, f.others));
    const DenseMatrix grams = add(detail::core_gram(f.core_subj_obj, gram(f.objects), 1),
                                  detail::core_gram(f.core_subj_oth, gram(f.others), 1));
    DenseMatrix den = matmul(f.subjects, grams);
    for (std::size_t i = 0; i < den.size(); ++i)
        den.values()[i] += reg.lambda_subjects * f.subjects.values()[i];
    return detail::hadamard_update(f.subjects, num, den, true);
}

inline DenseMatrix update_object_factor(const BackoffTensors& t, const FactorSet& f,
                                        const Regularizers& reg) {
    detail::check_factor_shapes(t, f);
    const DenseMatrix num =
        add(detail::factor_numerator_mode2(t.subj_obj, f.core_subj_obj, f.subjects),
            detail::factor_numerator_mode1(t.obj_oth, f.core_obj_oth, f.others));
    const DenseMatrix grams = add(detail::core_gram(f.core_subj_obj, gram(f.subjects), 2),
                                  detail::core_gram(f.core_obj_oth, gram(f.others), 1));
    DenseMatrix den = matmul(f.objects, grams);
    for (std::size_t i = 0; i < den.size(); ++i)
        den.values()[i] += reg.lambda_objects * f.objects.values()[i];
    return detail::hadamard_update(f.objects, num, den, true);
}

inline DenseMatrix update_other_factor(const BackoffTensors& t, const FactorSet& f,
                                       const Regularizers& reg) {
    detail::check_factor_shapes(t, f);
    const DenseMatrix num =
        add(detail::factor_numerator_mode2(t.subj_oth, f.core_subj_oth, f.subjects),
            detail::factor_numerator_mode2(t.obj_oth, f.core_obj_oth, f.objects));
    const DenseMatrix grams = add(detail::core_gram(f.core_subj_oth, gram(f.subjects), 2),
                                  detail::core_gram(f.core_obj_oth, gram(f.objects), 2));
    DenseMatrix den = matmul(f.others, grams);
    for (std::size_t i = 0; i < den.size(); ++i)
        den.values()[i] += reg.lambda_others * f.others.values()[i];
    return detail::hadamard_update(f.others, num, den, true);
}

// Multiplicative core updates with the relation mode untouched.  No output
// floor here: zero core cells stay zero.
inline std::tuple<DenseTensor3, DenseTensor3, DenseTensor3> update_cores(const BackoffTensors& t,
                                                                         const FactorSet& f) {
    detail::check_factor_shapes(t, f);
    auto updated = [](const SparseTensor3& x, const DenseTensor3& g, const DenseMatrix& p,
                      const DenseMatrix& q) {
        const DenseTensor3 num = project_to_core(x, p, q);
        const DenseTensor3 den = ttm(ttm(g, gram(p), 1), gram(q), 2);
        return detail::hadamard_update(g, num, den);
    };
    return {updated(t.obj_oth, f.core_obj_oth, f.objects, f.others),
            updated(t.subj_oth, f.core_subj_oth, f.subjects, f.others),
            updated(t.subj_obj, f.core_subj_obj, f.subjects, f.objects)};
}

// FIT(X, G, P, Q) = 1 - ||X - G x1 P x2 Q||_F / ||X||_F per tensor, plus the
// unregularized objective.  May be negative for bad factors.
inline FitReport fit_report(const BackoffTensors& t, const FactorSet& f) {
    detail::check_factor_shapes(t, f);
    auto fit_of = [](const SparseTensor3& x, const DenseTensor3& g, const DenseMatrix& p,
                     const DenseMatrix& q, double& residual_out) {
        const double xsq = frobenius_norm_squared(x);
        if (xsq == 0.0) throw data_error("fit_report: zero-norm tensor, FIT undefined");
        residual_out = detail::residual_squared(x, g, p, q);
        return 1.0 - std::sqrt(residual_out) / std::sqrt(xsq);
    };
    FitReport report;
    double r1 = 0.0, r2 = 0.0, r3 = 0.0;
    report.fit_obj_oth = fit_of(t.obj_oth, f.core_obj_oth, f.objects, f.others, r1);
    report.fit_subj_oth = fit_of(t.subj_oth, f.core_subj_oth, f.subjects, f.others, r2);
    report.fit_subj_obj = fit_of(t.subj_obj, f.core_subj_obj, f.subjects, f.objects, r3);
    report.avg_fit = (report.fit_obj_oth + report.fit_subj_oth + report.fit_subj_obj) / 3.0;
    report.objective = r1 + r2 + r3;
    report.iterations_run = 0;
    return report;
}

namespace detail {

struct Tucker2Result {
    DenseMatrix row_factor;
    DenseMatrix col_factor;
    DenseTensor3 core;
};

inline DenseMatrix random_positive_matrix(std::size_t rows, std::size_t cols,
                                          std::mt19937_64& rng) {
    DenseMatrix m(rows, cols);
    for (double& v : m.values()) v = uniform_positive(rng);
    return m;
}

inline DenseTensor3 random_positive_tensor(std::array<std::size_t, 3> shape,
                                           std::mt19937_64& rng) {
    DenseTensor3 t(shape);
    for (double& v : t.values()) v = uniform_positive(rng);
    return t;
}

// Unregularized non-negative Tucker2 of a single tensor via the same
// multiplicative rules, from a strictly positive uniform start.
inline Tucker2Result tucker2_single(const SparseTensor3& x, std::size_t row_rank,
                                    std::size_t col_rank, std::uint64_t seed,
                                    std::size_t iterations) {
    std::mt19937_64 rng(seed);
    Tucker2Result r;
    r.row_factor = random_positive_matrix(x.shape()[0], row_rank, rng);
    r.col_factor = random_positive_matrix(x.shape()[1], col_rank, rng);
    r.core = random_positive_tensor({row_rank, col_rank, x.shape()[2]}, rng);
    for (std::size_t it = 0; it < iterations; ++it) {
        {
            const DenseMatrix num = factor_numerator_mode1(x, r.core, r.col_factor);
            const DenseMatrix den =
                matmul(r.row_factor, core_gram(r.core, gram(r.col_factor), 1));
            r.row_factor = hadamard_update(r.row_factor, num, den, true);
        }
        {
            const DenseMatrix num = factor_numerator_mode2(x, r.core, r.row_factor);
            const DenseMatrix den =
                matmul(r.col_factor, core_gram(r.core, gram(r.row_factor), 2));
            r.col_factor = hadamard_update(r.col_factor, num, den, true);
        }
        {
            const DenseTensor3 num = project_to_core(x, r.row_factor, r.col_factor);
            const DenseTensor3 den =
                ttm(ttm(r.core, gram(r.row_factor), 1), gram(r.col_factor), 2);
            r.core = hadamard_update(r.core, num, den);
        }
    }
    return r;
}

inline DenseMatrix mean_of(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values()[i] = 0.5 * (out.values()[i] + b.values()[i]);
    return out;
}

// Reparametrizes a run so every factor column has unit L2 norm, folding the
// scales into the core.  Pure rescaling: the reconstruction is unchanged.
inline void normalize_columns(Tucker2Result& r) {
    auto normalize = [](DenseMatrix& factor, DenseTensor3& core, int core_mode) {
        for (std::size_t j = 0; j < factor.cols(); ++j) {
            Accumulator acc;
            for (std::size_t i = 0; i < factor.rows(); ++i)
                acc.add(factor(i, j) * factor(i, j));
            const double norm = std::sqrt(acc.value());
            if (norm <= 0.0) continue;
            for (std::size_t i = 0; i < factor.rows(); ++i) factor(i, j) /= norm;
            const auto& shape = core.shape();
            for (std::size_t a = 0; a < shape[0]; ++a)
                for (std::size_t b = 0; b < shape[1]; ++b)
                    for (std::size_t p = 0; p < shape[2]; ++p)
                        if ((core_mode == 1 ? a : b) == j) core(a, b, p) *= norm;
        }
    };
    normalize(r.row_factor, r.core, 1);
    normalize(r.col_factor, r.core, 2);
}

// Greedy cosine matching of candidate columns onto reference columns.
// perm[j] = candidate column assigned to reference column j.
inline std::vector<std::size_t> match_columns(const DenseMatrix& reference,
                                              const DenseMatrix& candidate) {
    const std::size_t r = reference.cols();
    std::vector<std::size_t> perm(r, 0);
    std::vector<bool> used(r, false);
    for (std::size_t j = 0; j < r; ++j) {
        double best = -1.0;
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < r; ++k) {
            if (used[k]) continue;
            Accumulator dot, nr, nc;
            for (std::size_t i = 0; i < reference.rows(); ++i) {
                dot.add(reference(i, j) * candidate(i, k));
                nr.add(reference(i, j) * reference(i, j));
                nc.add(candidate(i, k) * candidate(i, k));
            }
            const double denom = std::sqrt(nr.value() * nc.value());
            const double cos = denom > 0.0 ? dot.value() / denom : 0.0;
            if (cos > best) {
                best = cos;
                best_k = k;
            }
        }
        used[best_k] = true;
        perm[j] = best_k;
    }
    return perm;
}

inline DenseMatrix permute_columns(const DenseMatrix& m, const std::vector<std::size_t>& perm) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t j = 0; j < perm.size(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m(i, perm[j]);
    return out;
}

inline DenseTensor3 permute_core(const DenseTensor3& core, const std::vector<std::size_t>& perm,
                                 int mode) {
    DenseTensor3 out(core.shape());
    for (std::size_t a = 0; a < core.shape()[0]; ++a)
        for (std::size_t b = 0; b < core.shape()[1]; ++b)
            for (std::size_t p = 0; p < core.shape()[2]; ++p)
                out(a, b, p) = mode == 1 ? core(perm[a], b, p) : core(a, perm[b], p);
    return out;
}

// Best of several independent runs, judged by reconstruction residual.
inline Tucker2Result tucker2_best_of(const SparseTensor3& x, std::size_t row_rank,
                                     std::size_t col_rank, std::uint64_t seed,
                                     std::size_t iterations, std::size_t restarts) {
    Tucker2Result best;
    double best_residual = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::max<std::size_t>(restarts, 1); ++k) {
        Tucker2Result run =
            tucker2_single(x, row_rank, col_rank, mix_seed(seed, 101 + k), iterations);
        const double residual = residual_squared(x, run.core, run.row_factor, run.col_factor);
        if (residual < best_residual) {
            best_residual = residual;
            best = std::move(run);
        }
    }
    return best;
}

}  // namespace detail

inline void validate_ranks(const BackoffTensors& t, const Ranks& ranks) {
    if (ranks.subjects < 1 || ranks.objects < 1 || ranks.others < 1)
        throw config_error("ranks must be >= 1");
    if (ranks.subjects > t.vocab.n_subjects() || ranks.objects > t.vocab.n_objects() ||
        ranks.others > t.vocab.n_others())
        throw config_error("rank exceeds vocabulary dimension: ranks (" +
                           std::to_string(ranks.subjects) + "," + std::to_string(ranks.objects) +
                           "," + std::to_string(ranks.others) + ") vs sizes (" +
                           std::to_string(t.vocab.n_subjects()) + "," +
                           std::to_string(t.vocab.n_objects()) + "," +
                           std::to_string(t.vocab.n_others()) + ")");
}

// Warm start: per input tensor, the best of several independent single-tensor
// Tucker2 decompositions; each factor matrix is then the mean of its two
// candidates.  Candidate columns are unit-normalized (scales folded into the
// cores) and matched by cosine similarity before averaging, with the same
// permutation applied to the candidate's core, so the mean does not smear
// unrelated latent categories together.  Every returned entry is strictly
// positive.
inline FactorSet init_factors(const BackoffTensors& t, const Ranks& ranks, std::uint64_t seed,
                              std::size_t init_iters = 50, std::size_t init_restarts = 4) {
    validate_ranks(t, ranks);
    auto run_obj_oth = detail::tucker2_best_of(t.obj_oth, ranks.objects, ranks.others,
                                               mix_seed(seed, 1), init_iters, init_restarts);
    auto run_subj_oth = detail::tucker2_best_of(t.subj_oth, ranks.subjects, ranks.others,
                                                mix_seed(seed, 2), init_iters, init_restarts);
    auto run_subj_obj = detail::tucker2_best_of(t.subj_obj, ranks.subjects, ranks.objects,
                                                mix_seed(seed, 3), init_iters, init_restarts);
    detail::normalize_columns(run_obj_oth);
    detail::normalize_columns(run_subj_oth);
    detail::normalize_columns(run_subj_obj);

    // Reference column orders: subjects and objects from the subj_obj run,
    // others from the subj_oth run.  The remaining candidates are permuted
    // onto those references, cores along with them.
    const auto perm_subj = detail::match_columns(run_subj_obj.row_factor, run_subj_oth.row_factor);
    run_subj_oth.row_factor = detail::permute_columns(run_subj_oth.row_factor, perm_subj);
    run_subj_oth.core = detail::permute_core(run_subj_oth.core, perm_subj, 1);

    const auto perm_obj = detail::match_columns(run_subj_obj.col_factor, run_obj_oth.row_factor);
    run_obj_oth.row_factor = detail::permute_columns(run_obj_oth.row_factor, perm_obj);
    run_obj_oth.core = detail::permute_core(run_obj_oth.core, perm_obj, 1);

    const auto perm_oth = detail::match_columns(run_subj_oth.col_factor, run_obj_oth.col_factor);
    run_obj_oth.col_factor = detail::permute_columns(run_obj_oth.col_factor, perm_oth);
    run_obj_oth.core = detail::permute_core(run_obj_oth.core, perm_oth, 2);

    FactorSet f;
    f.subjects = detail::mean_of(run_subj_obj.row_factor, run_subj_oth.row_factor);
    f.objects = detail::mean_of(run_subj_obj.col_factor, run_obj_oth.row_factor);
    f.others = detail::mean_of(run_subj_oth.col_factor, run_obj_oth.col_factor);
    f.core_obj_oth = run_obj_oth.core;
    f.core_subj_oth = run_subj_oth.core;
    f.core_subj_obj = run_subj_obj.core;
    for (double& v : f.subjects.values()) v = std::max(v, kEpsilonFloor);
    for (double& v : f.objects.values()) v = std::max(v, kEpsilonFloor);
    for (double& v : f.others.values()) v = std::max(v, kEpsilonFloor);
    for (double& v : f.core_obj_oth.values()) v = std::max(v, kEpsilonFloor);
    for (double& v : f.core_subj_oth.values()) v = std::max(v, kEpsilonFloor);
    for (double& v : f.core_subj_obj.values()) v = std::max(v, kEpsilonFloor);
    return f;
}

// Alternates subject, object, other, and core updates from the given start
// until the relative objective decrease over a full sweep drops below tol or
// max_iters sweeps have run.
inline std::pair<FactorSet, FitReport> factorize_from(const BackoffTensors& t, FactorSet f,
                                                      const Regularizers& reg,
                                                      const SolveOptions& options) {
    if (options.max_iters < 1) throw config_error("max_iters must be >= 1");
    if (reg.lambda_subjects < 0.0 || reg.lambda_objects < 0.0 || reg.lambda_others < 0.0)
        throw config_error("regularization weights must be >= 0");
    detail::check_factor_shapes(t, f);
    double prev = objective(t, f, reg);
    if (!std::isfinite(prev))
        throw numeric_error("objective is not finite before the first sweep");
    double current = prev;
    std::size_t iterations = 0;
    for (std::size_t it = 1; it <= options.max_iters; ++it) {
        f.subjects = update_subject_factor(t, f, reg);
        f.objects = update_object_factor(t, f, reg);
        f.others = update_other_factor(t, f, reg);
        auto [c1, c2, c3] = update_cores(t, f);
        f.core_obj_oth = std::move(c1);
        f.core_subj_oth = std::move(c2);
        f.core_subj_obj = std::move(c3);
        current = objective(t, f, reg);
        if (!std::isfinite(current))
            throw numeric_error("objective became non-finite at sweep " + std::to_string(it) +
                                "; check the epsilon floor configuration");
        iterations = it;
        const double rel =
            (prev - current) / std::max(std::abs(prev), std::numeric_limits<double>::min());
        if (rel < options.tol) break;
        prev = current;
    }
    FitReport report = fit_report(t, f);
    report.objective = current;
    report.iterations_run = iterations;
    return {std::move(f), report};
}

inline std::pair<FactorSet, FitReport> factorize(const BackoffTensors& t, const Ranks& ranks,
                                                 const Regularizers& reg,
                                                 const SolveOptions& options) {
    FactorSet f = init_factors(t, ranks, options.seed, options.init_iters, options.init_restarts);
    return factorize_from(t, std::move(f), reg, options);
}

}  // namespace nrsi
