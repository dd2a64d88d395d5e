#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "coreset/common.hpp"
#include "coreset/merge_reduce.hpp"
#include "coreset/svd.hpp"

namespace coreset {

enum class QueryProvenance { right_singular_smallest, bottom_k_singular, net, random_unit };

struct QuerySet {
    std::vector<Vector> vectors;
    QueryProvenance provenance = QueryProvenance::random_unit;
};

inline double lp_norm(const Vector& v, int p) {
    double s = 0.0;
    for (Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
    return std::pow(s, 1.0 / static_cast<double>(p));
}

/// Order-p contraction sum_i w_i (a_i^T x)^p; absolute mode uses |a_i^T x|^p.
inline double contract(const std::vector<WeightedRow>& rows, const Vector& x, int p, bool signed_mode) {
    std::vector<double> terms;
    terms.reserve(rows.size());
    for (const auto& wr : rows) {
        if (wr.row.size() != x.size()) throw invalid_input_error("contract: dimension mismatch");
        double dot = wr.row.dot(x);
        double v = signed_mode ? std::pow(dot, p) : std::pow(std::abs(dot), p);
        terms.push_back(wr.weight * v);
    }
    return pairwise_sum(terms);
}

inline double contract(const Matrix& a, const Vector& x, int p, bool signed_mode) {
    if (a.cols() != x.size()) throw invalid_input_error("contract: dimension mismatch");
    std::vector<double> terms;
    terms.reserve(a.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        double dot = a.row(i).dot(x);
        terms.push_back(signed_mode ? std::pow(dot, p) : std::pow(std::abs(dot), p));
    }
    return pairwise_sum(terms);
}

inline double relative_error(double truth, double estimate) {
    if (truth == 0.0) throw invalid_input_error("relative_error: truth is zero");
    return std::abs(truth - estimate) / std::abs(truth);
}

struct ErrorValue {
    double value = 0.0;
    bool absolute_fallback = false;  // truth was zero; value is |estimate|
};

inline ErrorValue relative_error_flagged(double truth, double estimate) {
    if (truth == 0.0) return {std::abs(estimate), true};
    return {std::abs(truth - estimate) / std::abs(truth), false};
}

namespace detail {
// Practical cap on the stall budget; the nominal 50 (2/eps)^k is unaffordable
// for fine nets in higher rank.
inline constexpr std::size_t kNetStallCap = 200'000;
}  // namespace detail

/// Greedy maximal packing of the unit lp sphere of the k-dimensional
/// coefficient space: random candidates are kept while they stay > eps away
/// (lp metric) from everything kept so far; construction stops after a stall
/// budget of consecutive rejections. Size is bounded by (2/eps)^k.
inline std::vector<Vector> epsilon_net_coefficients(Index k, double eps, int p, std::uint64_t seed) {
    if (!(eps > 0.0)) throw invalid_input_error("epsilon_net: eps must be positive");
    double bound = std::pow(2.0 / eps, static_cast<double>(k));
    if (k > 6 || bound > 1e6) {
        throw capacity_error("epsilon_net: (2/eps)^k exceeds the 1e6 guard");
    }
    std::size_t stall_budget = static_cast<std::size_t>(
        std::min<double>(50.0 * bound, static_cast<double>(detail::kNetStallCap)));

    Rng rng(derive_seed(seed, "epsilon-net"));
    std::vector<Vector> net;
    std::size_t rejects = 0;
    while (rejects < stall_budget && net.size() < static_cast<std::size_t>(bound) + 1) {
        Vector y = rng.gaussian_vector(k);
        double n = lp_norm(y, p);
        if (n < 1e-12) continue;
        y /= n;
        bool far = true;
        for (const Vector& kept : net) {
            if (lp_norm(y - kept, p) <= eps) {
                far = false;
                break;
            }
        }
        if (far) {
            net.push_back(std::move(y));
            rejects = 0;
        } else {
            ++rejects;
        }
    }
    return net;
}

/// Net mapped through an orthonormal basis of the row space and normalized to
/// unit length (contraction ratios are scale-free, so the rescale is harmless).
inline QuerySet epsilon_net(Index k, double eps, const Matrix& basis, int p, std::uint64_t seed) {
    if (basis.cols() != k) throw invalid_input_error("epsilon_net: basis must have k columns");
    QuerySet qs;
    qs.provenance = QueryProvenance::net;
    for (const Vector& y : epsilon_net_coefficients(k, eps, p, seed)) {
        Vector v = basis * y;
        double n = v.norm();
        if (n > 0.0) qs.vectors.push_back(v / n);
    }
    return qs;
}

inline QuerySet random_unit_queries(Index dim, std::size_t count, std::uint64_t seed) {
    QuerySet qs;
    qs.provenance = QueryProvenance::random_unit;
    Rng rng(derive_seed(seed, "random-queries"));
    for (std::size_t i = 0; i < count; ++i) qs.vectors.push_back(rng.unit_vector(dim));
    return qs;
}

/// Right singular vectors of the k smallest singular values (within the
/// numerical rank), smallest first.
inline QuerySet bottom_singular_queries(const Matrix& a, std::size_t k) {
    SvdFactorization f = svd(a);
    QuerySet qs;
    qs.provenance = k == 1 ? QueryProvenance::right_singular_smallest : QueryProvenance::bottom_k_singular;
    std::size_t take = std::min<std::size_t>(k, static_cast<std::size_t>(f.rank));
    for (std::size_t i = 0; i < take; ++i) {
        qs.vectors.push_back(f.V.col(f.rank - 1 - static_cast<Index>(i)));
    }
    return qs;
}

struct EmbeddingReport {
    std::vector<double> deviations;  // |coreset/full - 1| per query, absolute-mode contractions
    double max_deviation = 0.0;
    double eps = 0.0;
    bool pass = true;
};

inline EmbeddingReport verify_embedding(const Matrix& full, const std::vector<WeightedRow>& coreset,
                                        int p, double eps, const QuerySet& queries) {
    EmbeddingReport rep;
    rep.eps = eps;
    for (const Vector& x : queries.vectors) {
        double truth = contract(full, x, p, /*signed_mode=*/false);
        double est = contract(coreset, x, p, /*signed_mode=*/false);
        double dev;
        if (truth == 0.0) {
            dev = est == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        } else {
            dev = std::abs(est / truth - 1.0);
        }
        rep.deviations.push_back(dev);
        rep.max_deviation = std::max(rep.max_deviation, dev);
    }
    rep.pass = rep.max_deviation <= eps;
    return rep;
}

struct SpectralCheckResult {
    double value = 0.0;
    bool degenerate = false;  // ||A^T A|| was zero
};

/// ||C^T C - A^T A|| / ||A^T A|| in spectral norm, with C the weight-scaled
/// coreset (rows sqrt(w_i) a_i, i.e. the p=2 scaled rows).
inline SpectralCheckResult spectral_check(const Matrix& full, const std::vector<WeightedRow>& coreset) {
    const Index d = full.cols();
    Matrix ata = full.transpose() * full;
    Matrix ctc = Matrix::Zero(d, d);
    for (const auto& wr : coreset) {
        if (wr.row.size() != d) throw invalid_input_error("spectral_check: dimension mismatch");
        ctc.noalias() += wr.weight * wr.row * wr.row.transpose();
    }
    double denom = spectral_norm(ata);
    if (denom == 0.0) return {0.0, true};
    return {spectral_norm(ctc - ata) / denom, false};
}

}  // namespace coreset
