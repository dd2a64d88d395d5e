#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "coreset/common.hpp"
#include "coreset/svd.hpp"

namespace coreset {

inline constexpr Index kMaxReducedTensorDim = 64;

/// Dense symmetric k x k x k tensor, kept small (k <= 64); the ambient
/// d x d x d third moment is never materialized.
class Tensor3 {
public:
    explicit Tensor3(Index k) : k_(k), data_(static_cast<std::size_t>(k) * k * k, 0.0) {
        if (k < 1 || k > kMaxReducedTensorDim)
            throw capacity_error("Tensor3: dimension must be in [1, " +
                                 std::to_string(kMaxReducedTensorDim) + "]");
    }

    Index dim() const { return k_; }

    double& at(Index i, Index j, Index l) { return data_[idx(i, j, l)]; }
    double at(Index i, Index j, Index l) const { return data_[idx(i, j, l)]; }

    void add_symmetric_cube(const Vector& b, double w) {
        for (Index i = 0; i < k_; ++i)
            for (Index j = 0; j < k_; ++j) {
                double bij = w * b[i] * b[j];
                for (Index l = 0; l < k_; ++l) data_[idx(i, j, l)] += bij * b[l];
            }
    }

    /// T(I, theta, theta).
    Vector apply(const Vector& theta) const {
        Vector out = Vector::Zero(k_);
        for (Index i = 0; i < k_; ++i) {
            double s = 0.0;
            for (Index j = 0; j < k_; ++j) {
                double tj = theta[j];
                if (tj == 0.0) continue;
                const double* slice = data_.data() + idx(i, j, 0);
                double inner = 0.0;
                for (Index l = 0; l < k_; ++l) inner += slice[l] * theta[l];
                s += tj * inner;
            }
            out[i] = s;
        }
        return out;
    }

    /// T(theta, theta, theta).
    double value(const Vector& theta) const { return theta.dot(apply(theta)); }

    void deflate(double lambda, const Vector& v) { add_symmetric_cube(v, -lambda); }

    double frobenius() const {
        double s = 0.0;
        for (double x : data_) s += x * x;
        return std::sqrt(s);
    }

    double max_symmetry_violation() const {
        double worst = 0.0;
        for (Index i = 0; i < k_; ++i)
            for (Index j = i; j < k_; ++j)
                for (Index l = j; l < k_; ++l) {
                    double v = at(i, j, l);
                    worst = std::max({worst, std::abs(v - at(i, l, j)), std::abs(v - at(j, i, l)),
                                      std::abs(v - at(j, l, i)), std::abs(v - at(l, i, j)),
                                      std::abs(v - at(l, j, i))});
                }
        return worst;
    }

private:
    std::size_t idx(Index i, Index j, Index l) const {
        return (static_cast<std::size_t>(i) * k_ + j) * k_ + l;
    }

    Index k_;
    std::vector<double> data_;
};

/// Weight-normalized second moment M2 = sum_i w_i a_i a_i^T / sum_i w_i.
inline Matrix second_moment(const std::vector<WeightedRow>& rows) {
    if (rows.empty()) throw invalid_input_error("second_moment: empty input");
    const Index d = rows.front().row.size();
    Matrix m2 = Matrix::Zero(d, d);
    double total = 0.0;
    for (const auto& wr : rows) {
        m2.noalias() += wr.weight * wr.row * wr.row.transpose();
        total += wr.weight;
    }
    if (total <= 0.0) throw invalid_input_error("second_moment: nonpositive total weight");
    return m2 / total;
}

/// Reduced third moment T = sum_i w_i (W^T a_i)^{x3} / sum_i w_i, accumulated
/// row by row in the k-dimensional whitened space.
inline Tensor3 reduced_third_moment(const std::vector<WeightedRow>& rows, const Matrix& w) {
    if (rows.empty()) throw invalid_input_error("reduced_third_moment: empty input");
    Tensor3 t(w.cols());
    double total = 0.0;
    for (const auto& wr : rows) {
        Vector b = w.transpose() * wr.row;
        t.add_symmetric_cube(b, wr.weight);
        total += wr.weight;
    }
    if (total <= 0.0) throw invalid_input_error("reduced_third_moment: nonpositive total weight");
    Tensor3 out(w.cols());
    for (Index i = 0; i < out.dim(); ++i)
        for (Index j = 0; j < out.dim(); ++j)
            for (Index l = 0; l < out.dim(); ++l) out.at(i, j, l) = t.at(i, j, l) / total;
    return out;
}

struct Moments {
    Matrix m2;
    std::vector<WeightedRow> rows;  // retained for on-demand third-moment contraction

    Tensor3 reduced_third(const Matrix& w) const { return reduced_third_moment(rows, w); }
};

inline Moments estimate_moments(const std::vector<WeightedRow>& rows, Index k) {
    Moments m;
    m.m2 = second_moment(rows);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.m2, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    double emax = ev[ev.size() - 1];
    Index rank = 0;
    for (Index i = 0; i < ev.size(); ++i)
        if (ev[i] > 1e-12 * emax && ev[i] > 0.0) ++rank;
    if (k > rank)
        throw rank_error("estimate_moments: k = " + std::to_string(k) +
                         " exceeds numerical rank " + std::to_string(rank));
    m.rows = rows;
    return m;
}

/// W with W^T M2 W = I_k, from the top-k eigendecomposition of M2; W_pinv is
/// the Moore-Penrose inverse Lambda^{1/2} V^T.
struct WhiteningMatrix {
    Matrix W;       // d x k
    Matrix W_pinv;  // k x d
};

inline WhiteningMatrix build_whitening(const Matrix& m2, Index k) {
    if (m2.rows() != m2.cols()) throw invalid_input_error("build_whitening: M2 must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m2);
    const Vector& ev = es.eigenvalues();  // ascending
    const Index d = m2.rows();
    if (k < 1 || k > d) throw invalid_input_error("build_whitening: bad k");
    double emax = ev[d - 1];
    double ek = ev[d - k];
    if (!(ek > 1e-12 * emax) || !(ek > 0.0))
        throw rank_error("build_whitening: M2 numerical rank below k");

    WhiteningMatrix wm;
    wm.W.resize(d, k);
    wm.W_pinv.resize(k, d);
    for (Index j = 0; j < k; ++j) {
        double lam = ev[d - 1 - j];
        Vector v = es.eigenvectors().col(d - 1 - j);
        wm.W.col(j) = v / std::sqrt(lam);
        wm.W_pinv.row(j) = std::sqrt(lam) * v.transpose();
    }
    return wm;
}

struct EigenPair {
    double value = 0.0;  // > 0
    Vector vector;       // unit norm
};

/// Robust tensor power iteration: k rounds of (L restarts x N iterations of
/// theta <- T(I,theta,theta)/||.||), keeping the restart with the largest
/// T(theta,theta,theta), polishing it, then deflating. Pairs are returned
/// sorted by eigenvalue, descending.
inline std::vector<EigenPair> rtpi(Tensor3 t, Index k, int restarts, int iterations, std::uint64_t seed) {
    if (k < 1 || k > t.dim()) throw invalid_input_error("rtpi: bad component count");
    double sym = t.max_symmetry_violation();
    if (sym > 1e-8 * std::max(1.0, t.frobenius()))
        throw invalid_input_error("rtpi: tensor is not symmetric within tolerance");

    Rng rng(derive_seed(seed, "rtpi"));
    std::vector<EigenPair> pairs;
    for (Index round = 0; round < k; ++round) {
        double best_lambda = -std::numeric_limits<double>::infinity();
        Vector best_theta;
        for (int start = 0; start < restarts; ++start) {
            Vector theta = rng.unit_vector(t.dim());
            bool dead = false;
            for (int it = 0; it < iterations; ++it) {
                Vector next = t.apply(theta);
                double n = next.norm();
                if (n < 1e-14) {
                    dead = true;
                    break;
                }
                theta = next / n;
            }
            if (dead) continue;
            double lambda = t.value(theta);
            if (lambda > best_lambda) {  // ties resolved by start order
                best_lambda = lambda;
                best_theta = theta;
            }
        }
        if (!(best_lambda > 0.0) || best_theta.size() == 0) {
            throw decomposition_failure("rtpi: no positive eigenvalue candidate in round " +
                                        std::to_string(round + 1));
        }
        // polish the winner
        for (int it = 0; it < iterations; ++it) {
            Vector next = t.apply(best_theta);
            double n = next.norm();
            if (n < 1e-14) break;
            best_theta = next / n;
        }
        double lambda = t.value(best_theta);
        if (!(lambda > 0.0)) {
            throw decomposition_failure("rtpi: polished eigenvalue not positive in round " +
                                        std::to_string(round + 1));
        }
        t.deflate(lambda, best_theta);
        pairs.push_back({lambda, best_theta});
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const EigenPair& a, const EigenPair& b) { return a.value > b.value; });
    return pairs;
}

struct RecoveredFactor {
    double weight = 0.0;  // 1 / lambda^2
    Vector topic;         // d-dimensional
};

struct UnwhitenResult {
    std::vector<RecoveredFactor> factors;
    std::size_t skipped = 0;  // pairs with vanishing eigenvalue
};

/// Back-transforms eigenpairs through (W^T)^+ = W_pinv^T; in topic mode the
/// factors are projected to the simplex (negatives clipped, l1-normalized).
inline UnwhitenResult unwhiten(const std::vector<EigenPair>& pairs, const WhiteningMatrix& wm,
                               bool topic_mode = false) {
    UnwhitenResult res;
    for (const auto& pr : pairs) {
        if (!(pr.value > 1e-12)) {
            ++res.skipped;
            continue;
        }
        Vector mu = pr.value * (wm.W_pinv.transpose() * pr.vector);
        if (topic_mode) {
            mu = mu.cwiseMax(0.0);
            double l1 = mu.lpNorm<1>();
            if (l1 > 0.0) mu /= l1;
        }
        res.factors.push_back({1.0 / (pr.value * pr.value), mu});
    }
    return res;
}

/// Exact minimum-cost bipartite assignment (Hungarian algorithm with
/// potentials, O(n^3)). Returns assignment[i] = column matched to row i.
inline std::vector<Index> hungarian_assignment(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw invalid_input_error("hungarian_assignment: square cost required");
    const Index n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Index> way(n + 1, 0), match(n + 1, 0);  // match[j]: row matched to column j (1-based)
    for (Index i = 1; i <= n; ++i) {
        match[0] = i;
        Index j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            Index i0 = match[j0], j1 = 0;
            double delta = inf;
            for (Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            Index j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> assignment(n, -1);
    for (Index j = 1; j <= n; ++j)
        if (match[j] != 0) assignment[match[j] - 1] = j - 1;
    return assignment;
}

/// Average l1 distance between reference topics and their best-matched
/// recovered topics (exact assignment).
inline double matched_l1_error(const std::vector<Vector>& reference, const std::vector<Vector>& recovered) {
    if (reference.empty() || reference.size() != recovered.size())
        throw invalid_input_error("matched_l1_error: need equal nonempty topic sets");
    const Index k = static_cast<Index>(reference.size());
    Matrix cost(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) cost(i, j) = (reference[i] - recovered[j]).lpNorm<1>();
    std::vector<Index> asg = hungarian_assignment(cost);
    double total = 0.0;
    for (Index i = 0; i < k; ++i) total += cost(i, asg[i]);
    return total / static_cast<double>(k);
}

}  // namespace coreset
