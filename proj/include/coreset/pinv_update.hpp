#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "coreset/common.hpp"
#include "coreset/svd.hpp"

namespace coreset {

/// Relative residual below which an update vector is treated as lying in the
/// tracked column space, selecting the rank-preserving Sherman-Morrison path.
inline constexpr double kInSpaceTol = 1e-10;

/// Pseudo-inverse of a PSD matrix M maintained under rank-one updates
/// M <- M + x x^T.
///
/// Internally M and its pseudo-inverse are held in factored form
///     M = B S B^T,   M^+ = B C B^T,
/// with B an orthonormal basis of the column space (d x k) and S, C small
/// k x k cores. Updates with x in the column space cost O(dk + k^2) via
/// Sherman-Morrison on C; out-of-space vectors extend the basis by one
/// column and update the cores by block inversion, so no O(d^3) rebuild is
/// ever needed. Storage grows by capacity doubling; dense views are
/// materialized on demand.
class PseudoInverseState {
public:
    explicit PseudoInverseState(Index dim) : dim_(dim) {}

    static PseudoInverseState from_matrix(const Matrix& m, double rank_tol = kDefaultRankTol) {
        require_finite(m, "PseudoInverseState");
        if (m.rows() != m.cols()) throw invalid_input_error("PseudoInverseState: matrix not square");
        PseudoInverseState st(m.rows());
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        const Vector& ev = es.eigenvalues();  // ascending
        double emax = ev.size() > 0 ? ev[ev.size() - 1] : 0.0;
        std::vector<Index> keep;
        for (Index i = 0; i < ev.size(); ++i)
            if (ev[i] > rank_tol * emax && ev[i] > 0.0) keep.push_back(i);
        Index k = static_cast<Index>(keep.size());
        st.reserve(k);
        st.rank_ = k;
        for (Index j = 0; j < k; ++j) {
            Index src = keep[k - 1 - j];  // descending eigenvalue order
            st.basis_.col(j) = es.eigenvectors().col(src);
            st.core_(j, j) = ev[src];
            st.core_inv_(j, j) = 1.0 / ev[src];
        }
        return st;
    }

    Index dim() const { return dim_; }
    Index rank() const { return rank_; }
    Eigen::Block<const Matrix> column_basis() const { return basis_.leftCols(rank_); }

    /// x^T M^+ x for x in the column space of M.
    double quadratic_form(const Vector& x) const {
        if (rank_ == 0) return 0.0;
        Vector h = basis_.leftCols(rank_).transpose() * x;
        return h.dot(core_inv_.topLeftCorner(rank_, rank_) * h);
    }

    /// Applies M <- M + x x^T in place. Returns true when x had a component
    /// outside the column space and the rank grew by one.
    bool apply_update(const Vector& x, double in_space_tol = kInSpaceTol) {
        require_finite(x, "pinv_update");
        if (x.size() != dim_) throw invalid_input_error("pinv_update: dimension mismatch");
        double xn = x.norm();
        if (xn == 0.0) return false;

        if (rank_ == 0) {
            reserve(1);
            basis_.col(0) = x / xn;
            core_(0, 0) = xn * xn;
            core_inv_(0, 0) = 1.0 / (xn * xn);
            rank_ = 1;
            return true;
        }

        const Index k = rank_;
        auto b = basis_.leftCols(k);
        auto s = core_.topLeftCorner(k, k);
        auto c = core_inv_.topLeftCorner(k, k);

        Vector h = b.transpose() * x;
        Vector resid = x - b * h;
        double rn = resid.norm();

        if (rn <= in_space_tol * xn) {
            // Rank-preserving: (M + xx^T)^+ = M^+ - M^+ x x^T M^+ / (1 + x^T M^+ x).
            Vector u = c * h;
            double denom = 1.0 + h.dot(u);
            c.noalias() -= (u * u.transpose()) / denom;
            c = 0.5 * (c + c.transpose()).eval();
            s.noalias() += h * h.transpose();
            return false;
        }

        // Rank-increasing: extend the basis by q = resid/rn and invert the
        // bordered core [[S + hh^T, rn h], [rn h^T, rn^2]] by block elimination.
        Vector ch = c * h;
        Matrix p = c - (ch * ch.transpose()) / (1.0 + h.dot(ch));  // (S + hh^T)^{-1}
        Vector ph = p * h;
        double alpha = h.dot(ph);
        double one_minus = std::max(1.0 - alpha, 1e-300);

        reserve(k + 1);
        // views were computed against the old storage only through copies (h,
        // resid, p, ph); re-take them after a possible reallocation
        basis_.col(k) = resid / rn;

        core_.topLeftCorner(k, k).noalias() += h * h.transpose();
        core_.block(0, k, k, 1) = rn * h;
        core_.block(k, 0, 1, k) = rn * h.transpose();
        core_(k, k) = rn * rn;

        core_inv_.topLeftCorner(k, k) = p + (ph * ph.transpose()) / one_minus;
        core_inv_.block(0, k, k, 1) = -ph / (rn * one_minus);
        core_inv_.block(k, 0, 1, k) = core_inv_.block(0, k, k, 1).transpose();
        core_inv_(k, k) = 1.0 / (rn * rn * one_minus);

        ++rank_;
        return true;
    }

    /// Pure variant of apply_update.
    PseudoInverseState updated(const Vector& x, double in_space_tol = kInSpaceTol) const {
        PseudoInverseState next = *this;
        next.apply_update(x, in_space_tol);
        return next;
    }

    /// Dense M^+ (d x d).
    Matrix pinv() const {
        if (rank_ == 0) return Matrix::Zero(dim_, dim_);
        auto b = basis_.leftCols(rank_);
        return b * core_inv_.topLeftCorner(rank_, rank_) * b.transpose();
    }

    /// Dense tracked matrix M (d x d).
    Matrix tracked() const {
        if (rank_ == 0) return Matrix::Zero(dim_, dim_);
        auto b = basis_.leftCols(rank_);
        return b * core_.topLeftCorner(rank_, rank_) * b.transpose();
    }

    /// ||M||_F; equals the core norm since the basis is orthonormal.
    double tracked_frobenius() const {
        return rank_ == 0 ? 0.0 : core_.topLeftCorner(rank_, rank_).norm();
    }

    /// Largest eigenvalue of M (exact, O(k^3)).
    double tracked_lambda_max() const {
        if (rank_ == 0) return 0.0;
        Eigen::SelfAdjointEigenSolver<Matrix> es(core_.topLeftCorner(rank_, rank_),
                                                 Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    }

private:
    void reserve(Index k) {
        if (k <= capacity_) return;
        Index next = std::max<Index>(8, capacity_ * 2);
        while (next < k) next *= 2;
        next = std::min(next, dim_);
        next = std::max(next, k);
        basis_.conservativeResize(dim_, next);
        core_.conservativeResize(next, next);
        core_inv_.conservativeResize(next, next);
        capacity_ = next;
    }

    Index dim_;
    Index rank_ = 0;
    Index capacity_ = 0;
    Matrix basis_;     // d x cap, first rank_ columns orthonormal
    Matrix core_;      // cap x cap, M = B core B^T on the top-left block
    Matrix core_inv_;  // cap x cap, M^+ = B core_inv B^T on the top-left block
};

/// Free-function form: pseudo-inverse state of M + x x^T.
inline PseudoInverseState pinv_update(const PseudoInverseState& state, const Vector& x,
                                      double in_space_tol = kInSpaceTol) {
    return state.updated(x, in_space_tol);
}

}  // namespace coreset
