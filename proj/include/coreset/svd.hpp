#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "coreset/common.hpp"

namespace coreset {

inline constexpr double kDefaultRankTol = 1e-12;

/// Thin SVD truncated at the numerical rank: A = U diag(s) V^T with
/// orthonormal U (n x k), V (d x k) and s sorted descending.
struct SvdFactorization {
    Matrix U;
    Vector singular_values;
    Matrix V;
    Index rank = 0;

    Matrix reconstruct() const {
        if (rank == 0) return Matrix::Zero(U.rows(), V.rows());
        return U * singular_values.asDiagonal() * V.transpose();
    }
};

inline SvdFactorization svd(const Matrix& a, double rank_tol = kDefaultRankTol) {
    require_finite(a, "svd");
    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = dec.singularValues();
    double smax = sv.size() > 0 ? sv[0] : 0.0;
    Index k = 0;
    while (k < sv.size() && sv[k] > rank_tol * smax && sv[k] > 0.0) ++k;

    SvdFactorization f;
    f.rank = k;
    f.U = dec.matrixU().leftCols(k);
    f.singular_values = sv.head(k);
    f.V = dec.matrixV().leftCols(k);
    return f;
}

/// Largest singular value.
inline double spectral_norm(const Matrix& a) {
    require_finite(a, "spectral_norm");
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> dec(a);
    return dec.singularValues().size() > 0 ? dec.singularValues()[0] : 0.0;
}

/// Moore-Penrose pseudo-inverse via truncated SVD.
inline Matrix pseudo_inverse(const Matrix& a, double rank_tol = kDefaultRankTol) {
    SvdFactorization f = svd(a, rank_tol);
    if (f.rank == 0) return Matrix::Zero(a.cols(), a.rows());
    return f.V * f.singular_values.cwiseInverse().asDiagonal() * f.U.transpose();
}

}  // namespace coreset
