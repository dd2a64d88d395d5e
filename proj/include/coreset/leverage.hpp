#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "coreset/common.hpp"
#include "coreset/pinv_update.hpp"

namespace coreset {

struct LeverageRecord {
    std::size_t index = 0;  // 1-based row index in the stream
    double score = 0.0;     // e_i in [0, 1]
    bool caused_phase_change = false;
};

/// Streaming Gram matrix A_i^T A_i with online leverage scores
///   e_i = a_i^T (A_i^T A_i)^+ a_i.
///
/// A row outside the current column space is a phase change: its score is
/// exactly 1 and the rank grows. Single-writer; snapshots may be read after
/// a synchronization point.
class CovarianceTracker {
public:
    explicit CovarianceTracker(Index dim) : dim_(dim), pinv_(dim) {}

    LeverageRecord ingest(const Vector& a) {
        if (a.size() != dim_) throw invalid_input_error("CovarianceTracker: dimension mismatch");
        require_finite(a, "CovarianceTracker::ingest");
        ++rows_seen_;
        LeverageRecord rec;
        rec.index = rows_seen_;

        double an = a.norm();
        if (an == 0.0) {
            rec.score = 0.0;  // zero rows carry no sensitivity
            return rec;
        }

        bool grew = pinv_.apply_update(a);
        double score;
        if (grew) {
            score = 1.0;
            ++phase_changes_;
        } else {
            score = std::clamp(pinv_.quadratic_form(a), 0.0, 1.0);
            ++sm_updates_;
        }
        ++nonzero_rows_;
        leverage_sum_ += score;
        min_row_lognorm_ = std::min(min_row_lognorm_, std::log(an));
        refresh_spectral_upper();

        rec.score = score;
        rec.caused_phase_change = grew;
        return rec;
    }

    /// Diagnostic upper bound d + 2 d log||A|| - 2 min_i log||a_i|| on the
    /// leverage sum (additive slack d over the paper's constant).
    double leverage_sum_bound() const {
        if (nonzero_rows_ == 0) throw invalid_input_error("leverage_sum_bound: no nonzero rows");
        double up = std::sqrt(pinv_.tracked_lambda_max());
        double d = static_cast<double>(dim_);
        return d + 2.0 * d * std::log(up) - 2.0 * min_row_lognorm_;
    }

    Index dim() const { return dim_; }
    Index rank() const { return pinv_.rank(); }
    std::size_t rows_seen() const { return rows_seen_; }
    std::size_t nonzero_rows() const { return nonzero_rows_; }
    std::size_t phase_changes() const { return phase_changes_; }
    std::size_t sherman_morrison_updates() const { return sm_updates_; }
    double leverage_sum() const { return leverage_sum_; }
    double min_row_lognorm() const { return min_row_lognorm_; }
    double spectral_upper() const { return spectral_upper_; }

    Matrix gram() const { return pinv_.tracked(); }
    const PseudoInverseState& pinv_state() const { return pinv_; }

private:
    void refresh_spectral_upper() {
        // Exact lambda_max every 64 rows while the rank is small; the
        // Frobenius norm of the core is a valid upper bound in between.
        if (nonzero_rows_ % 64 == 1 && pinv_.rank() <= 512) {
            spectral_upper_ = std::sqrt(pinv_.tracked_lambda_max());
        } else {
            spectral_upper_ = std::sqrt(pinv_.tracked_frobenius());
        }
    }

    Index dim_;
    PseudoInverseState pinv_;
    std::size_t rows_seen_ = 0;
    std::size_t nonzero_rows_ = 0;
    std::size_t phase_changes_ = 0;
    std::size_t sm_updates_ = 0;
    double leverage_sum_ = 0.0;
    double min_row_lognorm_ = std::numeric_limits<double>::infinity();
    double spectral_upper_ = 0.0;
};

}  // namespace coreset
