#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "coreset/common.hpp"
#include "coreset/kron.hpp"
#include "coreset/samplers.hpp"
#include "coreset/svd.hpp"

namespace coreset {

/// Default schedule constant; the smallest value certifying the cumulative
/// product bound for streams up to 2^40 points was precomputed at ~7.
inline constexpr double kDefaultScheduleC = 7.0;

/// Geometric per-level error budgets rho_j = eps / (c (j+1)^2), chosen so the
/// telescoped product prod_j (1 + rho_j) stays within 1 + eps/2.
struct ErrorSchedule {
    double epsilon = 0.1;
    double c = kDefaultScheduleC;

    double rho(std::size_t j) const {
        double jj = static_cast<double>(j + 1);
        return epsilon / (c * jj * jj);
    }

    double product_through(std::size_t last_level) const {
        double prod = 1.0;
        for (std::size_t j = 0; j <= last_level; ++j) prod *= 1.0 + rho(j);
        return prod;
    }
};

using Reducer = std::function<std::vector<WeightedRow>(const std::vector<WeightedRow>&, double rho)>;

/// Offline sensitivity-sampling reducer: batch lifted leverage scores of the
/// weighted set (the batch analogue of the kernel score, without the online
/// index dependence), Bernoulli sampling proportional to score, inverse-
/// probability reweighing. The size target is ceil(S / rho^2) unless a fixed
/// target is configured; targets at or above the input size leave the set
/// unchanged.
class SensitivityReducer {
public:
    SensitivityReducer(int p, std::uint64_t seed, std::optional<std::size_t> fixed_target = std::nullopt,
                       std::size_t kron_budget = kDefaultKronBudget)
        : p_(p), seed_(seed), fixed_target_(fixed_target), kron_budget_(kron_budget),
          calls_(std::make_shared<std::uint64_t>(0)) {}

    std::vector<WeightedRow> operator()(const std::vector<WeightedRow>& points, double rho) const {
        if (points.empty()) return {};
        Rng rng(derive_seed(seed_, "reduce-" + std::to_string((*calls_)++)));

        std::vector<double> scores = batch_sensitivities(points);
        double total = pairwise_sum(scores);
        if (total <= 0.0) return points;  // all-zero input, nothing to rank

        std::size_t target = fixed_target_ ? *fixed_target_
                                           : static_cast<std::size_t>(std::ceil(total / (rho * rho)));
        if (target >= points.size()) return points;

        std::vector<WeightedRow> out;
        std::size_t best = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (scores[i] > scores[best]) best = i;
            double u = rng.uniform();
            if (scores[i] <= 0.0) continue;
            double prob = std::min(1.0, static_cast<double>(target) * scores[i] / total);
            if (u < prob) out.push_back({points[i].row, points[i].weight / prob});
        }
        if (out.empty()) {
            // never drop a bucket entirely
            double prob = std::min(1.0, static_cast<double>(target) * scores[best] / total);
            out.push_back({points[best].row, points[best].weight / std::max(prob, 1e-300)});
        }
        return out;
    }

    /// Batch lifted-leverage sensitivities s_i = min{1, sqrt(h_low) sqrt(h_high)}
    /// of the weight-scaled rows w_i^{1/p} a_i.
    std::vector<double> batch_sensitivities(const std::vector<WeightedRow>& points) const {
        int low_power = p_ / 2;
        int high_power = (p_ + 1) / 2;
        std::vector<double> h_high = batch_leverage(points, high_power);
        if (low_power == high_power) {
            for (double& v : h_high) v = std::min(1.0, v);
            return h_high;
        }
        std::vector<double> h_low = batch_leverage(points, low_power);
        std::vector<double> s(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            s[i] = std::min(1.0, std::sqrt(h_low[i]) * std::sqrt(h_high[i]));
        return s;
    }

private:
    std::vector<double> batch_leverage(const std::vector<WeightedRow>& points, int power) const {
        const Index d = points.front().row.size();
        const Index lifted = static_cast<Index>(kron_power_dim(d, power, kron_budget_));
        Matrix g(static_cast<Index>(points.size()), lifted);
        for (std::size_t i = 0; i < points.size(); ++i) {
            double scale = std::pow(points[i].weight, 1.0 / static_cast<double>(p_));
            g.row(static_cast<Index>(i)) = kron_power(scale * points[i].row, power, kron_budget_).transpose();
        }
        SvdFactorization f = svd(g);
        std::vector<double> h(points.size(), 0.0);
        for (std::size_t i = 0; i < points.size(); ++i)
            h[i] = f.U.row(static_cast<Index>(i)).squaredNorm();
        return h;
    }

    int p_;
    std::uint64_t seed_;
    std::optional<std::size_t> fixed_target_;
    std::size_t kron_budget_;
    std::shared_ptr<std::uint64_t> calls_;
};

inline Reducer make_sensitivity_reducer(int p, std::uint64_t seed,
                                        std::optional<std::size_t> fixed_target = std::nullopt,
                                        std::size_t kron_budget = kDefaultKronBudget) {
    return SensitivityReducer(p, seed, fixed_target, kron_budget);
}

/// Merge-and-reduce coreset tree with binary-counter level dynamics.
///
/// Level 0 is a raw buffer of capacity M. A full buffer reduces with budget
/// rho_0 into a level-1 coreset (standing for M raw points); two occupied
/// level-j coresets merge and reduce with budget rho_j into level j+1.
/// Weights compose multiplicatively through reductions. finalize() unions
/// the buffer and every occupied bucket without a final reduce.
class MergeReduceTree {
public:
    MergeReduceTree(std::size_t bucket_capacity, ErrorSchedule schedule, Reducer reducer)
        : capacity_(bucket_capacity), schedule_(schedule), reducer_(std::move(reducer)) {
        if (capacity_ == 0) throw invalid_input_error("MergeReduceTree: bucket capacity must be positive");
    }

    void push(WeightedRow entry) {
        require_finite(entry.row, "MergeReduceTree::push");
        if (!std::isfinite(entry.weight)) throw invalid_input_error("MergeReduceTree::push: bad weight");
        buffer_.push_back(std::move(entry));
        ++pushed_;
        if (buffer_.size() < capacity_) return;

        std::vector<WeightedRow> carry = reducer_(buffer_, schedule_.rho(0));
        buffer_.clear();
        std::size_t level = 1;
        while (level <= levels_.size() && levels_[level - 1].has_value()) {
            std::vector<WeightedRow> merged = std::move(*levels_[level - 1]);
            levels_[level - 1].reset();
            merged.insert(merged.end(), std::make_move_iterator(carry.begin()),
                          std::make_move_iterator(carry.end()));
            carry = reducer_(merged, schedule_.rho(level));
            ++level;
        }
        if (level > levels_.size()) levels_.resize(level);
        levels_[level - 1] = std::move(carry);
    }

    /// Union of the raw buffer and all occupied buckets.
    std::vector<WeightedRow> finalize() const {
        std::vector<WeightedRow> out = buffer_;
        for (const auto& bucket : levels_) {
            if (bucket) out.insert(out.end(), bucket->begin(), bucket->end());
        }
        return out;
    }

    std::size_t bucket_capacity() const { return capacity_; }
    std::size_t pushed() const { return pushed_; }
    std::size_t buffer_size() const { return buffer_.size(); }
    std::size_t level_count() const { return levels_.size(); }
    const ErrorSchedule& schedule() const { return schedule_; }

    /// Occupancy of coreset level j >= 1 (level j stands for 2^{j-1} M raw points).
    bool level_occupied(std::size_t level) const {
        return level >= 1 && level <= levels_.size() && levels_[level - 1].has_value();
    }

    std::size_t level_size(std::size_t level) const {
        return level_occupied(level) ? levels_[level - 1]->size() : 0;
    }

private:
    std::size_t capacity_;
    ErrorSchedule schedule_;
    Reducer reducer_;
    std::vector<WeightedRow> buffer_;
    std::vector<std::optional<std::vector<WeightedRow>>> levels_;
    std::size_t pushed_ = 0;
};

inline std::vector<WeightedRow> to_weighted_rows(const std::vector<CoresetEntry>& entries) {
    std::vector<WeightedRow> rows;
    rows.reserve(entries.size());
    for (const auto& e : entries) rows.push_back({e.row, e.weight});
    return rows;
}

}  // namespace coreset
