#pragma once

#include <cmath>

#include "coreset/common.hpp"

namespace coreset {

inline constexpr std::size_t kDefaultKronBudget = 1'000'000;

inline std::size_t kron_power_dim(Index d, int k, std::size_t budget = kDefaultKronBudget) {
    double dim = 1.0;
    for (int j = 0; j < k; ++j) {
        dim *= static_cast<double>(d);
        if (dim > static_cast<double>(budget)) {
            throw capacity_error("kron_power: lifted dimension " + std::to_string(d) + "^" +
                                 std::to_string(k) + " exceeds budget " + std::to_string(budget));
        }
    }
    return static_cast<std::size_t>(dim);
}

/// vec(x (x) x (x) ... (x) x), k factors. Entry at multi-index (i1,...,ik)
/// equals prod_j x_{i_j}, with i1 the most significant digit. ||out|| = ||x||^k.
inline Vector kron_power(const Vector& x, int k, std::size_t budget = kDefaultKronBudget) {
    if (k < 1) throw invalid_input_error("kron_power: k must be >= 1");
    require_finite(x, "kron_power");
    const Index d = x.size();
    kron_power_dim(d, k, budget);

    Vector out = x;
    for (int j = 1; j < k; ++j) {
        Vector next(out.size() * d);
        for (Index i = 0; i < out.size(); ++i) next.segment(i * d, d) = out[i] * x;
        out.swap(next);
    }
    return out;
}

}  // namespace coreset
