#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coreset {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy mirrored by CLI exit codes (2/3/4).
struct invalid_input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct capacity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct rank_error : numerical_error {
    using numerical_error::numerical_error;
};
struct decomposition_failure : numerical_error {
    using numerical_error::numerical_error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) throw invalid_input_error(std::string(what) + ": non-finite entries");
}
inline void require_finite(const Vector& v, std::string_view what) {
    if (!v.allFinite()) throw invalid_input_error(std::string(what) + ": non-finite entries");
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derives a sub-seed from a base seed and a fixed label, so each component
/// of a run gets an independent, replayable stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return splitmix64(seed ^ fnv1a64(label));
}

/// Seeded generator with platform-independent uniform/gaussian draws
/// (std::*_distribution is implementation-defined, so we avoid it).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t bits() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (two uniforms per call; no rejection,
    /// so the stream position is predictable under replay).
    double gaussian() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Vector gaussian_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    Vector unit_vector(Index n) {
        Vector v = gaussian_vector(n);
        double nrm = v.norm();
        while (nrm < 1e-12) {
            v = gaussian_vector(n);
            nrm = v.norm();
        }
        return v / nrm;
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection-free enough for non-adversarial n.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    std::mt19937_64 gen_;
};

/// Pairwise (cascade) summation: deterministic and more accurate than a
/// running sum on long streams.
inline double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

/// A row with an importance weight; the currency of reducers and evaluators.
struct WeightedRow {
    Vector row;
    double weight = 1.0;
};

}  // namespace coreset
