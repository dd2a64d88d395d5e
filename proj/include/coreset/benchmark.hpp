#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coreset/evaluation.hpp"
#include "coreset/latent.hpp"
#include "coreset/samplers.hpp"
#include "coreset/synthetic.hpp"

namespace coreset {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Calibrated sampler runs. Sampling scores never depend on past coin flips,
// so the expected retained count is an exact function of r (see
// ProbabilityTrace); benches bisect it to hit the requested expected sizes,
// mirroring how the experiments fix sample sizes "in expectation".
// ---------------------------------------------------------------------------

inline std::vector<CoresetEntry> run_uniform(const Matrix& stream, int p, double expected,
                                             std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.p = p;
    cfg.r = expected;
    cfg.seed = seed;
    cfg.mode = SamplerMode::uniform;
    cfg.n_hint = static_cast<std::size_t>(stream.rows());
    UniformSampler sampler(cfg);
    for (Index i = 0; i < stream.rows(); ++i) sampler.step(stream.row(i).transpose());
    return sampler.retained();
}

inline std::vector<CoresetEntry> run_online_calibrated(const Matrix& stream, int p, double expected,
                                                       std::uint64_t seed,
                                                       const ProbabilityTrace* trace = nullptr) {
    ProbabilityTrace local;
    if (!trace) {
        local = trace_online_scores(stream, p);
        trace = &local;
    }
    SamplerConfig cfg;
    cfg.p = p;
    cfg.r = calibrate_r(*trace, expected);
    cfg.seed = seed;
    cfg.mode = SamplerMode::online;
    OnlineSampler sampler(stream.cols(), cfg);
    for (Index i = 0; i < stream.rows(); ++i) sampler.step(stream.row(i).transpose());
    return sampler.retained();
}

inline std::vector<CoresetEntry> run_matrix_p2_calibrated(const Matrix& stream, double eps,
                                                          double expected, std::uint64_t seed,
                                                          const ProbabilityTrace* trace = nullptr) {
    ProbabilityTrace local;
    if (!trace) {
        local = trace_matrix_p2_scores(stream, eps);
        trace = &local;
    }
    SamplerConfig cfg;
    cfg.p = 2;
    cfg.eps = eps;
    cfg.r = calibrate_r(*trace, expected);
    cfg.seed = seed;
    cfg.mode = SamplerMode::matrix_p2;
    MatrixP2Sampler sampler(stream.cols(), cfg);
    for (Index i = 0; i < stream.rows(); ++i) sampler.step(stream.row(i).transpose());
    return sampler.retained();
}

/// Two-stage run with both stages calibrated: stage 1 targets an oversampled
/// count, stage 2 is bisected on the realized survivors (its scores are
/// deterministic given them) so the final expected size hits the target.
inline std::vector<CoresetEntry> run_pipeline_calibrated(const Matrix& stream, int p, double expected,
                                                         std::uint64_t seed,
                                                         const ProbabilityTrace* stage1_trace = nullptr,
                                                         double stage1_oversample = 3.0) {
    std::vector<CoresetEntry> survivors = run_online_calibrated(
        stream, p, std::min<double>(static_cast<double>(stream.rows()), stage1_oversample * expected),
        derive_seed(seed, "pipeline-stage1"), stage1_trace);
    if (survivors.empty()) return {};

    std::vector<Vector> scaled;
    scaled.reserve(survivors.size());
    for (const auto& e : survivors) scaled.push_back(e.scaled_row);
    ProbabilityTrace trace2 = trace_kernel_scores(scaled, p);
    double r2 = calibrate_r(trace2, expected);

    Rng rng(derive_seed(seed, "pipeline-stage2"));
    std::vector<CoresetEntry> out;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        double u = rng.uniform();
        double s = trace2.num[i];
        if (s <= 0.0) continue;
        double p2 = std::min(1.0, r2 * s);
        if (u >= p2) continue;
        double prob = survivors[i].probability * p2;
        CoresetEntry e;
        e.index = survivors[i].index;
        e.row = survivors[i].row;
        e.probability = prob;
        e.weight = 1.0 / prob;
        e.scaled_row = std::pow(prob, -1.0 / static_cast<double>(p)) * e.row;
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenario benches (shared by the CLI and the acceptance suite).
// ---------------------------------------------------------------------------

struct BenchCell {
    std::string sampler;
    std::size_t size = 0;
    std::vector<double> values;  // one per repetition; NaN marks a failure
    double median = 0.0;
    std::size_t failures = 0;
};

struct BenchTable {
    std::string scenario;
    std::vector<BenchCell> cells;

    const BenchCell* find(const std::string& sampler, std::size_t size) const {
        for (const auto& c : cells)
            if (c.sampler == sampler && c.size == size) return &c;
        return nullptr;
    }
};

inline BenchCell finish_cell(std::string sampler, std::size_t size, std::vector<double> values) {
    BenchCell cell;
    cell.sampler = std::move(sampler);
    cell.size = size;
    std::vector<double> ok;
    for (double v : values) {
        if (std::isnan(v))
            ++cell.failures;
        else
            ok.push_back(v);
    }
    cell.values = std::move(values);
    cell.median = median_of(ok);
    return cell;
}

/// 4th-order tensor contraction on the two-subspace stream, evaluated on the
/// right singular vectors of the 5 smallest singular values; cell value is
/// the relative error of the summed contraction, median over repetitions.
inline BenchTable tensor_contraction_bench(Index n, std::uint64_t seed,
                                           const std::vector<std::size_t>& sizes, std::size_t reps = 5) {
    const int p = 4;
    BenchTable table;
    table.scenario = "tensor_contraction";

    TwoSubspaceStream data = two_subspace_stream(n, derive_seed(seed, "bench-data"));
    const Matrix& a = data.rows;
    QuerySet queries = bottom_singular_queries(a, 5);

    std::vector<double> truth;
    double truth_sum = 0.0;
    for (const Vector& q : queries.vectors) {
        truth.push_back(contract(a, q, p, /*signed_mode=*/true));
        truth_sum += truth.back();
    }

    ProbabilityTrace online2_trace = trace_online_scores(a, 2);
    ProbabilityTrace online4_trace = trace_online_scores(a, p);

    auto estimate_error = [&](const std::vector<CoresetEntry>& entries) {
        std::vector<WeightedRow> rows = to_weighted_rows(entries);
        double est_sum = 0.0;
        for (const Vector& q : queries.vectors) est_sum += contract(rows, q, p, /*signed_mode=*/true);
        return std::abs(truth_sum - est_sum) / std::abs(truth_sum);
    };

    for (std::size_t size : sizes) {
        std::vector<double> u_vals, o_vals, k_vals;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            std::uint64_t rep_seed = derive_seed(seed, "cell-" + std::to_string(size) + "-" + std::to_string(rep));
            u_vals.push_back(estimate_error(run_uniform(a, p, static_cast<double>(size), derive_seed(rep_seed, "u"))));
            o_vals.push_back(estimate_error(
                run_online_calibrated(a, 2, static_cast<double>(size), derive_seed(rep_seed, "o2"), &online2_trace)));
            k_vals.push_back(estimate_error(run_pipeline_calibrated(a, p, static_cast<double>(size),
                                                                    derive_seed(rep_seed, "ok"), &online4_trace)));
        }
        table.cells.push_back(finish_cell("uniform", size, std::move(u_vals)));
        table.cells.push_back(finish_cell("online2", size, std::move(o_vals)));
        table.cells.push_back(finish_cell("online_kernel", size, std::move(k_vals)));
    }
    return table;
}

/// Moments -> whitening -> RTPI -> unwhitening on a weighted row set;
/// returns the k recovered topic distributions.
inline std::vector<Vector> recover_topics(const std::vector<WeightedRow>& rows, Index k,
                                          std::uint64_t seed, int restarts = 30, int iterations = 50) {
    Matrix m2 = second_moment(rows);
    WhiteningMatrix wm = build_whitening(m2, k);
    Tensor3 t = reduced_third_moment(rows, wm.W);
    std::vector<EigenPair> pairs = rtpi(t, k, restarts, iterations, seed);
    UnwhitenResult res = unwhiten(pairs, wm, /*topic_mode=*/true);
    if (res.factors.size() < static_cast<std::size_t>(k))
        throw decomposition_failure("recover_topics: fewer than k usable factors");
    std::vector<Vector> topics;
    for (const auto& f : res.factors) topics.push_back(f.topic);
    return topics;
}

/// Streaming single-topic benchmark: per sampler and expected size, build a
/// coreset, recover k topics, and score the matched l1 distance against the
/// generator's reference topics. Decomposition failures are recorded per
/// cell. A "full" baseline row runs on the whole corpus.
inline BenchTable topic_model_bench(Index n_docs, Index n_words, Index k, std::uint64_t seed,
                                    const std::vector<std::size_t>& sizes, std::size_t reps = 5) {
    const int p = 3;
    BenchTable table;
    table.scenario = "topic_model";

    TopicCorpus corpus = synth_topic_corpus(n_docs, n_words, k, derive_seed(seed, "bench-corpus"));
    const Matrix& a = corpus.docs;

    std::vector<WeightedRow> full_rows;
    full_rows.reserve(a.rows());
    for (Index i = 0; i < a.rows(); ++i) full_rows.push_back({a.row(i).transpose(), 1.0});

    auto cell_value = [&](const std::vector<CoresetEntry>& entries, std::uint64_t rtpi_seed) {
        try {
            std::vector<Vector> topics = recover_topics(to_weighted_rows(entries), k, rtpi_seed);
            return matched_l1_error(corpus.topics, topics);
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    {
        std::vector<double> base;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            std::uint64_t s = derive_seed(seed, "baseline-" + std::to_string(rep));
            try {
                base.push_back(matched_l1_error(corpus.topics, recover_topics(full_rows, k, s)));
            } catch (const numerical_error&) {
                base.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        table.cells.push_back(finish_cell("full", static_cast<std::size_t>(n_docs), std::move(base)));
    }

    ProbabilityTrace online2_trace = trace_online_scores(a, 2);
    ProbabilityTrace online3_trace = trace_online_scores(a, p);

    for (std::size_t size : sizes) {
        std::vector<double> u_vals, o_vals, k_vals;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            std::uint64_t rep_seed = derive_seed(seed, "cell-" + std::to_string(size) + "-" + std::to_string(rep));
            u_vals.push_back(cell_value(run_uniform(a, p, static_cast<double>(size), derive_seed(rep_seed, "u")),
                                        derive_seed(rep_seed, "u-rtpi")));
            o_vals.push_back(cell_value(run_online_calibrated(a, 2, static_cast<double>(size),
                                                              derive_seed(rep_seed, "o2"), &online2_trace),
                                        derive_seed(rep_seed, "o2-rtpi")));
            k_vals.push_back(cell_value(run_pipeline_calibrated(a, p, static_cast<double>(size),
                                                                derive_seed(rep_seed, "ok"), &online3_trace),
                                        derive_seed(rep_seed, "ok-rtpi")));
        }
        table.cells.push_back(finish_cell("uniform", size, std::move(u_vals)));
        table.cells.push_back(finish_cell("online2", size, std::move(o_vals)));
        table.cells.push_back(finish_cell("online_kernel", size, std::move(k_vals)));
    }
    return table;
}

/// p = 2 spectral bench: ||C^T C - A^T A|| / ||A^T A|| for the matrix_p2
/// sampler at the requested expected sizes, plus a C = A control row.
inline BenchTable spectral_p2_bench(Index n, Index d, std::uint64_t seed,
                                    const std::vector<std::size_t>& sizes, std::size_t reps = 5,
                                    double eps = 0.25) {
    BenchTable table;
    table.scenario = "spectral_p2";
    Matrix a = gaussian_stream(n, d, derive_seed(seed, "bench-data"));

    {
        std::vector<WeightedRow> identity_rows;
        for (Index i = 0; i < n; ++i) identity_rows.push_back({a.row(i).transpose(), 1.0});
        std::vector<double> control(1, spectral_check(a, identity_rows).value);
        table.cells.push_back(finish_cell("full", static_cast<std::size_t>(n), std::move(control)));
    }

    ProbabilityTrace trace = trace_matrix_p2_scores(a, eps);
    for (std::size_t size : sizes) {
        std::vector<double> vals;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            std::uint64_t rep_seed = derive_seed(seed, "cell-" + std::to_string(size) + "-" + std::to_string(rep));
            auto entries = run_matrix_p2_calibrated(a, eps, static_cast<double>(size), rep_seed, &trace);
            vals.push_back(spectral_check(a, to_weighted_rows(entries)).value);
        }
        table.cells.push_back(finish_cell("matrix_p2", size, std::move(vals)));
    }
    return table;
}

}  // namespace coreset
