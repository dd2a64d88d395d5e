#pragma once

#include <chrono>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coreset/benchmark.hpp"
#include "coreset/evaluation.hpp"
#include "coreset/io.hpp"
#include "coreset/samplers.hpp"

namespace coreset {

/// Pull-based row stream; the sampling path calls next() exactly once per row.
class RowSource {
public:
    virtual ~RowSource() = default;
    virtual std::optional<Vector> next() = 0;
    virtual Index dim() const = 0;
    virtual std::size_t size_hint() const = 0;  // 0 when unknown
};

class MatrixRowSource : public RowSource {
public:
    explicit MatrixRowSource(const Matrix& m) : m_(m) {}
    std::optional<Vector> next() override {
        if (i_ >= m_.rows()) return std::nullopt;
        return m_.row(i_++).transpose();
    }
    Index dim() const override { return m_.cols(); }
    std::size_t size_hint() const override { return static_cast<std::size_t>(m_.rows()); }

private:
    const Matrix& m_;
    Index i_ = 0;
};

/// Mode-erased sampler front end for the CLI.
class AnySampler {
public:
    AnySampler(Index dim, const SamplerConfig& cfg) : impl_(make(dim, cfg)) {}

    std::optional<CoresetEntry> step(const Vector& a) {
        return std::visit([&](auto& s) { return s.step(a); }, impl_);
    }

private:
    using Impl = std::variant<OnlineSampler, KernelFilter, PipelineSampler, MatrixP2Sampler, UniformSampler>;

    static Impl make(Index dim, const SamplerConfig& cfg) {
        switch (cfg.mode) {
            case SamplerMode::kernel: return Impl(std::in_place_type<KernelFilter>, dim, cfg);
            case SamplerMode::online_then_kernel: return Impl(std::in_place_type<PipelineSampler>, dim, cfg);
            case SamplerMode::matrix_p2: return Impl(std::in_place_type<MatrixP2Sampler>, dim, cfg);
            case SamplerMode::uniform: return Impl(std::in_place_type<UniformSampler>, cfg);
            case SamplerMode::online: break;
        }
        return Impl(std::in_place_type<OnlineSampler>, dim, cfg);
    }

    Impl impl_;
};

/// Streams every row of the source once through the sampler.
inline std::vector<CoresetEntry> sample_stream(RowSource& source, const SamplerConfig& cfg) {
    AnySampler sampler(source.dim(), cfg);
    std::vector<CoresetEntry> retained;
    std::size_t row_index = 0;
    while (auto row = source.next()) {
        ++row_index;
        try {
            if (auto entry = sampler.step(*row)) retained.push_back(std::move(*entry));
        } catch (const capacity_error& e) {
            throw capacity_error(std::string(e.what()) + " (row " + std::to_string(row_index) + ")");
        }
    }
    return retained;
}

struct SampleOptions {
    std::string input;
    bool header = false;
    std::string mode = "online";
    int p = 2;
    std::optional<double> r;
    std::optional<double> expected_size;
    double eps = 0.1;
    std::uint64_t seed = 0;
    std::optional<std::size_t> n_hint;
    std::string out;
};

/// Heuristic --expected-size -> r conversion for the score-normalized modes
/// (harmonic model of the running sensitivity sum) and the clamp-style
/// matrix_p2 mode (leverage-sum model d (1 + ln(n/d))).
inline double resolve_r(const SampleOptions& opt, SamplerMode mode, std::size_t n, Index d) {
    if (opt.r) return *opt.r;
    if (!opt.expected_size) return 1.0;
    double m = *opt.expected_size;
    switch (mode) {
        case SamplerMode::uniform:
            return m;
        case SamplerMode::matrix_p2: {
            double dd = static_cast<double>(d);
            double model = dd * (1.0 + std::log(std::max(1.0, static_cast<double>(n) / dd)));
            return m / model;
        }
        default:
            return r_from_expected_size_heuristic(m, n);
    }
}

struct SampleResult {
    std::vector<CoresetEntry> entries;
    Json manifest;
};

inline SampleResult run_sample(const SampleOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    RowFile rf = read_rows_auto(opt.input, opt.header);
    SamplerMode mode = sampler_mode_from_string(opt.mode);

    SamplerConfig cfg;
    cfg.p = opt.p;
    cfg.mode = mode;
    cfg.eps = opt.eps;
    cfg.seed = opt.seed;
    cfg.n_hint = opt.n_hint ? opt.n_hint : std::optional<std::size_t>(rf.rows.rows());
    cfg.r = resolve_r(opt, mode, static_cast<std::size_t>(rf.rows.rows()), rf.rows.cols());
    cfg.validate();

    MatrixRowSource source(rf.rows);
    std::vector<CoresetEntry> entries = sample_stream(source, cfg);

    write_coreset_csv(opt.out, entries, rf.rows.cols());

    Json config;
    config["mode"] = opt.mode;
    config["p"] = opt.p;
    config["r"] = cfg.r;
    config["eps"] = opt.eps;
    config["seed"] = opt.seed;
    if (opt.expected_size) config["expected_size"] = *opt.expected_size;
    Json manifest = make_manifest("sample", config, static_cast<std::size_t>(rf.rows.rows()),
                                  rf.rows.cols(), rf.digest, {opt.out});
    manifest["retained"] = entries.size();
    write_json(opt.out + ".manifest.json", manifest);

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[sample] %zu of %lld rows retained in %.2fs\n", entries.size(),
                 static_cast<long long>(rf.rows.rows()), secs);
    return {std::move(entries), std::move(manifest)};
}

struct EvalOptions {
    std::string input;
    bool header = false;
    std::string coreset;
    int p = 2;
    std::string queries = "bottom5";
    std::uint64_t seed = 0;
    std::string out;  // prefix: writes <out>.csv and <out>.json
};

inline QuerySet build_queries(const std::string& spec, const Matrix& rows, int p, std::uint64_t seed) {
    if (spec == "smallest") return bottom_singular_queries(rows, 1);
    if (spec.rfind("bottom", 0) == 0) {
        std::string rest = spec.substr(6);
        if (!rest.empty() && rest[0] == ':') rest = rest.substr(1);
        std::size_t k = rest.empty() ? 5 : static_cast<std::size_t>(std::stoul(rest));
        return bottom_singular_queries(rows, k);
    }
    if (spec.rfind("random:", 0) == 0) {
        std::string rest = spec.substr(7);
        std::size_t colon = rest.find(':');
        std::size_t count = static_cast<std::size_t>(std::stoul(rest.substr(0, colon)));
        std::uint64_t qseed = colon == std::string::npos ? seed : std::stoull(rest.substr(colon + 1));
        return random_unit_queries(rows.cols(), count, qseed);
    }
    if (spec.rfind("net:", 0) == 0) {
        double eps = std::stod(spec.substr(4));
        SvdFactorization f = svd(rows);
        return epsilon_net(f.rank, eps, f.V, p, seed);
    }
    throw invalid_input_error("unknown queries spec: " + spec);
}

struct EvalResult {
    Json report;
    bool digest_mismatch = false;
};

inline EvalResult run_eval(const EvalOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    RowFile rf = read_rows_auto(opt.input, opt.header);
    std::vector<CoresetEntry> entries = read_coreset_csv(opt.coreset, opt.p);

    EvalResult result;
    std::string coreset_manifest_path = opt.coreset + ".manifest.json";
    Json coreset_manifest;
    if (std::ifstream(coreset_manifest_path).good()) {
        coreset_manifest = read_json(coreset_manifest_path);
        std::string recorded = coreset_manifest.value(Json::json_pointer("/input/checksum"), std::string());
        if (!recorded.empty() && recorded != rf.digest) {
            result.digest_mismatch = true;
            std::fprintf(stderr, "[eval] warning: coreset was built from a different input (digest %s != %s)\n",
                         recorded.c_str(), rf.digest.c_str());
        }
    }

    QuerySet queries = build_queries(opt.queries, rf.rows, opt.p, opt.seed);
    std::vector<WeightedRow> weighted = to_weighted_rows(entries);

    std::string csv = "query,truth,estimate,relative_error,absolute_fallback\n";
    Json per_query = Json::array();
    double sum_truth = 0.0, sum_est = 0.0, max_err = 0.0, mean_err = 0.0;
    for (std::size_t qi = 0; qi < queries.vectors.size(); ++qi) {
        const Vector& x = queries.vectors[qi];
        double truth = contract(rf.rows, x, opt.p, /*signed_mode=*/true);
        double est = contract(weighted, x, opt.p, /*signed_mode=*/true);
        ErrorValue err = relative_error_flagged(truth, est);
        sum_truth += truth;
        sum_est += est;
        max_err = std::max(max_err, err.value);
        mean_err += err.value;
        csv += std::to_string(qi) + "," + format_real(truth) + "," + format_real(est) + "," +
               format_real(err.value) + "," + (err.absolute_fallback ? "1" : "0") + "\n";
        per_query.push_back({{"query", qi},
                             {"truth", truth},
                             {"estimate", est},
                             {"relative_error", err.value},
                             {"absolute_fallback", err.absolute_fallback}});
    }
    std::size_t nq = queries.vectors.size();
    if (nq > 0) mean_err /= static_cast<double>(nq);
    ErrorValue agg = relative_error_flagged(sum_truth, sum_est);
    csv += "aggregate_sum," + format_real(sum_truth) + "," + format_real(sum_est) + "," +
           format_real(agg.value) + "," + (agg.absolute_fallback ? "1" : "0") + "\n";

    Json config;
    config["p"] = opt.p;
    config["queries"] = opt.queries;
    config["seed"] = opt.seed;
    config["coreset"] = opt.coreset;
    Json manifest = make_manifest("eval", config, static_cast<std::size_t>(rf.rows.rows()), rf.rows.cols(),
                                  rf.digest, {opt.out + ".csv", opt.out + ".json"});

    Json report;
    report["manifest"] = manifest;
    report["digest_mismatch"] = result.digest_mismatch;
    report["queries"] = per_query;
    report["aggregate"] = {{"sum_truth", sum_truth},
                           {"sum_estimate", sum_est},
                           {"sum_relative_error", agg.value},
                           {"max_query_relative_error", max_err},
                           {"mean_query_relative_error", mean_err},
                           {"coreset_size", entries.size()}};

    std::ofstream csv_out(opt.out + ".csv", std::ios::binary);
    if (!csv_out) throw invalid_input_error("cannot write file: " + opt.out + ".csv");
    csv_out << csv;
    csv_out.close();
    write_json(opt.out + ".json", report);

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[eval] %zu queries in %.2fs\n", queries.vectors.size(), secs);
    result.report = std::move(report);
    return result;
}

struct BenchOptions {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<std::size_t> sizes;  // empty -> scenario default
    std::size_t reps = 5;
    bool full_scale = false;
    std::string out;  // prefix
};

inline Json bench_table_to_json(const BenchTable& table) {
    Json cells = Json::array();
    for (const auto& c : table.cells) {
        Json values = Json::array();
        for (double v : c.values) {
            if (std::isnan(v))
                values.push_back(nullptr);
            else
                values.push_back(v);
        }
        cells.push_back({{"sampler", c.sampler},
                         {"expected_size", c.size},
                         {"median", std::isnan(c.median) ? Json(nullptr) : Json(c.median)},
                         {"failures", c.failures},
                         {"values", values}});
    }
    return {{"scenario", table.scenario}, {"cells", cells}};
}

inline std::string bench_table_to_csv(const BenchTable& table) {
    std::string csv = "sampler,expected_size,median,failures\n";
    for (const auto& c : table.cells) {
        csv += c.sampler + "," + std::to_string(c.size) + "," +
               (std::isnan(c.median) ? std::string("nan") : format_real(c.median)) + "," +
               std::to_string(c.failures) + "\n";
    }
    return csv;
}

inline Json run_bench(const BenchOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    BenchTable table;
    std::vector<std::size_t> sizes = opt.sizes;
    Json config;
    config["scenario"] = opt.scenario;
    config["seed"] = opt.seed;
    config["reps"] = opt.reps;
    config["full_scale"] = opt.full_scale;

    std::size_t rows = 0;
    Index dim = 0;
    if (opt.scenario == "tensor_contraction") {
        Index n = opt.full_scale ? 200000 : 20000;
        if (sizes.empty()) sizes = {200, 250, 300, 350};
        table = tensor_contraction_bench(n, opt.seed, sizes, opt.reps);
        rows = static_cast<std::size_t>(n);
        dim = 30;
    } else if (opt.scenario == "topic_model") {
        if (sizes.empty()) sizes = {50, 100, 200, 500, 1000};
        table = topic_model_bench(10000, 100, 12, opt.seed, sizes, opt.reps);
        rows = 10000;
        dim = 100;
    } else if (opt.scenario == "spectral_p2") {
        if (sizes.empty()) sizes = {200, 400, 800};
        table = spectral_p2_bench(2000, 10, opt.seed, sizes, opt.reps);
        rows = 2000;
        dim = 10;
    } else {
        throw invalid_input_error("unknown bench scenario: " + opt.scenario);
    }
    config["sizes"] = sizes;

    std::string synthetic_id = opt.scenario + ":" + std::to_string(opt.seed) + ":" +
                               std::to_string(rows) + "x" + std::to_string(dim);
    Json manifest = make_manifest("bench", config, rows, dim, "synthetic:" + hex64(fnv1a64(synthetic_id)),
                                  {opt.out + ".csv", opt.out + ".json"});

    Json report = bench_table_to_json(table);
    report["manifest"] = manifest;

    std::ofstream csv_out(opt.out + ".csv", std::ios::binary);
    if (!csv_out) throw invalid_input_error("cannot write file: " + opt.out + ".csv");
    csv_out << bench_table_to_csv(table);
    csv_out.close();
    write_json(opt.out + ".json", report);

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[bench] %s finished in %.2fs\n", opt.scenario.c_str(), secs);
    return report;
}

}  // namespace coreset
