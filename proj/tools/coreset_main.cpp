#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "coreset/cli.hpp"

namespace {

constexpr int kExitInvalidInput = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitNumerical = 4;

int dispatch(int argc, char** argv) {
    CLI::App app{"streaming coreset sampler and evaluation suite"};
    app.require_subcommand(1);

    coreset::SampleOptions sample_opt;
    double sample_r = -1.0, sample_expected = -1.0;
    long long n_hint = -1;
    auto* sample = app.add_subcommand("sample", "stream rows once through a sampler and write a coreset");
    sample->add_option("--input", sample_opt.input, "row file (CSV, or SCR1 binary)")->required();
    sample->add_flag("--header", sample_opt.header, "skip one CSV header line");
    sample->add_option("--mode", sample_opt.mode, "online|kernel|online_then_kernel|uniform|matrix_p2");
    sample->add_option("--p", sample_opt.p, "contraction order (integer >= 2)");
    sample->add_option("--r", sample_r, "oversampling parameter");
    sample->add_option("--expected-size", sample_expected, "target expected sample size (heuristic r)");
    sample->add_option("--eps", sample_opt.eps, "accuracy knob (matrix_p2 probability inflation)");
    sample->add_option("--seed", sample_opt.seed, "rng seed");
    sample->add_option("--n-hint", n_hint, "row count hint for the uniform mode");
    sample->add_option("--out", sample_opt.out, "coreset CSV path (manifest written adjacent)")->required();

    coreset::EvalOptions eval_opt;
    auto* eval = app.add_subcommand("eval", "evaluate a coreset against its source stream");
    eval->add_option("--input", eval_opt.input, "row file the coreset was sampled from")->required();
    eval->add_flag("--header", eval_opt.header, "skip one CSV header line");
    eval->add_option("--coreset", eval_opt.coreset, "coreset CSV produced by sample")->required();
    eval->add_option("--p", eval_opt.p, "contraction order");
    eval->add_option("--queries", eval_opt.queries,
                     "bottom<k> | smallest | random:<count>:<seed> | net:<eps>");
    eval->add_option("--seed", eval_opt.seed, "rng seed");
    eval->add_option("--out", eval_opt.out, "report prefix (.csv and .json)")->required();

    coreset::BenchOptions bench_opt;
    std::vector<std::size_t> bench_sizes;
    auto* bench = app.add_subcommand("bench", "run a synthetic benchmark scenario");
    bench->add_option("--scenario", bench_opt.scenario, "tensor_contraction|topic_model|spectral_p2")
        ->required();
    bench->add_option("--seed", bench_opt.seed, "rng seed");
    bench->add_option("--sizes", bench_sizes, "expected coreset sizes (scenario default otherwise)");
    bench->add_option("--reps", bench_opt.reps, "repetitions per cell");
    bench->add_flag("--full-scale", bench_opt.full_scale, "full-size dataset (tensor scenario: 200K rows)");
    bench->add_option("--out", bench_opt.out, "report prefix (.csv and .json)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalidInput;
    }

    if (sample->parsed()) {
        if (sample_r > 0.0) sample_opt.r = sample_r;
        if (sample_expected > 0.0) sample_opt.expected_size = sample_expected;
        if (n_hint >= 0) sample_opt.n_hint = static_cast<std::size_t>(n_hint);
        coreset::run_sample(sample_opt);
    } else if (eval->parsed()) {
        coreset::run_eval(eval_opt);
    } else if (bench->parsed()) {
        bench_opt.sizes = bench_sizes;
        coreset::run_bench(bench_opt);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const coreset::invalid_input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidInput;
    } catch (const coreset::capacity_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCapacity;
    } catch (const coreset::numerical_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
