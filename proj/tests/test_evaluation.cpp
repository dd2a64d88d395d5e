#include <catch2/catch_amalgamated.hpp>

#include "coreset/evaluation.hpp"
#include "coreset/samplers.hpp"
#include "coreset/synthetic.hpp"

using namespace coreset;

namespace {

std::vector<WeightedRow> as_rows(const Matrix& m) {
    std::vector<WeightedRow> rows;
    for (Index i = 0; i < m.rows(); ++i) rows.push_back({m.row(i).transpose(), 1.0});
    return rows;
}

}  // namespace

TEST_CASE("contract basics") {
    Vector e1 = Vector::Unit(2, 0), e2 = Vector::Unit(2, 1);
    std::vector<WeightedRow> one = {{e1, 1.0}};
    REQUIRE(contract(one, e1, 3, true) == Catch::Approx(1.0));
    REQUIRE(contract(one, -e1, 3, true) == Catch::Approx(-1.0));
    REQUIRE(contract(one, -e1, 3, false) == Catch::Approx(1.0));

    std::vector<WeightedRow> two = {{e1, 1.0}, {e2, 1.0}};
    Vector diag = (e1 + e2) / std::sqrt(2.0);
    REQUIRE(contract(two, diag, 4, true) == Catch::Approx(0.5));
}

TEST_CASE("contract is linear over disjoint unions") {
    Rng rng(64);
    std::vector<WeightedRow> a, b, both;
    for (int i = 0; i < 17; ++i) a.push_back({rng.gaussian_vector(3), rng.uniform(0.5, 2.0)});
    for (int i = 0; i < 9; ++i) b.push_back({rng.gaussian_vector(3), rng.uniform(0.5, 2.0)});
    both = a;
    both.insert(both.end(), b.begin(), b.end());
    Vector x = rng.unit_vector(3);
    for (int p : {2, 3}) {
        double whole = contract(both, x, p, true);
        double parts = contract(a, x, p, true) + contract(b, x, p, true);
        REQUIRE(whole == Catch::Approx(parts).epsilon(1e-12));
    }
}

TEST_CASE("relative error") {
    REQUIRE(relative_error(1.0, 1.1) == Catch::Approx(0.1));
    REQUIRE(relative_error(3.7, 3.7) == 0.0);
    REQUIRE(relative_error(2.0, 0.0) == Catch::Approx(1.0));
    REQUIRE_THROWS_AS(relative_error(0.0, 1.0), invalid_input_error);
    ErrorValue ev = relative_error_flagged(0.0, 0.25);
    REQUIRE(ev.absolute_fallback);
    REQUIRE(ev.value == Catch::Approx(0.25));
}

TEST_CASE("epsilon net in one dimension is the two poles") {
    Matrix basis = Matrix::Identity(1, 1);
    QuerySet net = epsilon_net(1, 0.5, basis, 2, 11);
    REQUIRE(net.vectors.size() == 2);
    REQUIRE(std::abs(net.vectors[0][0]) == Catch::Approx(1.0));
    REQUIRE(net.vectors[0][0] * net.vectors[1][0] < 0.0);

    QuerySet coarse = epsilon_net(1, 2.5, basis, 2, 11);
    REQUIRE(coarse.vectors.size() == 1);
}

TEST_CASE("epsilon net respects the packing bound and separation") {
    for (int p : {2, 3}) {
        auto coeffs = epsilon_net_coefficients(2, 0.5, p, 19);
        REQUIRE(coeffs.size() <= 16);  // (2/eps)^k
        REQUIRE(coeffs.size() >= 4);
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            for (std::size_t j = i + 1; j < coeffs.size(); ++j)
                REQUIRE(lp_norm(coeffs[i] - coeffs[j], p) > 0.5);
        for (const auto& y : coeffs) REQUIRE(lp_norm(y, p) == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("epsilon net guard rejects oversized requests") {
    Matrix basis = Matrix::Identity(4, 4);
    REQUIRE_THROWS_AS(epsilon_net(4, 0.05, basis, 2, 1), capacity_error);
    REQUIRE_THROWS_AS(epsilon_net_coefficients(7, 0.5, 2, 1), capacity_error);
}

TEST_CASE("verify embedding trivial cases") {
    Matrix a = gaussian_stream(30, 3, 5);
    QuerySet queries = random_unit_queries(3, 25, 7);

    EmbeddingReport full = verify_embedding(a, as_rows(a), 3, 0.01, queries);
    REQUIRE(full.max_deviation == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(full.pass);

    EmbeddingReport empty = verify_embedding(a, {}, 3, 0.5, queries);
    REQUIRE(empty.max_deviation == Catch::Approx(1.0));
    REQUIRE_FALSE(empty.pass);
}

TEST_CASE("verify embedding passes for generously sampled coresets") {
    int pass = 0;
    const int runs = 30;
    for (int run = 0; run < runs; ++run) {
        Matrix a = gaussian_stream(50, 3, 400 + run);
        SamplerConfig cfg;
        cfg.p = 3;
        cfg.r = 30.0;
        cfg.seed = 4000 + run;
        OnlineSampler sampler(3, cfg);
        for (Index i = 0; i < a.rows(); ++i) sampler.step(a.row(i).transpose());
        QuerySet queries = random_unit_queries(3, 200, 900 + run);
        EmbeddingReport rep = verify_embedding(a, to_weighted_rows(sampler.retained()), 3, 0.2, queries);
        if (rep.max_deviation <= 0.2) ++pass;
    }
    REQUIRE(pass >= 27);
}

TEST_CASE("net deviation lower-bounds the random-query sup") {
    // drop a chunk of rows so the coreset has a real deviation profile
    for (int p : {2, 3, 4}) {
        Matrix a = gaussian_stream(40, 2, 23 + p);
        std::vector<WeightedRow> partial;
        for (Index i = 0; i < 30; ++i) partial.push_back({a.row(i).transpose(), 40.0 / 30.0});

        SvdFactorization f = svd(a);
        double eps = 0.05;
        QuerySet net = epsilon_net(f.rank, eps, f.V, p, 77);
        QuerySet rand = random_unit_queries(2, 10000, 78);

        double net_dev = verify_embedding(a, partial, p, 1.0, net).max_deviation;
        double rand_dev = verify_embedding(a, partial, p, 1.0, rand).max_deviation;
        REQUIRE(net_dev >= rand_dev - 5.0 * eps);
    }
}

TEST_CASE("spectral check") {
    Matrix a = gaussian_stream(40, 4, 3);
    REQUIRE(spectral_check(a, as_rows(a)).value == Catch::Approx(0.0).margin(1e-12));

    // exact reweighing: one copy of each duplicated row with weight 2
    Matrix dup(8, 2);
    for (Index i = 0; i < 4; ++i) {
        dup.row(2 * i) = Vector::Unit(2, i % 2).transpose() * (i + 1.0);
        dup.row(2 * i + 1) = dup.row(2 * i);
    }
    std::vector<WeightedRow> halved;
    for (Index i = 0; i < 4; ++i) halved.push_back({dup.row(2 * i).transpose(), 2.0});
    REQUIRE(spectral_check(dup, halved).value == Catch::Approx(0.0).margin(1e-12));

    // missing one direction of an identity stream costs the full norm
    Matrix eye = Matrix::Identity(3, 3);
    std::vector<WeightedRow> missing = {{Vector::Unit(3, 0), 1.0}, {Vector::Unit(3, 1), 1.0}};
    REQUIRE(spectral_check(eye, missing).value == Catch::Approx(1.0));

    SpectralCheckResult degenerate = spectral_check(Matrix::Zero(3, 3), {});
    REQUIRE(degenerate.degenerate);
}
