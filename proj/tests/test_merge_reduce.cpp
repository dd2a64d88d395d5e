#include <catch2/catch_amalgamated.hpp>

#include "coreset/evaluation.hpp"
#include "coreset/merge_reduce.hpp"
#include "coreset/synthetic.hpp"

using namespace coreset;

namespace {

Reducer identity_reducer() {
    return [](const std::vector<WeightedRow>& pts, double) { return pts; };
}

WeightedRow unit_row(double x, double y) {
    Vector v(2);
    v << x, y;
    return {v, 1.0};
}

}  // namespace

TEST_CASE("schedule product stays within 1 + eps/2 up to 2^40 points") {
    for (double eps : {0.1, 0.5}) {
        ErrorSchedule schedule{eps, kDefaultScheduleC};
        for (std::size_t last = 0; last <= 40; ++last) {
            REQUIRE(schedule.product_through(last) <= 1.0 + eps / 2.0);
        }
        REQUIRE(schedule.rho(0) == Catch::Approx(eps / kDefaultScheduleC));
    }
}

TEST_CASE("binary counter occupancy is exact") {
    for (std::size_t capacity : {2u, 3u, 4u}) {
        MergeReduceTree tree(capacity, ErrorSchedule{0.2}, identity_reducer());
        for (std::size_t n = 1; n <= 70; ++n) {
            tree.push(unit_row(static_cast<double>(n), 1.0));
            std::size_t full_buckets = n / capacity;
            REQUIRE(tree.buffer_size() == n % capacity);
            for (std::size_t level = 1; level <= tree.level_count() + 1; ++level) {
                bool expected = (full_buckets >> (level - 1)) & 1u;
                REQUIRE(tree.level_occupied(level) == expected);
            }
        }
    }
}

TEST_CASE("two pushes at capacity 2 carry into level 1") {
    MergeReduceTree tree(2, ErrorSchedule{0.2}, identity_reducer());
    tree.push(unit_row(1, 0));
    tree.push(unit_row(0, 1));
    REQUIRE(tree.buffer_size() == 0);
    REQUIRE(tree.level_occupied(1));
    REQUIRE_FALSE(tree.level_occupied(2));

    tree.push(unit_row(1, 1));
    tree.push(unit_row(1, 2));
    REQUIRE(tree.level_occupied(2));
    REQUIRE_FALSE(tree.level_occupied(1));
}

TEST_CASE("finalize unions buffer and occupied buckets") {
    MergeReduceTree empty(2, ErrorSchedule{0.2}, identity_reducer());
    REQUIRE(empty.finalize().empty());

    MergeReduceTree tree(2, ErrorSchedule{0.2}, identity_reducer());
    for (int i = 0; i < 8; ++i) tree.push(unit_row(i, 1));  // 2^2 * M: one bucket
    REQUIRE(tree.finalize().size() == 8);
    REQUIRE(tree.level_occupied(3));
    REQUIRE_FALSE(tree.level_occupied(1));
    REQUIRE_FALSE(tree.level_occupied(2));

    for (int i = 0; i < 2; ++i) tree.push(unit_row(10 + i, 1));  // +M: two buckets
    REQUIRE(tree.level_occupied(3));
    REQUIRE(tree.level_occupied(1));
    REQUIRE(tree.finalize().size() == 10);
}

TEST_CASE("reducer failures propagate") {
    Reducer failing = [](const std::vector<WeightedRow>&, double) -> std::vector<WeightedRow> {
        throw numerical_error("reduce exploded");
    };
    MergeReduceTree tree(2, ErrorSchedule{0.2}, failing);
    tree.push(unit_row(1, 0));
    REQUIRE_THROWS_AS(tree.push(unit_row(0, 1)), numerical_error);
}

TEST_CASE("sensitivity reducer keeps a single point with its weight") {
    SensitivityReducer reducer(2, 5);
    std::vector<WeightedRow> one = {{Vector::Ones(3), 2.5}};
    auto out = reducer(one, 0.5);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].weight == Catch::Approx(2.5));
}

TEST_CASE("sensitivity reducer keeps everything as rho -> 0") {
    Rng rng(8);
    std::vector<WeightedRow> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({rng.gaussian_vector(3), 1.0});
    SensitivityReducer reducer(2, 5);
    auto out = reducer(pts, 1e-6);
    REQUIRE(out.size() == pts.size());
}

TEST_CASE("sensitivity reducer returns all-zero input unchanged") {
    std::vector<WeightedRow> pts(4, WeightedRow{Vector::Zero(3), 1.0});
    SensitivityReducer reducer(2, 5);
    auto out = reducer(pts, 0.5);
    REQUIRE(out.size() == 4);
}

TEST_CASE("sensitivity reducer concentrates duplicate mass") {
    const int copies = 16;
    Vector a = Vector::Ones(3) / std::sqrt(3.0);
    std::vector<WeightedRow> pts(copies, WeightedRow{a, 1.0});
    double total_kept = 0.0;
    double total_weight = 0.0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        SensitivityReducer reducer(2, 100 + t);
        auto out = reducer(pts, 1.0);  // S = 1, target 1
        total_kept += static_cast<double>(out.size());
        for (const auto& wr : out) {
            REQUIRE(wr.weight == Catch::Approx(static_cast<double>(copies)));
            total_weight += wr.weight;
        }
    }
    double mean_kept = total_kept / trials;
    REQUIRE(mean_kept >= 0.5);
    REQUIRE(mean_kept <= 2.5);
    // kept mass is unbiased for the input mass
    REQUIRE(total_weight / trials == Catch::Approx(copies).margin(8.0));
}

TEST_CASE("fixed-target reducer compresses towards the target") {
    Matrix a = gaussian_stream(256, 6, 3);
    std::vector<WeightedRow> pts;
    for (Index i = 0; i < a.rows(); ++i) pts.push_back({a.row(i).transpose(), 1.0});
    Reducer reducer = make_sensitivity_reducer(2, 17, 64);
    auto out = reducer(pts, 0.1);
    REQUIRE(out.size() < 130);  // ~64 expected, binomial spread
    REQUIRE(out.size() > 20);
}

TEST_CASE("tree end-to-end preserves the p=2 spectrum at a fixed size target") {
    int pass = 0;
    const int runs = 20;
    for (int run = 0; run < runs; ++run) {
        Matrix a = gaussian_stream(2000, 8, 9000 + run);
        MergeReduceTree tree(256, ErrorSchedule{0.25},
                             make_sensitivity_reducer(2, 700 + run, 320));
        for (Index i = 0; i < a.rows(); ++i) tree.push({a.row(i).transpose(), 1.0});
        auto rows = tree.finalize();
        double err = spectral_check(a, rows).value;
        if (err <= 0.25) ++pass;
    }
    REQUIRE(pass >= 18);
}
