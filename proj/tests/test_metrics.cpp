#include "doctest.h"

#include "oracles.hpp"

#include "typicalset/error.hpp"
#include "typicalset/metrics.hpp"
#include "typicalset/rng.hpp"

#include <cmath>
#include <numeric>

using namespace typicalset;

namespace {

using V = std::vector<double>;

std::vector<double> range(int lo, int hi) {
    std::vector<double> v;
    for (int i = lo; i <= hi; ++i) v.push_back(i);
    return v;
}

} // namespace

TEST_CASE("threshold_at_tpr examples") {
    const auto r = threshold_at_tpr(range(1, 20), 0.05);
    CHECK(r.gamma == 2.0);
    CHECK(r.achieved_tpr == 0.95);

    const std::vector<double> same(13, 4.5);
    for (double alpha : {0.01, 0.3, 0.9}) {
        const auto t = threshold_at_tpr(same, alpha);
        CHECK(t.gamma == 4.5);
        CHECK(t.achieved_tpr == 1.0);
    }
    CHECK(threshold_at_tpr(V{5, 3, 9, 1}, 1e-9).gamma == 1.0);

    CHECK_THROWS_AS(threshold_at_tpr({}, 0.05), DataError);
    CHECK_THROWS_AS(threshold_at_tpr(V{1.0}, 0.0), ParameterError);
    CHECK_THROWS_AS(threshold_at_tpr(V{1.0}, 1.0), ParameterError);
}

TEST_CASE("fpr_at_tpr examples") {
    CHECK(fpr_at_tpr(range(1, 20), V{0, 1, 2, 3}, 0.05) == 0.5);
    CHECK(fpr_at_tpr(range(10, 20), range(0, 9), 0.05) == 0.0);
    const auto id = range(1, 100);
    CHECK(fpr_at_tpr(id, id, 0.05) == doctest::Approx(0.95).epsilon(0.02));
}

TEST_CASE("auroc examples") {
    CHECK(auroc(V{3, 4, 5}, V{0, 1, 2}) == 1.0);
    CHECK(auroc(V{2, 2, 2}, V{2, 2}) == 0.5);
    CHECK(auroc(V{1, 3}, V{2, 4}) == 0.25);
}

TEST_CASE("roc_curve examples") {
    const auto perfect = roc_curve(V{3, 4}, V{0, 1});
    CHECK(std::find(perfect.begin(), perfect.end(), RocPoint{0, 1}) != perfect.end());

    const auto single = roc_curve(V{1.0}, V{0.0});
    REQUIRE(single.size() == 3);
    CHECK(single[0] == RocPoint{0, 0});
    CHECK(single[1] == RocPoint{0, 1});
    CHECK(single[2] == RocPoint{1, 1});

    const auto diag = roc_curve(range(1, 10), range(1, 10));
    for (const auto& p : diag) CHECK(p.fpr == p.tpr);
}

TEST_CASE("randomized instances with ties agree with the oracles") {
    Rng rng(31337);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n_id = 1 + rng.next_u64() % 30;
        const std::size_t n_ood = 1 + rng.next_u64() % 30;
        const int levels = 2 + static_cast<int>(rng.next_u64() % 12);
        const auto id = oracle::tied_scores(rng, n_id, levels, 0.5);
        const auto ood = oracle::tied_scores(rng, n_ood, levels, 0.0);

        const auto roc = roc_curve(id, ood);
        CHECK(roc.front() == RocPoint{0, 0});
        CHECK(roc.back() == RocPoint{1, 1});
        for (std::size_t i = 1; i < roc.size(); ++i) {
            CHECK(roc[i].fpr >= roc[i - 1].fpr);
            CHECK(roc[i].tpr >= roc[i - 1].tpr);
            CHECK(!(roc[i] == roc[i - 1]));
        }
        const double mw = oracle::auroc_pairs(id, ood);
        CHECK(std::abs(trapezoid_area(roc) - mw) < 1e-12);
        CHECK(std::abs(auroc(id, ood) - mw) < 1e-12);
        CHECK(auroc(id, ood) + auroc(ood, id) == 1.0);

        for (double alpha : {0.01, 0.05, 0.1, 0.25, 0.5}) {
            double gamma = 0.0;
            const double expected = oracle::fpr_enumerate(id, ood, alpha, &gamma);
            CHECK(fpr_at_tpr(id, ood, alpha) == expected);
            const auto region = threshold_at_tpr(id, alpha);
            CHECK(region.gamma == gamma);
            CHECK(region.achieved_tpr >= 1.0 - alpha);
        }
    }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        auto id = oracle::tied_scores(rng, 25, 8, 0.3);
        auto ood = oracle::tied_scores(rng, 20, 8, 0.0);
        const double base = auroc(id, ood);
        for (auto& v : id) v = std::exp(3 * v) + 1;
        for (auto& v : ood) v = std::exp(3 * v) + 1;
        CHECK(auroc(id, ood) == base);
    }
}

TEST_CASE("fpr_at_tpr monotonicity") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto id = oracle::tied_scores(rng, 40, 10, 0.5);
        auto ood = oracle::tied_scores(rng, 30, 10, 0.0);
        // Stricter TPR demand (smaller alpha) never lowers the FPR.
        double previous = 1.0;
        for (double alpha = 0.01; alpha < 0.6; alpha += 0.01) {
            const double f = fpr_at_tpr(id, ood, alpha);
            CHECK(f <= previous);
            previous = f;
        }
        // Lowering one OOD score never raises the FPR.
        const double before = fpr_at_tpr(id, ood, 0.05);
        ood[trial % ood.size()] -= 1.0;
        CHECK(fpr_at_tpr(id, ood, 0.05) <= before);
    }
}

TEST_CASE("detection_metrics and sweeps") {
    const auto m = detection_metrics(range(1, 20), V{0, 1, 2, 3}, 0.05);
    CHECK(m.fpr_at_tpr == 0.5);
    CHECK(m.gamma == 2.0);
    CHECK(m.n_id == 20);
    CHECK(m.n_ood == 4);
    CHECK(std::abs(m.auroc - trapezoid_area(m.roc_points)) < 1e-12);

    const auto grid = default_alpha_grid();
    REQUIRE(grid.size() == 50);
    CHECK(grid.front() == doctest::Approx(0.01));
    CHECK(grid.back() == doctest::Approx(0.50));
    const auto sweep = fpr_sweep(range(1, 20), V{0, 1, 2, 3}, grid);
    CHECK(sweep.size() == grid.size());
    CHECK(sweep[4] == 0.5);
}

TEST_CASE("ece examples") {
    const std::vector<std::uint8_t> half = {1, 0, 1, 0};
    CHECK(ece(V{1.0, 1.0, 1.0, 1.0}, half) == doctest::Approx(0.5));
    const std::vector<std::uint8_t> one = {1};
    CHECK(ece(V{0.7}, one) == doctest::Approx(0.3));
    // Confidence 0.75 with 3 of 4 correct in one bin: perfectly calibrated.
    const std::vector<std::uint8_t> three = {1, 1, 1, 0};
    CHECK(ece(V{0.75, 0.75, 0.75, 0.75}, three) == doctest::Approx(0.0));
    const std::vector<std::uint8_t> edge = {0};
    CHECK(ece(V{0.0}, edge) == 0.0);
    CHECK_THROWS_AS(ece(V{0.5, 0.5}, one), ShapeError);
}

TEST_CASE("accuracy examples") {
    const Matrix onehot(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const std::vector<std::int32_t> right = {0, 1, 2};
    const std::vector<std::int32_t> wrong = {1, 2, 0};
    const std::vector<std::int32_t> mixed = {0, 1, 0};
    CHECK(accuracy(onehot, right) == 1.0);
    CHECK(accuracy(onehot, wrong) == 0.0);
    CHECK(accuracy(onehot, mixed) == doctest::Approx(2.0 / 3.0));
    const std::vector<double> tie = {2.0, 2.0, 1.0};
    CHECK(argmax(tie) == 0);
}
