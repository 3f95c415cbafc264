#include "doctest.h"

#include "typicalset/error.hpp"
#include "typicalset/rectify.hpp"
#include "typicalset/rng.hpp"

#include <cmath>
#include <limits>

using namespace typicalset;

namespace {

FeatureBatch pre(std::size_t n, std::size_t d, std::vector<double> v) {
    return FeatureBatch(Matrix(n, d, std::move(v)), Stage::PreActivation);
}

FeatureBatch post(std::size_t n, std::size_t d, std::vector<double> v) {
    return FeatureBatch(Matrix(n, d, std::move(v)), Stage::PostActivation);
}

FeatureBatch random_pre(Rng& rng, std::size_t n, std::size_t d) {
    Matrix m(n, d);
    for (auto& x : m.values()) x = 2.0 * rng.normal();
    return FeatureBatch(std::move(m), Stage::PreActivation);
}

} // namespace

TEST_CASE("trbn_clamp examples") {
    const BnChannelStats unit({0.0}, {1.0});
    CHECK(trbn_clamp(pre(1, 1, {2.5}), unit, 1.0).data()(0, 0) == 1.0);
    CHECK(trbn_clamp(pre(1, 1, {0.3}), unit, 1.0).data()(0, 0) == 0.3);
    const BnChannelStats shifted({1.0}, {2.0});
    CHECK(trbn_clamp(pre(1, 1, {-3.0}), shifted, 1.25).data()(0, 0) == -1.5);
}

TEST_CASE("trbn_clamp errors") {
    const BnChannelStats s({0.0, 0.0}, {1.0, 1.0});
    CHECK_THROWS_AS(trbn_clamp(pre(1, 1, {0.0}), s, 1.0), ShapeError);
    CHECK_THROWS_AS(trbn_clamp(pre(1, 2, {0.0, 0.0}), s, 0.0), ParameterError);
    CHECK_THROWS_AS(trbn_clamp(pre(1, 2, {0.0, 0.0}), s, -1.0), ParameterError);
    CHECK_THROWS_AS(trbn_clamp(post(1, 2, {0.0, 0.0}), s, 1.0), StateError);
    CHECK_THROWS_AS(pre(1, 1, {std::nan("")}), DataError);
}

TEST_CASE("trbn_clamp keeps every value inside its channel interval and leaves input alone") {
    Rng rng(11);
    const std::size_t d = 9;
    std::vector<double> mu(d), sigma(d);
    for (std::size_t c = 0; c < d; ++c) {
        mu[c] = rng.uniform(-1, 1);
        sigma[c] = rng.uniform(0.5, 1.5);
    }
    const BnChannelStats stats(mu, sigma);
    const auto batch = random_pre(rng, 50, d);
    const auto copy = batch;
    for (double lambda : {0.1, 0.5, 1.25, 3.0}) {
        const auto out = trbn_clamp(batch, stats, lambda);
        CHECK(batch == copy);
        CHECK(out.stage() == Stage::PreActivation);
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (std::size_t c = 0; c < d; ++c) {
                const double v = out.data()(i, c);
                CHECK(v >= mu[c] - lambda * sigma[c]);
                CHECK(v <= mu[c] + lambda * sigma[c]);
                const double x = batch.data()(i, c);
                if (x >= mu[c] - lambda * sigma[c] && x <= mu[c] + lambda * sigma[c]) {
                    CHECK(v == x);
                }
            }
        }
    }
}

TEST_CASE("relu examples and stage") {
    const auto out = relu(pre(1, 3, {-2.0, 0.0, 3.7}));
    CHECK(out.data()(0, 0) == 0.0);
    CHECK(out.data()(0, 1) == 0.0);
    CHECK(out.data()(0, 2) == 3.7);
    CHECK(out.stage() == Stage::PostActivation);
    CHECK_THROWS_AS(relu(out), StateError);
}

TEST_CASE("react_clamp") {
    CHECK(react_clamp(post(1, 1, {5.0}), 1.0).data()(0, 0) == 1.0);
    CHECK(react_clamp(post(1, 1, {0.5}), 1.0).data()(0, 0) == 0.5);
    const auto out = react_clamp(post(1, 4, {0, 1, 3, 7}), 2.0);
    CHECK(out.data() == Matrix(1, 4, {0, 1, 2, 2}));
    CHECK_THROWS_AS(react_clamp(post(1, 1, {1.0}), 0.0), ParameterError);
    CHECK_THROWS_AS(react_clamp(post(1, 1, {1.0}), -1.0), ParameterError);
}

TEST_CASE("estimate_channel_stats") {
    const auto constant = estimate_channel_stats(post(4, 1, {1, 1, 1, 1}));
    CHECK(constant.mu()[0] == 1.0);
    CHECK(constant.sigma()[0] == kDefaultSigmaFloor);

    const auto two = estimate_channel_stats(post(2, 1, {0, 2}));
    CHECK(two.mu()[0] == 1.0);
    CHECK(two.sigma()[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    const auto three = estimate_channel_stats(post(3, 1, {-1, 0, 1}));
    CHECK(three.mu()[0] == 0.0);
    CHECK(three.sigma()[0] == 1.0);

    CHECK_THROWS_AS(estimate_channel_stats(post(1, 1, {1})), InsufficientDataError);
}

TEST_CASE("tfem_clamp examples") {
    const BnChannelStats s({2.0}, {1.0});
    CHECK(tfem_clamp(post(1, 1, {5.0}), s, 1.0).data()(0, 0) == 3.0);
    CHECK(tfem_clamp(post(1, 1, {0.5}), s, 1.0).data()(0, 0) == 1.0);
    const BnChannelStats narrow({0.2}, {0.1});
    CHECK(tfem_clamp(post(1, 1, {0.05}), narrow, 1.0).data()(0, 0) == doctest::Approx(0.1));
    // A lower bound below zero is lifted to zero.
    const BnChannelStats wide({0.1}, {1.0});
    const auto out = tfem_clamp(post(1, 2, {0.0, 0.0}), BnChannelStats({0.1, 0.1}, {1.0, 1.0}), 2.0);
    CHECK(out.data()(0, 0) == 0.0);
    CHECK(tfem_clamp(post(1, 1, {0.0}), wide, 2.0).data()(0, 0) >= 0.0);
}

TEST_CASE("apply_head examples") {
    const LinearHead eye(Matrix(2, 2, {1, 0, 0, 1}), {0, 0});
    CHECK(apply_head(post(1, 2, {3, 4}), eye) == Matrix(1, 2, {3, 4}));

    const LinearHead sum(Matrix(2, 2, {1, 1, 0, 0}), {-1, 0});
    CHECK(apply_head(post(1, 2, {2, 3}), sum)(0, 0) == 4.0);

    const LinearHead biased(Matrix(2, 3, {1, 2, 3, 4, 5, 6}), {0.25, -0.5});
    CHECK(apply_head(post(1, 3, {0, 0, 0}), biased) == Matrix(1, 2, {0.25, -0.5}));

    CHECK_THROWS_AS(apply_head(post(1, 3, {0, 0, 0}), eye), ShapeError);
    CHECK_THROWS_AS(LinearHead(Matrix(1, 2, {1, 1}), {0}), ShapeError);
}

TEST_CASE("rectify pipelines") {
    Rng rng(3);
    const auto batch = random_pre(rng, 20, 4);
    const BnChannelStats stats({0, 0, 0, 0}, {1, 1, 1, 1});

    RectifierSpec none;
    CHECK(rectify(batch, none, nullptr) == relu(batch));

    RectifierSpec bats;
    bats.kind = RectifierKind::Bats;
    bats.lambda = 0.7;
    CHECK(rectify(batch, bats, &stats) == relu(trbn_clamp(batch, stats, 0.7)));
    CHECK_THROWS_AS(rectify(batch, bats, nullptr), ParameterError);

    RectifierSpec react;
    react.kind = RectifierKind::React;
    react.react_threshold = 0.8;
    CHECK(rectify(batch, react, nullptr) == react_clamp(relu(batch), 0.8));

    RectifierSpec tfem;
    tfem.kind = RectifierKind::Tfem;
    tfem.lambda = 1.0;
    CHECK_THROWS_AS(tfem.validate(), ParameterError);
    tfem.empirical_stats = estimate_channel_stats(relu(batch));
    CHECK(rectify(batch, tfem, nullptr) ==
          tfem_clamp(relu(batch), *tfem.empirical_stats, 1.0));
}

TEST_CASE("activation_percentile is nearest rank") {
    const auto b = post(1, 10, {10, 9, 8, 7, 6, 5, 4, 3, 2, 1});
    CHECK(activation_percentile(b, 0.0) == 1.0);
    CHECK(activation_percentile(b, 1.0) == 10.0);
    CHECK(activation_percentile(b, 0.9) == 9.0);
    CHECK_THROWS_AS(activation_percentile(b, 1.5), ParameterError);
}

TEST_CASE("batch and stats validation") {
    CHECK_THROWS_AS(BnChannelStats({0.0}, {0.0}), DataError);
    CHECK_THROWS_AS(BnChannelStats({0.0, 1.0}, {1.0}), ShapeError);
    CHECK_THROWS_AS(FeatureBatch(Matrix(2, 1, {1, 2}), Stage::PreActivation,
                                 std::vector<std::int32_t>{0}),
                    ShapeError);
    CHECK_THROWS_AS(FeatureBatch(Matrix(1, 1, {std::numeric_limits<double>::infinity()}),
                                 Stage::PreActivation),
                    DataError);
}
