#include "typicalset/rectify.hpp"

#include "typicalset/error.hpp"
#include "typicalset/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace typicalset {

namespace {

void require_channels(const FeatureBatch& batch, std::size_t d, std::string_view what) {
    if (batch.channels() != d) {
        throw ShapeError(std::string(what) + " has " + std::to_string(d) +
                         " channels but the batch has " + std::to_string(batch.channels()));
    }
}

void require_lambda(double lambda) {
    if (!(lambda > 0.0) || std::isnan(lambda)) {
        throw ParameterError("lambda must be > 0, got " + std::to_string(lambda));
    }
}

// Clamp bounds mu -/+ lambda*sigma. An infinite lambda yields infinite bounds,
// i.e. the identity.
void interval_bounds(const BnChannelStats& stats, double lambda, std::vector<double>& lo,
                     std::vector<double>& hi) {
    const auto mu = stats.mu();
    const auto sigma = stats.sigma();
    lo.resize(mu.size());
    hi.resize(mu.size());
    for (std::size_t c = 0; c < mu.size(); ++c) {
        lo[c] = mu[c] - lambda * sigma[c];
        hi[c] = mu[c] + lambda * sigma[c];
    }
}

Matrix clamp_to_interval(const FeatureBatch& batch, const BnChannelStats& stats, double lambda) {
    std::vector<double> lo;
    std::vector<double> hi;
    interval_bounds(stats, lambda, lo, hi);
    Matrix out(batch.size(), batch.channels());
    kernels::active().clamp_channels(batch.data().values().data(), out.values().data(),
                                     batch.size(), batch.channels(), lo.data(), hi.data());
    return out;
}

} // namespace

FeatureBatch trbn_clamp(const FeatureBatch& batch, const BnChannelStats& stats, double lambda) {
    if (batch.stage() != Stage::PreActivation) {
        throw StateError("trbn_clamp expects pre-activation features");
    }
    require_channels(batch, stats.channels(), "BN stats");
    require_lambda(lambda);
    return batch.with_data(clamp_to_interval(batch, stats, lambda), Stage::PreActivation);
}

FeatureBatch relu(const FeatureBatch& batch) {
    if (batch.stage() != Stage::PreActivation) {
        throw StateError("relu applied to features that are already post-activation");
    }
    Matrix out(batch.size(), batch.channels());
    const auto in = batch.data().values();
    kernels::active().relu(in.data(), out.values().data(), in.size());
    return batch.with_data(std::move(out), Stage::PostActivation);
}

FeatureBatch react_clamp(const FeatureBatch& batch, double threshold) {
    if (batch.stage() != Stage::PostActivation) {
        throw StateError("react_clamp expects post-activation features");
    }
    if (!(threshold > 0.0) || std::isnan(threshold)) {
        throw ParameterError("react threshold must be > 0, got " + std::to_string(threshold));
    }
    Matrix out(batch.size(), batch.channels());
    const auto in = batch.data().values();
    kernels::active().clamp_upper(in.data(), out.values().data(), in.size(), threshold);
    return batch.with_data(std::move(out), Stage::PostActivation);
}

BnChannelStats estimate_channel_stats(const FeatureBatch& batch, double sigma_floor) {
    if (batch.size() < 2) {
        throw InsufficientDataError("channel statistics need at least 2 samples, got " +
                                    std::to_string(batch.size()));
    }
    if (!(sigma_floor > 0.0)) {
        throw ParameterError("sigma_floor must be > 0");
    }
    const std::size_t n = batch.size();
    const std::size_t d = batch.channels();
    const Matrix& x = batch.data();

    // Two-pass: mean first, then centered sum of squares.
    std::vector<double> mu(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            mu[c] += x(r, c);
        }
    }
    for (double& m : mu) {
        m /= static_cast<double>(n);
    }
    std::vector<double> ss(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = x(r, c) - mu[c];
            ss[c] += dev * dev;
        }
    }
    std::vector<double> sigma(d);
    for (std::size_t c = 0; c < d; ++c) {
        sigma[c] = std::max(std::sqrt(ss[c] / static_cast<double>(n - 1)), sigma_floor);
    }
    return BnChannelStats(std::move(mu), std::move(sigma));
}

FeatureBatch tfem_clamp(const FeatureBatch& batch, const BnChannelStats& stats, double lambda) {
    if (batch.stage() != Stage::PostActivation) {
        throw StateError("tfem_clamp expects post-activation features");
    }
    require_channels(batch, stats.channels(), "empirical stats");
    require_lambda(lambda);
    Matrix out = clamp_to_interval(batch, stats, lambda);
    kernels::active().relu(out.values().data(), out.values().data(), out.values().size());
    return batch.with_data(std::move(out), Stage::PostActivation);
}

Matrix apply_head(const FeatureBatch& batch, const LinearHead& head) {
    if (batch.channels() != head.channels()) {
        throw ShapeError("head expects d=" + std::to_string(head.channels()) +
                         " but the batch has d=" + std::to_string(batch.channels()));
    }
    Matrix logits(batch.size(), head.classes());
    kernels::active().affine_rows(batch.data().values().data(), batch.size(), batch.channels(),
                                  head.weights().values().data(), head.bias().data(),
                                  head.classes(), logits.values().data());
    return logits;
}

FeatureBatch rectify(const FeatureBatch& batch, const RectifierSpec& spec,
                     const BnChannelStats* bn_stats) {
    spec.validate();
    auto activated = [](const FeatureBatch& b) {
        return b.stage() == Stage::PreActivation ? relu(b) : b;
    };
    switch (spec.kind) {
    case RectifierKind::None:
        return activated(batch);
    case RectifierKind::Bats:
        if (bn_stats == nullptr) {
            throw ParameterError("bats needs BN channel stats (dump has no bn section)");
        }
        if (batch.stage() != Stage::PreActivation) {
            throw StateError("bats applies to pre-activation dumps only");
        }
        return relu(trbn_clamp(batch, *bn_stats, spec.lambda));
    case RectifierKind::React:
        return react_clamp(activated(batch), spec.react_threshold);
    case RectifierKind::Tfem:
        return tfem_clamp(activated(batch), *spec.empirical_stats, spec.lambda);
    }
    throw ParameterError("unhandled rectifier kind");
}

double activation_percentile(const FeatureBatch& batch, double quantile) {
    if (!(quantile >= 0.0 && quantile <= 1.0)) {
        throw ParameterError("quantile must lie in [0, 1]");
    }
    const auto values = batch.data().values();
    std::vector<double> sorted(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(quantile * static_cast<double>(sorted.size())));
    const std::size_t idx = rank == 0 ? 0 : rank - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx),
                     sorted.end());
    return sorted[idx];
}

} // namespace typicalset
