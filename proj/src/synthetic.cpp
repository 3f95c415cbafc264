#include "typicalset/synthetic.hpp"

#include "typicalset/error.hpp"
#include "typicalset/metrics.hpp"
#include "typicalset/rectify.hpp"
#include "typicalset/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace typicalset::synthetic {

namespace {

// Substream tags.
constexpr std::uint64_t kTagParams = 0x706172616d73ULL;
constexpr std::uint64_t kTagHead = 0x68656164ULL;
constexpr std::uint64_t kTagId = 0x69640000ULL;
constexpr std::uint64_t kTagOod = 0x6f6f6400ULL;

std::uint64_t column_key(std::uint64_t tag, std::uint64_t sample_stream) {
    return tag ^ (sample_stream << 32);
}

template <typename Draw>
Matrix fill_columns(const SyntheticSpec& spec, std::uint64_t key, Draw draw) {
    Matrix x(spec.n_samples, spec.d_channels);
    for (std::size_t c = 0; c < spec.d_channels; ++c) {
        Rng rng = Rng::stream(spec.seed, key, c);
        for (std::size_t r = 0; r < spec.n_samples; ++r) {
            x(r, c) = draw(rng, c);
        }
    }
    return x;
}

} // namespace

void SyntheticSpec::validate() const {
    if (n_samples < 1) throw ParameterError("synthetic spec needs n_samples >= 1");
    if (d_channels < 1) throw ParameterError("synthetic spec needs d_channels >= 1");
    if (k_classes < 2) throw ParameterError("synthetic spec needs k_classes >= 2");
    if (const auto* s = std::get_if<ScaleInflate>(&ood_kind); s && !(s->scale > 1.0)) {
        throw ParameterError("scale_inflate needs s > 1");
    }
    if (const auto* h = std::get_if<HeavyTail>(&ood_kind); h && !(h->dof > 2.0)) {
        throw ParameterError("heavy_tail needs dof > 2");
    }
    if (const auto* m = std::get_if<MeanShift>(&ood_kind); m && !std::isfinite(m->delta)) {
        throw ParameterError("mean_shift needs a finite delta");
    }
}

SyntheticModel make_model(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t d = spec.d_channels;
    const std::size_t k = spec.k_classes;

    Rng params = Rng::stream(spec.seed, kTagParams);
    std::vector<double> mu(d);
    std::vector<double> sigma(d);
    for (std::size_t c = 0; c < d; ++c) {
        mu[c] = params.uniform(-1.0, 1.0);
        sigma[c] = params.uniform(0.5, 1.5);
    }

    Rng head_rng = Rng::stream(spec.seed, kTagHead);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix w(k, d);
    for (double& v : w.values()) {
        v = scale * head_rng.normal();
    }
    std::vector<double> b(k);
    for (double& v : b) {
        v = scale * head_rng.normal();
    }
    return SyntheticModel{BnChannelStats(std::move(mu), std::move(sigma)),
                          LinearHead(std::move(w), std::move(b))};
}

FeatureBatch sample_id(const SyntheticSpec& spec, const SyntheticModel& model,
                       std::uint64_t sample_stream) {
    spec.validate();
    const auto mu = model.stats.mu();
    const auto sigma = model.stats.sigma();
    Matrix x = fill_columns(spec, column_key(kTagId, sample_stream),
                            [&](Rng& rng, std::size_t c) { return mu[c] + sigma[c] * rng.normal(); });

    // Pseudo-labels: what the head predicts on the unrectified activations.
    const FeatureBatch unlabeled(std::move(x), Stage::PreActivation);
    const Matrix logits = apply_head(relu(unlabeled), model.head);
    std::vector<std::int32_t> labels(spec.n_samples);
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        labels[i] = static_cast<std::int32_t>(argmax(logits.row(i)));
    }
    return FeatureBatch(unlabeled.data(), Stage::PreActivation, std::move(labels));
}

std::tuple<FeatureBatch, BnChannelStats, LinearHead> gen_id(const SyntheticSpec& spec) {
    SyntheticModel model = make_model(spec);
    FeatureBatch batch = sample_id(spec, model, kIdStream);
    return {std::move(batch), std::move(model.stats), std::move(model.head)};
}

FeatureBatch gen_ood(const SyntheticSpec& spec, const BnChannelStats& id_stats) {
    spec.validate();
    if (id_stats.channels() != spec.d_channels) {
        throw ShapeError("ID stats have " + std::to_string(id_stats.channels()) +
                         " channels, spec asks for " + std::to_string(spec.d_channels));
    }
    const auto mu = id_stats.mu();
    const auto sigma = id_stats.sigma();
    const std::uint64_t key = column_key(kTagOod, 0);
    Matrix x = std::visit(
        [&](const auto& kind) {
            using Kind = std::decay_t<decltype(kind)>;
            return fill_columns(spec, key, [&](Rng& rng, std::size_t c) {
                if constexpr (std::is_same_v<Kind, MeanShift>) {
                    return mu[c] + kind.delta * sigma[c] + sigma[c] * rng.normal();
                } else if constexpr (std::is_same_v<Kind, ScaleInflate>) {
                    return mu[c] + kind.scale * sigma[c] * rng.normal();
                } else {
                    return mu[c] + sigma[c] * rng.student_t(kind.dof);
                }
            });
        },
        spec.ood_kind);
    return FeatureBatch(std::move(x), Stage::PreActivation);
}

} // namespace typicalset::synthetic
