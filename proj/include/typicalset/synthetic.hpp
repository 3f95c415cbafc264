#pragma once

// Seeded desk-scale stand-ins for penultimate-layer features.
//
// ID channel c is N(mu_c, sigma_c^2) with mu_c ~ U[-1, 1] and sigma_c ~ U[0.5, 1.5];
// the head has entries N(0, (1/sqrt d)^2). The ranges are stylised, not fitted.
// Each channel column is drawn from its own substream, so the batch does not
// depend on the order in which channels are generated.

#include "typicalset/types.hpp"

#include <cstdint>
#include <tuple>
#include <variant>

namespace typicalset::synthetic {

struct MeanShift {
    double delta = 1.0;
};
struct ScaleInflate {
    double scale = 2.0;
};
struct HeavyTail {
    double dof = 3.0;
};

using OodKind = std::variant<MeanShift, ScaleInflate, HeavyTail>;

struct SyntheticSpec {
    std::size_t n_samples = 5000;
    std::size_t d_channels = 64;
    std::size_t k_classes = 10;
    OodKind ood_kind = HeavyTail{3.0};
    std::uint64_t seed = 0;

    void validate() const;
};

// Channel stats and head shared by every batch drawn from one spec.
struct SyntheticModel {
    BnChannelStats stats;
    LinearHead head;
};

SyntheticModel make_model(const SyntheticSpec& spec);

// Independent draws are selected by `sample_stream`; 0 is the ID test split.
inline constexpr std::uint64_t kIdStream = 0;
inline constexpr std::uint64_t kTrainStream = 1;

// ID features (PreActivation). Labels are the head's arg max on ReLU(features).
FeatureBatch sample_id(const SyntheticSpec& spec, const SyntheticModel& model,
                       std::uint64_t sample_stream = kIdStream);

std::tuple<FeatureBatch, BnChannelStats, LinearHead> gen_id(const SyntheticSpec& spec);

// OOD features relative to the ID stats: MeanShift adds delta*sigma_c to the
// mean, ScaleInflate multiplies sigma_c, HeavyTail draws mu_c + sigma_c * t(dof).
FeatureBatch gen_ood(const SyntheticSpec& spec, const BnChannelStats& id_stats);

} // namespace typicalset::synthetic
