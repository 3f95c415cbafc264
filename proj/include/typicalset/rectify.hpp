#pragma once

// Feature rectifiers and the classifier head.
//
// Every operator is pure: it returns a new batch and never touches its input,
// so one loaded batch can be swept over many truncation strengths.

#include "typicalset/types.hpp"

namespace typicalset {

inline constexpr double kDefaultSigmaFloor = 1e-6;

// Truncated BN unit: clamps each pre-activation channel c to
// [mu_c - lambda*sigma_c, mu_c + lambda*sigma_c].
FeatureBatch trbn_clamp(const FeatureBatch& batch, const BnChannelStats& stats, double lambda);

// max(0, x); the stage becomes PostActivation.
FeatureBatch relu(const FeatureBatch& batch);

// ReAct: one-sided upper clamp of post-activation features at `threshold`.
FeatureBatch react_clamp(const FeatureBatch& batch, double threshold);

// Per-channel sample mean and standard deviation (divisor N-1), with the
// deviation floored at `sigma_floor` so constant channels keep a nonzero interval.
BnChannelStats estimate_channel_stats(const FeatureBatch& batch,
                                      double sigma_floor = kDefaultSigmaFloor);

// TFEM: clamp post-activation features to the empirical typical interval, then
// clamp at zero from below so the result stays nonnegative.
FeatureBatch tfem_clamp(const FeatureBatch& batch, const BnChannelStats& stats, double lambda);

// logits[i] = W z_i + b, N x K.
Matrix apply_head(const FeatureBatch& batch, const LinearHead& head);

// Applies `spec` to a batch and returns the post-activation features fed to the head:
//   None  : relu (if needed)
//   Bats  : trbn_clamp -> relu        (requires a PreActivation batch)
//   React : relu (if needed) -> react_clamp
//   Tfem  : relu (if needed) -> tfem_clamp with spec.empirical_stats
FeatureBatch rectify(const FeatureBatch& batch, const RectifierSpec& spec,
                     const BnChannelStats* bn_stats);

// Value at `quantile` in [0, 1] of all entries of a batch (nearest-rank on sorted
// values). Used to pick the ReAct threshold from ID activations.
double activation_percentile(const FeatureBatch& batch, double quantile);

} // namespace typicalset
