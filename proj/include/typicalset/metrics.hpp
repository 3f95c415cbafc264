#pragma once

// Detection metrics over ID/OOD score vectors. Scores are "higher = more ID";
// a sample is flagged OOD when its score falls strictly below the threshold.

#include "typicalset/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace typicalset {

struct RejectRegion {
    double gamma = 0.0;
    double alpha = 0.05;
    double achieved_tpr = 1.0;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

struct DetectionMetrics {
    double fpr_at_tpr = 0.0;
    double auroc = 0.0;
    double gamma = 0.0;
    std::vector<RocPoint> roc_points;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
};

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr int kDefaultEceBins = 20;

// Largest threshold that keeps at least a (1 - alpha) fraction of ID scores at
// or above it: the floor(alpha*n)+1-th smallest ID score. Ties are retained.
RejectRegion threshold_at_tpr(std::span<const double> id_scores, double alpha);

// Fraction of OOD scores >= gamma, gamma from threshold_at_tpr. alpha = 0.05 is FPR95.
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double alpha);

// Mann-Whitney estimate of P(id > ood) + 0.5 P(id == ood), computed from exact
// pair counts.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

// Exact (fpr, tpr) points, one per distinct threshold from +inf down to -inf,
// consecutive duplicates removed. Starts at (0,0), ends at (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> id_scores,
                                std::span<const double> ood_scores);

// Trapezoidal area under an ROC polyline.
double trapezoid_area(std::span<const RocPoint> points);

DetectionMetrics detection_metrics(std::span<const double> id_scores,
                                   std::span<const double> ood_scores, double alpha);

// FPR at (1 - alpha) TPR for each alpha in `alphas`.
std::vector<double> fpr_sweep(std::span<const double> id_scores,
                              std::span<const double> ood_scores,
                              std::span<const double> alphas);

// Default alpha grid 0.01, 0.02, ..., 0.50.
std::vector<double> default_alpha_grid();

// Expected calibration error over equal-width, right-closed bins on [0, 1]
// (a confidence of exactly 0 falls in the first bin). Empty bins contribute 0.
double ece(std::span<const double> confidences, std::span<const std::uint8_t> correct,
           int n_bins = kDefaultEceBins);

// Index of the largest logit; ties go to the smallest index.
std::size_t argmax(std::span<const double> row);

// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& logits, std::span<const std::int32_t> labels);

} // namespace typicalset
