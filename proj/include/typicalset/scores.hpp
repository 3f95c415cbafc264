#pragma once

// OOD test statistics. Every score is oriented so that a higher value means
// "more in-distribution"; the reject region is always {T <= gamma}.

#include "typicalset/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace typicalset {

enum class ScoreName { Energy, Msp, OdinT, GradNorm, Mahalanobis };

std::string_view to_string(ScoreName name) noexcept;
ScoreName parse_score_name(std::string_view name);

inline constexpr double kDefaultOdinTemperature = 1000.0;
inline constexpr double kDefaultGradNormTemperature = 1.0;
inline constexpr double kDefaultMahalanobisShrinkage = 0.01;

struct ScoreReport {
    std::vector<double> scores;
    ScoreName score_name = ScoreName::Energy;
    std::string rectifier = "none";
    double temperature = 1.0;
};

// log sum_k exp(logits[i][k]) with max subtraction, i.e. the negative free energy.
std::vector<double> energy_score(const Matrix& logits);

// Maximum softmax probability per row.
std::vector<double> msp_score(const Matrix& logits);

// msp_score(logits / temperature). Input perturbation is not part of this score.
std::vector<double> odin_t_score(const Matrix& logits, double temperature);

// GradNorm in closed form: ||p - u||_1 * ||z||_1 with p = softmax((W z + b) / T)
// and u uniform over K. The last-layer gradient of the uniform-target
// cross-entropy is the outer product (p - u) z^T, whose entrywise L1 norm
// factorises. The temperature only enters through p.
std::vector<double> gradnorm_score(const FeatureBatch& batch, const LinearHead& head,
                                   double temperature);

struct MahalanobisModel {
    Matrix class_means;              // K x d
    Matrix shared_covariance_inverse; // d x d
    double shrinkage = 0.0;
};

// Per-class means and a single shared covariance, shrunk toward its diagonal:
//   S = (1/N) sum_i (z_i - mu_{y_i})(z_i - mu_{y_i})^T
//   S <- (1 - shrinkage) S + shrinkage diag(S)
MahalanobisModel mahalanobis_fit(const FeatureBatch& train, std::size_t classes,
                                 double shrinkage);

// -min_k (z - mu_k)^T S^-1 (z - mu_k).
std::vector<double> mahalanobis_score(const FeatureBatch& batch, const MahalanobisModel& model);

// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits, double temperature = 1.0);

} // namespace typicalset
