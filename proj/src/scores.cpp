#include "typicalset/scores.hpp"

#include "typicalset/error.hpp"
#include "typicalset/rectify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace typicalset {

std::string_view to_string(ScoreName name) noexcept {
    switch (name) {
    case ScoreName::Energy: return "energy";
    case ScoreName::Msp: return "msp";
    case ScoreName::OdinT: return "odin_t";
    case ScoreName::GradNorm: return "gradnorm";
    case ScoreName::Mahalanobis: return "mahalanobis";
    }
    return "energy";
}

ScoreName parse_score_name(std::string_view name) {
    if (name == "energy") return ScoreName::Energy;
    if (name == "msp") return ScoreName::Msp;
    if (name == "odin_t" || name == "odin") return ScoreName::OdinT;
    if (name == "gradnorm") return ScoreName::GradNorm;
    if (name == "mahalanobis") return ScoreName::Mahalanobis;
    throw ParameterError("unknown score '" + std::string(name) +
                         "' (expected energy|msp|odin_t|gradnorm|mahalanobis)");
}

namespace {

void require_logits(const Matrix& logits) {
    if (logits.cols() == 0) {
        throw ShapeError("logit rows are empty");
    }
    require_finite(logits.values(), "logits");
}

void require_temperature(double temperature) {
    if (!(temperature > 0.0) || std::isnan(temperature)) {
        throw ParameterError("temperature must be > 0, got " + std::to_string(temperature));
    }
}

constexpr double kVarianceFloor = kDefaultSigmaFloor * kDefaultSigmaFloor;
constexpr double kRelativeVarianceFloor = 1e-6;

double row_max(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

} // namespace

std::vector<double> energy_score(const Matrix& logits) {
    require_logits(logits);
    std::vector<double> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const double m = row_max(row);
        double sum = 0.0;
        for (double v : row) {
            sum += std::exp(v - m);
        }
        out[i] = m + std::log(sum);
    }
    return out;
}

Matrix softmax(const Matrix& logits, double temperature) {
    require_logits(logits);
    require_temperature(temperature);
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        auto out = p.row(i);
        const double m = row_max(row);
        double sum = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            out[k] = std::exp((row[k] - m) / temperature);
            sum += out[k];
        }
        for (double& v : out) {
            v /= sum;
        }
    }
    return p;
}

std::vector<double> msp_score(const Matrix& logits) { return odin_t_score(logits, 1.0); }

std::vector<double> odin_t_score(const Matrix& logits, double temperature) {
    require_logits(logits);
    require_temperature(temperature);
    // max_k softmax = exp(0) / sum_k exp((l_k - max) / T): the arg max term is exactly 1.
    std::vector<double> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const double m = row_max(row);
        double sum = 0.0;
        for (double v : row) {
            sum += std::exp((v - m) / temperature);
        }
        out[i] = 1.0 / sum;
    }
    return out;
}

std::vector<double> gradnorm_score(const FeatureBatch& batch, const LinearHead& head,
                                   double temperature) {
    require_temperature(temperature);
    const Matrix p = softmax(apply_head(batch, head), temperature);
    const double uniform = 1.0 / static_cast<double>(head.classes());
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double dp = 0.0;
        for (double v : p.row(i)) {
            dp += std::abs(v - uniform);
        }
        double dz = 0.0;
        for (double v : batch.data().row(i)) {
            dz += std::abs(v);
        }
        out[i] = dp * dz;
    }
    return out;
}

MahalanobisModel mahalanobis_fit(const FeatureBatch& train, std::size_t classes,
                                 double shrinkage) {
    if (!train.labels()) {
        throw DataError("mahalanobis_fit needs a labelled training batch");
    }
    if (classes < 1) {
        throw ParameterError("mahalanobis_fit needs K >= 1");
    }
    if (!(shrinkage >= 0.0 && shrinkage < 1.0)) {
        throw ParameterError("shrinkage must lie in [0, 1), got " + std::to_string(shrinkage));
    }
    require_labels_in_range(train, classes);

    const std::size_t n = train.size();
    const std::size_t d = train.channels();
    const auto& labels = *train.labels();
    const Matrix& x = train.data();

    Matrix means(classes, d);
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(labels[i]);
        ++counts[k];
        for (std::size_t c = 0; c < d; ++c) {
            means(k, c) += x(i, c);
        }
    }
    for (std::size_t k = 0; k < classes; ++k) {
        if (counts[k] == 0) {
            throw DataError("class " + std::to_string(k) + " has no training samples");
        }
        for (std::size_t c = 0; c < d; ++c) {
            means(k, c) /= static_cast<double>(counts[k]);
        }
    }

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
    Eigen::VectorXd dev(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(labels[i]);
        for (std::size_t c = 0; c < d; ++c) {
            dev(static_cast<Eigen::Index>(c)) = x(i, c) - means(k, c);
        }
        cov.selfadjointView<Eigen::Lower>().rankUpdate(dev);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n);
    // Shrinkage target: diag(S) with each variance floored at a small fraction of
    // the mean variance, so a positive shrinkage keeps zero-scatter channels (dead
    // ReLU units, exact duplicates) invertible.
    const double floor = std::max(kVarianceFloor, kRelativeVarianceFloor * cov.diagonal().mean());
    const Eigen::VectorXd target = cov.diagonal().cwiseMax(floor);
    cov *= (1.0 - shrinkage);
    cov.diagonal() += shrinkage * target;

    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    // Reject factorizations whose pivots collapse relative to the largest variance.
    const double scale = cov.diagonal().maxCoeff();
    bool singular = llt.info() != Eigen::Success || !(scale > 0.0);
    if (!singular) {
        const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal();
        singular = !(pivots.cwiseAbs2().minCoeff() > 1e-12 * scale);
    }
    if (singular) {
        throw FitError("shared covariance is singular after shrinkage " +
                       std::to_string(shrinkage) + "; increase the shrinkage");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));

    // Average the two triangles so the stored inverse is exactly symmetric.
    Matrix inverse(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = r; c < d; ++c) {
            const auto i = static_cast<Eigen::Index>(r);
            const auto j = static_cast<Eigen::Index>(c);
            const double v = 0.5 * (inv(i, j) + inv(j, i));
            inverse(r, c) = v;
            inverse(c, r) = v;
        }
    }
    return MahalanobisModel{std::move(means), std::move(inverse), shrinkage};
}

std::vector<double> mahalanobis_score(const FeatureBatch& batch, const MahalanobisModel& model) {
    const std::size_t d = model.class_means.cols();
    if (batch.channels() != d || model.shared_covariance_inverse.rows() != d ||
        model.shared_covariance_inverse.cols() != d) {
        throw ShapeError("mahalanobis model has d=" + std::to_string(d) +
                         " but the batch has d=" + std::to_string(batch.channels()));
    }
    const Matrix& inv = model.shared_covariance_inverse;
    std::vector<double> dev(d);
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto z = batch.data().row(i);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < model.class_means.rows(); ++k) {
            const auto mu = model.class_means.row(k);
            for (std::size_t c = 0; c < d; ++c) {
                dev[c] = z[c] - mu[c];
            }
            double q = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                const auto inv_row = inv.row(r);
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    acc += inv_row[c] * dev[c];
                }
                q += dev[r] * acc;
            }
            best = std::min(best, std::max(q, 0.0));
        }
        out[i] = -best;
    }
    return out;
}

} // namespace typicalset
