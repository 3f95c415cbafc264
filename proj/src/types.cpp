#include "typicalset/types.hpp"

#include "typicalset/error.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace typicalset {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw ShapeError("matrix payload has " + std::to_string(values_.size()) +
                         " entries, expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

std::string_view to_string(Stage stage) noexcept {
    return stage == Stage::PreActivation ? "pre_activation" : "post_activation";
}

void require_finite(std::span<const double> values, std::string_view what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError(std::string(what) + " has a non-finite entry at flat index " +
                            std::to_string(i));
        }
    }
}

FeatureBatch::FeatureBatch(Matrix data, Stage stage,
                           std::optional<std::vector<std::int32_t>> labels)
    : data_(std::move(data)), stage_(stage), labels_(std::move(labels)) {
    if (data_.rows() == 0 || data_.cols() == 0) {
        throw ShapeError("feature batch must have N >= 1 and d >= 1");
    }
    require_finite(data_.values(), "feature batch");
    if (labels_ && labels_->size() != data_.rows()) {
        throw ShapeError("label vector has length " + std::to_string(labels_->size()) +
                         " but the batch has " + std::to_string(data_.rows()) + " rows");
    }
    if (labels_) {
        for (std::size_t i = 0; i < labels_->size(); ++i) {
            if ((*labels_)[i] < 0) {
                throw DataError("negative label at index " + std::to_string(i));
            }
        }
    }
}

FeatureBatch FeatureBatch::with_data(Matrix data, Stage stage) const {
    if (data.rows() != data_.rows()) {
        throw ShapeError("row count changed while deriving a feature batch");
    }
    return FeatureBatch(std::move(data), stage, labels_);
}

void require_labels_in_range(const FeatureBatch& batch, std::size_t classes) {
    if (!batch.labels()) {
        return;
    }
    const auto& labels = *batch.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (static_cast<std::size_t>(labels[i]) >= classes) {
            throw DataError("label " + std::to_string(labels[i]) + " at index " +
                            std::to_string(i) + " is outside [0, " + std::to_string(classes) +
                            ")");
        }
    }
}

BnChannelStats::BnChannelStats(std::vector<double> mu, std::vector<double> sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (mu_.empty() || mu_.size() != sigma_.size()) {
        throw ShapeError("channel stats need equal, nonzero lengths for mu (" +
                         std::to_string(mu_.size()) + ") and sigma (" +
                         std::to_string(sigma_.size()) + ")");
    }
    require_finite(mu_, "channel mu");
    require_finite(sigma_, "channel sigma");
    for (std::size_t c = 0; c < sigma_.size(); ++c) {
        if (!(sigma_[c] > 0.0)) {
            throw DataError("channel sigma must be > 0, got " + std::to_string(sigma_[c]) +
                            " at channel " + std::to_string(c));
        }
    }
}

LinearHead::LinearHead(Matrix weights, std::vector<double> bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
    if (weights_.rows() < 2) {
        throw ShapeError("linear head needs K >= 2 classes");
    }
    if (weights_.cols() == 0) {
        throw ShapeError("linear head needs d >= 1");
    }
    if (bias_.size() != weights_.rows()) {
        throw ShapeError("head bias has length " + std::to_string(bias_.size()) + ", expected " +
                         std::to_string(weights_.rows()));
    }
    require_finite(weights_.values(), "head weights");
    require_finite(bias_, "head bias");
}

std::string_view to_string(RectifierKind kind) noexcept {
    switch (kind) {
    case RectifierKind::None: return "none";
    case RectifierKind::Bats: return "bats";
    case RectifierKind::React: return "react";
    case RectifierKind::Tfem: return "tfem";
    }
    return "none";
}

RectifierKind parse_rectifier_kind(std::string_view name) {
    if (name == "none") return RectifierKind::None;
    if (name == "bats") return RectifierKind::Bats;
    if (name == "react") return RectifierKind::React;
    if (name == "tfem") return RectifierKind::Tfem;
    throw ParameterError("unknown rectifier '" + std::string(name) +
                         "' (expected none|bats|react|tfem)");
}

void RectifierSpec::validate() const {
    switch (kind) {
    case RectifierKind::None:
        break;
    case RectifierKind::Bats:
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw ParameterError("bats requires a finite lambda > 0");
        }
        break;
    case RectifierKind::Tfem:
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw ParameterError("tfem requires a finite lambda > 0");
        }
        if (!empirical_stats) {
            throw ParameterError("tfem requires empirical channel stats");
        }
        break;
    case RectifierKind::React:
        if (!(react_threshold > 0.0) || !std::isfinite(react_threshold)) {
            throw ParameterError("react requires a finite threshold > 0");
        }
        break;
    }
}

namespace {
std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
} // namespace

std::string RectifierSpec::describe() const {
    switch (kind) {
    case RectifierKind::None: return "none";
    case RectifierKind::Bats: return "bats(lambda=" + shortest(lambda) + ")";
    case RectifierKind::Tfem: return "tfem(lambda=" + shortest(lambda) + ")";
    case RectifierKind::React: return "react(c=" + shortest(react_threshold) + ")";
    }
    return "none";
}

} // namespace typicalset
