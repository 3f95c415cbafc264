#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace typicalset {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

enum class Stage { PreActivation, PostActivation };

std::string_view to_string(Stage stage) noexcept;

// N x d features plus optional class labels. Entries are finite by construction.
class FeatureBatch {
public:
    FeatureBatch(Matrix data, Stage stage, std::optional<std::vector<std::int32_t>> labels = {});

    const Matrix& data() const noexcept { return data_; }
    Stage stage() const noexcept { return stage_; }
    const std::optional<std::vector<std::int32_t>>& labels() const noexcept { return labels_; }

    std::size_t size() const noexcept { return data_.rows(); }
    std::size_t channels() const noexcept { return data_.cols(); }

    // Same labels, new payload. Used by the rectifiers.
    FeatureBatch with_data(Matrix data, Stage stage) const;

    bool operator==(const FeatureBatch&) const = default;

private:
    Matrix data_;
    Stage stage_;
    std::optional<std::vector<std::int32_t>> labels_;
};

// Per-channel shift and scale defining the typical interval [mu - l*sigma, mu + l*sigma].
class BnChannelStats {
public:
    BnChannelStats(std::vector<double> mu, std::vector<double> sigma);

    std::span<const double> mu() const noexcept { return mu_; }
    std::span<const double> sigma() const noexcept { return sigma_; }
    std::size_t channels() const noexcept { return mu_.size(); }

    bool operator==(const BnChannelStats&) const = default;

private:
    std::vector<double> mu_;
    std::vector<double> sigma_;
};

// Fully connected classifier head: logits = W z + b, W is K x d.
class LinearHead {
public:
    LinearHead(Matrix weights, std::vector<double> bias);

    const Matrix& weights() const noexcept { return weights_; }
    std::span<const double> bias() const noexcept { return bias_; }
    std::size_t classes() const noexcept { return weights_.rows(); }
    std::size_t channels() const noexcept { return weights_.cols(); }

    bool operator==(const LinearHead&) const = default;

private:
    Matrix weights_;
    std::vector<double> bias_;
};

enum class RectifierKind { None, Bats, React, Tfem };

std::string_view to_string(RectifierKind kind) noexcept;
RectifierKind parse_rectifier_kind(std::string_view name);

struct RectifierSpec {
    RectifierKind kind = RectifierKind::None;
    double lambda = 1.25;
    double react_threshold = 1.0;
    std::optional<BnChannelStats> empirical_stats;

    // Throws ParameterError when the combination is not usable.
    void validate() const;
    std::string describe() const;
};

// Validation helpers shared by the modules.
void require_finite(std::span<const double> values, std::string_view what);
void require_labels_in_range(const FeatureBatch& batch, std::size_t classes);

} // namespace typicalset
