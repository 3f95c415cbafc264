#include "typicalset/metrics.hpp"

#include "typicalset/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace typicalset {

namespace {

void require_nonempty(std::span<const double> scores, const char* what) {
    if (scores.empty()) {
        throw DataError(std::string(what) + " scores are empty");
    }
    require_finite(scores, what);
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

std::vector<double> sorted_copy(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

RejectRegion threshold_at_tpr(std::span<const double> id_scores, double alpha) {
    require_nonempty(id_scores, "ID");
    require_alpha(alpha);
    const auto sorted = sorted_copy(id_scores);
    const std::size_t n = sorted.size();
    // The floor(alpha n) + 1-th smallest score: at most alpha n scores lie strictly below it.
    const auto rejectable =
        static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
    const std::size_t index = std::min(rejectable, n - 1);
    RejectRegion region;
    region.alpha = alpha;
    region.gamma = sorted[index];
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), region.gamma);
    const auto retained = static_cast<std::size_t>(sorted.end() - below);
    region.achieved_tpr = static_cast<double>(retained) / static_cast<double>(n);
    return region;
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double alpha) {
    require_nonempty(ood_scores, "OOD");
    const double gamma = threshold_at_tpr(id_scores, alpha).gamma;
    const auto accepted =
        std::count_if(ood_scores.begin(), ood_scores.end(), [gamma](double s) { return s >= gamma; });
    return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
    require_nonempty(id_scores, "ID");
    require_nonempty(ood_scores, "OOD");
    const auto ood = sorted_copy(ood_scores);
    // Doubled counts: 2 * #(id > ood) + #(id == ood), and the mirror image.
    std::uint64_t forward = 0;
    std::uint64_t backward = 0;
    for (double s : id_scores) {
        const auto [lo, hi] = std::equal_range(ood.begin(), ood.end(), s);
        const auto less = static_cast<std::uint64_t>(lo - ood.begin());
        const auto ties = static_cast<std::uint64_t>(hi - lo);
        const auto greater = static_cast<std::uint64_t>(ood.end() - hi);
        forward += 2 * less + ties;
        backward += 2 * greater + ties;
    }
    const double pairs2 = 2.0 * static_cast<double>(id_scores.size()) *
                          static_cast<double>(ood_scores.size());
    // Evaluate the smaller side directly and the larger as its complement so that
    // auroc(a, b) + auroc(b, a) rounds to exactly 1.
    if (forward <= backward) {
        return static_cast<double>(forward) / pairs2;
    }
    return 1.0 - static_cast<double>(backward) / pairs2;
}

std::vector<RocPoint> roc_curve(std::span<const double> id_scores,
                                std::span<const double> ood_scores) {
    require_nonempty(id_scores, "ID");
    require_nonempty(ood_scores, "OOD");
    auto id = sorted_copy(id_scores);
    auto ood = sorted_copy(ood_scores);
    std::reverse(id.begin(), id.end());
    std::reverse(ood.begin(), ood.end());
    const auto n_id = static_cast<double>(id.size());
    const auto n_ood = static_cast<double>(ood.size());

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    auto push = [&](std::size_t tp, std::size_t fp) {
        const RocPoint p{static_cast<double>(fp) / n_ood, static_cast<double>(tp) / n_id};
        if (!(points.back() == p)) {
            points.push_back(p);
        }
    };
    // Walk distinct thresholds in descending order; at each threshold every
    // score >= it is accepted as ID.
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < id.size() || j < ood.size()) {
        double t = -std::numeric_limits<double>::infinity();
        if (i < id.size()) t = std::max(t, id[i]);
        if (j < ood.size()) t = std::max(t, ood[j]);
        while (i < id.size() && id[i] == t) ++i;
        while (j < ood.size() && ood[j] == t) ++j;
        push(i, j);
    }
    push(id.size(), ood.size());
    return points;
}

double trapezoid_area(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        area += (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr) * 0.5;
    }
    return area;
}

DetectionMetrics detection_metrics(std::span<const double> id_scores,
                                   std::span<const double> ood_scores, double alpha) {
    DetectionMetrics m;
    const RejectRegion region = threshold_at_tpr(id_scores, alpha);
    require_nonempty(ood_scores, "OOD");
    m.gamma = region.gamma;
    const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(),
                                        [&](double s) { return s >= region.gamma; });
    m.fpr_at_tpr = static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
    m.auroc = auroc(id_scores, ood_scores);
    m.roc_points = roc_curve(id_scores, ood_scores);
    m.n_id = id_scores.size();
    m.n_ood = ood_scores.size();
    return m;
}

std::vector<double> fpr_sweep(std::span<const double> id_scores,
                              std::span<const double> ood_scores,
                              std::span<const double> alphas) {
    std::vector<double> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        out.push_back(fpr_at_tpr(id_scores, ood_scores, a));
    }
    return out;
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 50; ++k) {
        grid.push_back(k / 100.0);
    }
    return grid;
}

double ece(std::span<const double> confidences, std::span<const std::uint8_t> correct,
           int n_bins) {
    if (confidences.size() != correct.size()) {
        throw ShapeError("ece: " + std::to_string(confidences.size()) + " confidences vs " +
                         std::to_string(correct.size()) + " correctness flags");
    }
    if (n_bins < 1) {
        throw ParameterError("ece needs n_bins >= 1");
    }
    if (confidences.empty()) {
        throw DataError("ece needs at least one sample");
    }
    std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> hit_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        if (!(c >= 0.0 && c <= 1.0)) {
            throw DataError("confidence at index " + std::to_string(i) + " is outside [0, 1]");
        }
        // Right-closed bins: (b/B, (b+1)/B].
        const double pos = std::ceil(c * n_bins) - 1.0;
        const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, n_bins - 1.0));
        conf_sum[b] += c;
        hit_sum[b] += correct[i] ? 1.0 : 0.0;
        ++count[b];
    }
    const auto n = static_cast<double>(confidences.size());
    double total = 0.0;
    for (std::size_t b = 0; b < count.size(); ++b) {
        if (count[b] == 0) {
            continue;
        }
        const auto nb = static_cast<double>(count[b]);
        total += (nb / n) * std::abs(hit_sum[b] / nb - conf_sum[b] / nb);
    }
    return total;
}

std::size_t argmax(std::span<const double> row) {
    if (row.empty()) {
        throw ShapeError("argmax of an empty row");
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) {
            best = k;
        }
    }
    return best;
}

double accuracy(const Matrix& logits, std::span<const std::int32_t> labels) {
    if (logits.rows() != labels.size()) {
        throw ShapeError("accuracy: " + std::to_string(logits.rows()) + " logit rows vs " +
                         std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) {
        throw DataError("accuracy needs at least one sample");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols()) {
            throw DataError("label " + std::to_string(labels[i]) + " at index " +
                            std::to_string(i) + " is out of range");
        }
        if (argmax(logits.row(i)) == static_cast<std::size_t>(labels[i])) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

} // namespace typicalset
