#pragma once

// Slow, obviously-correct reference implementations used by the unit tests and
// the acceptance binary.

#include "typicalset/rng.hpp"
#include "typicalset/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <vector>

namespace oracle {

// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol,
                      int depth = 60) {
    const auto rule = [&](double lo, double hi, double flo, double fmid, double fhi) {
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    };
    const std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
            int level) {
            const double mid = 0.5 * (lo + hi);
            const double lm = 0.5 * (lo + mid);
            const double rm = 0.5 * (mid + hi);
            const double flm = f(lm);
            const double frm = f(rm);
            const double left = rule(lo, mid, flo, flm, fmid);
            const double right = rule(mid, hi, fmid, frm, fhi);
            if (level <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
                return left + right + (left + right - whole) / 15.0;
            }
            return rec(lo, mid, flo, flm, fmid, left, eps / 2, level - 1) +
                   rec(mid, hi, fmid, frm, fhi, right, eps / 2, level - 1);
        };
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, rule(a, b, fa, fm, fb), tol, depth);
}

// erf(x) = 2/sqrt(pi) * integral_0^x exp(-t^2) dt.
inline double erf_quadrature(double x) {
    if (x == 0.0) return 0.0;
    const double sign = x < 0 ? -1.0 : 1.0;
    const double v = simpson([](double t) { return std::exp(-t * t); }, 0.0, std::abs(x), 1e-17);
    return sign * 2.0 / std::sqrt(std::numbers::pi) * v;
}

// O(n^2) Mann-Whitney: P(id > ood) + 0.5 P(id == ood).
inline double auroc_pairs(const std::vector<double>& id, const std::vector<double>& ood) {
    double wins = 0.0;
    for (double a : id) {
        for (double b : ood) {
            wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
        }
    }
    return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Tries every ID score as a threshold and keeps the largest one that rejects
// at most alpha*n ID samples; returns the fraction of OOD scores accepted.
inline double fpr_enumerate(const std::vector<double>& id, const std::vector<double>& ood,
                            double alpha, double* gamma_out = nullptr) {
    const double n = static_cast<double>(id.size());
    double best = -INFINITY;
    for (double t : id) {
        const auto rejected = std::count_if(id.begin(), id.end(), [t](double s) { return s < t; });
        if (static_cast<double>(rejected) <= alpha * n && t > best) {
            best = t;
        }
    }
    if (gamma_out) *gamma_out = best;
    const auto accepted = std::count_if(ood.begin(), ood.end(), [best](double s) { return s >= best; });
    return static_cast<double>(accepted) / static_cast<double>(ood.size());
}

// Scores drawn from a small integer lattice so ties are common.
inline std::vector<double> tied_scores(typicalset::Rng& rng, std::size_t n, int levels,
                                       double offset) {
    std::vector<double> out(n);
    for (auto& v : out) {
        v = std::floor(rng.uniform() * levels) * 0.5 + offset;
    }
    return out;
}

// Uniform-target cross-entropy of one sample, -(1/K) sum_k log softmax(l / T)_k.
inline double uniform_ce(const typicalset::Matrix& w, const std::vector<double>& b,
                         const std::vector<double>& z, double temperature) {
    const std::size_t k = w.rows();
    std::vector<double> logits(k);
    for (std::size_t j = 0; j < k; ++j) {
        double acc = b[j];
        for (std::size_t c = 0; c < z.size(); ++c) acc += w(j, c) * z[c];
        logits[j] = acc / temperature;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    const double lse = m + std::log(sum);
    double loss = 0.0;
    for (double l : logits) loss -= (l - lse);
    return loss / static_cast<double>(k);
}

// L1 norm of the central-difference gradient of uniform_ce over every W entry.
inline double gradnorm_fd(const typicalset::Matrix& w, const std::vector<double>& b,
                          const std::vector<double>& z, double temperature, double h = 1e-6) {
    typicalset::Matrix probe = w;
    double norm = 0.0;
    for (std::size_t j = 0; j < w.rows(); ++j) {
        for (std::size_t c = 0; c < w.cols(); ++c) {
            const double orig = probe(j, c);
            probe(j, c) = orig + h;
            const double up = uniform_ce(probe, b, z, temperature);
            probe(j, c) = orig - h;
            const double down = uniform_ce(probe, b, z, temperature);
            probe(j, c) = orig;
            norm += std::abs((up - down) / (2 * h));
        }
    }
    return norm;
}

} // namespace oracle
