#include "typicalset/theory.hpp"

#include "typicalset/error.hpp"
#include "typicalset/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

namespace typicalset::theory {

namespace {

// Cody's coefficients (netlib specfun/erf, CALERF).
constexpr std::array<double, 5> kA = {3.16112374387056560e00, 1.13864154151050156e02,
                                      3.77485237685302021e02, 3.20937758913846947e03,
                                      1.85777706184603153e-1};
constexpr std::array<double, 4> kB = {2.36012909523441209e01, 2.44024637934444173e02,
                                      1.28261652607737228e03, 2.84423683343917062e03};
constexpr std::array<double, 9> kC = {5.64188496988670089e-1, 8.88314979438837594e00,
                                      6.61191906371416295e01, 2.98635138197400131e02,
                                      8.81952221241769090e02, 1.71204761263407058e03,
                                      2.05107837782607147e03, 1.23033935479799725e03,
                                      2.15311535474403846e-8};
constexpr std::array<double, 8> kD = {1.57449261107098347e01, 1.17693950891312499e02,
                                      5.37181101862009858e02, 1.62138957456669019e03,
                                      3.29079923573345963e03, 4.36261909014324716e03,
                                      3.43936767414372164e03, 1.23033935480374942e03};
constexpr std::array<double, 6> kP = {3.05326634961232344e-1, 3.60344899949804439e-1,
                                      1.25781726111229246e-1, 1.60837851487422766e-2,
                                      6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr std::array<double, 5> kQ = {2.56852019228982242e00, 1.87295284992346047e00,
                                      5.27905102951428412e-1, 6.05183413124413191e-2,
                                      2.33520497626869185e-3};

constexpr double kInvSqrtPi = 0.56418958354775628695;
constexpr double kThresh = 0.46875;
constexpr double kXSmall = 1.11e-16;
constexpr double kXBig = 26.543;

// erf(y) for 0 <= y <= kThresh.
double erf_small(double y) noexcept {
    const double ysq = y > kXSmall ? y * y : 0.0;
    double num = kA[4] * ysq;
    double den = ysq;
    for (int i = 0; i < 3; ++i) {
        num = (num + kA[i]) * ysq;
        den = (den + kB[i]) * ysq;
    }
    return y * (num + kA[3]) / (den + kB[3]);
}

// exp(-y^2) with y^2 split so the product keeps full precision.
double exp_minus_square(double y) noexcept {
    const double head = std::trunc(y * 16.0) / 16.0;
    const double del = (y - head) * (y + head);
    return std::exp(-head * head) * std::exp(-del);
}

// erfc(y) for y > kThresh.
double erfc_large(double y) noexcept {
    if (y <= 4.0) {
        double num = kC[8] * y;
        double den = y;
        for (int i = 0; i < 7; ++i) {
            num = (num + kC[i]) * y;
            den = (den + kD[i]) * y;
        }
        return exp_minus_square(y) * (num + kC[7]) / (den + kD[7]);
    }
    if (y >= kXBig) {
        return 0.0;
    }
    const double ysq = 1.0 / (y * y);
    double num = kP[5] * ysq;
    double den = ysq;
    for (int i = 0; i < 4; ++i) {
        num = (num + kP[i]) * ysq;
        den = (den + kQ[i]) * ysq;
    }
    const double r = (kInvSqrtPi - ysq * (num + kP[4]) / (den + kQ[4])) / y;
    return exp_minus_square(y) * r;
}

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ParameterError("sigma must be finite and > 0, got " + std::to_string(sigma));
    }
}

void require_lambda_positive(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("lambda must be finite and > 0, got " + std::to_string(lambda));
    }
}

// Upper-tail contribution lambda (1 - Phi(lambda)) - phi(lambda).
double upper_clip_shift(double lambda) noexcept {
    return lambda * normal_cdf(-lambda) - normal_pdf(lambda);
}

} // namespace

double erf(double x) noexcept {
    if (std::isnan(x)) {
        return x;
    }
    const double y = std::abs(x);
    if (y <= kThresh) {
        return erf_small(y) * (x < 0.0 ? -1.0 : 1.0);
    }
    const double r = (0.5 - erfc_large(y)) + 0.5;
    return x < 0.0 ? -r : r;
}

double erfc(double x) noexcept {
    if (std::isnan(x)) {
        return x;
    }
    const double y = std::abs(x);
    if (y <= kThresh) {
        return 1.0 - erf_small(y) * (x < 0.0 ? -1.0 : 1.0);
    }
    const double r = erfc_large(y);
    return x < 0.0 ? 2.0 - r : r;
}

double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
}

double normal_cdf(double x) noexcept { return 0.5 * erfc(-x / std::numbers::sqrt2); }

double variance_ratio(double lambda) {
    if (!(lambda >= 0.0) || std::isnan(lambda)) {
        throw ParameterError("variance_ratio needs lambda >= 0, got " + std::to_string(lambda));
    }
    if (std::isinf(lambda)) {
        return 1.0;
    }
    const double tail = erfc(lambda / std::numbers::sqrt2);
    const double body = erf(lambda / std::numbers::sqrt2);
    const double edge = std::sqrt(2.0 / std::numbers::pi) * lambda * std::exp(-0.5 * lambda * lambda);
    return body - edge + lambda * lambda * tail;
}

double variance_ratio_derivative(double lambda) {
    if (!(lambda >= 0.0) || std::isnan(lambda)) {
        throw ParameterError("lambda must be >= 0, got " + std::to_string(lambda));
    }
    return 2.0 * lambda * erfc(lambda / std::numbers::sqrt2);
}

double rectified_mean(double mu, double sigma) {
    require_sigma(sigma);
    if (!std::isfinite(mu)) {
        throw ParameterError("mu must be finite");
    }
    const double t = mu / sigma;
    return mu * normal_cdf(t) + sigma * normal_pdf(t);
}

double truncated_rectified_mean(double mu, double sigma, double lambda) {
    require_lambda_positive(lambda);
    return rectified_mean(mu, sigma) + sigma * upper_clip_shift(lambda);
}

double truncation_bias(double lambda, double sigma) {
    require_lambda_positive(lambda);
    require_sigma(sigma);
    return upper_clip_shift(lambda) * sigma;
}

TruncationAnalysis analyze(double mu, double sigma, double lambda) {
    TruncationAnalysis a;
    a.lambda = lambda;
    a.variance_ratio = variance_ratio(lambda);
    a.bias_per_sigma = truncation_bias(lambda, 1.0);
    a.mean_z = rectified_mean(mu, sigma);
    a.mean_zbar = truncated_rectified_mean(mu, sigma, lambda);
    return a;
}

namespace {

// Streaming central moments up to order four (Pebay's update and merge).
struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;

    void push(double x) noexcept {
        const double n1 = n;
        n += 1.0;
        const double delta = x - mean;
        const double delta_n = delta / n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        mean += delta_n;
        m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2 -
              4.0 * delta_n * m3;
        m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2;
        m2 += term1;
    }

    void merge(const Moments& o) noexcept {
        if (o.n == 0.0) {
            return;
        }
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double na = n;
        const double nb = o.n;
        const double nx = na + nb;
        const double delta = o.mean - mean;
        const double d2 = delta * delta;
        const double d3 = d2 * delta;
        const double d4 = d2 * d2;
        const double m4x = m4 + o.m4 + d4 * na * nb * (na * na - na * nb + nb * nb) / (nx * nx * nx) +
                           6.0 * d2 * (na * na * o.m2 + nb * nb * m2) / (nx * nx) +
                           4.0 * delta * (na * o.m3 - nb * m3) / nx;
        const double m3x = m3 + o.m3 + d3 * na * nb * (na - nb) / (nx * nx) +
                           3.0 * delta * (na * o.m2 - nb * m2) / nx;
        const double m2x = m2 + o.m2 + d2 * na * nb / nx;
        mean += delta * nb / nx;
        m2 = m2x;
        m3 = m3x;
        m4 = m4x;
        n = nx;
    }

    MomentEstimate estimate() const noexcept {
        MomentEstimate e;
        e.mean = mean;
        e.variance = n > 1.0 ? m2 / (n - 1.0) : 0.0;
        e.mean_std_error = n > 0.0 ? std::sqrt(e.variance / n) : 0.0;
        const double pop2 = n > 0.0 ? m2 / n : 0.0;
        const double pop4 = n > 0.0 ? m4 / n : 0.0;
        e.variance_std_error = n > 0.0 ? std::sqrt(std::max(pop4 - pop2 * pop2, 0.0) / n) : 0.0;
        return e;
    }
};

struct BlockMoments {
    Moments clipped;
    Moments rectified;
    Moments clipped_rectified;
};

BlockMoments run_block(double mu, double sigma, double lambda, std::size_t draws,
                       std::uint64_t seed, std::size_t block) {
    Rng rng = Rng::stream(seed, 0x6d632d747275ULL, block);
    const double lo = mu - lambda * sigma;
    const double hi = mu + lambda * sigma;
    BlockMoments m;
    for (std::size_t i = 0; i < draws; ++i) {
        const double z1 = mu + sigma * rng.normal();
        const double clipped = std::clamp(z1, lo, hi);
        m.clipped.push(clipped);
        m.rectified.push(std::max(z1, 0.0));
        m.clipped_rectified.push(std::max(clipped, 0.0));
    }
    return m;
}

} // namespace

McTruncatedMoments mc_truncated_moments(double mu, double sigma, double lambda,
                                        std::size_t n_draws, std::uint64_t seed,
                                        unsigned workers) {
    if (n_draws < 1) {
        throw ParameterError("mc_truncated_moments needs n_draws >= 1");
    }
    require_sigma(sigma);
    if (!(lambda >= 0.0) || std::isnan(lambda)) {
        throw ParameterError("lambda must be >= 0");
    }
    if (!std::isfinite(mu)) {
        throw ParameterError("mu must be finite");
    }

    std::vector<BlockMoments> blocks(kMcBlocks);
    auto block_draws = [&](std::size_t b) {
        return n_draws / kMcBlocks + (b < n_draws % kMcBlocks ? 1 : 0);
    };
    const unsigned pool = std::max(1U, std::min<unsigned>(workers, kMcBlocks));
    if (pool == 1) {
        for (std::size_t b = 0; b < kMcBlocks; ++b) {
            blocks[b] = run_block(mu, sigma, lambda, block_draws(b), seed, b);
        }
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(pool);
        for (unsigned w = 0; w < pool; ++w) {
            threads.emplace_back([&, w] {
                for (std::size_t b = w; b < kMcBlocks; b += pool) {
                    blocks[b] = run_block(mu, sigma, lambda, block_draws(b), seed, b);
                }
            });
        }
    }

    BlockMoments total;
    for (const auto& b : blocks) {
        total.clipped.merge(b.clipped);
        total.rectified.merge(b.rectified);
        total.clipped_rectified.merge(b.clipped_rectified);
    }
    McTruncatedMoments out;
    out.clipped = total.clipped.estimate();
    out.rectified = total.rectified.estimate();
    out.clipped_rectified = total.clipped_rectified.estimate();
    out.draws = n_draws;
    return out;
}

} // namespace typicalset::theory
