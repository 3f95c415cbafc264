#pragma once

// Closed-form moments of clipped and rectified Gaussians plus a Monte-Carlo
// oracle that checks them.
//
// Notation: z1 ~ N(mu, sigma^2) is a BN output, the truncated unit clips it to
// [mu - lambda*sigma, mu + lambda*sigma], and z = ReLU(z1), zbar = ReLU(clip(z1)).

#include <cstddef>
#include <cstdint>

namespace typicalset::theory {

// Gauss error function, W. J. Cody's rational Chebyshev approximations
// (Math. Comp. 1969) on |x| <= 0.46875, (0.46875, 4] and (4, inf). Absolute
// error below 1e-15 in double precision; odd; saturates to +/-1.
double erf(double x) noexcept;
// Complementary error function 1 - erf(x) without cancellation for large x.
double erfc(double x) noexcept;

// Standard normal pdf and cdf, both expressed through erf/erfc.
double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;

// Variance ratio C(lambda) = Var(clip(z1)) / sigma^2:
//   erf(l/sqrt2) - sqrt(2/pi) l exp(-l^2/2) + l^2 (1 - erf(l/sqrt2)).
// C(0) = 0, C increasing, C -> 1. Throws ParameterError for lambda < 0.
double variance_ratio(double lambda);

// Analytic derivative of C: 2 lambda (1 - erf(lambda / sqrt2)).
double variance_ratio_derivative(double lambda);

// E[ReLU(z1)] = mu Phi(mu/sigma) + sigma phi(mu/sigma).
double rectified_mean(double mu, double sigma);

// E[zbar] = E[ReLU(z1)] + sigma (lambda (1 - Phi(lambda)) - phi(lambda)).
//
// This closed form accounts for the upper clip only. It equals the true mean of
// ReLU(clip(z1)) whenever mu - lambda*sigma <= 0 <= mu + lambda*sigma (the
// lower clip then lands where ReLU already outputs zero); outside that band it
// is the formula's value, not the exact expectation.
double truncated_rectified_mean(double mu, double sigma, double lambda);

// E[zbar] - E[z] = (lambda - lambda Phi(lambda) - phi(lambda)) sigma <= 0.
double truncation_bias(double lambda, double sigma);

struct TruncationAnalysis {
    double lambda = 0.0;
    double variance_ratio = 0.0;
    double bias_per_sigma = 0.0;
    double mean_z = 0.0;
    double mean_zbar = 0.0;
};

TruncationAnalysis analyze(double mu, double sigma, double lambda);

struct MomentEstimate {
    double mean = 0.0;
    double variance = 0.0;        // sample variance, divisor n - 1
    double mean_std_error = 0.0;  // sqrt(variance / n)
    double variance_std_error = 0.0; // sqrt((m4 - m2^2) / n)
};

struct McTruncatedMoments {
    MomentEstimate clipped;        // clip(z1)
    MomentEstimate rectified;      // ReLU(z1)
    MomentEstimate clipped_rectified; // ReLU(clip(z1))
    std::size_t draws = 0;
};

inline constexpr std::size_t kMcBlocks = 64;

// Monte-Carlo moments from n_draws standard normal samples. The draws are split
// into kMcBlocks fixed blocks, each with its own substream of `seed`, merged in
// block order; results are bit-identical for any worker count.
McTruncatedMoments mc_truncated_moments(double mu, double sigma, double lambda,
                                        std::size_t n_draws, std::uint64_t seed,
                                        unsigned workers = 1);

} // namespace typicalset::theory
