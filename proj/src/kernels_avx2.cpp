// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// is only entered after the CPUID check in kernels_scalar.cpp.

#include "typicalset/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace typicalset::kernels {

namespace {

constexpr std::size_t kLanes = 4;

void clamp_channels_avx2(const double* in, double* out, std::size_t rows, std::size_t d,
                         const double* lo, const double* hi) {
    const std::size_t body = d - d % kLanes;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = in + r * d;
        double* dst = out + r * d;
        for (std::size_t c = 0; c < body; c += kLanes) {
            __m256d v = _mm256_loadu_pd(src + c);
            v = _mm256_max_pd(v, _mm256_loadu_pd(lo + c));
            v = _mm256_min_pd(v, _mm256_loadu_pd(hi + c));
            _mm256_storeu_pd(dst + c, v);
        }
        for (std::size_t c = body; c < d; ++c) {
            double v = src[c] > lo[c] ? src[c] : lo[c];
            dst[c] = v < hi[c] ? v : hi[c];
        }
    }
}

void clamp_upper_avx2(const double* in, double* out, std::size_t n, double hi) {
    const __m256d vhi = _mm256_set1_pd(hi);
    const std::size_t body = n - n % kLanes;
    for (std::size_t i = 0; i < body; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_loadu_pd(in + i), vhi));
    }
    for (std::size_t i = body; i < n; ++i) {
        out[i] = in[i] < hi ? in[i] : hi;
    }
}

void relu_avx2(const double* in, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const std::size_t body = n - n % kLanes;
    for (std::size_t i = 0; i < body; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(in + i), zero));
    }
    for (std::size_t i = body; i < n; ++i) {
        out[i] = in[i] > 0.0 ? in[i] : 0.0;
    }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t body = n - n % kLanes;
    for (std::size_t i = 0; i < body; i += kLanes) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (std::size_t i = body; i < n; ++i) {
        sum = std::fma(a[i], b[i], sum);
    }
    return sum;
}

void affine_rows_avx2(const double* in, std::size_t rows, std::size_t d, const double* w,
                      const double* bias, std::size_t k, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            out[r * k + j] = dot_avx2(in + r * d, w + j * d, d) + bias[j];
        }
    }
}

const KernelTable kAvx2{
    "avx2", clamp_channels_avx2, clamp_upper_avx2, relu_avx2, dot_avx2, affine_rows_avx2,
};

} // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
} // namespace detail

} // namespace typicalset::kernels

#else

namespace typicalset::kernels::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
} // namespace typicalset::kernels::detail

#endif
