#include "typicalset/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <string_view>

namespace typicalset::kernels {

namespace detail {
const KernelTable* avx2_table() noexcept;
} // namespace detail

namespace {

// Selections are written as (a > b ? a : b) so they match maxpd/minpd operand
// semantics exactly, including signed zeros.
inline double select_max(double a, double b) noexcept { return a > b ? a : b; }
inline double select_min(double a, double b) noexcept { return a < b ? a : b; }

void clamp_channels_scalar(const double* in, double* out, std::size_t rows, std::size_t d,
                           const double* lo, const double* hi) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = in + r * d;
        double* dst = out + r * d;
        for (std::size_t c = 0; c < d; ++c) {
            dst[c] = select_min(select_max(src[c], lo[c]), hi[c]);
        }
    }
}

void clamp_upper_scalar(const double* in, double* out, std::size_t n, double hi) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = select_min(in[i], hi);
    }
}

void relu_scalar(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = select_max(in[i], 0.0);
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t body = n - n % 4;
    for (std::size_t i = 0; i < body; i += 4) {
        acc[0] = std::fma(a[i + 0], b[i + 0], acc[0]);
        acc[1] = std::fma(a[i + 1], b[i + 1], acc[1]);
        acc[2] = std::fma(a[i + 2], b[i + 2], acc[2]);
        acc[3] = std::fma(a[i + 3], b[i + 3], acc[3]);
    }
    double sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t i = body; i < n; ++i) {
        sum = std::fma(a[i], b[i], sum);
    }
    return sum;
}

void affine_rows_scalar(const double* in, std::size_t rows, std::size_t d, const double* w,
                        const double* bias, std::size_t k, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            out[r * k + j] = dot_scalar(in + r * d, w + j * d, d) + bias[j];
        }
    }
}

const KernelTable kScalar{
    "scalar", clamp_channels_scalar, clamp_upper_scalar, relu_scalar, dot_scalar,
    affine_rows_scalar,
};

const KernelTable& select() noexcept {
    if (const char* forced = std::getenv("TYPICALSET_ISA")) {
        if (std::string_view(forced) == "scalar") {
            return kScalar;
        }
    }
    if (const KernelTable* simd = avx2()) {
        return *simd;
    }
    return kScalar;
}

} // namespace

const KernelTable& scalar() noexcept { return kScalar; }

const KernelTable* avx2() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
#if defined(__GNUC__)
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept {
    static const KernelTable& table = select();
    return table;
}

} // namespace typicalset::kernels
