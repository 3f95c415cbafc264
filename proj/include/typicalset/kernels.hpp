#pragma once

// Inner loops shared by the rectifiers and the classifier head.
//
// Every kernel exists as a portable scalar reference and, on x86-64, as an
// AVX2+FMA variant. The variant is chosen once at startup from CPUID. Both
// variants produce bit-identical results: the clamps are exact min/max
// selections and the dot product uses the same four-lane fused
// multiply-add accumulation order in both paths.
//
// All buffers are row-major and must not alias unless stated.

#include <cstddef>
#include <span>
#include <string_view>

namespace typicalset::kernels {

struct KernelTable {
    std::string_view isa;

    // out[r*d + c] = min(max(in[r*d + c], lo[c]), hi[c]). in may equal out.
    void (*clamp_channels)(const double* in, double* out, std::size_t rows, std::size_t d,
                           const double* lo, const double* hi);
    // out[i] = min(in[i], hi). in may equal out.
    void (*clamp_upper)(const double* in, double* out, std::size_t n, double hi);
    // out[i] = max(in[i], 0) with -0.0 mapped to +0.0. in may equal out.
    void (*relu)(const double* in, double* out, std::size_t n);
    // Dot product with four interleaved fma accumulators, reduced as (a0+a1)+(a2+a3).
    double (*dot)(const double* a, const double* b, std::size_t n);
    // out[r*k + j] = dot(in row r, w row j) + bias[j].
    void (*affine_rows)(const double* in, std::size_t rows, std::size_t d, const double* w,
                        const double* bias, std::size_t k, double* out);
};

const KernelTable& scalar() noexcept;

// nullptr when the binary was built without the AVX2 translation unit or the
// running CPU lacks AVX2/FMA.
const KernelTable* avx2() noexcept;

// Table used by the library. Set TYPICALSET_ISA=scalar to force the reference path.
const KernelTable& active() noexcept;

} // namespace typicalset::kernels
