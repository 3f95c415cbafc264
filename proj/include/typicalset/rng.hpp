#pragma once

// Deterministic random streams.
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded through SplitMix64.
// Streams are split by key: stream(seed, a, b) hashes (seed, a, b) with
// SplitMix64 finalisers into an independent 256-bit state, so any worker can
// reconstruct its stream without coordination and serial/parallel runs with the
// same decomposition produce identical draws.
//
// Variates are generated here rather than with <random> distributions because
// the standard leaves their algorithms implementation-defined.

#include <array>
#include <cstdint>

namespace typicalset {

class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    // Independent substream for (seed, key_a, key_b).
    static Rng stream(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b = 0) noexcept;

    std::uint64_t next_u64() noexcept;

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept;
    // Standard normal via the Marsaglia polar method.
    double normal() noexcept;
    // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
    double gamma(double shape) noexcept;
    // Student-t with `dof` degrees of freedom: Z / sqrt(ChiSq(dof) / dof).
    double student_t(double dof) noexcept;

private:
    std::array<std::uint64_t, 4> state_{};
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

} // namespace typicalset
