#include "doctest.h"

#include "typicalset/kernels.hpp"
#include "typicalset/rng.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

using namespace typicalset;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n, double scale = 3.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    }
    return true;
}

} // namespace

TEST_CASE("scalar kernels on hand cases") {
    const auto& k = kernels::scalar();
    const double in[] = {-2.0, -0.0, 0.0, 3.7};
    double out[4];
    k.relu(in, out, 4);
    CHECK(out[0] == 0.0);
    CHECK(!std::signbit(out[1]));
    CHECK(out[3] == 3.7);

    const double a[] = {1, 2, 3, 4, 5};
    const double b[] = {5, 4, 3, 2, 1};
    CHECK(k.dot(a, b, 5) == 35.0);
    CHECK(k.dot(a, b, 0) == 0.0);

    const double lo[] = {-1.0, 0.0};
    const double hi[] = {1.0, 0.5};
    const double x[] = {2.5, 0.3, -3.0, -1.0};
    double y[4];
    k.clamp_channels(x, y, 2, 2, lo, hi);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 0.3);
    CHECK(y[2] == -1.0);
    CHECK(y[3] == 0.0);
}

TEST_CASE("avx2 kernels are bit-identical to the scalar reference") {
    const auto* fast = kernels::avx2();
    if (fast == nullptr) {
        MESSAGE("AVX2 unavailable on this CPU; skipping equivalence check");
        return;
    }
    const auto& ref = kernels::scalar();
    Rng rng(99);
    // Lengths around the vector width and its multiples exercise the tails.
    for (std::size_t rows : {1u, 3u, 17u}) {
        for (std::size_t d : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 64u, 67u}) {
            const auto in = random_values(rng, rows * d);
            std::vector<double> lo(d), hi(d);
            for (std::size_t c = 0; c < d; ++c) {
                const double mu = rng.uniform(-1, 1);
                const double half = rng.uniform(0.1, 2.0);
                lo[c] = mu - half;
                hi[c] = mu + half;
            }
            std::vector<double> a(rows * d), b(rows * d);
            ref.clamp_channels(in.data(), a.data(), rows, d, lo.data(), hi.data());
            fast->clamp_channels(in.data(), b.data(), rows, d, lo.data(), hi.data());
            CHECK(same_bits(a, b));

            ref.clamp_upper(in.data(), a.data(), rows * d, 0.7);
            fast->clamp_upper(in.data(), b.data(), rows * d, 0.7);
            CHECK(same_bits(a, b));

            ref.relu(in.data(), a.data(), rows * d);
            fast->relu(in.data(), b.data(), rows * d);
            CHECK(same_bits(a, b));

            const auto other = random_values(rng, rows * d);
            const double da = ref.dot(in.data(), other.data(), rows * d);
            const double db = fast->dot(in.data(), other.data(), rows * d);
            CHECK(std::bit_cast<std::uint64_t>(da) == std::bit_cast<std::uint64_t>(db));

            const std::size_t k = 10;
            const auto w = random_values(rng, k * d, 0.3);
            const auto bias = random_values(rng, k, 0.3);
            std::vector<double> la(rows * k), lb(rows * k);
            ref.affine_rows(in.data(), rows, d, w.data(), bias.data(), k, la.data());
            fast->affine_rows(in.data(), rows, d, w.data(), bias.data(), k, lb.data());
            CHECK(same_bits(la, lb));
        }
    }
}

TEST_CASE("in-place kernels match out-of-place") {
    for (const auto* table : {&kernels::scalar(), kernels::avx2()}) {
        if (table == nullptr) continue;
        Rng rng(5);
        auto in = random_values(rng, 37);
        std::vector<double> out(in.size());
        table->relu(in.data(), out.data(), in.size());
        table->relu(in.data(), in.data(), in.size());
        CHECK(same_bits(in, out));
    }
}

TEST_CASE("min/max selection handles signed zero like the vector path") {
    const double lo[] = {0.0};
    const double hi[] = {0.0};
    const double in[] = {-0.0, 0.0};
    for (const auto* table : {&kernels::scalar(), kernels::avx2()}) {
        if (table == nullptr) continue;
        double out[2];
        table->clamp_channels(in, out, 2, 1, lo, hi);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
    }
    if (kernels::avx2() != nullptr) {
        double a[2], b[2];
        kernels::scalar().clamp_channels(in, a, 2, 1, lo, hi);
        kernels::avx2()->clamp_channels(in, b, 2, 1, lo, hi);
        CHECK(std::bit_cast<std::uint64_t>(a[0]) == std::bit_cast<std::uint64_t>(b[0]));
        CHECK(std::bit_cast<std::uint64_t>(a[1]) == std::bit_cast<std::uint64_t>(b[1]));
    }
}
