// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

#include "voltail/rng.hpp"
#include "voltail/simd/detmath.hpp"
#include "voltail/simd/kernels.hpp"

using namespace voltail;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
    EXPECT_EQ(rng::philox4x32_10({0, 0, 0, 0}, 0, 0),
              (rng::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(rng::philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, 0xffffffff, 0xffffffff),
              (rng::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(rng::philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, 0xa4093822, 0x299f31d0),
              (rng::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreTagged) {
    EXPECT_NE(rng::make_stream(rng::StreamTag::path, 7), rng::make_stream(rng::StreamTag::bridge, 7));
    EXPECT_NE(rng::draw_block(1, rng::make_stream(rng::StreamTag::path, 0), 0),
              rng::draw_block(1, rng::make_stream(rng::StreamTag::return_noise, 0), 0));
}

TEST(Uniform, OpenIntervalEndpoints) {
    EXPECT_EQ(rng::uniform_open(0, 0), 0x1p-53);
    EXPECT_EQ(rng::uniform_open(0xffffffff, 0xffffffff), 1.0 - 0x1p-53);
    EXPECT_LT(rng::uniform_open(0xffffffff, 0xffffffff), 1.0);
}

TEST(DetMath, LogMatchesLibm) {
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double x = std::ldexp(1.0 + i / 20000.0, (i % 120) - 60);
        const double err = std::fabs(simd::detmath::log(x) - std::log(x)) / std::max(1.0, std::fabs(std::log(x)));
        worst = std::max(worst, err);
    }
    EXPECT_LT(worst, 4e-16);
    EXPECT_EQ(simd::detmath::log(1.0), 0.0);
    EXPECT_NEAR(simd::detmath::log(0x1p-53), -53.0 * std::log(2.0), 1e-13);
}

TEST(DetMath, SinCosMatchesLibm) {
    double worst = 0.0;
    for (int i = 1; i < 40000; ++i) {
        const double u = i / 40000.0;
        double c, s;
        simd::detmath::sincos_2pi(u, c, s);
        worst = std::max({worst, std::fabs(c - std::cos(2 * M_PI * u)), std::fabs(s - std::sin(2 * M_PI * u))});
    }
    EXPECT_LT(worst, 1e-15);
}

TEST(Normals, MomentsAreStandard) {
    const auto& k = simd::scalar_kernels();
    const std::size_t n = 200000;
    std::vector<double> z0(n), z1(n);
    k.normal_pairs(42, rng::make_stream(rng::StreamTag::synthetic, 0), 3, n, z0.data(), z1.data());
    double m = 0, m2 = 0, m4 = 0, cross = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (double z : {z0[i], z1[i]}) {
            m += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        cross += z0[i] * z1[i];
    }
    const double N = 2.0 * n;
    EXPECT_NEAR(m / N, 0.0, 5.0 / std::sqrt(N));
    EXPECT_NEAR(m2 / N, 1.0, 5.0 * std::sqrt(2.0 / N));
    EXPECT_NEAR(m4 / N, 3.0, 5.0 * std::sqrt(96.0 / N));
    EXPECT_NEAR(cross / n, 0.0, 5.0 / std::sqrt(static_cast<double>(n)));
}

class KernelEquivalence : public ::testing::Test {
protected:
    void SetUp() override {
        avx2 = simd::avx2_kernels();
        if (avx2 == nullptr) GTEST_SKIP() << "AVX2 unavailable on this machine";
    }
    const simd::KernelSet& scalar = simd::scalar_kernels();
    const simd::KernelSet* avx2 = nullptr;
};

TEST_F(KernelEquivalence, UniformsAndNormals) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 1027u}) {
        for (std::uint64_t stream0 : {std::uint64_t{0}, std::uint64_t{0xfffffffeull}, rng::make_stream(rng::StreamTag::bridge, 99)}) {
            std::vector<double> a0(n), a1(n), b0(n), b1(n);
            scalar.uniform_pairs(11, stream0, 5, n, a0.data(), a1.data());
            avx2->uniform_pairs(11, stream0, 5, n, b0.data(), b1.data());
            EXPECT_TRUE(same_bits(a0, b0) && same_bits(a1, b1)) << n;
            scalar.normal_pairs(0xdeadbeefcafeull, stream0, 1ull << 40, n, a0.data(), a1.data());
            avx2->normal_pairs(0xdeadbeefcafeull, stream0, 1ull << 40, n, b0.data(), b1.data());
            EXPECT_TRUE(same_bits(a0, b0) && same_bits(a1, b1)) << n;
        }
    }
}

TEST_F(KernelEquivalence, ReciprocalAndPriceSteps) {
    const std::size_t n = 1031;
    std::vector<double> z0(n), z1(n), z2(n), z3(n);
    simd::ReciprocalStep rp{0.3, 1.0001, 2e-4, 0.2, 400.0};
    simd::LogPriceStep lp{1e-3, std::sqrt(1e-3), 0.05, -0.4, std::sqrt(1 - 0.16)};
    std::vector<double> va(n), vb(n), la(n, 0.0), lb(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) va[i] = vb[i] = 0.01 + 0.4 * i;  // spans both reflection boundaries
    simd::ClampCounts ca, cb;
    for (std::uint64_t step = 0; step < 50; ++step) {
        scalar.normal_pairs(3, 0, 2 * step, n, z0.data(), z1.data());
        scalar.normal_pairs(3, 0, 2 * step + 1, n, z2.data(), z3.data());
        scalar.log_price_step(lp, n, va.data(), z0.data(), z3.data(), la.data());
        avx2->log_price_step(lp, n, vb.data(), z0.data(), z3.data(), lb.data());
        scalar.reciprocal_step(rp, n, va.data(), z0.data(), z1.data(), z2.data(), &ca);
        avx2->reciprocal_step(rp, n, vb.data(), z0.data(), z1.data(), z2.data(), &cb);
    }
    EXPECT_TRUE(same_bits(va, vb));
    EXPECT_TRUE(same_bits(la, lb));
    EXPECT_EQ(ca.floor_hits, cb.floor_hits);
    EXPECT_EQ(ca.cap_hits, cb.cap_hits);
    EXPECT_GT(ca.floor_hits + ca.cap_hits, 0u);
}

TEST_F(KernelEquivalence, ProductsAndCounts) {
    const std::size_t n = 1001;
    std::vector<double> s(n), z(n), oa(n), ob(n);
    scalar.normal_pairs(5, 1, 0, n, s.data(), z.data());
    scalar.scaled_products(0.0123, n, s.data(), z.data(), oa.data());
    avx2->scaled_products(0.0123, n, s.data(), z.data(), ob.data());
    EXPECT_TRUE(same_bits(oa, ob));
    for (double thr : {0.0, 1e-3, 0.01, 0.05, 1.0})
        EXPECT_EQ(scalar.count_abs_ge(n, oa.data(), thr), avx2->count_abs_ge(n, oa.data(), thr));
}

TEST_F(KernelEquivalence, LogBins) {
    const std::size_t n = 5003, bins = 300;
    std::vector<double> a(n), b(n);
    scalar.uniform_pairs(8, 0, 0, n, a.data(), b.data());
    for (std::size_t i = 0; i < n; ++i) a[i] = std::exp(30.0 * (a[i] - 0.5));
    std::vector<std::uint64_t> ca(bins + 2, 0), cb(bins + 2, 0);
    scalar.accumulate_log_bins(n, a.data(), -1.0, -10.0, 15.0, bins, ca.data());
    avx2->accumulate_log_bins(n, a.data(), -1.0, -10.0, 15.0, bins, cb.data());
    EXPECT_EQ(ca, cb);
    EXPECT_GT(ca.front(), 0u);
    EXPECT_GT(ca.back(), 0u);
}

TEST(Kernels, LogBinsPlaceValues) {
    const auto& k = simd::scalar_kernels();
    const std::vector<double> x{std::exp(-0.5), std::exp(0.3), std::exp(0.8), std::exp(3.0), 0.01};
    std::vector<std::uint64_t> c(4 + 2, 0);
    k.accumulate_log_bins(x.size(), x.data(), 1.0, 0.0, 4.0, 4, c.data());  // bins of width 1/4 on [0, 1)
    EXPECT_EQ(c, (std::vector<std::uint64_t>{2, 0, 1, 0, 1, 1}));
}

TEST(Dispatch, ActiveIsKnown) {
    const auto name = simd::active_kernels().name;
    EXPECT_TRUE(name == "scalar" || name == "avx2");
}
