// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "voltail/dims.hpp"
#include "voltail/error.hpp"
#include "voltail/rng.hpp"

using namespace voltail;
using dims::Rational;
using dims::TimeDim;

namespace {

TimeDim T(std::int64_t num, std::int64_t den = 1) { return TimeDim::time_pow(Rational(num, den)); }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::io;
}

/// Small random rational from the synthetic stream.
Rational random_rational(std::uint64_t seed, std::uint64_t i) {
    const auto b = rng::draw_block(seed, rng::make_stream(rng::StreamTag::synthetic, i), 0);
    const auto num = static_cast<std::int64_t>(b[0] % 17) - 8;
    const auto den = static_cast<std::int64_t>(b[1] % 6) + 1;
    return Rational(num, den);
}

}  // namespace

TEST(Rational, ReducesAndNormalisesSign) {
    const Rational r(6, -8);
    EXPECT_EQ(r.num(), -3);
    EXPECT_EQ(r.den(), 4);
    EXPECT_EQ(Rational(0, 5), Rational(0));
    EXPECT_EQ(r.to_string(), "-3/4");
    EXPECT_THROW(Rational(1, 0), Error);
}

TEST(Rational, ExactArithmetic) {
    EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
    EXPECT_EQ(Rational(1, 2) - Rational(3, 2), Rational(-1));
    EXPECT_EQ(Rational(2, 3) * Rational(9, 4), Rational(3, 2));
    EXPECT_EQ(Rational(1, 2) / Rational(-1, 4), Rational(-2));
    EXPECT_LT(Rational(-1, 2), Rational(-1, 3));
}

TEST(Rational, OverflowThrows) {
    const Rational big(INT64_MAX / 2 + 1);
    EXPECT_THROW((void)(big + big), Error);
    EXPECT_THROW((void)(big * Rational(3)), Error);
}

TEST(Combine, Examples) {
    const std::vector<TimeDim> w{dims::canonical::wiener()};
    const std::vector<Rational> two{Rational(2)};
    EXPECT_EQ(dims::combine(w, two), T(1));

    const std::vector<TimeDim> s{dims::canonical::volatility()};
    const std::vector<Rational> m2{Rational(-2)};
    EXPECT_EQ(dims::combine(s, m2), T(1));

    const std::vector<TimeDim> rs{dims::canonical::rate(), dims::canonical::volatility()};
    const std::vector<Rational> w12{Rational(1), Rational(-2)};
    EXPECT_TRUE(dims::combine(rs, w12).is_dimensionless());
}

TEST(Combine, LengthMismatch) {
    const std::vector<TimeDim> d{T(1), T(2)};
    const std::vector<Rational> w{Rational(1)};
    EXPECT_EQ(kind_of([&] { (void)dims::combine(d, w); }), ErrorKind::dimension);
}

TEST(Combine, CanonicalTable) {
    EXPECT_EQ(dims::canonical::wiener(), T(1, 2));
    EXPECT_EQ(dims::canonical::volatility(), T(-1, 2));
    EXPECT_EQ(dims::canonical::drift(), T(-3, 2));
    EXPECT_EQ(dims::canonical::diffusion(), T(-1));
    EXPECT_EQ(dims::canonical::rate(), T(-1));
    EXPECT_EQ(T(-1, 2).to_string(), "T^{-1/2}");
    // sigma^3 carries the drift dimension, sigma^2 the diffusion dimension.
    EXPECT_EQ(dims::power(dims::canonical::volatility(), Rational(3)), dims::canonical::drift());
    EXPECT_EQ(dims::power(dims::canonical::volatility(), Rational(2)), dims::canonical::diffusion());
}

TEST(Combine, AlgebraProperties) {
    for (std::uint64_t i = 0; i < 500; ++i) {
        const TimeDim a{random_rational(1, 3 * i)}, b{random_rational(1, 3 * i + 1)},
            c{random_rational(1, 3 * i + 2)};
        EXPECT_EQ(dims::combine(a, b), dims::combine(b, a));
        EXPECT_EQ(dims::combine(dims::combine(a, b), c), dims::combine(a, dims::combine(b, c)));
        EXPECT_EQ(dims::combine(a, TimeDim::dimensionless()), a);
        EXPECT_TRUE(dims::power(a, Rational(0)).is_dimensionless());
        EXPECT_EQ(dims::power(a, b.exponent).exponent, a.exponent * b.exponent);
        // The weighted form with unit weights is the pairwise product.
        const std::vector<TimeDim> abc{a, b, c};
        const std::vector<Rational> ones(3, Rational(1));
        EXPECT_EQ(dims::combine(abc, ones), dims::combine(dims::combine(a, b), c));
    }
}

TEST(Quantity, DimensionRules) {
    const dims::Quantity s{0.2, dims::canonical::volatility()};
    const dims::Quantity r{0.04, dims::canonical::rate()};
    const auto x = r / (s * s);
    EXPECT_TRUE(x.dim.is_dimensionless());
    EXPECT_DOUBLE_EQ(x.value, 1.0);
    EXPECT_DOUBLE_EQ((r + r).value, 0.08);
    EXPECT_EQ(kind_of([&] { (void)(r + s); }), ErrorKind::dimension);
    EXPECT_EQ(kind_of([&] { (void)(r - s); }), ErrorKind::dimension);
}

TEST(CheckSdeDims, AllPass) {
    const std::vector<TimeDim> p{T(-1)};
    const auto r = dims::check_sde_dims(T(-3, 2), T(-1), T(-1, 2), p);
    EXPECT_TRUE(r.pass());
    for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name;
}

TEST(CheckSdeDims, WrongAlphaFailsOnlyAlphaChecks) {
    const std::vector<TimeDim> p{T(-1)};
    const auto r = dims::check_sde_dims(T(-1), T(-1), T(-1, 2), p);
    EXPECT_FALSE(r.pass());
    // The direct check and the alpha dt consistency check both name alpha; nothing else fails.
    for (const auto& c : r.checks) {
        if (c.pass) continue;
        EXPECT_NE(c.name.find("alpha"), std::string::npos) << c.name;
        if (c.name == "alpha") {
            EXPECT_EQ(c.expected, Rational(-3, 2));
            EXPECT_EQ(c.actual, Rational(-1));
        }
    }
}

TEST(CheckSdeDims, NoParameters) {
    const auto r = dims::check_sde_dims(T(-3, 2), T(-1), T(-1, 2), {});
    EXPECT_TRUE(r.pass());
}

TEST(CheckSdeDims, BadParameterReported) {
    const std::vector<TimeDim> p{T(-1), T(-1, 2)};
    const auto r = dims::check_sde_dims(T(-3, 2), T(-1), T(-1, 2), p);
    EXPECT_FALSE(r.pass());
}

TEST(ReduceParameters, SingleRateIsIdentity) {
    const std::vector<dims::NamedDim> p{{"r0", T(-1)}};
    const auto r = dims::reduce_parameters(p);
    ASSERT_EQ(r.exponents.size(), 1u);
    EXPECT_EQ(r.exponents[0], Rational(1));
    EXPECT_EQ(r.dim, T(-1));
    EXPECT_EQ(r.support_size(), 1u);
}

TEST(ReduceParameters, TwoParameterConstruction) {
    // a + gamma b = 1/2 with gamma = 1/2, a = 2/9, b = 5/9. Neither parameter
    // alone reaches T^-1 inside the grid (r0^{-9/2}, r1^{-9/5}), so the pair
    // r0^-2 r1^{-2 gamma} is the preferred combination.
    const std::vector<dims::NamedDim> p{{"r0", T(2, 9)}, {"r1", T(5, 9)}};
    const auto r = dims::reduce_parameters(p);
    ASSERT_EQ(r.exponents.size(), 2u);
    EXPECT_EQ(r.exponents[0], Rational(-2));
    EXPECT_EQ(r.exponents[1], Rational(-1));
    EXPECT_EQ(r.dim, T(-1));
}

TEST(ReduceParameters, TwoParameterFamily) {
    // Same construction for other gamma: a = 1/2 - gamma b.
    for (const auto& [g, b] : {std::pair{Rational(1, 4), Rational(6, 7)},
                               std::pair{Rational(3, 2), Rational(2, 7)}}) {
        const Rational a = Rational(1, 2) - g * b;
        const std::vector<dims::NamedDim> p{{"r0", TimeDim{a}}, {"r1", TimeDim{b}}};
        const auto r = dims::reduce_parameters(p);
        EXPECT_EQ(r.dim, T(-1));
        if (r.support_size() == 2) {
            EXPECT_EQ(r.exponents[0], Rational(-2));
            EXPECT_EQ(r.exponents[1], Rational(-2) * g);
        }
        EXPECT_EQ(r.exponents[0] * a + r.exponents[1] * b, Rational(-1));
    }
}

TEST(ReduceParameters, ThreeParameterExample) {
    const std::vector<dims::NamedDim> p{{"a", T(-2)}, {"b", T(1, 2)}, {"c", T(0)}};
    const auto r = dims::reduce_parameters(p);
    ASSERT_EQ(r.exponents.size(), 3u);
    EXPECT_EQ(r.exponents[0], Rational(1, 2));
    EXPECT_EQ(r.exponents[1], Rational(0));
    EXPECT_EQ(r.exponents[2], Rational(0));
}

TEST(ReduceParameters, AllDimensionless) {
    const std::vector<dims::NamedDim> p{{"a", T(0)}, {"b", T(0)}};
    EXPECT_EQ(kind_of([&] { (void)dims::reduce_parameters(p); }), ErrorKind::no_inverse_time);
    EXPECT_EQ(kind_of([&] { (void)dims::reduce_parameters({}); }), ErrorKind::no_inverse_time);
}

TEST(ReduceParameters, OutsideGridReported) {
    // T^{1/9}: the only solution needs exponent -9.
    const std::vector<dims::NamedDim> p{{"a", T(1, 9)}};
    EXPECT_EQ(kind_of([&] { (void)dims::reduce_parameters(p); }), ErrorKind::no_inverse_time);
}

TEST(ReduceParameters, LinearRelationProperty) {
    int solved = 0;
    for (std::uint64_t i = 0; i < 300; ++i) {
        std::vector<dims::NamedDim> p;
        const std::size_t n = 1 + i % 3;
        for (std::size_t j = 0; j < n; ++j)
            p.push_back({"p" + std::to_string(j), TimeDim{random_rational(2, 4 * i + j)}});
        try {
            const auto r = dims::reduce_parameters(p);
            Rational sum;
            for (std::size_t j = 0; j < n; ++j) sum += r.exponents[j] * p[j].dim.exponent;
            EXPECT_EQ(sum, Rational(-1));
            EXPECT_EQ(r.dim, T(-1));
            for (const auto& w : r.exponents) {
                EXPECT_LE(w.den(), 4);
                EXPECT_LE(std::abs(w.num()), 8);
            }
            ++solved;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::no_inverse_time);
        }
    }
    EXPECT_GT(solved, 150);
}

TEST(Nondimensionalize, Examples) {
    const double A = 1.3, B = 0.7, k = 2.0, r0 = 0.04;
    const std::vector<double> xs{1e-3, 0.1, 1.0, 7.0};
    const auto lin = dims::nondimensionalize([&](double s) { return -A * r0 * s; },
                                             [&](double s) { return B * s * s; }, r0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_NEAR(lin.f[i], -A * xs[i], 1e-14 * xs[i]);
        EXPECT_NEAR(lin.g[i], B, 1e-14);
    }
    const std::vector<double> one{1.0};
    const auto full = dims::nondimensionalize(
        [&](double s) { return k * std::pow(r0, 1.5) - A * r0 * s; },
        [&](double s) { return B * s * s; }, r0, one);
    // x = 1 means sigma = sqrt(r0): alpha / sigma^3 there.
    const double s = std::sqrt(r0);
    EXPECT_NEAR(full.f[0], k - A, 1e-13);
    EXPECT_NEAR(full.f[0], (k * std::pow(r0, 1.5) - A * r0 * s) / (s * s * s), 1e-13);
}

TEST(Nondimensionalize, RoundTrip) {
    const double r0 = 0.04;
    auto alpha = [&](double s) { return std::pow(r0, 1.5) - r0 * s + 0.3 * std::sqrt(r0) * s * s; };
    auto beta = [&](double s) { return s * s + r0; };
    std::vector<double> xs;
    for (int i = 0; i <= 60; ++i) xs.push_back(std::pow(10.0, -4 + i / 10.0));
    const auto p = dims::nondimensionalize(alpha, beta, r0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double s = std::sqrt(r0 / xs[i]);
        EXPECT_NEAR(s * s * s * p.f[i] / alpha(s), 1.0, 1e-12) << xs[i];
        EXPECT_NEAR(s * s * p.g[i] / beta(s), 1.0, 1e-12) << xs[i];
    }
}

TEST(Nondimensionalize, DomainErrors) {
    auto a = [](double s) { return -s; };
    auto b = [](double s) { return s * s; };
    const std::vector<double> bad{1.0, 0.0}, good{1.0};
    EXPECT_EQ(kind_of([&] { (void)dims::nondimensionalize(a, b, 0.04, bad); }), ErrorKind::domain);
    EXPECT_EQ(kind_of([&] { (void)dims::nondimensionalize(a, b, 0.0, good); }), ErrorKind::domain);
}
