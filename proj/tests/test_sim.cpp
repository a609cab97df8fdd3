// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "voltail/error.hpp"
#include "voltail/rng.hpp"
#include "voltail/sim.hpp"

using namespace voltail;

namespace {

model::VolatilityModel builtin(double A = 1, double B = 1, double k = 1, double r0 = 0.04) {
    model::ModelParams p;
    p.A = A;
    p.B = B;
    p.k = k;
    p.r0 = r0;
    return model::VolatilityModel::builtin(p);
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size()); }

double stdev(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / double(x.size() - 1));
}

}  // namespace

TEST(SimSpec, Defaults) {
    model::ModelParams p;
    const auto s = sim::default_sim_spec(p, 10, 100, 1);
    EXPECT_DOUBLE_EQ(s.dt_sim, 0.25);
    EXPECT_EQ(s.burn_in_steps, 2000u);
    EXPECT_DOUBLE_EQ(s.sigma0, 0.2);
    EXPECT_DOUBLE_EQ(s.sigma_floor, 2e-4);
    EXPECT_DOUBLE_EQ(s.sigma_cap, 200.0);
    p.A = 0;
    EXPECT_EQ(sim::default_burn_in(p, 0.25), 2000u);
    p.A = 2;
    EXPECT_EQ(sim::default_burn_in(p, 0.25), 1000u);
}

TEST(SimSpec, Validation) {
    auto s = sim::default_sim_spec(model::ModelParams{}, 1, 10, 0);
    s.sigma0 = s.sigma_cap * 2;
    EXPECT_THROW(s.validate(), Error);
    s = sim::default_sim_spec(model::ModelParams{}, 1, 10, 0);
    s.record_stride = 3;
    EXPECT_THROW(s.validate(), Error);
    s.record_stride = 5;
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(sim::scheme_from_string("tamed-euler"), sim::Scheme::tamed_euler);
    EXPECT_THROW((void)sim::scheme_from_string("euler"), Error);
}

TEST(Sim, DeterministicOdeWithoutDiffusion) {
    const auto m = builtin(1, 0, 0, 0.04);
    auto spec = sim::default_sim_spec(m.params, 3, 400, 7);
    spec.burn_in_steps = 0;
    spec.dt_sim = 0.05;
    spec.sigma0 = 0.3;
    for (auto scheme : {sim::Scheme::reciprocal_euler}) {
        spec.scheme = scheme;
        const auto e = sim::simulate_volatility(m, spec);
        for (std::uint64_t r = 0; r < e.n_records; r += 50) {
            const double exact = 0.3 * std::exp(-m.params.A * m.params.r0 * e.time(r));
            EXPECT_NEAR(e.sigma_path(2)[r], exact, 1e-6 * exact);
        }
    }
}

TEST(Sim, TamedEulerConvergesOnOde) {
    const auto m = builtin(1, 0, 0, 0.04);
    auto spec = sim::default_sim_spec(m.params, 1, 20000, 7);
    spec.burn_in_steps = 0;
    spec.dt_sim = 0.001;
    spec.sigma0 = 0.3;
    spec.scheme = sim::Scheme::tamed_euler;
    const auto e = sim::simulate_volatility(m, spec);
    const double exact = 0.3 * std::exp(-0.04 * e.time(e.n_records - 1));
    EXPECT_NEAR(e.sigma.back(), exact, 1e-4 * exact);
    spec.dt_sim /= 2;
    spec.n_steps *= 2;
    const auto f = sim::simulate_volatility(m, spec);
    EXPECT_NEAR((e.sigma.back() - exact) / (f.sigma.back() - exact), 2.0, 0.1);
}

TEST(Sim, FrozenZeroVolatilityGrowsPriceExactly) {
    model::ModelParams p;
    p.A = 0;
    p.B = 0;
    p.k = 0;
    p.mu = 0.07;
    const auto m = model::VolatilityModel::builtin(p);
    sim::SimSpec spec;
    spec.n_paths = 5;
    spec.n_steps = 100;
    spec.dt_sim = 0.01;
    spec.sigma0 = spec.sigma_floor = spec.sigma_cap = 0.0;
    spec.s0 = 2.0;
    const auto e = sim::simulate_joint(m, spec);
    for (std::uint64_t r = 0; r < e.n_records; ++r) {
        EXPECT_EQ(e.sigma_path(4)[r], 0.0);
        const double exact = 2.0 * std::exp(0.07 * e.time(r));
        EXPECT_NEAR(e.price_path(4)[r], exact, 1e-13 * exact);
    }
}

TEST(Sim, BareModelStaysFinite) {
    const auto m = builtin(0, 1, 0, 0.04);
    auto spec = sim::default_sim_spec(m.params, 256, 1000, 3);
    spec.burn_in_steps = 0;
    spec.dt_sim = 10.0 / m.params.r0 / 1000.0;
    const auto e = sim::simulate_volatility(m, spec);
    for (double s : e.sigma) ASSERT_TRUE(std::isfinite(s) && s >= spec.sigma_floor && s <= spec.sigma_cap);
    EXPECT_LE(e.clamps.cap_fraction(), sim::kMaxCapFraction);
    EXPECT_EQ(e.clamps.steps, 256u * 1000u);
}

TEST(Sim, RejectsModelWithoutMeanReversion) {
    const auto m = builtin(0, 1, 1, 0.04);
    EXPECT_THROW((void)sim::simulate_volatility(m, sim::default_sim_spec(m.params, 1, 10, 0)), Error);
}

TEST(Sim, InvariantToWorkersAndKernels) {
    const auto m = builtin();
    auto spec = sim::default_sim_spec(m.params, 200, 300, 99);
    spec.burn_in_steps = 100;
    spec.record_stride = 3;
    const auto a = sim::simulate_joint(m, spec, {1, &simd::scalar_kernels()});
    const auto b = sim::simulate_joint(m, spec, {3, nullptr});
    ASSERT_EQ(a.sigma.size(), b.sigma.size());
    EXPECT_EQ(std::memcmp(a.sigma.data(), b.sigma.data(), a.sigma.size() * 8), 0);
    EXPECT_EQ(std::memcmp(a.price.data(), b.price.data(), a.price.size() * 8), 0);
    EXPECT_EQ(a.clamps.floor_hits, b.clamps.floor_hits);

    // The volatility-only run follows the same paths.
    const auto v = sim::simulate_volatility(m, spec, {2, nullptr});
    EXPECT_EQ(std::memcmp(a.sigma.data(), v.sigma.data(), a.sigma.size() * 8), 0);

    // Path i does not depend on the ensemble size.
    auto small = spec;
    small.n_paths = 70;
    const auto c = sim::simulate_volatility(m, small);
    for (std::uint64_t i = 0; i < 70; ++i) {
        const auto x = a.sigma_path(i), y = c.sigma_path(i);
        EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
    }
}

TEST(Sim, GenericCoefficientsMatchBuiltinStatistically) {
    // Same model through the callable route: identical law, different code path.
    const auto m = builtin();
    auto gm = m;
    gm.coeffs = model::CoefficientPair::custom([](double x) { return x * std::sqrt(x) - x; },
                                              [](double) { return 1.0; }, "builtin-copy");
    auto spec = sim::default_sim_spec(m.params, 512, 400, 5);
    spec.record_stride = 400;
    const auto a = sim::simulate_volatility(m, spec);
    const auto b = sim::simulate_volatility(gm, spec);
    std::vector<double> sa, sb;
    for (std::uint64_t i = 0; i < spec.n_paths; ++i) {
        sa.push_back(std::log(a.sigma_path(i)[1]));
        sb.push_back(std::log(b.sigma_path(i)[1]));
    }
    EXPECT_NEAR(mean(sa), mean(sb), 4 * stdev(sa) / std::sqrt(double(sa.size())) * std::sqrt(2.0));
}

// Coupled weak-order check: the coarse step uses the normalised sum of the
// fine normals, so level differences carry less Monte Carlo noise. sigma^2 has
// infinite variance under a sigma^-4 tail, so its differences are only
// required to obey the first-order identity d(h) = 2 d(h/2) within noise.
TEST(Sim, WeakOrderOne) {
    model::ModelParams p;
    p.r0 = 1.0;
    const auto m = model::VolatilityModel::builtin(p);
    const std::size_t n = 1 << 21;
    const int levels = 4;
    const int finest = 32;  // steps over T = 1/r0 at the finest level
    auto spec = sim::default_sim_spec(p, n, 1, 0);
    spec.sigma0 = 1.0;
    const auto& k = simd::active_kernels();

    std::vector<std::vector<double>> state(levels, std::vector<double>(n, 1.0));
    std::vector<std::vector<double>> acc(levels, std::vector<double>(3 * n, 0.0));
    std::vector<double> z0(n), z1(n), z2(n), z3(n);
    std::vector<sim::VolStepper> steppers;
    for (int l = 0; l < levels; ++l) steppers.emplace_back(m, spec, 1.0 / double(finest >> l), k);
    std::vector<simd::ClampCounts> counts(levels);
    for (int j = 0; j < finest; ++j) {
        k.normal_pairs(17, 0, 2 * j, n, z0.data(), z1.data());
        k.normal_pairs(17, 0, 2 * j + 1, n, z2.data(), z3.data());
        for (int l = 0; l < levels; ++l) {
            auto& a = acc[l];
            for (std::size_t i = 0; i < n; ++i) {
                a[i] += z0[i];
                a[n + i] += z1[i];
                a[2 * n + i] += z2[i];
            }
            const int group = 1 << l;
            if ((j + 1) % group != 0) continue;
            const double c = 1.0 / std::sqrt(double(group));
            for (auto& x : a) x *= c;
            steppers[l].step(n, state[l].data(), a.data(), a.data() + n, a.data() + 2 * n, counts[l]);
            std::fill(a.begin(), a.end(), 0.0);
        }
    }
    // d[l] = E[coarse level l+1] - E[fine level l]; the step doubles with l.
    std::vector<double> d1(levels - 1), d2(levels - 1), e2(levels - 1);
    for (int l = 0; l + 1 < levels; ++l) {
        double s1 = 0, s2 = 0, q2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = 1.0 / state[l + 1][i], b = 1.0 / state[l][i];
            s1 += a - b;
            s2 += a * a - b * b;
            q2 += (a * a - b * b) * (a * a - b * b);
        }
        d1[l] = s1 / double(n);
        d2[l] = s2 / double(n);
        e2[l] = std::sqrt((q2 / double(n) - d2[l] * d2[l]) / double(n));
    }
    // Mean ratio of successive differences over the three halvings.
    const double r = std::sqrt(d1[levels - 2] / d1[0]);
    EXPECT_GE(r, 1.5);
    EXPECT_LE(r, 2.5);
    for (int l = 0; l + 1 < levels - 1; ++l) {
        EXPECT_GT(d1[l + 1], d1[l]) << "E[sigma] differences shrink with the step, level " << l;
        EXPECT_LE(std::abs(d2[l + 1] - 2.0 * d2[l]), 3.0 * std::hypot(e2[l + 1], 2.0 * e2[l]))
            << "E[sigma^2] at level " << l;
    }
}

TEST(Sim, StationaryHalvesAgree) {
    const auto m = builtin();
    auto spec = sim::default_sim_spec(m.params, 1024, 4000, 21);
    spec.record_stride = 100;
    const auto e = sim::simulate_volatility(m, spec, {1, nullptr});
    const std::size_t bins = 40;
    std::vector<double> h1(bins, 0), h2(bins, 0);
    const double lo = std::log(spec.sigma_floor), w = (std::log(spec.sigma_cap) - lo) / bins;
    double n1 = 0, n2 = 0;
    for (std::uint64_t i = 0; i < spec.n_paths; ++i) {
        const auto s = e.sigma_path(i);
        for (std::uint64_t r = 1; r < e.n_records; ++r) {
            const auto b = std::min<std::size_t>(bins - 1, std::size_t((std::log(s[r]) - lo) / w));
            if (r <= e.n_records / 2) {
                h1[b] += 1;
                n1 += 1;
            } else {
                h2[b] += 1;
                n2 += 1;
            }
        }
    }
    double l1 = 0;
    for (std::size_t b = 0; b < bins; ++b) l1 += std::abs(h1[b] / n1 - h2[b] / n2);
    EXPECT_LE(l1, 0.03);
}

TEST(Sim, PerfectCorrelation) {
    model::ModelParams p;
    p.B = 0;
    p.k = 0;
    p.rho = 1.0;
    const auto m = model::VolatilityModel::builtin(p);
    auto spec = sim::default_sim_spec(p, 256, 20, 4);
    spec.burn_in_steps = 0;
    spec.dt_sim = 0.01;
    const auto e = sim::simulate_joint(m, spec);
    // Volatility is deterministic here, so across paths each step's log return
    // is an affine function of its W2 increment, dW2 = -sqrt(h) z0.
    const auto& k = simd::active_kernels();
    std::vector<double> z0(256), z1(256);
    for (std::uint64_t s = 0; s < spec.n_steps; ++s) {
        k.normal_pairs(spec.seed, rng::make_stream(rng::StreamTag::path, 0), 2 * s, 256, z0.data(), z1.data());
        std::vector<double> x, y;
        for (std::size_t i = 0; i < 256; ++i) {
            x.push_back(std::log(e.price_path(i)[s + 1] / e.price_path(i)[s]));
            y.push_back(-z0[i]);
        }
        const double mx = mean(x), my = mean(y);
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        EXPECT_NEAR(sxy / std::sqrt(sxx * syy), 1.0, 1e-9);
    }
}

TEST(Sim, PriceIsMartingale) {
    const auto m = builtin();
    auto spec = sim::default_sim_spec(m.params, 4096, 40, 8);
    spec.dt_sim = 0.01;
    spec.burn_in_steps = 2000;
    const auto e = sim::simulate_joint(m, spec);
    std::vector<double> r;
    for (double x : sim::path_log_returns(e, 10)) r.push_back(std::expm1(x));
    EXPECT_LT(std::abs(mean(r)), 3 * stdev(r) / std::sqrt(double(r.size())));
    EXPECT_EQ(r.size(), 4096u * 4u);
    EXPECT_EQ(sim::path_log_returns(e, 10, true).size(), 4096u * 31u);
}

TEST(Sim, ExportFormats) {
    const auto m = builtin();
    auto spec = sim::default_sim_spec(m.params, 2, 4, 1);
    spec.burn_in_steps = 0;
    const auto e = sim::simulate_joint(m, spec);
    std::ostringstream csv, bin;
    e.write_csv(csv);
    e.write_binary(bin);
    const std::string c = csv.str();
    EXPECT_EQ(c.substr(0, 18), "path_id,t,sigma,S\n");
    EXPECT_EQ(std::count(c.begin(), c.end(), '\n'), 1 + 2 * 5);
    const std::string b = bin.str();
    ASSERT_EQ(b.size(), 40u + 2 * 5 * 4 * 8);
    EXPECT_EQ(std::memcmp(b.data(), "VTPATHS\0", 8), 0);
    std::uint64_t n_rec = 0;
    std::memcpy(&n_rec, b.data() + 24, 8);
    EXPECT_EQ(n_rec, 5u);
    double sigma_last = 0;
    std::memcpy(&sigma_last, b.data() + b.size() - 16, 8);
    EXPECT_EQ(sigma_last, e.sigma.back());
}

TEST(Returns, ConstantSigmaIsScaledNormal) {
    std::vector<double> s(100000, 0.3);
    const auto x = sim::sample_returns_approx(s, 0.01, 5);
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] / (0.3 * 0.1);
    std::sort(z.begin(), z.end());
    // Kolmogorov-Smirnov against N(0,1); 1% critical value 1.628/sqrt(n).
    double d = 0;
    const double n = double(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double F = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
        d = std::max({d, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
    }
    EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(Returns, DtScalingIsExact) {
    std::vector<double> s{0.1, 0.5, 2.0, 30.0, 7.0};
    const auto a = sim::sample_returns_approx(s, 1e-4, 9);
    const auto b = sim::sample_returns_approx(s, 4e-4, 9);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(b[i], 2.0 * a[i]);
    const auto c = sim::sample_returns_approx(s, 1e-4, 9, {1, &simd::scalar_kernels()});
    EXPECT_EQ(a, c);
}

TEST(Returns, ExactWithFrozenVolatilityIsNormal) {
    model::ModelParams p;
    p.A = p.B = p.k = 0;
    const auto m = model::VolatilityModel::builtin(p);
    sim::SimSpec spec;
    spec.dt_sim = 0.001;
    spec.sigma0 = spec.sigma_floor = spec.sigma_cap = 0.4;
    spec.seed = 12;
    const std::vector<double> s0(50000, 0.4);
    const double dt = 0.004;
    const auto x = sim::sample_returns_exact(m, dt, s0, spec);
    const auto xa = sim::sample_returns_approx(s0, dt, 12);
    for (std::size_t i = 0; i < x.size(); ++i) {
        // exact = approx - sigma^2 dt / 2, up to rounding of the bridge sum
        EXPECT_NEAR(x[i], xa[i] - 0.5 * 0.16 * dt, 1e-15);
    }
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] + 0.5 * 0.16 * dt) / (0.4 * std::sqrt(dt));
    EXPECT_NEAR(mean(z), 0.0, 4.0 / std::sqrt(double(z.size())));
    EXPECT_NEAR(stdev(z), 1.0, 4.0 / std::sqrt(2.0 * double(z.size())));
}

TEST(Returns, ExactRequiresWholeSubsteps) {
    const auto m = builtin();
    auto spec = sim::default_sim_spec(m.params, 1, 1, 0);
    spec.dt_sim = 0.003;
    const std::vector<double> s0{0.2};
    EXPECT_THROW((void)sim::sample_returns_exact(m, 0.01, s0, spec), Error);
    EXPECT_THROW((void)sim::sample_returns_exact(m, 0.001, s0, spec), Error);
    EXPECT_NO_THROW((void)sim::sample_returns_exact(m, 0.009, s0, spec));
}

TEST(Returns, ExactIndependentOfWorkers) {
    const auto m = builtin();
    auto spec = sim::default_sim_spec(m.params, 1, 1, 3);
    spec.dt_sim = 0.0005;
    std::vector<double> s0(300);
    for (std::size_t i = 0; i < s0.size(); ++i) s0[i] = 0.05 + 0.01 * double(i);
    const auto a = sim::sample_returns_exact(m, 0.004, s0, spec, {1, &simd::scalar_kernels()});
    const auto b = sim::sample_returns_exact(m, 0.004, s0, spec, {4, nullptr});
    EXPECT_EQ(a, b);
}
