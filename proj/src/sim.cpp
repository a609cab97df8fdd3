// SPDX-License-Identifier: Apache-2.0
#include "voltail/sim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <ostream>

#include "parallel.hpp"
#include "simd/scalar_lane.hpp"
#include "voltail/error.hpp"
#include "voltail/rng.hpp"

namespace voltail::sim {
namespace {

constexpr std::size_t kChunk = 64;  // paths per work unit

const simd::KernelSet& kernels_of(const RunOptions& opt) {
    return opt.kernels ? *opt.kernels : simd::active_kernels();
}

std::uint64_t n_chunks(std::uint64_t n) { return (n + kChunk - 1) / kChunk; }

bool zero_diffusion(const model::VolatilityModel& m) {
    const auto& c = m.coeffs;
    if (c.is_builtin()) return c.builtin_B() == 0.0;
    for (int i = -6; i <= 6; ++i) {
        if (c.g(std::pow(10.0, i)) != 0.0) return false;
    }
    return true;
}

double reflect(double x, double lo, double hi, simd::ClampCounts& counts, bool state_is_v) {
    if (x > hi) {
        x = hi + (hi - x);
        ++(state_is_v ? counts.floor_hits : counts.cap_hits);
    }
    if (x < lo) {
        x = lo + (lo - x);
        ++(state_is_v ? counts.cap_hits : counts.floor_hits);
    }
    return std::min(std::max(x, lo), hi);
}

std::string rng_note(std::uint64_t seed) {
    return "philox4x32-10 key=seed(" + std::to_string(seed) +
           ") counter=(block,stream); stream=(tag<<56)|path; step s uses blocks 2s,2s+1";
}

void check_unstable(const ClampStats& c) {
    if (c.cap_fraction() > kMaxCapFraction) {
        fail(ErrorKind::scheme_unstable,
             "sim: " + std::to_string(c.cap_hits) + " of " + std::to_string(c.steps) +
                 " steps hit sigma_cap (limit 0.1%)");
    }
}

/// Per-chunk lane buffers.
struct Lanes {
    explicit Lanes(std::size_t n) : state(n), log_s(n), v(n), z0(n), z1(n), z2(n), z3(n) {}
    std::vector<double> state, log_s, v, z0, z1, z2, z3;
};

/// Runs burn-in plus n_steps for paths [first, first + n); calls
/// visit(post_step, lanes) after every post-burn-in step (post_step = 1..n_steps)
/// and once with post_step = 0 when burn-in ends.
template <class Visit>
simd::ClampCounts run_chunk(const model::VolatilityModel& m, const SimSpec& spec,
                            const simd::KernelSet& k, const VolStepper& stepper, std::uint64_t first,
                            std::size_t n, bool with_price, Lanes& L, Visit&& visit) {
    simd::ClampCounts counts;
    const std::uint64_t stream0 = rng::make_stream(rng::StreamTag::path, first);
    std::fill(L.state.begin(), L.state.begin() + n, stepper.to_state(spec.sigma0));
    std::fill(L.log_s.begin(), L.log_s.begin() + n, std::log(spec.s0));
    const double rho = m.params.rho;
    const simd::LogPriceStep lp{spec.dt_sim, std::sqrt(spec.dt_sim), m.params.mu, rho,
                                std::sqrt(std::max(0.0, 1.0 - rho * rho))};
    const std::uint64_t total = spec.burn_in_steps + spec.n_steps;
    for (std::uint64_t s = 0; s < total; ++s) {
        if (s == spec.burn_in_steps) visit(std::uint64_t{0}, L);
        k.normal_pairs(spec.seed, stream0, 2 * s, n, L.z0.data(), L.z1.data());
        if (with_price && s >= spec.burn_in_steps) {
            k.normal_pairs(spec.seed, stream0, 2 * s + 1, n, L.z2.data(), L.z3.data());
            const double* v = L.state.data();
            if (!stepper.reciprocal()) {
                for (std::size_t i = 0; i < n; ++i) L.v[i] = 1.0 / L.state[i];
                v = L.v.data();
            }
            k.log_price_step(lp, n, v, L.z0.data(), L.z3.data(), L.log_s.data());
        } else if (!spec.frozen() && stepper.reciprocal()) {
            k.normal_pairs(spec.seed, stream0, 2 * s + 1, n, L.z2.data(), L.z3.data());
        }
        if (!spec.frozen()) stepper.step(n, L.state.data(), L.z0.data(), L.z1.data(), L.z2.data(), counts);
        if (s >= spec.burn_in_steps) visit(s + 1 - spec.burn_in_steps, L);
    }
    return counts;
}

PathEnsemble simulate(const model::VolatilityModel& m, const SimSpec& spec, const RunOptions& opt,
                      bool with_price) {
    check_simulation_preconditions(m, spec);
    const auto& k = kernels_of(opt);
    const VolStepper stepper(m, spec, spec.dt_sim, k);

    PathEnsemble e;
    e.spec = spec;
    e.n_records = spec.n_records();
    e.sigma.assign(spec.n_paths * e.n_records, 0.0);
    if (with_price) e.price.assign(spec.n_paths * e.n_records, 0.0);
    e.kernel = std::string(k.name);
    e.rng_note = rng_note(spec.seed);

    std::mutex mu;
    detail::parallel_chunks(n_chunks(spec.n_paths), opt.workers, [&](std::uint64_t c) {
        const std::uint64_t first = c * kChunk;
        const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, spec.n_paths - first));
        Lanes L(n);
        const auto counts = run_chunk(m, spec, k, stepper, first, n, with_price, L,
                                      [&](std::uint64_t post, const Lanes& lanes) {
            if (post % spec.record_stride != 0) return;
            const std::uint64_t r = post / spec.record_stride;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint64_t at = (first + i) * e.n_records + r;
                e.sigma[at] = stepper.to_sigma(lanes.state[i]);
                if (with_price) e.price[at] = std::exp(lanes.log_s[i]);
            }
        });
        std::lock_guard lock(mu);
        e.clamps.floor_hits += counts.floor_hits;
        e.clamps.cap_hits += counts.cap_hits;
    });
    e.clamps.steps = spec.n_paths * (spec.burn_in_steps + spec.n_steps);
    check_unstable(e.clamps);
    return e;
}

void put_u64(std::ostream& out, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

}  // namespace

std::string to_string(Scheme s) {
    return s == Scheme::reciprocal_euler ? "reciprocal-euler" : "tamed-euler";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "reciprocal-euler") return Scheme::reciprocal_euler;
    if (s == "tamed-euler") return Scheme::tamed_euler;
    fail(ErrorKind::config, "unknown scheme '" + s + "'");
}

void SimSpec::validate() const {
    require(n_paths > 0 && n_steps > 0, ErrorKind::domain, "SimSpec: counts must be positive");
    require(dt_sim > 0.0 && std::isfinite(dt_sim), ErrorKind::domain, "SimSpec: dt_sim must be positive");
    require(record_stride > 0 && n_steps % record_stride == 0, ErrorKind::domain,
            "SimSpec: record_stride must divide n_steps");
    require(s0 > 0.0, ErrorKind::domain, "SimSpec: s0 must be positive");
    if (frozen()) {
        require(sigma0 == sigma_floor && sigma_floor >= 0.0, ErrorKind::domain,
                "SimSpec: frozen volatility needs sigma_floor == sigma0 == sigma_cap");
        return;
    }
    require(sigma_floor > 0.0 && sigma_floor < sigma0 && sigma0 < sigma_cap && std::isfinite(sigma_cap),
            ErrorKind::domain, "SimSpec: need 0 < sigma_floor < sigma0 < sigma_cap");
}

std::uint64_t default_burn_in(const model::ModelParams& p, double dt_sim) {
    const double rate = p.A > 0.0 ? p.A * p.r0 : p.r0;
    return static_cast<std::uint64_t>(std::ceil(20.0 / (rate * dt_sim)));
}

SimSpec default_sim_spec(const model::ModelParams& p, std::uint64_t n_paths, std::uint64_t n_steps,
                         std::uint64_t seed) {
    SimSpec s;
    s.n_paths = n_paths;
    s.n_steps = n_steps;
    s.dt_sim = 0.01 / p.r0;
    s.burn_in_steps = default_burn_in(p, s.dt_sim);
    s.sigma0 = std::sqrt(p.r0);
    s.sigma_floor = 1e-3 * std::sqrt(p.r0);
    s.sigma_cap = 1e3 * std::sqrt(p.r0);
    s.seed = seed;
    return s;
}

VolStepper::VolStepper(const model::VolatilityModel& m, const SimSpec& spec, double h,
                       const simd::KernelSet& kernels)
    : model_(&m),
      kernels_(&kernels),
      scheme_(spec.scheme),
      h_(h),
      sqrt_h_(std::sqrt(h)),
      floor_(spec.sigma_floor),
      cap_(spec.sigma_cap) {
    const auto& c = m.coeffs;
    fast_ = scheme_ == Scheme::reciprocal_euler && c.is_builtin();
    if (fast_) {
        const double a = c.builtin_A() * m.params.r0;
        const double kk = c.builtin_k() * m.params.r0 * std::sqrt(m.params.r0);
        rp_.b_sqrt_h = c.builtin_B() * sqrt_h_;
        rp_.growth = std::exp(a * h);
        rp_.damping = a > 0.0 ? kk * (std::expm1(a * h) / a) : kk * h;
        rp_.v_lo = 1.0 / cap_;
        rp_.v_hi = 1.0 / floor_;
    }
}

double VolStepper::to_state(double sigma) const { return reciprocal() ? 1.0 / sigma : sigma; }
double VolStepper::to_sigma(double state) const { return reciprocal() ? 1.0 / state : state; }

void VolStepper::step(std::size_t n, double* state, const double* z0, const double* z1,
                      const double* z2, simd::ClampCounts& counts) const {
    if (fast_) {
        kernels_->reciprocal_step(rp_, n, state, z0, z1, z2, &counts);
        return;
    }
    const auto& p = model_->params;
    const auto& c = model_->coeffs;
    if (reciprocal()) {
        const double v_lo = 1.0 / cap_, v_hi = 1.0 / floor_;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = state[i];
            const double g = c.g(p.r0 * v * v);
            require(g >= 0.0, ErrorKind::negative_diffusion, "sim: g < 0 at sigma = " + std::to_string(1.0 / v));
            const double bs = g * sqrt_h_;
            const double w0 = v + bs * z0[i], w1 = bs * z1[i], w2 = bs * z2[i];
            const double r = std::sqrt((w0 * w0 + w1 * w1) + w2 * w2);
            const double out = r - (c.f(p.r0 * r * r) / r) * h_;
            state[i] = reflect(out, v_lo, v_hi, counts, true);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double s = state[i];
        const double a = model::alpha(p, c, s);
        const double b = s * s * c.g(p.r0 / (s * s));
        require(b >= 0.0, ErrorKind::negative_diffusion, "sim: g < 0 at sigma = " + std::to_string(s));
        const double dw = -(sqrt_h_ * z0[i]);
        const double out = s + (a * h_ + b * dw) / (1.0 + (std::abs(a) * h_ + b * sqrt_h_) / s);
        state[i] = reflect(out, floor_, cap_, counts, false);
    }
}

void check_simulation_preconditions(const model::VolatilityModel& m, const SimSpec& spec) {
    m.params.validate(true);
    spec.validate();
    if (spec.frozen()) return;
    const double s = std::sqrt(m.params.r0);
    std::vector<double> grid(121);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = s * std::pow(10.0, -3.0 + 0.05 * double(i));
    const auto r = model::validate_stylized_facts(m.params, m.coeffs, 10.0 * s, grid);
    require(r.mean_reversion_ok, ErrorKind::domain,
            "sim: model lacks mean reversion (alpha > 0 at sigma = " + std::to_string(r.worst_sigma) + ")");
    require(r.long_memory_ok, ErrorKind::domain, "sim: model fails the long-memory check");
    require(r.vvol_ok || zero_diffusion(m), ErrorKind::domain, "sim: model fails the vol-of-vol check");
}

PathEnsemble simulate_volatility(const model::VolatilityModel& m, const SimSpec& spec,
                                 const RunOptions& opt) {
    return simulate(m, spec, opt, false);
}

PathEnsemble simulate_joint(const model::VolatilityModel& m, const SimSpec& spec, const RunOptions& opt) {
    return simulate(m, spec, opt, true);
}

StationaryCounts bin_stationary_states(const model::VolatilityModel& m, const SimSpec& spec,
                                       double sigma_lo, double sigma_hi, std::size_t n_bins,
                                       const RunOptions& opt) {
    check_simulation_preconditions(m, spec);
    require(sigma_lo > 0.0 && sigma_hi > sigma_lo && n_bins > 0, ErrorKind::domain,
            "bin_stationary_states: bad bin range");
    const auto& k = kernels_of(opt);
    const VolStepper stepper(m, spec, spec.dt_sim, k);
    const double log_lo = std::log(sigma_lo);
    const double width = (std::log(sigma_hi) - log_lo) / static_cast<double>(n_bins);
    const double inv_width = 1.0 / width;
    const double scale = stepper.reciprocal() ? -1.0 : 1.0;

    StationaryCounts out;
    out.edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i) out.edges[i] = std::exp(log_lo + width * double(i));
    out.edges.front() = sigma_lo;
    out.edges.back() = sigma_hi;
    out.counts.assign(n_bins + 2, 0);

    std::mutex mu;
    detail::parallel_chunks(n_chunks(spec.n_paths), opt.workers, [&](std::uint64_t c) {
        const std::uint64_t first = c * kChunk;
        const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, spec.n_paths - first));
        Lanes L(n);
        std::vector<std::uint64_t> local(n_bins + 2, 0);
        const auto counts = run_chunk(m, spec, k, stepper, first, n, false, L,
                                      [&](std::uint64_t post, const Lanes& lanes) {
            if (post == 0) return;
            k.accumulate_log_bins(n, lanes.state.data(), scale, log_lo, inv_width, n_bins, local.data());
        });
        std::lock_guard lock(mu);
        for (std::size_t i = 0; i < local.size(); ++i) out.counts[i] += local[i];
        out.clamps.floor_hits += counts.floor_hits;
        out.clamps.cap_hits += counts.cap_hits;
    });
    out.below = out.counts.front();
    out.above = out.counts.back();
    out.counts = std::vector<std::uint64_t>(out.counts.begin() + 1, out.counts.end() - 1);
    out.total = spec.n_paths * spec.n_steps;
    out.clamps.steps = spec.n_paths * (spec.burn_in_steps + spec.n_steps);
    check_unstable(out.clamps);
    return out;
}

std::vector<double> sample_returns_approx(std::span<const double> sigma_samples, double dt,
                                          std::uint64_t seed, const RunOptions& opt) {
    require(dt > 0.0, ErrorKind::domain, "sample_returns_approx: dt must be positive");
    const auto& k = kernels_of(opt);
    const std::size_t n = sigma_samples.size();
    std::vector<double> out(n);
    const double c = std::sqrt(dt);
    const std::uint64_t chunk = 1 << 14;
    detail::parallel_chunks((n + chunk - 1) / chunk, opt.workers, [&](std::uint64_t ci) {
        const std::size_t first = ci * chunk;
        const std::size_t m = std::min<std::size_t>(chunk, n - first);
        std::vector<double> z(m), unused(m);
        k.normal_pairs(seed, rng::make_stream(rng::StreamTag::return_noise, first), 0, m, z.data(), unused.data());
        k.scaled_products(c, m, sigma_samples.data() + first, z.data(), out.data() + first);
    });
    return out;
}

std::vector<double> sample_returns_exact(const model::VolatilityModel& m, double dt,
                                         std::span<const double> sigma0_samples, const SimSpec& spec,
                                         const RunOptions& opt) {
    require(dt > 0.0 && dt >= spec.dt_sim * (1.0 - 1e-12), ErrorKind::domain,
            "sample_returns_exact: need dt >= dt_sim");
    const double steps = std::round(dt / spec.dt_sim);
    require(std::abs(steps * spec.dt_sim - dt) <= 1e-9 * dt, ErrorKind::domain,
            "sample_returns_exact: dt must be a whole number of dt_sim steps");
    const auto n_sub = static_cast<std::uint64_t>(steps);
    const double h = dt / steps;
    const double sqrt_h = std::sqrt(h);
    const double sqrt_dt = std::sqrt(dt);
    SimSpec window = spec;
    window.sigma0 = spec.frozen() ? spec.sigma0 : std::sqrt(spec.sigma_floor * spec.sigma_cap);
    window.burn_in_steps = 0;
    window.n_steps = n_sub;
    window.record_stride = 1;
    window.n_paths = std::max<std::uint64_t>(1, sigma0_samples.size());
    check_simulation_preconditions(m, window);

    const auto& k = kernels_of(opt);
    const VolStepper stepper(m, window, h, k);
    const double rho = m.params.rho;
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double mu = m.params.mu;
    const std::size_t n_total = sigma0_samples.size();
    std::vector<double> out(n_total);
    std::mutex mu_lock;
    ClampStats clamps;

    detail::parallel_chunks(n_chunks(n_total), opt.workers, [&](std::uint64_t c) {
        const std::uint64_t first = c * kChunk;
        const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, n_total - first));
        const std::uint64_t s_noise = rng::make_stream(rng::StreamTag::return_noise, first);
        const std::uint64_t s_bridge = rng::make_stream(rng::StreamTag::bridge, first);
        const std::uint64_t s_vol = rng::make_stream(rng::StreamTag::window_vol, first);
        std::vector<double> total(n), corr(n, 0.0), x(n, 0.0), state(n), a(n), b(n), z0(n), z1(n), z2(n), dw1(n);
        simd::ClampCounts counts;

        k.normal_pairs(spec.seed, s_noise, 0, n, a.data(), b.data());
        for (std::size_t i = 0; i < n; ++i) total[i] = sqrt_dt * a[i];
        for (std::uint64_t j = 0; j < n_sub; ++j) {
            k.normal_pairs(spec.seed, s_bridge, j, n, a.data(), b.data());
            for (std::size_t i = 0; i < n; ++i) corr[i] += sqrt_h * a[i];
        }
        for (std::size_t i = 0; i < n; ++i) corr[i] = (total[i] - corr[i]) / steps;
        for (std::size_t i = 0; i < n; ++i) {
            const double s0 = sigma0_samples[first + i];
            require(s0 >= spec.sigma_floor && s0 <= spec.sigma_cap, ErrorKind::domain,
                    "sample_returns_exact: initial sigma outside [sigma_floor, sigma_cap]");
            state[i] = stepper.to_state(s0);
        }
        for (std::uint64_t j = 0; j < n_sub; ++j) {
            k.normal_pairs(spec.seed, s_bridge, j, n, a.data(), b.data());
            for (std::size_t i = 0; i < n; ++i) dw1[i] = sqrt_h * a[i] + corr[i];
            k.normal_pairs(spec.seed, s_vol, 2 * j, n, a.data(), z1.data());
            k.normal_pairs(spec.seed, s_vol, 2 * j + 1, n, z2.data(), b.data());
            for (std::size_t i = 0; i < n; ++i) {
                const double sig = stepper.to_sigma(state[i]);
                x[i] += (mu - 0.5 * (sig * sig)) * h + sig * dw1[i];
                const double dw2 = rho * dw1[i] + rho_perp * (sqrt_h * a[i]);
                z0[i] = -(dw2 / sqrt_h);
            }
            if (!window.frozen()) stepper.step(n, state.data(), z0.data(), z1.data(), z2.data(), counts);
        }
        std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
        std::lock_guard lock(mu_lock);
        clamps.floor_hits += counts.floor_hits;
        clamps.cap_hits += counts.cap_hits;
    });
    clamps.steps = n_total * n_sub;
    check_unstable(clamps);
    return out;
}

std::vector<double> path_log_returns(const PathEnsemble& e, std::uint64_t window, bool overlapping) {
    require(e.has_price(), ErrorKind::domain, "path_log_returns: ensemble has no prices");
    require(window > 0 && window < e.n_records, ErrorKind::domain, "path_log_returns: bad window");
    const std::uint64_t stride = overlapping ? 1 : window;
    std::vector<double> out;
    for (std::uint64_t p = 0; p < e.spec.n_paths; ++p) {
        const auto s = e.price_path(p);
        for (std::uint64_t r = 0; r + window < e.n_records; r += stride) out.push_back(std::log(s[r + window] / s[r]));
    }
    return out;
}

void PathEnsemble::write_csv(std::ostream& out) const {
    out << (has_price() ? "path_id,t,sigma,S\n" : "path_id,t,sigma\n");
    char buf[128];
    for (std::uint64_t p = 0; p < spec.n_paths; ++p) {
        for (std::uint64_t r = 0; r < n_records; ++r) {
            const std::uint64_t at = p * n_records + r;
            int len = has_price()
                          ? std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g\n", (unsigned long long)p,
                                          time(r), sigma[at], price[at])
                          : std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g\n", (unsigned long long)p, time(r),
                                          sigma[at]);
            out.write(buf, len);
        }
    }
}

void PathEnsemble::write_binary(std::ostream& out) const {
    out.write("VTPATHS\0", 8);
    const std::uint64_t cols = has_price() ? 4 : 3;
    put_u64(out, 1);
    put_u64(out, spec.n_paths);
    put_u64(out, n_records);
    put_u64(out, cols);
    for (std::uint64_t p = 0; p < spec.n_paths; ++p) {
        for (std::uint64_t r = 0; r < n_records; ++r) {
            const std::uint64_t at = p * n_records + r;
            put_f64(out, static_cast<double>(p));
            put_f64(out, time(r));
            put_f64(out, sigma[at]);
            if (has_price()) put_f64(out, price[at]);
        }
    }
}

}  // namespace voltail::sim
