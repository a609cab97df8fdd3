// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Monte Carlo integration of the volatility SDE and the joint price process.
///
/// Random streams: path i uses stream (path, i); step s of the run (burn-in
/// included) consumes blocks 2s and 2s+1, giving normals z0, z1, z2, z3.
/// z0 drives W2 (dW2 = -sqrt(h) z0), z1 and z2 complete the three-dimensional
/// Bessel step, z3 is the part of W1 independent of W2.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "voltail/model.hpp"
#include "voltail/simd/kernels.hpp"

namespace voltail::sim {

enum class Scheme {
    /// Evolves v = 1/sigma: the b^2/v dt - b dW part exactly (radius of a
    /// 3-D Brownian motion), the remaining drift -f(r0 v^2)/v exactly for the
    /// built-in model (logistic flow) and by Euler otherwise.
    reciprocal_euler,
    /// Tamed Euler on sigma directly.
    tamed_euler,
};

[[nodiscard]] std::string to_string(Scheme s);
[[nodiscard]] Scheme scheme_from_string(const std::string& s);

struct SimSpec {
    std::uint64_t n_paths = 1;
    std::uint64_t n_steps = 1000;       // recorded horizon, after burn-in
    double dt_sim = 0.25;               // [yr]
    std::uint64_t burn_in_steps = 0;
    double sigma0 = 0.2;                // [yr^-1/2]
    double s0 = 1.0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::reciprocal_euler;
    double sigma_floor = 2e-4;
    double sigma_cap = 200.0;
    std::uint64_t record_stride = 1;    // keep every record_stride-th step

    /// Throws ErrorKind::domain. floor == sigma0 == cap (possibly 0) is the
    /// frozen-volatility special case; otherwise 0 < floor < sigma0 < cap.
    void validate() const;
    [[nodiscard]] bool frozen() const noexcept { return sigma_floor == sigma_cap; }
    [[nodiscard]] std::uint64_t n_records() const noexcept { return n_steps / record_stride + 1; }
};

/// Defaults for a model: dt_sim = 0.01/r0, burn-in of 20 mean-reversion
/// times, sigma0 = sqrt(r0), floor/cap = 1e-3 / 1e3 sqrt(r0).
[[nodiscard]] SimSpec default_sim_spec(const model::ModelParams& p, std::uint64_t n_paths,
                                       std::uint64_t n_steps, std::uint64_t seed);

/// 20 / (A r0 dt) steps; 20 / (r0 dt) when A = 0.
[[nodiscard]] std::uint64_t default_burn_in(const model::ModelParams& p, double dt_sim);

struct ClampStats {
    std::uint64_t floor_hits = 0;
    std::uint64_t cap_hits = 0;
    std::uint64_t steps = 0;  // path-steps taken, burn-in included

    [[nodiscard]] double floor_fraction() const { return steps ? double(floor_hits) / double(steps) : 0.0; }
    [[nodiscard]] double cap_fraction() const { return steps ? double(cap_hits) / double(steps) : 0.0; }
};

/// Largest tolerated cap_fraction() before SchemeUnstable.
inline constexpr double kMaxCapFraction = 1e-3;

struct RunOptions {
    unsigned workers = 1;
    const simd::KernelSet* kernels = nullptr;  // nullptr: simd::active_kernels()
};

struct PathEnsemble {
    SimSpec spec;
    std::uint64_t n_records = 0;
    std::vector<double> sigma;    // n_paths x n_records, row-major
    std::vector<double> price;    // same shape, empty for volatility-only runs
    ClampStats clamps;
    std::string kernel;
    std::string rng_note;

    [[nodiscard]] bool has_price() const noexcept { return !price.empty(); }
    [[nodiscard]] double time(std::uint64_t record) const {
        return static_cast<double>(record * spec.record_stride) * spec.dt_sim;
    }
    [[nodiscard]] std::span<const double> sigma_path(std::uint64_t i) const {
        return {sigma.data() + i * n_records, n_records};
    }
    [[nodiscard]] std::span<const double> price_path(std::uint64_t i) const {
        return {price.data() + i * n_records, n_records};
    }

    /// Columns path_id,t,sigma[,S]; one row per record.
    void write_csv(std::ostream& out) const;
    /// Little-endian: "VTPATHS\0", u64 version (1), u64 n_paths, u64 n_records,
    /// u64 n_columns, then float64 rows (path_id, t, sigma[, S]) row-major.
    void write_binary(std::ostream& out) const;
};

/// Advances a batch of lanes by one step of the chosen scheme. The state is
/// v = 1/sigma for the reciprocal scheme and sigma for tamed Euler.
class VolStepper {
public:
    VolStepper(const model::VolatilityModel& m, const SimSpec& spec, double h,
               const simd::KernelSet& kernels);

    void step(std::size_t n, double* state, const double* z0, const double* z1, const double* z2,
              simd::ClampCounts& counts) const;
    [[nodiscard]] double to_state(double sigma) const;
    [[nodiscard]] double to_sigma(double state) const;
    [[nodiscard]] bool reciprocal() const noexcept { return scheme_ == Scheme::reciprocal_euler; }
    [[nodiscard]] bool vectorised() const noexcept { return fast_; }
    [[nodiscard]] double h() const noexcept { return h_; }

private:
    const model::VolatilityModel* model_;
    const simd::KernelSet* kernels_;
    Scheme scheme_;
    double h_, sqrt_h_, floor_, cap_;
    bool fast_ = false;  // built-in model on the reciprocal scheme
    simd::ReciprocalStep rp_{};
};

/// Throws unless the model may be simulated: parameters in domain and the
/// stylized-fact checks pass (vol-of-vol is waived when g == 0, the
/// deterministic limit).
void check_simulation_preconditions(const model::VolatilityModel& m, const SimSpec& spec);

[[nodiscard]] PathEnsemble simulate_volatility(const model::VolatilityModel& m, const SimSpec& spec,
                                               const RunOptions& opt = {});
[[nodiscard]] PathEnsemble simulate_joint(const model::VolatilityModel& m, const SimSpec& spec,
                                          const RunOptions& opt = {});

/// Counts of every post-burn-in state on log-spaced sigma bins, without
/// storing paths. counts[0] is underflow, counts[n_bins + 1] overflow.
struct StationaryCounts {
    std::vector<double> edges;  // n_bins + 1 ascending sigma edges
    std::vector<std::uint64_t> counts;  // one per bin
    std::uint64_t below = 0;            // states under the first edge
    std::uint64_t above = 0;            // states at or over the last edge
    std::uint64_t total = 0;            // all post-burn-in states
    ClampStats clamps;
};

[[nodiscard]] StationaryCounts bin_stationary_states(const model::VolatilityModel& m,
                                                     const SimSpec& spec, double sigma_lo,
                                                     double sigma_hi, std::size_t n_bins,
                                                     const RunOptions& opt = {});

/// X_i = sigma_i * (sqrt(dt) Z_i), Z_i the first normal of stream
/// (return_noise, i), block 0.
[[nodiscard]] std::vector<double> sample_returns_approx(std::span<const double> sigma_samples,
                                                        double dt, std::uint64_t seed,
                                                        const RunOptions& opt = {});

/// ln S(t+dt)/S(t) with sigma evolving inside the window, one window per
/// initial volatility. dt must be a whole number m >= 1 of spec.dt_sim steps.
/// Coupled to sample_returns_approx under seed = spec.seed: the window's total
/// W1 increment is exactly sqrt(dt) Z_i, refined into m sub-increments by a
/// Brownian bridge (stream (bridge, i)); W2 = rho W1 + sqrt(1-rho^2) W_perp
/// with W_perp and the Bessel noise from stream (window_vol, i).
[[nodiscard]] std::vector<double> sample_returns_exact(const model::VolatilityModel& m, double dt,
                                                       std::span<const double> sigma0_samples,
                                                       const SimSpec& spec,
                                                       const RunOptions& opt = {});

/// Log returns over `window` records of every price path; disjoint windows
/// unless `overlapping`.
[[nodiscard]] std::vector<double> path_log_returns(const PathEnsemble& e, std::uint64_t window,
                                                   bool overlapping = false);

}  // namespace voltail::sim
