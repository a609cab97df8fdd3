// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Return tails: P(|X| >= x) from the volatility density by quadrature, from
/// return samples, and from the large-x asymptote, plus the dt scaling fit.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "voltail/density.hpp"
#include "voltail/estimators.hpp"

namespace voltail::tails {

/// `empirical` marks returns ingested from a price series.
enum class Source { quadrature, mc_approx, mc_exact, asymptotic, empirical };
[[nodiscard]] std::string to_string(Source s);

struct TailCurve {
    std::vector<double> x;      // ascending, >= 0
    std::vector<double> pbar;   // P(|X| >= x), non-increasing, in (0, 1]
    std::vector<double> ci_lo;  // 95% Wilson band (samples); equal to pbar otherwise
    std::vector<double> ci_hi;
    std::vector<std::uint64_t> exceed;  // samples with |X| >= x (samples only)
    double dt = 0.0;
    Source source = Source::quadrature;
    std::uint64_t n_samples = 0;

    /// Columns x,pbar,ci_lo,ci_hi,source,dt.
    void write_csv(std::ostream& os) const;
    /// Log-log interpolation between nodes; throws outside [x.front(), x.back()].
    [[nodiscard]] double at(double x) const;
};

struct Pdf {
    std::vector<double> x;
    std::vector<double> p;
    double dt = 0.0;
};

/// p(x) = (2 pi dt)^-1/2 int_0^inf q(z) exp(-x^2 / (2 z^2 dt)) / z dz in ln z
/// over the density's support, per node: adaptive Gauss-Legendre bisection
/// with breaks at the grid knots. Quadrature failures name the worst node.
[[nodiscard]] Pdf return_pdf_quadrature(const density::DensityGrid& q, double dt,
                                        std::span<const double> x_nodes, double rel_tol = 1e-8,
                                        unsigned workers = 1);

/// P(x) = 2 int_x^inf p: log-log cubic Hermite between nodes, power law past
/// the last node. The first node may be 0.
[[nodiscard]] TailCurve tail_from_pdf(const Pdf& pdf);

enum class CountMethod { sorted, counting };

/// Empirical fraction of |X| >= x with 95% Wilson bands. Both methods give
/// identical counts; `counting` scans the samples once per node.
[[nodiscard]] TailCurve tail_from_samples(std::span<const double> samples,
                                          std::span<const double> x_nodes, double dt,
                                          Source source = Source::mc_approx,
                                          CountMethod method = CountMethod::sorted);

struct CIntegral {
    double value = 0.0;
    double error = 0.0;
};

/// int_{-inf}^{inf} |z|^-5 exp(-1/(2 z^2)) dz via u = z^-2 (= 4).
[[nodiscard]] CIntegral c_integral_detail(double rel_tol = 1e-13);
[[nodiscard]] double c_integral();

/// Prefactor of the half-line asymptote P ~ C r0^{3/2} dt^{3/2} x^-3 for a
/// density C0 r0^{3/2} sigma^-4 on sigma > 0: C = (C0/3) sqrt(2/pi) c_integral() / 2.
[[nodiscard]] double tail_constant(double C0);

/// C r0^{3/2} dt^{3/2} x^-3, capped at 1.
[[nodiscard]] TailCurve asymptotic_tail(double C0, double r0, double dt,
                                        std::span<const double> x_nodes);

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

/// x such that x / sqrt(r0 dt) lies in [s_lo, s_hi]: the image of
/// sigma^2 / r0 in [s_lo^2, s_hi^2] under x ~ sigma sqrt(dt).
[[nodiscard]] Window asymptotic_window(double r0, double dt, double s_lo = 10.0, double s_hi = 100.0);

/// Nodes with pbar in [pbar_lo, pbar_hi] and, for sample curves, at least
/// min_exceed exceedances. Throws InsufficientData when fewer than 5 nodes qualify.
[[nodiscard]] Window audited_window(const TailCurve& c, double pbar_lo = 1e-5,
                                    double pbar_hi = 1e-2, std::uint64_t min_exceed = 100);

/// Log-log slope of pbar over the window.
[[nodiscard]] estimators::FitResult tail_exponent(const TailCurve& c, Window w);

/// Evenly log-spaced nodes.
[[nodiscard]] std::vector<double> log_nodes(double lo, double hi, std::size_t n);

struct ScalingFit {
    double exponent = 0.0;
    double std_error = 0.0;
    double x_ref = 0.0;
    std::vector<double> dt;
    std::vector<double> pbar;
};

/// OLS slope of ln P(x_ref) on ln dt. Needs >= 4 distinct dt spanning a
/// decade, and x_ref inside windows[i] for every curve i.
[[nodiscard]] ScalingFit dt_scaling_fit(std::span<const TailCurve> curves, double x_ref,
                                        std::span<const Window> windows);

/// Same with each curve's asymptotic_window(r0, dt, s_lo, s_hi).
[[nodiscard]] ScalingFit dt_scaling_fit(std::span<const TailCurve> curves, double x_ref, double r0,
                                        double s_lo = 10.0, double s_hi = 100.0);

/// Geometric midpoint of the windows' intersection; throws when they don't overlap.
[[nodiscard]] double common_x_ref(std::span<const Window> windows);

/// Stationary volatilities drawn from q (stream stationary_draw), then
/// X = sigma sqrt(dt) Z (stream return_noise), both under `seed`.
[[nodiscard]] std::vector<double> mc_approx_returns(const density::DensityGrid& q, double dt,
                                                    std::uint64_t n, std::uint64_t seed,
                                                    unsigned workers = 1);

/// Same stationary draws, returns integrated over `substeps` simulation steps
/// per window, coupled to mc_approx_returns through the window's W1 total.
[[nodiscard]] std::vector<double> mc_exact_returns(const model::VolatilityModel& m,
                                                   const density::DensityGrid& q, double dt,
                                                   std::uint64_t substeps, std::uint64_t n,
                                                   std::uint64_t seed, unsigned workers = 1);

}  // namespace voltail::tails
