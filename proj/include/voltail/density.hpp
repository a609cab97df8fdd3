// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Stationary volatility density: closed form (built-in model), zero-flux
/// Fokker-Planck solve (any coefficient pair), histogram from samples.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "voltail/model.hpp"

namespace voltail::density {

enum class Source { closed_form, fpe, histogram };
[[nodiscard]] std::string to_string(Source s);

/// Log-spaced sigma nodes.
struct GridSpec {
    double sigma_lo = 0.0;
    double sigma_hi = 0.0;
    std::size_t n = 2048;

    [[nodiscard]] std::vector<double> nodes() const;
};

/// 2048 nodes over [1e-3, 1e3] sqrt(r0).
[[nodiscard]] GridSpec default_grid(double r0);

struct DensityGrid {
    std::vector<double> sigma;  // ascending
    std::vector<double> q;      // [T^{1/2}]
    std::vector<double> cdf;    // integral of q from the first node (histogram: from the first edge)
    double norm_check = 0.0;    // integral of q over the grid as computed
    Source source = Source::closed_form;
    double r0 = 0.0;
    double normalizer = 0.0;    // closed form: N; fpe: constant dividing u / beta^2
    double residual = 0.0;      // closed form: max relative zero-flux residual
    // Histogram only.
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
    std::vector<bool> low_confidence;  // bins with fewer than 10 counts
    std::uint64_t n_samples = 0;

    /// Log-log interpolation of q (linear where q vanishes); 0 outside the grid.
    [[nodiscard]] double at(double sigma) const;
    /// Probability mass in [a, b] from the stored cdf.
    [[nodiscard]] double mass(double a, double b) const;
    [[nodiscard]] double cdf_at(double sigma) const;
};

/// Normalisation of the closed form in u = sqrt(r0)/sigma:
/// I = int_0^inf u^2 exp(b u^2 - a u^3) du, a = 2k/(3B^2), b = A/B^2, and N = r0^{3/2} / I.
/// NotNormalizable when k = 0.
[[nodiscard]] double closed_form_integral(double A, double B, double k);

/// q(sigma) = N sigma^-4 exp(-(2k r0^{3/2}/(3B^2)) sigma^-3 + (A r0/B^2) sigma^-2).
[[nodiscard]] double closed_form_q(const model::ModelParams& p, double N, double sigma);

/// Built-in model only. NotNormalizable when k = 0. The zero-flux balance
/// alpha q = (1/2) d(beta^2 q)/dsigma is re-checked at every node using
/// model::alpha / model::beta; the worst relative residual is stored.
[[nodiscard]] DensityGrid closed_form_stationary(const model::ModelParams& p,
                                                 const model::CoefficientPair& coeffs,
                                                 const GridSpec& grid);

enum class Boundary { zero_flux };

/// u = beta^2 q from d ln u / d ln sigma = 2 sigma alpha / beta^2 (5-point
/// Gauss-Legendre per interval in ln sigma), then normalised. NonIntegrable
/// when the normalisation mass piles up at a grid end.
[[nodiscard]] DensityGrid solve_stationary_fpe(const model::VolatilityModel& m,
                                               const GridSpec& grid,
                                               Boundary boundary = Boundary::zero_flux);

/// Log-spaced edges.
[[nodiscard]] std::vector<double> log_edges(double lo, double hi, std::size_t n_bins);

/// density = count / (n width); sigma nodes are geometric bin centres.
/// Samples outside the edges count towards n but no bin. Needs >= 1e4 samples.
[[nodiscard]] DensityGrid histogram_density(std::span<const double> samples,
                                            std::span<const double> edges, double r0);

/// Same from pre-binned counts (one per bin) out of n_total samples.
[[nodiscard]] DensityGrid histogram_from_counts(std::span<const double> edges,
                                                std::span<const std::uint64_t> counts,
                                                std::uint64_t n_total, double r0);

/// Sum over bins of |p_hat - p_ref|, p_ref the reference's bin masses.
[[nodiscard]] double l1_distance(const DensityGrid& hist, const DensityGrid& reference);

struct TailFit {
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double prefactor = 0.0;  // q ~ prefactor sigma^exponent
    double C0 = 0.0;         // prefactor / r0^{3/2}
    std::size_t n_points = 0;
};

/// Least squares of ln q on ln sigma over nodes in [sigma_lo, sigma_hi]
/// (histograms: bins with at least 10 counts). Needs sigma_lo^2/r0 >= 100 and a
/// window of at least one decade inside the grid.
[[nodiscard]] TailFit tail_fit(const DensityGrid& d, double sigma_lo, double sigma_hi);

/// Stationary draws by monotone-spline inversion of the CDF (power-law tail
/// beyond the last node). Draw i uses stream (stationary_draw, i).
[[nodiscard]] std::vector<double> inverse_cdf_sampler(const DensityGrid& d, std::uint64_t n,
                                                      std::uint64_t seed, unsigned workers = 1);

/// Integral of sigma^p q over the grid.
[[nodiscard]] double moment(const DensityGrid& d, double p);

}  // namespace voltail::density
