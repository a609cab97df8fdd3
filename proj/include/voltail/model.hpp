// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace voltail::model {

/// Scalar parameters of a volatility model. Rates are per year.
struct ModelParams {
    double A = 1.0;    // -f'(0), dimensionless
    double B = 1.0;    // g(0), dimensionless
    double k = 1.0;    // low-volatility regularisation of the built-in f
    double r0 = 0.04;  // mean-reversion rate [1/yr]
    double rho = 0.0;  // corr(W1, W2); experimental
    double mu = 0.0;   // price drift [1/yr]

    /// Throws ErrorKind::domain unless A >= 0, k >= 0, r0 > 0, |rho| <= 1 and
    /// B > 0 (B >= 0 when zero diffusion is allowed).
    void validate(bool allow_zero_diffusion = false) const;
};

enum class CoefficientFamily { builtin, power_series, custom };

/// One term c * x^p of a power-series coefficient function.
struct PowerTerm {
    double coef = 0.0;
    double power = 0.0;
};

/// The dimensionless pair (f, g) with alpha = sigma^3 f(r0 sigma^-2),
/// beta = sigma^2 g(r0 sigma^-2).
class CoefficientPair {
public:
    /// f(x) = k x^{3/2} - A x, g(x) = B.
    static CoefficientPair builtin(double A, double B, double k);
    static CoefficientPair power_series(std::vector<PowerTerm> f_terms,
                                        std::vector<PowerTerm> g_terms);
    static CoefficientPair custom(std::function<double(double)> f,
                                  std::function<double(double)> g, std::string name);

    [[nodiscard]] double f(double x) const { return f_(x); }
    [[nodiscard]] double g(double x) const { return g_(x); }

    [[nodiscard]] CoefficientFamily family() const noexcept { return family_; }
    [[nodiscard]] bool is_builtin() const noexcept { return family_ == CoefficientFamily::builtin; }
    [[nodiscard]] const std::vector<PowerTerm>& f_terms() const noexcept { return f_terms_; }
    [[nodiscard]] const std::vector<PowerTerm>& g_terms() const noexcept { return g_terms_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

    // Built-in scalars; meaningful only when is_builtin().
    [[nodiscard]] double builtin_A() const noexcept { return A_; }
    [[nodiscard]] double builtin_B() const noexcept { return B_; }
    [[nodiscard]] double builtin_k() const noexcept { return k_; }

private:
    CoefficientFamily family_ = CoefficientFamily::custom;
    std::function<double(double)> f_;
    std::function<double(double)> g_;
    std::vector<PowerTerm> f_terms_;
    std::vector<PowerTerm> g_terms_;
    std::string name_;
    double A_ = 0.0, B_ = 0.0, k_ = 0.0;
};

/// Parameters plus coefficient functions: everything needed to evolve sigma.
struct VolatilityModel {
    ModelParams params;
    CoefficientPair coeffs;

    static VolatilityModel builtin(const ModelParams& p);
};

/// alpha = sigma^3 f(r0 sigma^-2) [T^-3/2]. Domain error for sigma <= 0.
[[nodiscard]] double alpha(const ModelParams& params, const CoefficientPair& coeffs, double sigma);

/// beta = sigma^2 g(r0 sigma^-2) [T^-1]. NegativeDiffusion if g <= 0.
[[nodiscard]] double beta(const ModelParams& params, const CoefficientPair& coeffs, double sigma);

/// Outcome of the f(0)=0, f'(0)<=0, g(0)>0 checks, with the extrapolated values.
struct AsymptoticReport {
    double f0 = 0.0;
    double f_prime0 = 0.0;
    double g0 = 0.0;
    double A = 0.0;  // -f'(0+)
    double B = 0.0;  // g(0+)
    double f_prime0_error = 0.0;  // Richardson error estimates
    double g0_error = 0.0;
    bool f0_zero = false;
    bool f_prime_nonpositive = false;
    bool g0_positive = false;

    [[nodiscard]] bool pass() const { return f0_zero && f_prime_nonpositive && g0_positive; }
    /// Human-readable list of the failing conditions, empty when pass().
    [[nodiscard]] std::string violations() const;
};

/// Extrapolates f(0+), f'(0+) and g(0+) from one-sided samples on (0, h0] using
/// Richardson elimination of the half-integer power terms h^{1/2}, h, h^{3/2}, ...
[[nodiscard]] AsymptoticReport check_asymptotic_conditions(const CoefficientPair& coeffs,
                                                           double h0 = 1e-2);

struct AsymptoticCoeffs {
    double A = 0.0;
    double B = 0.0;
    AsymptoticReport report;
};

/// (A, B) = (-f'(0), g(0)); throws ErrorKind::condition_violated naming the failed conditions.
[[nodiscard]] AsymptoticCoeffs asymptotic_coeffs(const CoefficientPair& coeffs);

struct StylizedFactReport {
    bool mean_reversion_ok = false;
    double worst_sigma = 0.0;        // sigma >= sigma_min with the largest alpha
    double worst_alpha = 0.0;

    bool long_memory_ok = false;
    double tail_drift_sup = 0.0;     // sup |alpha| sigma^-3 over the top decade
    double tail_drift_final = 0.0;   // value at the largest grid sigma
    bool tail_drift_decreasing = false;

    bool vvol_ok = false;
    double tail_vvol_inf = 0.0;      // inf beta sigma^-2 over the top decade
    double tail_vvol_slope = 0.0;    // log-log slope of beta sigma^-2 over the top decade

    static constexpr double long_memory_threshold = 0.1;
    static constexpr double vvol_slope_tolerance = 0.05;

    [[nodiscard]] bool pass() const { return mean_reversion_ok && long_memory_ok && vvol_ok; }
};

/// Checks mean reversion (alpha <= 0 for sigma >= sigma_min), long memory
/// (|alpha| sigma^-3 decaying to below 0.1 over the top decade) and volatility
/// of volatility (beta sigma^-2 bounded away from zero, no power-law decay).
[[nodiscard]] StylizedFactReport validate_stylized_facts(const ModelParams& params,
                                                         const CoefficientPair& coeffs,
                                                         double sigma_min,
                                                         std::span<const double> sigma_grid);

struct RegimeReport {
    double sigma2_dt = 0.0;
    double sigma2_over_r0 = 0.0;
    bool short_term_ok = false;
    bool high_vol_ok = false;

    static constexpr double short_term_threshold = 0.01;  // sigma^2 dt <= this
    static constexpr double high_vol_threshold = 100.0;   // sigma^2 / r0 >= this
};

/// Order-of-magnitude diagnostics of the short-term high-volatility limit.
[[nodiscard]] RegimeReport regime_diagnostics(double sigma, double r0, double dt);

}  // namespace voltail::model
