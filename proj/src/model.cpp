// SPDX-License-Identifier: Apache-2.0
#include "voltail/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voltail/error.hpp"

namespace voltail::model {

void ModelParams::validate(bool allow_zero_diffusion) const {
    auto bad = [](const char* what) { fail(ErrorKind::domain, std::string("model: ") + what); };
    if (!(A >= 0.0)) bad("A must be >= 0");
    if (!(k >= 0.0)) bad("k must be >= 0");
    if (!(r0 > 0.0)) bad("r0 must be > 0");
    if (!(std::abs(rho) <= 1.0)) bad("rho must lie in [-1, 1]");
    if (!std::isfinite(mu)) bad("mu must be finite");
    if (allow_zero_diffusion ? !(B >= 0.0) : !(B > 0.0)) bad("B must be > 0");
}

namespace {

double eval_terms(const std::vector<PowerTerm>& terms, double x) {
    double s = 0.0;
    for (const auto& t : terms) s += t.power == 0.0 ? t.coef : t.coef * std::pow(x, t.power);
    return s;
}

}  // namespace

CoefficientPair CoefficientPair::builtin(double A, double B, double k) {
    CoefficientPair c = power_series({{k, 1.5}, {-A, 1.0}}, {{B, 0.0}});
    c.family_ = CoefficientFamily::builtin;
    c.name_ = "builtin";
    c.A_ = A;
    c.B_ = B;
    c.k_ = k;
    return c;
}

CoefficientPair CoefficientPair::power_series(std::vector<PowerTerm> f_terms,
                                              std::vector<PowerTerm> g_terms) {
    for (const auto& t : f_terms) {
        require(t.power >= 0.0, ErrorKind::domain, "power series: negative power in f");
    }
    for (const auto& t : g_terms) {
        require(t.power >= 0.0, ErrorKind::domain, "power series: negative power in g");
    }
    CoefficientPair c;
    c.family_ = CoefficientFamily::power_series;
    c.f_terms_ = std::move(f_terms);
    c.g_terms_ = std::move(g_terms);
    c.f_ = [terms = c.f_terms_](double x) { return eval_terms(terms, x); };
    c.g_ = [terms = c.g_terms_](double x) { return eval_terms(terms, x); };
    c.name_ = "power_series";
    return c;
}

CoefficientPair CoefficientPair::custom(std::function<double(double)> f,
                                        std::function<double(double)> g, std::string name) {
    CoefficientPair c;
    c.family_ = CoefficientFamily::custom;
    c.f_ = std::move(f);
    c.g_ = std::move(g);
    c.name_ = std::move(name);
    return c;
}

VolatilityModel VolatilityModel::builtin(const ModelParams& p) {
    return {p, CoefficientPair::builtin(p.A, p.B, p.k)};
}

double alpha(const ModelParams& params, const CoefficientPair& coeffs, double sigma) {
    require(sigma > 0.0, ErrorKind::domain, "alpha: sigma must be positive");
    if (coeffs.is_builtin()) {
        const double r0 = params.r0;
        return coeffs.builtin_k() * r0 * std::sqrt(r0) - coeffs.builtin_A() * r0 * sigma;
    }
    const double x = params.r0 / (sigma * sigma);
    return sigma * sigma * sigma * coeffs.f(x);
}

double beta(const ModelParams& params, const CoefficientPair& coeffs, double sigma) {
    require(sigma > 0.0, ErrorKind::domain, "beta: sigma must be positive");
    const double gx = coeffs.g(params.r0 / (sigma * sigma));
    if (!(gx > 0.0)) {
        std::ostringstream msg;
        msg << "beta: g(r0 sigma^-2) = " << gx << " <= 0 at sigma = " << sigma;
        fail(ErrorKind::negative_diffusion, msg.str());
    }
    return sigma * sigma * gx;
}

namespace {

struct Extrapolated {
    double value = 0.0;
    double error = 0.0;
};

// Limit h -> 0+ of F(h) when F(h) - F(0) expands in powers h^{1/2}, h, h^{3/2}, ...
// Steps shrink by 4, so eliminating h^{j/2} uses the factor 4^{j/2} = 2^j.
template <class F>
Extrapolated richardson_half_powers(F&& fn, double h0, int levels) {
    std::vector<std::vector<double>> table(levels + 1, std::vector<double>(levels + 1, 0.0));
    double h = h0;
    for (int i = 0; i <= levels; ++i, h *= 0.25) {
        table[i][0] = fn(h);
        for (int j = 1; j <= i; ++j) {
            const double factor = std::ldexp(1.0, j) - 1.0;
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / factor;
        }
    }
    return {table[levels][levels], std::abs(table[levels][levels] - table[levels][levels - 1])};
}

constexpr int kRichardsonLevels = 6;
constexpr double kConditionTolerance = 1e-8;

}  // namespace

std::string AsymptoticReport::violations() const {
    std::ostringstream out;
    const char* sep = "";
    if (!f0_zero) {
        out << sep << "f(0) != 0 (f(0+) = " << f0 << ")";
        sep = "; ";
    }
    if (!f_prime_nonpositive) {
        out << sep << "f'(0) > 0 (f'(0+) = " << f_prime0 << ")";
        sep = "; ";
    }
    if (!g0_positive) out << sep << "g(0) <= 0 (g(0+) = " << g0 << ")";
    return out.str();
}

AsymptoticReport check_asymptotic_conditions(const CoefficientPair& coeffs, double h0) {
    require(h0 > 0.0, ErrorKind::domain, "asymptotic_coeffs: h0 must be positive");
    AsymptoticReport r;
    const auto f0 = richardson_half_powers([&](double h) { return coeffs.f(h); }, h0,
                                           kRichardsonLevels);
    // (f(2h) - f(h)) / h does not depend on f(0).
    const auto fp = richardson_half_powers(
        [&](double h) { return (coeffs.f(2.0 * h) - coeffs.f(h)) / h; }, h0, kRichardsonLevels);
    const auto g0 = richardson_half_powers([&](double h) { return coeffs.g(h); }, h0,
                                           kRichardsonLevels);
    r.f0 = f0.value;
    r.f_prime0 = fp.value;
    r.f_prime0_error = fp.error;
    r.g0 = g0.value;
    r.g0_error = g0.error;
    r.A = -fp.value;
    r.B = g0.value;
    r.f0_zero = std::abs(f0.value) <= kConditionTolerance;
    r.f_prime_nonpositive = fp.value <= kConditionTolerance;
    r.g0_positive = g0.value > kConditionTolerance;
    return r;
}

AsymptoticCoeffs asymptotic_coeffs(const CoefficientPair& coeffs) {
    AsymptoticReport report = check_asymptotic_conditions(coeffs);
    if (!report.pass()) {
        fail(ErrorKind::condition_violated, "asymptotic_coeffs: " + report.violations());
    }
    return {report.A, report.B, report};
}

StylizedFactReport validate_stylized_facts(const ModelParams& params,
                                           const CoefficientPair& coeffs, double sigma_min,
                                           std::span<const double> sigma_grid) {
    require(!sigma_grid.empty(), ErrorKind::domain, "validate_stylized_facts: empty grid");
    for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
        require(sigma_grid[i] > 0.0 && (i == 0 || sigma_grid[i] > sigma_grid[i - 1]),
                ErrorKind::domain, "validate_stylized_facts: grid must be positive and ascending");
    }
    require(sigma_min >= sigma_grid.front() && sigma_min <= sigma_grid.back(), ErrorKind::domain,
            "validate_stylized_facts: sigma_min outside the grid span");

    StylizedFactReport r;
    r.mean_reversion_ok = true;
    r.worst_alpha = -HUGE_VAL;
    for (const double s : sigma_grid) {
        if (s < sigma_min) continue;
        const double a = alpha(params, coeffs, s);
        if (a > r.worst_alpha) {
            r.worst_alpha = a;
            r.worst_sigma = s;
        }
        if (a > 0.0) r.mean_reversion_ok = false;
    }

    // Top decade of the grid; at least the last two points.
    const double top = sigma_grid.back();
    std::size_t first = sigma_grid.size();
    while (first > 0 && sigma_grid[first - 1] >= top / 10.0) --first;
    first = std::min(first, sigma_grid.size() >= 2 ? sigma_grid.size() - 2 : std::size_t{0});
    const auto tail = sigma_grid.subspan(first);

    r.tail_drift_decreasing = true;
    r.tail_drift_sup = 0.0;
    double prev = HUGE_VAL;
    for (const double s : tail) {
        const double d = std::abs(alpha(params, coeffs, s)) / (s * s * s);
        r.tail_drift_sup = std::max(r.tail_drift_sup, d);
        if (d > prev * (1.0 + 1e-12)) r.tail_drift_decreasing = false;
        prev = d;
        r.tail_drift_final = d;
    }
    r.long_memory_ok =
        r.tail_drift_decreasing && r.tail_drift_final < StylizedFactReport::long_memory_threshold;

    r.tail_vvol_inf = HUGE_VAL;
    bool positive = true;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const double s : tail) {
        const double gx = coeffs.g(params.r0 / (s * s));  // = beta sigma^-2
        r.tail_vvol_inf = std::min(r.tail_vvol_inf, gx);
        if (!(gx > 0.0)) {
            positive = false;
            continue;
        }
        const double lx = std::log(s), ly = std::log(gx);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(tail.size());
    const double denom = n * sxx - sx * sx;
    r.tail_vvol_slope = (positive && denom > 0.0) ? (n * sxy - sx * sy) / denom : 0.0;
    r.vvol_ok = positive && r.tail_vvol_inf > 0.0 &&
                r.tail_vvol_slope >= -StylizedFactReport::vvol_slope_tolerance;
    return r;
}

RegimeReport regime_diagnostics(double sigma, double r0, double dt) {
    require(sigma > 0.0 && r0 > 0.0 && dt > 0.0, ErrorKind::domain,
            "regime_diagnostics: inputs must be positive");
    RegimeReport r;
    r.sigma2_dt = sigma * sigma * dt;
    r.sigma2_over_r0 = sigma * sigma / r0;
    r.short_term_ok = r.sigma2_dt <= RegimeReport::short_term_threshold;
    r.high_vol_ok = r.sigma2_over_r0 >= RegimeReport::high_vol_threshold;
    return r;
}

}  // namespace voltail::model
