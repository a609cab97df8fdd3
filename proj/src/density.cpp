// SPDX-License-Identifier: Apache-2.0
#include "voltail/density.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <limits>

#include "loglog.hpp"
#include "parallel.hpp"
#include "voltail/error.hpp"
#include "voltail/quad.hpp"
#include "voltail/rng.hpp"
#include "voltail/simd/kernels.hpp"

namespace voltail::density {
namespace {

using GL = quad::GaussLegendre5;

/// sum_k w_k f(t_k) over [ta, tb] in the variable t.
template <class F>
double gl5(double ta, double tb, F&& f) {
    const double mid = 0.5 * (ta + tb), half = 0.5 * (tb - ta);
    double s = 0.0;
    for (int k = 0; k < 5; ++k) s += GL::w[k] * f(mid + half * GL::x[k]);
    return s * half;
}

std::size_t interval_of(const std::vector<double>& x, double v) {
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    return std::min(i, x.size() - 2);
}

void require_grid(const GridSpec& g) {
    require(g.sigma_lo > 0.0 && g.sigma_hi > g.sigma_lo && g.n >= 4, ErrorKind::domain,
            "density grid: need 0 < sigma_lo < sigma_hi and at least 4 nodes");
}

/// Mass per grid interval of the interpolated density.
std::vector<double> interval_masses(const DensityGrid& d) {
    std::vector<double> m(d.sigma.size() - 1);
    for (std::size_t i = 0; i + 1 < d.sigma.size(); ++i) {
        m[i] = gl5(std::log(d.sigma[i]), std::log(d.sigma[i + 1]), [&](double t) {
            const double s = std::exp(t);
            return d.at(s) * s;
        });
    }
    return m;
}

std::vector<double> uniforms(std::uint64_t n, std::uint64_t seed, unsigned workers) {
    std::vector<double> u(n);
    const auto& k = simd::active_kernels();
    const std::uint64_t chunk = 1 << 14;
    detail::parallel_chunks((n + chunk - 1) / chunk, workers, [&](std::uint64_t c) {
        const std::uint64_t first = c * chunk;
        const std::size_t m = static_cast<std::size_t>(std::min(chunk, n - first));
        std::vector<double> other(m);
        k.uniform_pairs(seed, rng::make_stream(rng::StreamTag::stationary_draw, first), 0, m, u.data() + first,
                        other.data());
    });
    return u;
}

}  // namespace

std::string to_string(Source s) {
    switch (s) {
        case Source::closed_form: return "closed-form";
        case Source::fpe: return "fpe";
        case Source::histogram: return "histogram";
    }
    return "?";
}

std::vector<double> GridSpec::nodes() const {
    require_grid(*this);
    std::vector<double> x(n);
    const double a = std::log(sigma_lo), b = std::log(sigma_hi);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    x.front() = sigma_lo;
    x.back() = sigma_hi;
    return x;
}

GridSpec default_grid(double r0) {
    require(r0 > 0.0, ErrorKind::domain, "default_grid: r0 must be positive");
    return {1e-3 * std::sqrt(r0), 1e3 * std::sqrt(r0), 2048};
}

double DensityGrid::at(double s) const {
    if (source == Source::histogram) {
        if (edges.empty() || s < edges.front() || s >= edges.back()) return 0.0;
        return q[interval_of(edges, s)];
    }
    if (sigma.size() < 2 || s < sigma.front() || s > sigma.back()) return 0.0;
    return detail::loglog_eval(sigma, q, interval_of(sigma, s), s);
}

double DensityGrid::cdf_at(double s) const {
    if (source == Source::histogram) {
        if (s <= edges.front()) return 0.0;
        if (s >= edges.back()) return cdf.back();
        const std::size_t b = interval_of(edges, s);
        return cdf[b] + q[b] * (s - edges[b]);
    }
    if (s <= sigma.front()) return 0.0;
    if (s >= sigma.back()) return cdf.back();
    const std::size_t i = interval_of(sigma, s);
    return cdf[i] + gl5(std::log(sigma[i]), std::log(s), [&](double t) {
               const double x = std::exp(t);
               return at(x) * x;
           });
}

double DensityGrid::mass(double a, double b) const { return cdf_at(b) - cdf_at(a); }

double closed_form_integral(double A, double B, double k) {
    require(k > 0.0, ErrorKind::not_normalizable,
            "closed form: k = 0 leaves the density non-normalizable at small sigma");
    require(B > 0.0 && A >= 0.0, ErrorKind::domain, "closed form: need B > 0 and A >= 0");
    const double a = 2.0 * k / (3.0 * B * B), b = A / (B * B);
    auto f = [a, b](double u) { return u * u * std::exp(u * u * (b - a * u)); };
    // Split at the maximum of u^2 exp(b u^2 - a u^3): 3a u^3 - 2b u^2 - 2 = 0.
    double u = std::max(1.0, 2.0 * b / (3.0 * a));
    for (int it = 0; it < 100; ++it) {
        const double g = 3 * a * u * u * u - 2 * b * u * u - 2, dg = 9 * a * u * u - 4 * b * u;
        const double step = g / dg;
        u -= step;
        if (std::abs(step) < 1e-15 * u) break;
    }
    const double inner = quad::integrate(f, 0.0, u, 1e-12).value;
    const double outer = quad::integrate(f, u, std::numeric_limits<double>::infinity(), 1e-12).value;
    return inner + outer;
}

double closed_form_q(const model::ModelParams& p, double N, double sigma) {
    const double inv = std::sqrt(p.r0) / sigma;  // 1/s
    const double a = 2.0 * p.k / (3.0 * p.B * p.B), b = p.A / (p.B * p.B);
    const double e = inv * inv * (b - a * inv);
    const double s2 = sigma * sigma;
    return N / (s2 * s2) * std::exp(e);
}

DensityGrid closed_form_stationary(const model::ModelParams& p, const model::CoefficientPair& coeffs,
                                   const GridSpec& grid) {
    require(coeffs.is_builtin(), ErrorKind::domain, "closed_form_stationary: built-in coefficient pair only");
    p.validate();
    model::ModelParams q = p;
    q.A = coeffs.builtin_A();
    q.B = coeffs.builtin_B();
    q.k = coeffs.builtin_k();
    const double I = closed_form_integral(q.A, q.B, q.k);

    DensityGrid d;
    d.source = Source::closed_form;
    d.r0 = q.r0;
    d.normalizer = q.r0 * std::sqrt(q.r0) / I;
    d.sigma = grid.nodes();
    d.q.resize(d.sigma.size());
    const double c = 2.0 * q.k * q.r0 * std::sqrt(q.r0) / (3.0 * q.B * q.B);
    const double dd = q.A * q.r0 / (q.B * q.B);
    for (std::size_t i = 0; i < d.sigma.size(); ++i) {
        const double s = d.sigma[i];
        d.q[i] = closed_form_q(q, d.normalizer, s);
        // alpha q against (1/2) d(beta^2 q)/dsigma, with d ln q/dsigma = -4/sigma + E'
        // and E = -c sigma^-3 + dd sigma^-2; beta' by central difference.
        const double a = model::alpha(q, coeffs, s);
        const double b = model::beta(q, coeffs, s);
        const double hs = 1e-5 * s;
        const double db = (model::beta(q, coeffs, s + hs) - model::beta(q, coeffs, s - hs)) / (2.0 * hs);
        const double e_prime = 3.0 * c / (s * s * s * s) - 2.0 * dd / (s * s * s);
        const double rhs = 0.5 * b * b * (2.0 * db / b - 4.0 / s + e_prime);
        const double scale = std::abs(a) + 0.5 * b * b * (std::abs(2.0 * db / b) + 4.0 / s + std::abs(e_prime));
        if (scale > 0.0) d.residual = std::max(d.residual, std::abs(a - rhs) / scale);
    }
    d.cdf.assign(d.sigma.size(), 0.0);
    for (std::size_t i = 0; i + 1 < d.sigma.size(); ++i) {
        d.cdf[i + 1] = d.cdf[i] + gl5(std::log(d.sigma[i]), std::log(d.sigma[i + 1]), [&](double t) {
                           const double s = std::exp(t);
                           return closed_form_q(q, d.normalizer, s) * s;
                       });
    }
    d.norm_check = d.cdf.back();
    return d;
}

DensityGrid solve_stationary_fpe(const model::VolatilityModel& m, const GridSpec& grid, Boundary) {
    m.params.validate();
    const double sr = std::sqrt(m.params.r0);
    require(grid.sigma_lo <= 1e-2 * sr * (1 + 1e-12) && grid.sigma_hi >= 1e2 * sr * (1 - 1e-12), ErrorKind::domain,
            "solve_stationary_fpe: grid must span [1e-2, 1e2] sqrt(r0)");
    DensityGrid d;
    d.source = Source::fpe;
    d.r0 = m.params.r0;
    d.sigma = grid.nodes();
    const std::size_t n = d.sigma.size();
    auto phi = [&](double t) {
        const double s = std::exp(t);
        const double b = model::beta(m.params, m.coeffs, s);
        return 2.0 * s * model::alpha(m.params, m.coeffs, s) / (b * b);
    };
    std::vector<double> t(n), lnq(n), w(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::log(d.sigma[i]);
    double ln_u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) ln_u += gl5(t[i - 1], t[i], phi);
        const double b = model::beta(m.params, m.coeffs, d.sigma[i]);
        lnq[i] = ln_u - 2.0 * std::log(b);
        w[i] = lnq[i] + t[i];
        require(std::isfinite(w[i]), ErrorKind::non_integrable, "solve_stationary_fpe: density overflow");
    }
    const double M = *std::max_element(w.begin(), w.end());
    // g = q sigma e^-M on the ln sigma grid; Hermite-corrected trapezoid per interval.
    std::vector<double> g(n), dg(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(w[i] - M);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
        dg[i] = g[i] * (w[b] - w[a]) / (t[b] - t[a]);
    }
    std::vector<double> part(n - 1);
    double S = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = t[i + 1] - t[i];
        const double trap = 0.5 * h * (g[i] + g[i + 1]), corr = h * h * (dg[i] - dg[i + 1]) / 12.0;
        if (std::abs(corr) <= 0.5 * trap) {
            part[i] = trap + corr;
        } else {
            // Unresolved interval: exact integral of exp(w) with w linear.
            const double dw = w[i + 1] - w[i];
            part[i] = std::abs(dw) < 1e-12 ? trap : h * (g[i + 1] - g[i]) / dw;
        }
        S += part[i];
    }
    require(S > 0.0 && std::isfinite(S), ErrorKind::non_integrable, "solve_stationary_fpe: zero mass on grid");
    constexpr double kEndDensity = 1e-6;  // per unit ln sigma, relative to the total
    require(g.front() / S <= kEndDensity, ErrorKind::non_integrable,
            "solve_stationary_fpe: normalisation diverges at the lower end of the grid");
    require(g.back() / S <= kEndDensity, ErrorKind::non_integrable,
            "solve_stationary_fpe: normalisation diverges at the upper end of the grid");
    d.normalizer = std::exp(M) * S;
    d.q.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.q[i] = std::exp(lnq[i] - M) / S;
    d.cdf.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) d.cdf[i + 1] = d.cdf[i] + part[i] / S;
    // Independent check of the normalisation: composite Simpson on the normalised q.
    double simpson = 0.0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) {
        const double h = t[i + 2] - t[i];
        simpson += h / 6.0 * (d.q[i] * d.sigma[i] + 4.0 * d.q[i + 1] * d.sigma[i + 1] + d.q[i + 2] * d.sigma[i + 2]);
    }
    if (i + 1 < n) simpson += 0.5 * (t[i + 1] - t[i]) * (d.q[i] * d.sigma[i] + d.q[i + 1] * d.sigma[i + 1]);
    d.norm_check = simpson;
    return d;
}

std::vector<double> log_edges(double lo, double hi, std::size_t n_bins) {
    return GridSpec{lo, hi, n_bins + 1}.nodes();
}

DensityGrid histogram_from_counts(std::span<const double> edges, std::span<const std::uint64_t> counts,
                                  std::uint64_t n_total, double r0) {
    require(edges.size() >= 2 && counts.size() + 1 == edges.size(), ErrorKind::domain,
            "histogram: need one count per bin");
    require(n_total > 0, ErrorKind::insufficient_data, "histogram: empty sample set");
    DensityGrid d;
    d.source = Source::histogram;
    d.r0 = r0;
    d.edges.assign(edges.begin(), edges.end());
    d.counts.assign(counts.begin(), counts.end());
    d.n_samples = n_total;
    const std::size_t nb = counts.size();
    d.sigma.resize(nb);
    d.q.resize(nb);
    d.low_confidence.resize(nb);
    d.cdf.assign(nb + 1, 0.0);
    const double n = static_cast<double>(n_total);
    for (std::size_t b = 0; b < nb; ++b) {
        d.sigma[b] = std::sqrt(edges[b] * edges[b + 1]);
        d.q[b] = static_cast<double>(counts[b]) / (n * (edges[b + 1] - edges[b]));
        d.low_confidence[b] = counts[b] < 10;
        d.cdf[b + 1] = d.cdf[b] + static_cast<double>(counts[b]) / n;
    }
    d.norm_check = d.cdf.back();
    return d;
}

DensityGrid histogram_density(std::span<const double> samples, std::span<const double> edges, double r0) {
    require(!samples.empty(), ErrorKind::insufficient_data, "histogram_density: empty sample set");
    require(samples.size() >= 10000, ErrorKind::insufficient_data, "histogram_density: needs at least 1e4 samples");
    require(edges.size() >= 2 && std::is_sorted(edges.begin(), edges.end()), ErrorKind::domain,
            "histogram_density: edges must ascend");
    std::vector<std::uint64_t> counts(edges.size() - 1, 0);
    for (const double x : samples) {
        if (x < edges.front() || x >= edges.back()) continue;
        const auto it = std::upper_bound(edges.begin(), edges.end(), x);
        ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
    return histogram_from_counts(edges, counts, samples.size(), r0);
}

double l1_distance(const DensityGrid& hist, const DensityGrid& reference) {
    require(hist.source == Source::histogram, ErrorKind::domain, "l1_distance: first argument must be a histogram");
    double l1 = 0.0;
    const double n = static_cast<double>(hist.n_samples);
    for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
        l1 += std::abs(static_cast<double>(hist.counts[b]) / n - reference.mass(hist.edges[b], hist.edges[b + 1]));
    }
    return l1;
}

TailFit tail_fit(const DensityGrid& d, double sigma_lo, double sigma_hi) {
    require(sigma_lo > 0.0 && sigma_hi > sigma_lo, ErrorKind::domain, "tail_fit: bad window");
    require(sigma_hi >= 10.0 * sigma_lo * (1 - 1e-12), ErrorKind::domain, "tail_fit: window narrower than one decade");
    require(sigma_lo * sigma_lo / d.r0 >= 100.0 * (1 - 1e-12), ErrorKind::domain,
            "tail_fit: window must satisfy sigma_lo^2 / r0 >= 100");
    const double lo = d.source == Source::histogram ? d.edges.front() : d.sigma.front();
    const double hi = d.source == Source::histogram ? d.edges.back() : d.sigma.back();
    require(sigma_lo >= lo * (1 - 1e-12) && sigma_hi <= hi * (1 + 1e-12), ErrorKind::domain,
            "tail_fit: window outside the grid");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.sigma.size(); ++i) {
        const double s = d.sigma[i];
        if (s < sigma_lo || s > sigma_hi || !(d.q[i] > 0.0)) continue;
        if (d.source == Source::histogram && d.low_confidence[i]) continue;
        const double x = std::log(s), y = std::log(d.q[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++n;
    }
    require(n >= 3, ErrorKind::insufficient_data, "tail_fit: fewer than 3 usable points in the window");
    const double N = static_cast<double>(n);
    const double vx = sxx - sx * sx / N, cxy = sxy - sx * sy / N, vy = syy - sy * sy / N;
    TailFit f;
    f.n_points = n;
    f.exponent = cxy / vx;
    const double intercept = (sy - f.exponent * sx) / N;
    const double rss = std::max(0.0, vy - f.exponent * cxy);
    f.exponent_stderr = n > 2 ? std::sqrt(rss / (N - 2.0) / vx) : 0.0;
    f.prefactor = std::exp(intercept);
    f.C0 = f.prefactor / (d.r0 * std::sqrt(d.r0));
    return f;
}

std::vector<double> inverse_cdf_sampler(const DensityGrid& d, std::uint64_t n, std::uint64_t seed, unsigned workers) {
    if (n == 0) return {};
    const std::vector<double> u = uniforms(n, seed, workers);
    std::vector<double> out(n);

    if (d.source == Source::histogram) {
        const double total = d.cdf.back();
        require(total > 0.0 && std::abs(total - 1.0) <= 1e-3, ErrorKind::domain,
                "inverse_cdf_sampler: histogram mass outside the edges exceeds 1e-3");
        for (std::uint64_t i = 0; i < n; ++i) {
            const double target = u[i] * total;
            std::size_t b = interval_of(d.cdf, target);
            while (b + 1 < d.q.size() && d.counts[b] == 0) ++b;
            const double x = d.edges[b] + (target - d.cdf[b]) / d.q[b];
            out[i] = std::clamp(x, d.edges[b], d.edges[b + 1]);
        }
        return out;
    }

    const std::size_t nn = d.sigma.size();
    const std::vector<double> m = interval_masses(d);
    // Power-law continuation past the last node.
    double p_end = 0.0;
    for (std::size_t j = nn - 1; j > 0; --j) {
        if (d.q[j] > 0.0 && d.q[j - 1] > 0.0) {
            p_end = (std::log(d.q[j]) - std::log(d.q[j - 1])) / (std::log(d.sigma[j]) - std::log(d.sigma[j - 1]));
            break;
        }
    }
    const double tail = p_end < -1.0 ? d.q.back() * d.sigma.back() / (-p_end - 1.0) : 0.0;
    std::vector<double> F(nn, 0.0), S(nn, 0.0);
    for (std::size_t i = 0; i + 1 < nn; ++i) F[i + 1] = F[i] + m[i];
    S[nn - 1] = tail;
    for (std::size_t i = nn - 1; i > 0; --i) S[i - 1] = S[i] + m[i - 1];
    const double total = S[0];
    require(std::abs(total - 1.0) <= 1e-3, ErrorKind::domain, "inverse_cdf_sampler: density is not normalised");

    std::vector<double> xl, yl, xu, yu;
    for (std::size_t i = 0; i < nn; ++i) {
        const double f = F[i] / total;
        if (f > 1e-300 && f < 0.75 && (xl.empty() || std::log(f) > xl.back())) {
            xl.push_back(std::log(f));
            yl.push_back(std::log(d.sigma[i]));
        }
        const double s = S[i] / total;
        if (s > 0.0 && s < 0.75 && (xu.empty() || -std::log(s) > xu.back())) {
            xu.push_back(-std::log(s));
            yu.push_back(std::log(d.sigma[i]));
        }
    }
    require(xl.size() >= 4 && xu.size() >= 4, ErrorKind::domain, "inverse_cdf_sampler: density grid too coarse");
    const double xl_min = xl.front(), xl_max = xl.back(), xu_min = xu.front(), xu_max = xu.back();
    const double s_top = S[nn - 1] / total;
    const double sig_lo = std::exp(yl.front()), sig_top = d.sigma.back();
    using boost::math::interpolators::pchip;
    const pchip<std::vector<double>> lower(std::move(xl), std::move(yl));
    const pchip<std::vector<double>> upper(std::move(xu), std::move(yu));

    for (std::uint64_t i = 0; i < n; ++i) {
        const double v = u[i];
        if (v < 0.5) {
            const double x = std::log(v);
            out[i] = x <= xl_min ? sig_lo : std::exp(lower(std::min(x, xl_max)));
        } else {
            const double s = 1.0 - v;
            if (s < s_top && tail > 0.0) {
                out[i] = sig_top * std::pow(s / s_top, 1.0 / (p_end + 1.0));
            } else {
                const double x = -std::log(s);
                out[i] = std::exp(upper(std::clamp(x, xu_min, xu_max)));
            }
        }
    }
    return out;
}

double moment(const DensityGrid& d, double p) {
    double s = 0.0;
    if (d.source == Source::histogram) {
        const double n = static_cast<double>(d.n_samples);
        for (std::size_t b = 0; b + 1 < d.edges.size(); ++b) {
            const double a = d.edges[b], c = d.edges[b + 1];
            const double mean_pow = std::abs(p + 1.0) < 1e-12 ? std::log(c / a) / (c - a)
                                                               : (std::pow(c, p + 1) - std::pow(a, p + 1)) / ((p + 1) * (c - a));
            s += static_cast<double>(d.counts[b]) / n * mean_pow;
        }
        return s;
    }
    for (std::size_t i = 0; i + 1 < d.sigma.size(); ++i) {
        s += gl5(std::log(d.sigma[i]), std::log(d.sigma[i + 1]), [&](double t) {
            const double x = std::exp(t);
            return d.at(x) * std::pow(x, p + 1.0);
        });
    }
    return s;
}

}  // namespace voltail::density
