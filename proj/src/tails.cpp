// SPDX-License-Identifier: Apache-2.0
#include "voltail/tails.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "loglog.hpp"
#include "parallel.hpp"
#include "voltail/error.hpp"
#include "voltail/quad.hpp"
#include "voltail/sim.hpp"
#include "voltail/simd/kernels.hpp"

namespace voltail::tails {
namespace {

constexpr double kWilsonZ = 1.959963984540054;  // two-sided 95%

void wilson(std::uint64_t k, std::uint64_t n, double& lo, double& hi) {
    const double N = static_cast<double>(n), p = static_cast<double>(k) / N, z2 = kWilsonZ * kWilsonZ;
    const double denom = 1.0 + z2 / N;
    const double centre = (p + z2 / (2.0 * N)) / denom;
    const double half = kWilsonZ / denom * std::sqrt(p * (1.0 - p) / N + z2 / (4.0 * N * N));
    lo = std::max(0.0, centre - half);
    hi = std::min(1.0, centre + half);
}

void require_nodes(std::span<const double> x) {
    require(!x.empty(), ErrorKind::domain, "tails: empty x grid");
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(std::isfinite(x[i]) && x[i] >= 0.0, ErrorKind::domain, "tails: x nodes must be finite and >= 0");
        require(i == 0 || x[i] > x[i - 1], ErrorKind::domain, "tails: x nodes must ascend strictly");
    }
}

}  // namespace

std::string to_string(Source s) {
    switch (s) {
        case Source::quadrature: return "quadrature";
        case Source::mc_approx: return "mc-approx";
        case Source::mc_exact: return "mc-exact";
        case Source::asymptotic: return "asymptotic";
        case Source::empirical: return "empirical";
    }
    return "?";
}

void TailCurve::write_csv(std::ostream& os) const {
    os << "x,pbar,ci_lo,ci_hi,source,dt\n";
    char buf[160];
    const std::string src = to_string(source);
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,", x[i], pbar[i], ci_lo[i], ci_hi[i]);
        os << buf << src;
        std::snprintf(buf, sizeof buf, ",%.17g\n", dt);
        os << buf;
    }
}

double TailCurve::at(double v) const {
    require(!x.empty() && v >= x.front() && v <= x.back(), ErrorKind::domain, "TailCurve::at: x outside the curve");
    if (x.size() == 1) return pbar.front();
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    i = std::min(i, x.size() - 2);
    const double a = pbar[i], b = pbar[i + 1];
    if (!(a > 0.0 && b > 0.0 && x[i] > 0.0)) return a + (b - a) * (v - x[i]) / (x[i + 1] - x[i]);
    const double t = std::log(v / x[i]) / std::log(x[i + 1] / x[i]);
    return std::exp(std::log(a) + t * (std::log(b) - std::log(a)));
}

Pdf return_pdf_quadrature(const density::DensityGrid& q, double dt, std::span<const double> x_nodes,
                          double rel_tol, unsigned workers) {
    require(dt > 0.0, ErrorKind::domain, "return_pdf_quadrature: dt must be positive");
    require_nodes(x_nodes);
    require(std::abs(q.norm_check - 1.0) <= 1e-3, ErrorKind::domain, "return_pdf_quadrature: density not normalised");
    const bool hist = q.source == density::Source::histogram;
    const double z_lo = hist ? q.edges.front() : q.sigma.front();
    const double z_hi = hist ? q.edges.back() : q.sigma.back();
    // Break points: the density is only piecewise smooth across grid nodes.
    const std::vector<double>& knots = hist ? q.edges : q.sigma;

    Pdf out;
    out.dt = dt;
    out.x.assign(x_nodes.begin(), x_nodes.end());
    out.p.assign(x_nodes.size(), 0.0);
    std::vector<double> rel_err(x_nodes.size(), 0.0);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * dt);
    constexpr double kExpFloor = 745.0;  // exp(-745) underflows

    detail::parallel_chunks(x_nodes.size(), workers, [&](std::uint64_t j) {
        const double x = x_nodes[j];
        const double c = x * x / (2.0 * dt);
        auto f = [&](double t) {
            const double z = std::exp(t);
            return q.at(z) * std::exp(-c * std::exp(-2.0 * t));
        };
        double t_lo = std::log(z_lo);
        if (c > 0.0) t_lo = std::max(t_lo, 0.5 * std::log(c / kExpFloor));
        const double t_hi = std::log(z_hi);
        if (!(t_lo < t_hi)) return;
        // The interpolated density is smooth only between knots.
        std::vector<double> breaks{t_lo};
        for (auto it = std::upper_bound(knots.begin(), knots.end(), std::exp(t_lo)); it != knots.end(); ++it) {
            const double t = std::log(*it);
            if (t < t_hi) breaks.push_back(t);
        }
        breaks.push_back(t_hi);
        double total = 0.0;
        try {
            const auto r = quad::integrate_pieces(f, breaks, rel_tol);
            total = r.value;
            rel_err[j] = r.l1 > 0.0 ? r.error / r.l1 : 0.0;
        } catch (const Error&) {
            rel_err[j] = std::numeric_limits<double>::infinity();
        }
        out.p[j] = norm * total;
    });
    const auto worst = std::max_element(rel_err.begin(), rel_err.end());
    if (*worst > rel_tol) {
        std::ostringstream msg;
        msg << "return_pdf_quadrature: tolerance missed at x = " << x_nodes[worst - rel_err.begin()];
        fail(ErrorKind::quadrature, msg.str());
    }
    return out;
}

TailCurve tail_from_pdf(const Pdf& pdf) {
    require_nodes(pdf.x);
    require(pdf.p.size() == pdf.x.size() && pdf.x.size() >= 3, ErrorKind::domain,
            "tail_from_pdf: need at least 3 nodes with one value each");
    const std::size_t n = pdf.x.size();
    const std::span<const double> x(pdf.x), p(pdf.p);
    std::vector<double> mass(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (x[i] == 0.0) {
            // Even density: p(x) ~ p0 + (p1 - p0)(x / x1)^2 near the origin.
            mass[i] = x[1] * (p[0] + (p[1] - p[0]) / 3.0);
            continue;
        }
        const double ta = std::log(x[i]), tb = std::log(x[i + 1]);
        const double mid = 0.5 * (ta + tb), half = 0.5 * (tb - ta);
        double s = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double v = std::exp(mid + half * quad::GaussLegendre5::x[k]);
            s += quad::GaussLegendre5::w[k] * detail::loglog_eval(x, p, i, v) * v;
        }
        mass[i] = s * half;
    }
    const double slope = std::log(p[n - 1] / p[n - 2]) / std::log(x[n - 1] / x[n - 2]);
    require(p[n - 1] > 0.0 && slope < -1.0, ErrorKind::domain, "tail_from_pdf: density not decaying past the last node");
    double tail = p[n - 1] * x[n - 1] / (-slope - 1.0);

    TailCurve c;
    c.source = Source::quadrature;
    c.dt = pdf.dt;
    c.x = pdf.x;
    c.pbar.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        c.pbar[i] = std::min(1.0, 2.0 * tail);
        if (i > 0) tail += mass[i - 1];
    }
    c.ci_lo = c.pbar;
    c.ci_hi = c.pbar;
    return c;
}

TailCurve tail_from_samples(std::span<const double> samples, std::span<const double> x_nodes, double dt,
                            Source source, CountMethod method) {
    require(!samples.empty(), ErrorKind::insufficient_data, "tail_from_samples: no samples");
    require_nodes(x_nodes);
    const std::uint64_t n = samples.size();
    TailCurve c;
    c.source = source;
    c.dt = dt;
    c.n_samples = n;
    c.x.assign(x_nodes.begin(), x_nodes.end());
    c.exceed.resize(x_nodes.size());
    if (method == CountMethod::sorted) {
        std::vector<double> a(samples.size());
        std::transform(samples.begin(), samples.end(), a.begin(), [](double v) { return std::abs(v); });
        std::sort(a.begin(), a.end());
        for (std::size_t j = 0; j < x_nodes.size(); ++j) {
            c.exceed[j] = static_cast<std::uint64_t>(a.end() - std::lower_bound(a.begin(), a.end(), x_nodes[j]));
        }
    } else {
        const auto& k = simd::active_kernels();
        for (std::size_t j = 0; j < x_nodes.size(); ++j) c.exceed[j] = k.count_abs_ge(samples.size(), samples.data(), x_nodes[j]);
    }
    c.pbar.resize(x_nodes.size());
    c.ci_lo.resize(x_nodes.size());
    c.ci_hi.resize(x_nodes.size());
    for (std::size_t j = 0; j < x_nodes.size(); ++j) {
        c.pbar[j] = static_cast<double>(c.exceed[j]) / static_cast<double>(n);
        wilson(c.exceed[j], n, c.ci_lo[j], c.ci_hi[j]);
    }
    return c;
}

CIntegral c_integral_detail(double rel_tol) {
    // z > 0, u = z^-2: z^-5 exp(-1/(2 z^2)) dz = (1/2) u exp(-u/2) du. Even in z.
    const auto r = quad::integrate([](double u) { return 0.5 * u * std::exp(-0.5 * u); }, 0.0,
                                   std::numeric_limits<double>::infinity(), rel_tol);
    return {2.0 * r.value, 2.0 * r.error};
}

double c_integral() { return c_integral_detail().value; }

double tail_constant(double C0) {
    return C0 / 3.0 * std::sqrt(2.0 / std::numbers::pi) * c_integral() / 2.0;
}

TailCurve asymptotic_tail(double C0, double r0, double dt, std::span<const double> x_nodes) {
    require(C0 > 0.0 && r0 > 0.0 && dt > 0.0, ErrorKind::domain, "asymptotic_tail: inputs must be positive");
    require_nodes(x_nodes);
    const double a = tail_constant(C0) * std::pow(r0 * dt, 1.5);
    TailCurve c;
    c.source = Source::asymptotic;
    c.dt = dt;
    c.x.assign(x_nodes.begin(), x_nodes.end());
    for (double x : x_nodes) c.pbar.push_back(x > 0.0 ? std::min(1.0, a / (x * x * x)) : 1.0);
    c.ci_lo = c.pbar;
    c.ci_hi = c.pbar;
    return c;
}

Window asymptotic_window(double r0, double dt, double s_lo, double s_hi) {
    require(r0 > 0.0 && dt > 0.0 && 0.0 < s_lo && s_lo < s_hi, ErrorKind::domain, "asymptotic_window: bad inputs");
    const double u = std::sqrt(r0 * dt);
    return {s_lo * u, s_hi * u};
}

Window audited_window(const TailCurve& c, double pbar_lo, double pbar_hi, std::uint64_t min_exceed) {
    Window w{std::numeric_limits<double>::infinity(), 0.0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        if (c.x[i] <= 0.0 || c.pbar[i] < pbar_lo || c.pbar[i] > pbar_hi) continue;
        if (c.n_samples > 0 && c.exceed[i] < min_exceed) continue;
        w.lo = std::min(w.lo, c.x[i]);
        w.hi = std::max(w.hi, c.x[i]);
        ++n;
    }
    require(n >= 5, ErrorKind::insufficient_data, "audited_window: fewer than 5 nodes qualify");
    return w;
}

estimators::FitResult tail_exponent(const TailCurve& c, Window w) {
    return estimators::loglog_slope(c.x, c.pbar, w.lo, w.hi);
}

std::vector<double> log_nodes(double lo, double hi, std::size_t n) {
    require(lo > 0.0 && hi > lo && n >= 2, ErrorKind::domain, "log_nodes: need 0 < lo < hi and n >= 2");
    std::vector<double> x(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    x.front() = lo;
    x.back() = hi;
    return x;
}

ScalingFit dt_scaling_fit(std::span<const TailCurve> curves, double x_ref, std::span<const Window> windows) {
    require(windows.size() == curves.size(), ErrorKind::dimension, "dt_scaling_fit: one window per curve");
    ScalingFit f;
    f.x_ref = x_ref;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const TailCurve& c = curves[i];
        const Window& w = windows[i];
        if (x_ref < w.lo * (1 - 1e-12) || x_ref > w.hi * (1 + 1e-12)) {
            std::ostringstream msg;
            msg << "dt_scaling_fit: x_ref = " << x_ref << " outside the window [" << w.lo << ", " << w.hi
                << "] at dt = " << c.dt;
            fail(ErrorKind::domain, msg.str());
        }
        const double p = c.at(x_ref);
        require(p > 0.0, ErrorKind::insufficient_data, "dt_scaling_fit: zero tail probability at x_ref");
        f.dt.push_back(c.dt);
        f.pbar.push_back(p);
    }
    std::vector<double> d = f.dt;
    std::sort(d.begin(), d.end());
    const auto distinct = std::unique(d.begin(), d.end()) - d.begin();
    require(distinct >= 4, ErrorKind::insufficient_data, "dt_scaling_fit: need at least 4 distinct dt");
    require(d[distinct - 1] >= 10.0 * d[0] * (1 - 1e-12), ErrorKind::domain, "dt_scaling_fit: dt must span a decade");
    const double N = static_cast<double>(f.dt.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < f.dt.size(); ++i) {
        sx += std::log(f.dt[i]);
        sy += std::log(f.pbar[i]);
    }
    double vx = 0, cxy = 0, vy = 0;
    for (std::size_t i = 0; i < f.dt.size(); ++i) {
        const double a = std::log(f.dt[i]) - sx / N, b = std::log(f.pbar[i]) - sy / N;
        vx += a * a;
        cxy += a * b;
        vy += b * b;
    }
    f.exponent = cxy / vx;
    f.std_error = std::sqrt(std::max(0.0, vy - f.exponent * cxy) / (N - 2.0) / vx);
    return f;
}

ScalingFit dt_scaling_fit(std::span<const TailCurve> curves, double x_ref, double r0, double s_lo, double s_hi) {
    std::vector<Window> w;
    for (const auto& c : curves) w.push_back(asymptotic_window(r0, c.dt, s_lo, s_hi));
    return dt_scaling_fit(curves, x_ref, w);
}

double common_x_ref(std::span<const Window> windows) {
    require(!windows.empty(), ErrorKind::domain, "common_x_ref: no windows");
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (const auto& w : windows) {
        lo = std::max(lo, w.lo);
        hi = std::min(hi, w.hi);
    }
    require(lo > 0.0 && lo <= hi, ErrorKind::domain, "common_x_ref: windows don't overlap");
    return std::sqrt(lo * hi);
}

std::vector<double> mc_approx_returns(const density::DensityGrid& q, double dt, std::uint64_t n, std::uint64_t seed,
                                      unsigned workers) {
    const auto sigma = density::inverse_cdf_sampler(q, n, seed, workers);
    sim::RunOptions opt;
    opt.workers = workers;
    return sim::sample_returns_approx(sigma, dt, seed, opt);
}

std::vector<double> mc_exact_returns(const model::VolatilityModel& m, const density::DensityGrid& q, double dt,
                                     std::uint64_t substeps, std::uint64_t n, std::uint64_t seed, unsigned workers) {
    require(substeps >= 1, ErrorKind::domain, "mc_exact_returns: need at least one substep");
    const auto sigma = density::inverse_cdf_sampler(q, n, seed, workers);
    auto spec = sim::default_sim_spec(m.params, std::max<std::uint64_t>(n, 1), 1, seed);
    spec.dt_sim = dt / static_cast<double>(substeps);
    spec.burn_in_steps = 0;
    sim::RunOptions opt;
    opt.workers = workers;
    return sim::sample_returns_exact(m, dt, sigma, spec, opt);
}

}  // namespace voltail::tails
