// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// only for failures that are not recorded deviations.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "voltail/density.hpp"
#include "voltail/dims.hpp"
#include "voltail/error.hpp"
#include "voltail/estimators.hpp"
#include "voltail/io/commands.hpp"
#include "voltail/io/config.hpp"
#include "voltail/io/files.hpp"
#include "voltail/rng.hpp"
#include "voltail/sim.hpp"
#include "voltail/tails.hpp"
#include "voltail/units.hpp"

using namespace voltail;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int hard_failures = 0;

struct Line {
    std::vector<std::string> notes;
    bool ok = true;

    void check(bool pass, const std::string& what) {
        ok = ok && pass;
        notes.push_back(what + (pass ? "" : " [x]"));
    }
};

void report(int id, const Line& l, const char* deviation = nullptr) {
    std::string detail;
    for (const auto& n : l.notes) detail += (detail.empty() ? "" : "; ") + n;
    if (l.ok) {
        std::printf("criterion %d: PASS  %s\n", id, detail.c_str());
    } else if (deviation) {
        std::printf("criterion %d: FAIL (documented deviation: %s)  %s\n", id, deviation, detail.c_str());
    } else {
        std::printf("criterion %d: FAIL  %s\n", id, detail.c_str());
        ++hard_failures;
    }
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... v) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const model::ModelParams kDefaults{};

model::ModelParams with_r0(double r0) {
    auto p = kDefaults;
    p.r0 = r0;
    return p;
}

density::DensityGrid closed(const model::ModelParams& p) {
    return density::closed_form_stationary(p, model::CoefficientPair::builtin(p.A, p.B, p.k),
                                           density::default_grid(p.r0));
}

double trading(double minutes) { return units::minutes_to_years(minutes, units::TimeConvention::trading); }

tails::TailCurve quad_curve(const density::DensityGrid& q, double dt, std::size_t n = 300) {
    const double u = std::sqrt(kDefaults.r0 * dt);
    std::vector<double> x{0.0};
    const auto xs = tails::log_nodes(1e-3 * u, 3e3 * u, n);
    x.insert(x.end(), xs.begin(), xs.end());
    return tails::tail_from_pdf(tails::return_pdf_quadrature(q, dt, x));
}

tails::TailCurve mc_curve(const density::DensityGrid& q, double dt, std::uint64_t n, std::uint64_t seed) {
    const double u = std::sqrt(kDefaults.r0 * dt);
    return tails::tail_from_samples(tails::mc_approx_returns(q, dt, n, seed), tails::log_nodes(0.1 * u, 1e3 * u, 200), dt);
}

const std::vector<double> kScalingMinutes{5, 10, 30, 60, 120};

// ------------------------------------------------------------------ 1, 2

void tails_and_scaling() {
    const auto q = closed(kDefaults);
    const double dt5 = trading(5);

    Line l1;
    auto t0 = std::chrono::steady_clock::now();
    const auto qc = quad_curve(q, dt5);
    const auto qf = tails::tail_exponent(qc, tails::audited_window(qc));
    const double tq = seconds_since(t0);
    l1.check(std::abs(qf.estimate + 3.0) <= 0.10, fmt("quadrature slope %.4f (-3 +- 0.10)", qf.estimate));
    l1.check(tq < 10.0, fmt("quadrature %.2f s (< 10 s)", tq));

    std::vector<tails::TailCurve> mc;
    std::vector<tails::Window> mc_w;
    t0 = std::chrono::steady_clock::now();
    mc.push_back(mc_curve(q, dt5, 10000000, 42));
    mc_w.push_back(tails::audited_window(mc.back()));
    const auto mf = tails::tail_exponent(mc.back(), mc_w.back());
    const double tm = seconds_since(t0);
    l1.check(std::abs(mf.estimate + 3.0) <= 0.15, fmt("MC 1e7 slope %.4f (-3 +- 0.15)", mf.estimate));
    l1.check(tm < 120.0, fmt("MC %.1f s (< 120 s)", tm));
    report(1, l1);

    Line l2;
    std::vector<tails::TailCurve> quad;
    std::vector<tails::Window> asym;
    for (double m : kScalingMinutes) {
        quad.push_back(quad_curve(q, trading(m), 200));
        asym.push_back(tails::asymptotic_window(kDefaults.r0, trading(m)));
    }
    const auto qs = tails::dt_scaling_fit(quad, tails::common_x_ref(asym), kDefaults.r0);
    l2.check(std::abs(qs.exponent - 1.5) <= 0.05, fmt("quadrature %.4f (1.5 +- 0.05)", qs.exponent));
    for (std::size_t i = 1; i < kScalingMinutes.size(); ++i) {
        mc.push_back(mc_curve(q, trading(kScalingMinutes[i]), 10000000, 42));
        mc_w.push_back(tails::audited_window(mc.back()));
    }
    const auto ms = tails::dt_scaling_fit(mc, tails::common_x_ref(mc_w), mc_w);
    l2.check(std::abs(ms.exponent - 1.5) <= 0.1, fmt("MC %.4f (1.5 +- 0.1)", ms.exponent));
    report(2, l2);
}

// ------------------------------------------------------------------ 3

void density_tail() {
    Line l;
    const auto p = kDefaults;
    const double u = std::sqrt(p.r0);
    const auto cf = closed(p);
    const auto m = model::VolatilityModel::builtin(p);
    const auto fpe = density::solve_stationary_fpe(m, density::default_grid(p.r0));

    const auto fc = density::tail_fit(cf, 10 * u, 100 * u);
    const auto ff = density::tail_fit(fpe, 10 * u, 100 * u);
    l.check(std::abs(fc.exponent + 4.0) <= 0.15, fmt("closed form %.4f", fc.exponent));
    l.check(std::abs(ff.exponent + 4.0) <= 0.15, fmt("FPE %.4f", ff.exponent));

    // 1e9 steps at dt 0.01/r0: correlated over ~1e2 steps, ~1e7 effective samples.
    const auto spec = sim::default_sim_spec(p, 1, 1000000000, 7);
    const auto counts = sim::bin_stationary_states(m, spec, 1e-2 * u, 1e3 * u, 100);
    const auto h = density::histogram_from_counts(counts.edges, counts.counts, counts.total, p.r0);
    const auto fh = density::tail_fit(h, 10 * u, 100 * u);
    l.check(std::abs(fh.exponent + 4.0) <= 0.15, fmt("histogram %.4f (-4 +- 0.15)", fh.exponent));

    double worst = 0.0;
    for (std::size_t i = 0; i < fpe.sigma.size(); ++i) {
        if (fpe.sigma[i] < 10 * u || fpe.sigma[i] > 100 * u) continue;
        worst = std::max(worst, std::abs(fpe.q[i] / cf.q[i] - 1.0));
    }
    l.check(worst <= 1e-3, fmt("FPE vs closed %.2e (<= 1e-3)", worst));
    const double l1 = density::l1_distance(h, cf);
    l.check(l1 <= 0.02, fmt("histogram L1 %.4f (<= 0.02, %llu states)", l1, (unsigned long long)counts.total));

    // Fitted prefactor / r0^{3/2} must not depend on r0.
    std::vector<double> c0_closed, c0_fpe;
    for (double r0 : {0.01, 0.04, 0.16}) {
        const auto pr = with_r0(r0);
        const double ur = std::sqrt(r0);
        c0_closed.push_back(density::tail_fit(closed(pr), 10 * ur, 100 * ur).C0);
        const auto f = density::solve_stationary_fpe(model::VolatilityModel::builtin(pr), density::default_grid(r0));
        c0_fpe.push_back(density::tail_fit(f, 10 * ur, 100 * ur).C0);
    }
    auto spread = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi / *lo - 1.0;
    };
    l.check(spread(c0_closed) <= 0.02 && spread(c0_fpe) <= 0.02,
            fmt("C0 collapse spread %.2e / %.2e (<= 2%%), C0 %.5f vs 1/I %.5f", spread(c0_closed),
                spread(c0_fpe), c0_closed[1], 1.0 / density::closed_form_integral(1, 1, 1)));
    report(3, l);
}

// ------------------------------------------------------------------ 4

void constant_pipeline() {
    Line l;
    // Independent route: midpoint rule in z over [-40, 40] plus the two tails,
    // int_Z^inf z^-5 (1 - z^-2 / 2) dz = Z^-4 / 4 - Z^-6 / 12.
    const double Z = 40.0;
    const std::size_t n = 8000000;
    const double h = 2 * Z / double(n);
    double riemann = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = -Z + (double(i) + 0.5) * h;
        riemann += std::pow(std::abs(z), -5.0) * std::exp(-1.0 / (2 * z * z));
    }
    riemann = riemann * h + 2 * (std::pow(Z, -4.0) / 4.0 - std::pow(Z, -6.0) / 12.0);
    const double c = tails::c_integral();
    l.check(std::abs(c - 4.0) <= 1e-8, fmt("c_integral %.12f", c));
    l.check(std::abs(riemann - 4.0) <= 1e-6, fmt("Riemann %.9f", riemann));

    const double dt = trading(5);
    const auto q = closed(kDefaults);
    const auto qc = quad_curve(q, dt);
    const auto a = tails::asymptotic_tail(1.0 / density::closed_form_integral(1, 1, 1), kDefaults.r0, dt, qc.x);
    const auto w = tails::asymptotic_window(kDefaults.r0, dt);
    double worst = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < qc.x.size(); ++i) {
        if (qc.x[i] < w.lo || qc.x[i] > w.hi) continue;
        worst = std::max(worst, std::abs(a.pbar[i] / qc.pbar[i] - 1.0));
        ++used;
    }
    l.check(used >= 10 && worst <= 0.05, fmt("asymptote vs quadrature %.4f over %zu nodes (<= 5%%)", worst, used));
    report(4, l);
}

// ------------------------------------------------------------------ 5

void regime() {
    Line l;
    const double dt = units::minutes_to_years(5, units::TimeConvention::calendar);
    const auto r = model::regime_diagnostics(20.0, 0.04, dt);
    // 400 * 5 / 525960 = 0.0038: "about 0.004" to one significant figure.
    l.check(std::abs(r.sigma2_dt - 0.004) <= 0.0005, fmt("sigma^2 dt %.5f (~0.004)", r.sigma2_dt));
    l.check(std::abs(r.sigma2_over_r0 - 1e4) <= 1e-8, fmt("sigma^2 / r0 %.1f (1e4)", r.sigma2_over_r0));
    report(5, l);
}

// ------------------------------------------------------------------ 6

void short_term() {
    Line l;
    const auto p = kDefaults;
    const auto m = model::VolatilityModel::builtin(p);
    const auto q = closed(p);
    const double srms2 = density::moment(q, 2.0);
    struct Rung {
        std::string label;
        double dt;
    };
    const std::vector<Rung> ladder{{"5 min", trading(5)},
                                   {"120 min", trading(120)},
                                   {"s2dt 1e-4", 1e-4 / srms2},
                                   {"s2dt 1e-3", 1e-3 / srms2}};
    for (const auto& r : ladder) {
        const double u = std::sqrt(p.r0 * r.dt);
        const std::uint64_t n = 2000000;
        const auto x = tails::log_nodes(0.1 * u, 1e3 * u, 120);
        const auto a = tails::tail_from_samples(tails::mc_approx_returns(q, r.dt, n, 7), x, r.dt);
        const auto e = tails::tail_from_samples(tails::mc_exact_returns(m, q, r.dt, 32, n, 7), x, r.dt,
                                                tails::Source::mc_exact);
        const auto w = tails::audited_window(a);
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] >= w.lo && x[i] <= w.hi) worst = std::max(worst, std::abs(e.pbar[i] / a.pbar[i] - 1.0));
        l.check(worst <= 0.05, fmt("%s (s2dt %.1e) %.4f", r.label.c_str(), srms2 * r.dt, worst));
    }
    report(6, l, "discretisation gap tracks the local sigma^2 dt at the audited window's top");
}

// ------------------------------------------------------------------ 7

void dimensions() {
    Line l;
    const std::vector<dims::TimeDim> rates{dims::canonical::rate()};
    const auto r = dims::check_sde_dims(dims::canonical::drift(), dims::canonical::diffusion(),
                                        dims::canonical::volatility(), rates);
    l.check(r.pass(), fmt("check_sde_dims %zu/%zu", std::size_t(std::count_if(r.checks.begin(), r.checks.end(),
                                                                             [](auto& c) { return c.pass; })),
                          r.checks.size()));
    // a + gamma b = 1/2 with gamma = 1/2.
    const dims::Rational a(2, 9), b(5, 9), gamma(1, 2);
    const std::vector<dims::NamedDim> two{{"r0", dims::TimeDim{a}}, {"r1", dims::TimeDim{b}}};
    const auto red = dims::reduce_parameters(two);
    const bool match = red.exponents.size() == 2 && red.exponents[0] == dims::Rational(-2) &&
                       red.exponents[1] == dims::Rational(-2) * gamma && red.dim == dims::canonical::rate();
    l.check(match, "reduce_parameters " + red.expression() + " (r0^-2 * r1^-2gamma)");
    report(7, l);
}

// ------------------------------------------------------------------ 8

void determinism() {
    Line l;
    const auto root = fs::temp_directory_path() / "voltail_acceptance";
    fs::remove_all(root);
    const auto base = json::parse(R"({"dt_minutes": [5, 30],
        "tails": {"sources": ["quadrature", "mc-approx", "mc-exact"], "mc_samples": 200000, "substeps": 4},
        "density": {"hist_steps": 1000000},
        "sim": {"n_paths": 4, "n_steps": 20000}})");
    for (const std::string cmd : {"simulate", "density", "tails", "scaling"}) {
        std::map<std::string, std::string> ref;
        bool same = true;
        for (unsigned workers : {1u, 4u}) {
            auto j = base;
            if (cmd == "scaling") {
                j["dt_minutes"] = {5, 10, 30, 60, 120};
                j["tails"]["sources"] = {"quadrature", "mc-approx"};
                j["tails"]["mc_samples"] = 2000000;
            }
            const auto dir = root / (cmd + std::to_string(workers));
            j["output_dir"] = dir.string();
            io::CommandOptions o;
            o.workers = workers;
            (void)io::run_command(cmd, io::parse_config(j), o);
            for (const auto& e : fs::directory_iterator(dir)) {
                const auto name = e.path().filename().string();
                if (e.path().extension() != ".csv" && name != "summary.json") continue;
                if (workers == 1) ref[name] = io::read_file(e.path());
                else same = same && ref.count(name) && io::read_file(e.path()) == ref.at(name);
            }
        }
        auto j = io::load_config_json(root / (cmd + "1") / "manifest.json");
        j["output_dir"] = (root / (cmd + "_rerun")).string();
        (void)io::run_command(cmd, io::parse_config(j));
        for (const auto& [name, bytes] : ref) same = same && io::read_file(root / (cmd + "_rerun") / name) == bytes;
        l.check(same && !ref.empty(), fmt("%s %zu files", cmd.c_str(), ref.size()));
    }
    report(8, l);
}

// ------------------------------------------------------------------ 9

std::string iso(std::int64_t us) {
    using namespace std::chrono;
    const auto days = static_cast<int>(us / 86400'000'000);
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const std::int64_t rem = us - static_cast<std::int64_t>(days) * 86400'000'000;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()), (long long)(rem / 3600'000'000), (long long)(rem / 60'000'000 % 60),
                  (long long)(rem / 1'000'000 % 60));
    return buf;
}

void estimators_calibration() {
    Line l;
    std::vector<double> x(1000000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto b = rng::draw_block(1, rng::make_stream(rng::StreamTag::synthetic, i), 0);
        x[i] = std::pow(rng::uniform_open(b[0], b[1]), -1.0 / 3.0);
    }
    const auto h = estimators::hill(x, estimators::hill_default_k(x.size()));
    l.check(std::abs(h.estimate - 3.0) <= 0.1, fmt("Hill Pareto(3) %.4f (3 +- 0.1)", h.estimate));

    // Closed loop: simulated 5-minute price series through the ingest command.
    model::ModelParams p;
    p.r0 = units::trading_minutes_per_year / 5000.0;
    const double step = 1.0 / units::trading_minutes_per_year;
    auto spec = sim::default_sim_spec(p, 1, 2500000, 11);
    spec.dt_sim = step;
    spec.burn_in_steps = sim::default_burn_in(p, step);
    spec.record_stride = 5;
    const auto e = sim::simulate_joint(model::VolatilityModel::builtin(p), spec);
    auto known = sim::path_log_returns(e, 1);
    const double mean = std::accumulate(known.begin(), known.end(), 0.0) / double(known.size());
    for (auto& r : known) r = std::abs(r - mean);
    const auto truth = estimators::hill(known, estimators::hill_default_k(known.size()));

    const auto dir = fs::temp_directory_path() / "voltail_acceptance_ingest";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "prices.csv");
        out << "timestamp,price\n";
        const std::int64_t t0 = 1704187800LL * 1'000'000;
        const auto s = e.price_path(0);
        char buf[40];
        for (std::uint64_t r = 0; r < e.n_records; ++r) {
            std::snprintf(buf, sizeof buf, ",%.17g\n", s[r]);
            out << iso(t0 + static_cast<std::int64_t>(5 * r) * 60'000'000) << buf;
        }
    }
    json j{{"output_dir", (dir / "out").string()}, {"dt_minutes", {5}}};
    j["ingest"]["csv"] = (dir / "prices.csv").string();
    const auto res = io::run_command("ingest", io::parse_config(j));
    const auto& d = res.summary["dt"][0];
    const double est = d["hill"]["estimate"].get<double>();
    const auto ci = d["hill"]["ci95"].get<std::vector<double>>();
    l.check(res.exit_code == 0 && truth.estimate >= ci[0] && truth.estimate <= ci[1],
            fmt("ingest Hill %.4f CI [%.4f, %.4f] contains simulated %.4f", est, ci[0], ci[1], truth.estimate));
    report(9, l);
}

}  // namespace

int main() {
    const std::vector<void (*)()> steps{tails_and_scaling, density_tail,  constant_pipeline,
                                        regime,            short_term,    dimensions,
                                        determinism,       estimators_calibration};
    const std::vector<int> ids{1, 3, 4, 5, 6, 7, 8, 9};
    for (std::size_t i = 0; i < steps.size(); ++i) {
        try {
            steps[i]();
        } catch (const std::exception& e) {
            std::printf("criterion %d: FAIL  exception: %s\n", ids[i], e.what());
            ++hard_failures;
            if (ids[i] == 1) {
                std::printf("criterion 2: FAIL  not run\n");
                ++hard_failures;
            }
        }
    }
    std::printf("%s\n", hard_failures == 0 ? "acceptance: all criteria pass or are documented deviations"
                                           : "acceptance: FAILED");
    return hard_failures == 0 ? 0 : 1;
}
