// SPDX-License-Identifier: Apache-2.0
#include "voltail/io/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "voltail/density.hpp"
#include "voltail/dims.hpp"
#include "voltail/estimators.hpp"
#include "voltail/io/files.hpp"
#include "voltail/io/ingest.hpp"
#include "voltail/io/report_json.hpp"
#include "voltail/simd/kernels.hpp"
#include "voltail/tails.hpp"

namespace voltail::io {

using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::io:
        case ErrorKind::domain:
        case ErrorKind::dimension:
        case ErrorKind::condition_violated:
        case ErrorKind::no_inverse_time:
        case ErrorKind::not_normalizable:
            return exit_config;
        default:
            return exit_numerical;
    }
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"validate", "simulate", "density", "tails", "scaling", "ingest"};
    return names;
}

namespace {

/// Files produced by one run, written together at the end.
struct Run {
    const ExperimentConfig& cfg;
    const CommandOptions& opt;
    CommandResult result;
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string name, std::string bytes) { files.emplace_back(std::move(name), std::move(bytes)); }
    void warn(std::string w) { result.warnings.push_back(std::move(w)); }
    void check(const std::string& name, double value, double target, double tol) {
        const bool pass = std::abs(value - target) <= tol;
        result.summary["checks"].push_back(
            {{"name", name}, {"value", value}, {"target", target}, {"tolerance", tol}, {"pass", pass}});
        if (!pass && opt.check) result.exit_code = exit_check;
    }
};

std::string minutes_tag(double m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%gmin", m);
    return buf;
}

std::string to_csv(const tails::TailCurve& c) {
    std::ostringstream os;
    c.write_csv(os);
    return os.str();
}

/// Curves share one header.
std::string to_csv(const std::vector<tails::TailCurve>& cs) {
    std::string out;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        auto s = to_csv(cs[i]);
        if (i > 0) s.erase(0, s.find('\n') + 1);
        out += s;
    }
    return out;
}

density::GridSpec grid_of(const ExperimentConfig& c) {
    return {c.density.sigma_lo, c.density.sigma_hi, c.density.n_nodes};
}

bool has_closed_form(const model::VolatilityModel& m) {
    return m.coeffs.is_builtin() && m.params.k > 0.0;
}

density::DensityGrid reference_density(const ExperimentConfig& c, const model::VolatilityModel& m) {
    if (has_closed_form(m)) return density::closed_form_stationary(m.params, m.coeffs, grid_of(c));
    return density::solve_stationary_fpe(m, grid_of(c));
}

double tail_C0(const ExperimentConfig& c, const model::VolatilityModel& m, const density::DensityGrid& q) {
    if (has_closed_form(m)) return 1.0 / density::closed_form_integral(m.params.A, m.params.B, m.params.k);
    return density::tail_fit(q, c.density.fit_lo, c.density.fit_hi).C0;
}

std::vector<double> x_nodes(const ExperimentConfig& c, double dt) {
    const double u = std::sqrt(c.model.params.r0 * dt);
    std::vector<double> x{0.0};
    const auto xs = tails::log_nodes(c.x_grid.lo * u, c.x_grid.hi * u, c.x_grid.n);
    x.insert(x.end(), xs.begin(), xs.end());
    return x;
}

bool wants(const ExperimentConfig& c, const std::string& src) {
    return std::find(c.tails.sources.begin(), c.tails.sources.end(), src) != c.tails.sources.end();
}

std::vector<double> abs_values(std::span<const double> v) {
    std::vector<double> a(v.size());
    std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
    return a;
}

json hill_json(std::span<const double> samples) {
    const auto a = abs_values(samples);
    const auto f = estimators::hill(a, estimators::hill_default_k(a.size()));
    auto j = to_json(f);
    j["ci95"] = {f.estimate - 1.959963984540054 * f.std_error, f.estimate + 1.959963984540054 * f.std_error};
    return j;
}

/// Audited-window slope, or a warning when the window is too thin.
json slope_json(Run& run, const tails::TailCurve& c, const std::string& label) {
    const auto& t = run.cfg.tails;
    try {
        const auto w = tails::audited_window(c, t.pbar_lo, t.pbar_hi, t.min_exceed);
        auto j = to_json(tails::tail_exponent(c, w));
        j["x_lo"] = w.lo;
        j["x_hi"] = w.hi;
        return j;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_data) throw;
        run.warn(label + ": no log-log fit (" + e.what() + ")");
        return nullptr;
    }
}

// ---------------------------------------------------------------- validate

void cmd_validate(Run& run) {
    const auto& c = run.cfg;
    const auto m = c.model.build();
    const auto& p = m.params;
    auto& s = run.result.summary;

    const std::vector<dims::TimeDim> params{dims::canonical::rate()};
    const auto dr = dims::check_sde_dims(dims::canonical::drift(), dims::canonical::diffusion(),
                                         dims::canonical::volatility(), params);
    s["dims"] = to_json(dr);
    const std::vector<dims::NamedDim> named{{"r0", dims::canonical::rate()}};
    s["dims"]["reduced_rate"] = dims::reduce_parameters(named).expression();

    bool ok = dr.pass();
    // f and g recovered from alpha and beta must be the configured pair.
    try {
        std::vector<double> xg;
        for (int i = 0; i <= 60; ++i) xg.push_back(std::pow(10.0, -4.0 + 0.1 * i));
        const auto sp = dims::nondimensionalize([&](double sg) { return model::alpha(p, m.coeffs, sg); },
                                                [&](double sg) { return model::beta(p, m.coeffs, sg); }, p.r0, xg);
        double err = 0.0;
        for (std::size_t i = 0; i < xg.size(); ++i) {
            const double f = m.coeffs.f(xg[i]), g = m.coeffs.g(xg[i]);
            err = std::max(err, std::abs(sp.f[i] - f) / std::max(std::abs(f), 1e-300));
            err = std::max(err, std::abs(sp.g[i] - g) / std::max(std::abs(g), 1e-300));
        }
        s["dims"]["nondimensional_roundtrip_error"] = err;
    } catch (const Error& e) {
        s["dims"]["nondimensional_roundtrip_error"] = nullptr;
        run.warn(std::string("nondimensional round trip skipped: ") + e.what());
    }

    const auto ar = model::check_asymptotic_conditions(m.coeffs);
    s["asymptotic"] = to_json(ar);
    ok = ok && ar.pass();

    const double u = std::sqrt(p.r0);
    std::vector<double> grid(121);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = u * std::pow(10.0, -3.0 + 0.05 * double(i));
    // Mean reversion is required above a multiple of the rms volatility; without a
    // closed-form density the scale falls back to 10 sqrt(r0).
    double smin = 10.0 * u;
    std::string smin_from = "fallback";
    if (m.coeffs.is_builtin() && m.coeffs.builtin_k() > 0.0) {
        try {
            const auto q = density::closed_form_stationary(p, m.coeffs, density::default_grid(p.r0));
            smin = 2.0 * std::sqrt(density::moment(q, 2.0));
            smin_from = "2 sigma_rms";
        } catch (const Error&) {
        }
    }
    try {
        const auto sf = model::validate_stylized_facts(p, m.coeffs, smin, grid);
        s["stylized_facts"] = to_json(sf);
        s["stylized_facts"]["sigma_min"] = smin;
        s["stylized_facts"]["sigma_min_rule"] = smin_from;
        ok = ok && sf.pass();
    } catch (const Error& e) {
        s["stylized_facts"] = {{"pass", false}, {"error", e.what()}};
        ok = false;
    }

    const auto rr = model::regime_diagnostics(std::sqrt(c.regime.sigma2), p.r0, c.dt_years(c.regime.dt_minutes));
    s["regime"] = to_json(rr);
    s["regime"]["sigma2"] = c.regime.sigma2;
    s["regime"]["dt_minutes"] = c.regime.dt_minutes;

    s["pass"] = ok;
    if (!ok) {
        std::string why = ar.violations();
        if (!s["stylized_facts"].value("pass", false)) why += std::string(why.empty() ? "" : "; ") + "stylized facts fail";
        if (!dr.pass()) why += std::string(why.empty() ? "" : "; ") + "dimension checks fail";
        s["violations"] = why;
        run.warn("model rejected: " + why);
        run.result.exit_code = exit_config;
    }
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(Run& run) {
    const auto& c = run.cfg;
    const auto m = c.model.build();
    sim::RunOptions ro;
    ro.workers = run.opt.workers;
    const auto e = c.sim.joint ? sim::simulate_joint(m, c.sim.spec, ro) : sim::simulate_volatility(m, c.sim.spec, ro);
    std::ostringstream os;
    if (c.sim.format == "binary") {
        e.write_binary(os);
        run.add("paths.bin", os.str());
    } else {
        e.write_csv(os);
        run.add("paths.csv", os.str());
    }
    auto& s = run.result.summary;
    s["n_paths"] = e.spec.n_paths;
    s["n_records"] = e.n_records;
    s["dt_sim"] = e.spec.dt_sim;
    s["clamps"] = {{"floor_hits", e.clamps.floor_hits}, {"cap_hits", e.clamps.cap_hits}, {"steps", e.clamps.steps}};
    double m2 = 0.0;
    for (double sg : e.sigma) m2 += sg * sg;
    s["mean_sigma2_over_r0"] = m2 / static_cast<double>(e.sigma.size()) / m.params.r0;
    // Autocorrelation of sigma at 0.1 and 1 mean-reversion times, when the path is long enough.
    const double rec_dt = e.spec.dt_sim * static_cast<double>(e.spec.record_stride);
    json acf = json::object();
    for (double t : {0.1, 1.0}) {
        const auto lag = static_cast<std::size_t>(std::llround(t / (m.params.r0 * rec_dt)));
        if (lag >= 1 && 10 * lag < e.n_records) {
            const std::vector<std::size_t> lags{lag};
            acf[std::to_string(t).substr(0, 3) + "/r0"] = estimators::acf(e.sigma_path(0), lags)[0];
        }
    }
    s["sigma_acf_path0"] = acf;
}

// ---------------------------------------------------------------- density

void cmd_density(Run& run) {
    const auto& c = run.cfg;
    const auto m = c.model.build();
    auto& s = run.result.summary;
    const double r0 = m.params.r0;
    std::vector<density::DensityGrid> grids;

    std::optional<density::DensityGrid> closed;
    if (has_closed_form(m)) {
        closed = density::closed_form_stationary(m.params, m.coeffs, grid_of(c));
        grids.push_back(*closed);
        s["closed_form"] = {{"normalizer", closed->normalizer}, {"residual", closed->residual},
                            {"norm_check", closed->norm_check}};
    }
    const auto fpe = density::solve_stationary_fpe(m, grid_of(c));
    grids.push_back(fpe);
    s["fpe"] = {{"norm_check", fpe.norm_check}};

    if (c.density.hist_steps > 0) {
        auto spec = c.sim.spec;
        spec.n_steps = c.density.hist_steps;
        sim::RunOptions ro;
        ro.workers = run.opt.workers;
        const auto counts = sim::bin_stationary_states(m, spec, c.density.hist_lo, c.density.hist_hi,
                                                       c.density.hist_bins, ro);
        auto h = density::histogram_from_counts(counts.edges, counts.counts, counts.total, r0);
        s["histogram"] = {{"states", counts.total}, {"below", counts.below}, {"above", counts.above},
                          {"l1_vs_reference", density::l1_distance(h, closed ? *closed : fpe)}};
        grids.push_back(std::move(h));
    }

    json fits = json::object();
    for (const auto& g : grids) {
        const auto name = density::to_string(g.source);
        std::ostringstream os;
        write_density_csv(os, g);
        run.add("density_" + name + ".csv", os.str());
        try {
            const auto f = density::tail_fit(g, c.density.fit_lo, c.density.fit_hi);
            fits[name] = to_json(f);
            run.check(name + " tail exponent", f.exponent, -4.0, 0.15);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::domain) throw;
            run.warn(name + ": no tail fit (" + e.what() + ")");
            fits[name] = nullptr;
        }
    }
    s["tail_fits"] = fits;
    s["fit_window"] = {c.density.fit_lo, c.density.fit_hi};

    if (closed) {
        double worst = 0.0;
        for (std::size_t i = 0; i < fpe.sigma.size(); ++i) {
            if (fpe.sigma[i] < c.density.fit_lo || fpe.sigma[i] > c.density.fit_hi) continue;
            worst = std::max(worst, std::abs(fpe.q[i] / closed->q[i] - 1.0));
        }
        s["fpe_vs_closed_form_max_rel"] = worst;
        run.check("fpe vs closed form", worst, 0.0, 1e-3);
    }
    if (s.contains("histogram") && s["histogram"]["states"].get<std::uint64_t>() >= 1000000)
        run.check("histogram L1", s["histogram"]["l1_vs_reference"].get<double>(), 0.0, 0.02);
}

// ---------------------------------------------------------------- tails

void cmd_tails(Run& run) {
    const auto& c = run.cfg;
    const auto m = c.model.build();
    const auto q = reference_density(c, m);
    const double C0 = tail_C0(c, m, q);
    auto& s = run.result.summary;
    s["C0"] = C0;
    s["tail_constant"] = tails::tail_constant(C0);
    for (double mins : c.dt_minutes) {
        const double dt = c.dt_years(mins);
        const auto x = x_nodes(c, dt);
        const auto tag = minutes_tag(mins);
        std::vector<tails::TailCurve> curves;
        json entry{{"dt_minutes", mins}, {"dt", dt}};
        const auto w = tails::asymptotic_window(m.params.r0, dt);
        entry["asymptotic_window"] = {w.lo, w.hi};

        if (wants(c, "quadrature")) {
            curves.push_back(tails::tail_from_pdf(tails::return_pdf_quadrature(q, dt, x, 1e-8, run.opt.workers)));
            entry["quadrature"] = {{"loglog", slope_json(run, curves.back(), tag + " quadrature")}};
            if (!entry["quadrature"]["loglog"].is_null())
                run.check(tag + " quadrature slope", entry["quadrature"]["loglog"]["estimate"].get<double>(), -3.0, 0.10);
        }
        if (wants(c, "asymptotic")) {
            curves.push_back(tails::asymptotic_tail(C0, m.params.r0, dt, x));
        }
        const auto mc = [&](tails::Source src, const std::vector<double>& r) {
            curves.push_back(tails::tail_from_samples(r, x, dt, src));
            const auto name = tails::to_string(src);
            json j{{"n_samples", r.size()}, {"loglog", slope_json(run, curves.back(), tag + " " + name)}, {"hill", hill_json(r)}};
            if (!j["loglog"].is_null()) run.check(tag + " " + name + " slope", j["loglog"]["estimate"].get<double>(), -3.0, 0.15);
            entry[name] = j;
        };
        if (wants(c, "mc-approx"))
            mc(tails::Source::mc_approx, tails::mc_approx_returns(q, dt, c.tails.mc_samples, c.seed, run.opt.workers));
        if (wants(c, "mc-exact"))
            mc(tails::Source::mc_exact, tails::mc_exact_returns(m, q, dt, c.tails.substeps, c.tails.mc_samples, c.seed,
                                                                run.opt.workers));
        run.add("tails_" + tag + ".csv", to_csv(curves));
        s["dt"].push_back(entry);
    }
}

// ---------------------------------------------------------------- scaling

void cmd_scaling(Run& run) {
    const auto& c = run.cfg;
    const auto m = c.model.build();
    const auto q = reference_density(c, m);
    const double r0 = m.params.r0;
    auto& s = run.result.summary;
    require(c.dt_minutes.size() >= 4, ErrorKind::config, "scaling needs at least 4 entries in dt_minutes");

    std::vector<tails::TailCurve> quad;
    std::vector<tails::Window> asym;
    for (double mins : c.dt_minutes) {
        const double dt = c.dt_years(mins);
        quad.push_back(tails::tail_from_pdf(tails::return_pdf_quadrature(q, dt, x_nodes(c, dt), 1e-8, run.opt.workers)));
        asym.push_back(tails::asymptotic_window(r0, dt));
        run.add("tails_" + minutes_tag(mins) + ".csv", to_csv(quad.back()));
    }
    const double x_ref = tails::common_x_ref(asym);
    const auto fit = tails::dt_scaling_fit(quad, x_ref, r0);
    s["dt_minutes"] = c.dt_minutes;
    s["quadrature"] = to_json(fit);
    s["quadrature"]["window"] = "asymptotic windows [10, 100] sqrt(r0 dt)";
    s["exponent"] = fit.exponent;
    run.check("quadrature dt exponent", fit.exponent, 1.5, 0.05);

    std::ostringstream table;
    table << "dt_minutes,dt,x_ref,pbar_quadrature\n";
    char buf[128];
    for (std::size_t i = 0; i < fit.dt.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", c.dt_minutes[i], fit.dt[i], x_ref, fit.pbar[i]);
        table << buf;
    }
    run.add("scaling.csv", table.str());

    if (wants(c, "mc-approx")) {
        std::vector<tails::TailCurve> mc;
        std::vector<tails::Window> audited;
        for (double mins : c.dt_minutes) {
            const double dt = c.dt_years(mins);
            const auto r = tails::mc_approx_returns(q, dt, c.tails.mc_samples, c.seed, run.opt.workers);
            mc.push_back(tails::tail_from_samples(r, x_nodes(c, dt), dt, tails::Source::mc_approx));
            run.add("tails_mc-approx_" + minutes_tag(mins) + ".csv", to_csv(mc.back()));
        }
        // Too few samples leave no common audited range; the quadrature fit stands alone then.
        try {
            for (const auto& curve : mc)
                audited.push_back(tails::audited_window(curve, c.tails.pbar_lo, c.tails.pbar_hi, c.tails.min_exceed));
            const double xm = tails::common_x_ref(audited);
            const auto f = tails::dt_scaling_fit(mc, xm, audited);
            s["mc-approx"] = to_json(f);
            s["mc-approx"]["window"] = "intersection of the audited windows";
            run.check("mc-approx dt exponent", f.exponent, 1.5, 0.10);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::domain) throw;
            s["mc-approx"] = {{"error", e.what()}};
            run.warn(std::string("mc-approx scaling skipped: ") + e.what());
            run.check("mc-approx dt exponent", std::nan(""), 1.5, 0.10);
        }
    }
}

// ---------------------------------------------------------------- ingest

void cmd_ingest(Run& run) {
    const auto& c = run.cfg;
    require(!c.ingest.csv.empty(), ErrorKind::config, "ingest.csv is not set");
    std::ifstream in(c.ingest.csv);
    require(in.good(), ErrorKind::io, "cannot open " + c.ingest.csv);
    const auto series = parse_price_csv(in);
    auto& s = run.result.summary;
    s["observations"] = series.t_us.size();
    s["time_convention"] = std::string(units::to_string(c.time_convention));
    if (c.ingest.overlapping) run.warn("overlapping windows: returns are dependent and the confidence intervals are optimistic");

    ResampleOptions ro;
    ro.gap_minutes = c.ingest.gap_minutes;
    ro.overlapping = c.ingest.overlapping;
    ro.mean_subtract = c.ingest.mean_subtract;
    for (double mins : c.dt_minutes) {
        const auto tag = minutes_tag(mins);
        const auto rs = resample_returns(series, mins, ro);
        json entry{{"dt_minutes", mins}, {"dt", c.dt_years(mins)}, {"returns", rs.returns.size()},
                   {"windows", rs.windows}, {"excluded_gap_windows", rs.excluded}, {"gaps", rs.gaps}, {"mean", rs.mean}};
        std::string csv = "return\n";
        char buf[40];
        for (double r : rs.returns) {
            std::snprintf(buf, sizeof buf, "%.17g\n", r);
            csv += buf;
        }
        run.add("returns_" + tag + ".csv", csv);

        const auto a = abs_values(rs.returns);
        const double top = a.empty() ? 0.0 : *std::max_element(a.begin(), a.end());
        if (rs.returns.size() < c.ingest.min_returns) {
            run.warn(tag + ": " + std::to_string(rs.returns.size()) + " returns, fewer than " +
                     std::to_string(c.ingest.min_returns) + "; fits skipped");
        } else if (!(top > 0.0)) {
            run.warn(tag + ": all returns are zero; fits skipped");
        } else {
            auto sorted = a;
            std::sort(sorted.begin(), sorted.end());
            double lo = sorted[sorted.size() / 2];
            if (!(lo > 0.0)) lo = *std::upper_bound(sorted.begin(), sorted.end(), 0.0);
            const auto xs = lo < top ? tails::log_nodes(lo, top, c.ingest.x_nodes) : std::vector<double>{lo};
            const auto curve = tails::tail_from_samples(rs.returns, xs, c.dt_years(mins), tails::Source::empirical);
            run.add("tails_" + tag + ".csv", to_csv(curve));
            try {
                entry["hill"] = hill_json(rs.returns);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::domain) throw;
                run.warn(tag + ": no Hill fit (" + e.what() + ")");
            }
            entry["loglog"] = slope_json(run, curve, tag);
        }
        s["dt"].push_back(entry);
    }
}

std::string manifest_bytes(const std::string& command, const ExperimentConfig& cfg, const CommandOptions& opt,
                           const std::vector<std::pair<std::string, std::string>>& files, int exit_code) {
    json outs = json::array();
    for (const auto& [name, bytes] : files)
        outs.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    json mf{{"voltail_manifest", 1},
            {"command", command},
            {"version", VOLTAIL_VERSION},
            {"config", to_json(cfg)},
            {"config_hash", hex64(config_hash(cfg))},
            {"seed", cfg.seed},
            {"rng", "philox4x32-10"},
            {"kernel", std::string(simd::active_kernels().name)},
            {"time_convention", std::string(units::to_string(cfg.time_convention))},
            {"minutes_per_year", units::minutes_per_year(cfg.time_convention)},
            {"compiler", __VERSION__},
            {"workers", opt.workers},
            {"exit_code", exit_code},
            {"outputs", outs}};
    return mf.dump(2) + "\n";
}

}  // namespace

CommandResult run_command(const std::string& command, const ExperimentConfig& cfg, const CommandOptions& opt) {
    static const std::map<std::string, std::function<void(Run&)>> table{
        {"validate", cmd_validate}, {"simulate", cmd_simulate}, {"density", cmd_density},
        {"tails", cmd_tails},       {"scaling", cmd_scaling},   {"ingest", cmd_ingest}};
    const auto it = table.find(command);
    require(it != table.end(), ErrorKind::config, "unknown command '" + command + "'");

    Run run{cfg, opt, {}, {}};
    run.result.summary = {{"command", command}, {"config_hash", hex64(config_hash(cfg))}, {"seed", cfg.seed}};
    try {
        it->second(run);
    } catch (const Error& e) {
        throw Error(e.kind(), command + ": " + e.what());
    }
    if (!run.result.warnings.empty()) run.result.summary["warnings"] = run.result.warnings;
    run.add("summary.json", run.result.summary.dump(2) + "\n");

    const std::filesystem::path dir(cfg.output_dir);
    for (const auto& [name, bytes] : run.files) atomic_write(dir / name, bytes);
    atomic_write(dir / "manifest.json", manifest_bytes(command, cfg, opt, run.files, run.result.exit_code));
    return std::move(run.result);
}

}  // namespace voltail::io
