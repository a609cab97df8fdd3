// SPDX-License-Identifier: Apache-2.0
#include "voltail/io/config.hpp"

#include <cmath>
#include <sstream>

#include "voltail/error.hpp"
#include "voltail/io/files.hpp"
#include "voltail/io/schema.hpp"

namespace voltail::io {

using nlohmann::json;

model::VolatilityModel ModelConfig::build() const {
    if (family == "builtin") return model::VolatilityModel::builtin(params);
    model::VolatilityModel m{params, model::CoefficientPair::power_series(f_terms, g_terms)};
    // A and B of a power series are its -f'(0) and g(0) when those exist.
    const auto rep = model::check_asymptotic_conditions(m.coeffs);
    if (rep.pass()) {
        m.params.A = rep.A;
        m.params.B = rep.B;
    }
    return m;
}

namespace {

template <class T>
T value_or(const json& obj, const char* key, T fallback) {
    return obj.contains(key) ? obj[key].get<T>() : fallback;
}

std::vector<model::PowerTerm> terms_from(const json& arr) {
    std::vector<model::PowerTerm> out;
    for (const auto& t : arr) out.push_back({t["coef"].get<double>(), t["power"].get<double>()});
    return out;
}

json terms_to(const std::vector<model::PowerTerm>& terms) {
    json arr = json::array();
    for (const auto& t : terms) arr.push_back({{"coef", t.coef}, {"power", t.power}});
    return arr;
}

void semantic_checks(const ExperimentConfig& c) {
    std::vector<std::string> bad;
    const auto& d = c.density;
    if (!(d.sigma_lo < d.sigma_hi)) bad.push_back("density.sigma_lo must be below density.sigma_hi");
    if (!(d.hist_lo < d.hist_hi)) bad.push_back("density.hist_lo must be below density.hist_hi");
    if (!(d.fit_lo < d.fit_hi)) bad.push_back("density.fit_lo must be below density.fit_hi");
    if (!(c.x_grid.lo < c.x_grid.hi)) bad.push_back("x_grid.lo must be below x_grid.hi");
    if (!(c.tails.pbar_lo < c.tails.pbar_hi)) bad.push_back("tails.pbar_lo must be below tails.pbar_hi");
    if (c.model.family == "power_series" && (c.model.f_terms.empty() || c.model.g_terms.empty()))
        bad.push_back("model: power_series needs f_terms and g_terms");
    if (c.model.family == "builtin" && (!c.model.f_terms.empty() || !c.model.g_terms.empty()))
        bad.push_back("model: f_terms/g_terms apply to power_series only");
    if (!bad.empty()) {
        std::string msg = "config:";
        for (const auto& b : bad) msg += "\n  " + b;
        fail(ErrorKind::config, msg);
    }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    const auto issues = validate_schema(j, config_schema());
    if (!issues.empty()) {
        std::string msg = "config does not match the schema:";
        for (const auto& i : issues) msg += "\n  " + (i.pointer.empty() ? std::string("/") : i.pointer) + ": " + i.message;
        fail(ErrorKind::config, msg);
    }
    const json empty = json::object();
    auto section = [&](const char* k) -> const json& { return j.contains(k) ? j[k] : empty; };

    ExperimentConfig c;
    c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
    c.output_dir = value_or<std::string>(j, "output_dir", c.output_dir);
    c.time_convention = value_or<std::string>(j, "time_convention", "trading") == "calendar"
                            ? units::TimeConvention::calendar
                            : units::TimeConvention::trading;

    const auto& m = section("model");
    auto& p = c.model.params;
    c.model.family = value_or<std::string>(m, "family", c.model.family);
    p.A = value_or(m, "A", p.A);
    p.B = value_or(m, "B", p.B);
    p.k = value_or(m, "k", p.k);
    p.r0 = value_or(m, "r0", p.r0);
    p.rho = value_or(m, "rho", p.rho);
    p.mu = value_or(m, "mu", p.mu);
    if (m.contains("f_terms")) c.model.f_terms = terms_from(m["f_terms"]);
    if (m.contains("g_terms")) c.model.g_terms = terms_from(m["g_terms"]);

    const auto& s = section("sim");
    const auto n_paths = value_or<std::uint64_t>(s, "n_paths", 1);
    const auto n_steps = value_or<std::uint64_t>(s, "n_steps", 100000);
    auto& spec = c.sim.spec;
    spec = sim::default_sim_spec(p, n_paths, n_steps, c.seed);
    spec.dt_sim = value_or(s, "dt_sim", spec.dt_sim);
    spec.burn_in_steps = value_or<std::uint64_t>(s, "burn_in_steps", sim::default_burn_in(p, spec.dt_sim));
    spec.sigma0 = value_or(s, "sigma0", spec.sigma0);
    spec.s0 = value_or(s, "s0", spec.s0);
    spec.scheme = sim::scheme_from_string(value_or<std::string>(s, "scheme", sim::to_string(spec.scheme)));
    spec.sigma_floor = value_or(s, "sigma_floor", spec.sigma_floor);
    spec.sigma_cap = value_or(s, "sigma_cap", spec.sigma_cap);
    spec.record_stride = value_or<std::uint64_t>(s, "record_stride", spec.record_stride);
    c.sim.joint = value_or(s, "joint", c.sim.joint);
    c.sim.format = value_or<std::string>(s, "format", c.sim.format);

    const auto& d = section("density");
    const double u = std::sqrt(p.r0);
    auto& dc = c.density;
    dc.sigma_lo = value_or(d, "sigma_lo", 1e-3 * u);
    dc.sigma_hi = value_or(d, "sigma_hi", 1e3 * u);
    dc.n_nodes = value_or<std::size_t>(d, "n_nodes", dc.n_nodes);
    dc.hist_lo = value_or(d, "hist_lo", 1e-2 * u);
    dc.hist_hi = value_or(d, "hist_hi", 1e3 * u);
    dc.hist_bins = value_or<std::size_t>(d, "hist_bins", dc.hist_bins);
    dc.hist_steps = value_or<std::uint64_t>(d, "hist_steps", dc.hist_steps);
    dc.fit_lo = value_or(d, "fit_lo", 10.0 * u);
    dc.fit_hi = value_or(d, "fit_hi", 100.0 * u);

    if (j.contains("dt_minutes")) c.dt_minutes = j["dt_minutes"].get<std::vector<double>>();

    const auto& x = section("x_grid");
    c.x_grid.lo = value_or(x, "lo", c.x_grid.lo);
    c.x_grid.hi = value_or(x, "hi", c.x_grid.hi);
    c.x_grid.n = value_or<std::size_t>(x, "n", c.x_grid.n);

    const auto& t = section("tails");
    if (t.contains("sources")) c.tails.sources = t["sources"].get<std::vector<std::string>>();
    c.tails.mc_samples = value_or<std::uint64_t>(t, "mc_samples", c.tails.mc_samples);
    c.tails.substeps = value_or<std::uint64_t>(t, "substeps", c.tails.substeps);
    c.tails.pbar_lo = value_or(t, "pbar_lo", c.tails.pbar_lo);
    c.tails.pbar_hi = value_or(t, "pbar_hi", c.tails.pbar_hi);
    c.tails.min_exceed = value_or<std::uint64_t>(t, "min_exceed", c.tails.min_exceed);

    const auto& r = section("regime");
    c.regime.sigma2 = value_or(r, "sigma2", c.regime.sigma2);
    c.regime.dt_minutes = value_or(r, "dt_minutes", c.regime.dt_minutes);

    const auto& g = section("ingest");
    c.ingest.csv = value_or<std::string>(g, "csv", c.ingest.csv);
    c.ingest.mean_subtract = value_or(g, "mean_subtract", c.ingest.mean_subtract);
    c.ingest.overlapping = value_or(g, "overlapping", c.ingest.overlapping);
    c.ingest.gap_minutes = value_or(g, "gap_minutes", c.ingest.gap_minutes);
    c.ingest.min_returns = value_or<std::uint64_t>(g, "min_returns", c.ingest.min_returns);
    c.ingest.x_nodes = value_or<std::size_t>(g, "x_nodes", c.ingest.x_nodes);

    semantic_checks(c);
    return c;
}

json to_json(const ExperimentConfig& c) {
    const auto& p = c.model.params;
    const auto& s = c.sim.spec;
    const auto& d = c.density;
    json model{{"family", c.model.family}, {"A", p.A}, {"B", p.B}, {"k", p.k}, {"r0", p.r0}, {"rho", p.rho}, {"mu", p.mu}};
    if (c.model.family == "power_series") {
        model["f_terms"] = terms_to(c.model.f_terms);
        model["g_terms"] = terms_to(c.model.g_terms);
    }
    return json{
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"time_convention", std::string(units::to_string(c.time_convention))},
        {"model", model},
        {"sim",
         {{"n_paths", s.n_paths}, {"n_steps", s.n_steps}, {"dt_sim", s.dt_sim},
          {"burn_in_steps", s.burn_in_steps}, {"sigma0", s.sigma0}, {"s0", s.s0},
          {"scheme", sim::to_string(s.scheme)}, {"sigma_floor", s.sigma_floor},
          {"sigma_cap", s.sigma_cap}, {"record_stride", s.record_stride},
          {"joint", c.sim.joint}, {"format", c.sim.format}}},
        {"density",
         {{"sigma_lo", d.sigma_lo}, {"sigma_hi", d.sigma_hi}, {"n_nodes", d.n_nodes},
          {"hist_lo", d.hist_lo}, {"hist_hi", d.hist_hi}, {"hist_bins", d.hist_bins},
          {"hist_steps", d.hist_steps}, {"fit_lo", d.fit_lo}, {"fit_hi", d.fit_hi}}},
        {"dt_minutes", c.dt_minutes},
        {"x_grid", {{"lo", c.x_grid.lo}, {"hi", c.x_grid.hi}, {"n", c.x_grid.n}}},
        {"tails",
         {{"sources", c.tails.sources}, {"mc_samples", c.tails.mc_samples},
          {"substeps", c.tails.substeps}, {"pbar_lo", c.tails.pbar_lo},
          {"pbar_hi", c.tails.pbar_hi}, {"min_exceed", c.tails.min_exceed}}},
        {"regime", {{"sigma2", c.regime.sigma2}, {"dt_minutes", c.regime.dt_minutes}}},
        {"ingest",
         {{"csv", c.ingest.csv}, {"mean_subtract", c.ingest.mean_subtract},
          {"overlapping", c.ingest.overlapping}, {"gap_minutes", c.ingest.gap_minutes},
          {"min_returns", c.ingest.min_returns}, {"x_nodes", c.ingest.x_nodes}}},
    };
}

json load_config_json(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("voltail_manifest")) {
        require(j.contains("config"), ErrorKind::config, path.string() + ": manifest without a config");
        return j["config"];
    }
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    // Where the outputs go does not change them.
    auto j = to_json(c);
    j.erase("output_dir");
    return fnv1a64(j.dump());
}

}  // namespace voltail::io
