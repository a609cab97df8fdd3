// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "voltail/model.hpp"
#include "voltail/sim.hpp"
#include "voltail/units.hpp"

namespace voltail::io {

struct ModelConfig {
    std::string family = "builtin";  // builtin | power_series
    model::ModelParams params;
    std::vector<model::PowerTerm> f_terms;
    std::vector<model::PowerTerm> g_terms;

    [[nodiscard]] model::VolatilityModel build() const;
};

struct SimConfig {
    sim::SimSpec spec;      // defaults resolved from the model
    bool joint = true;      // simulate the price alongside sigma
    std::string format = "csv";
};

/// Absolute sigma values [yr^-1/2]; defaults scale with sqrt(r0).
struct DensityConfig {
    double sigma_lo = 0.0, sigma_hi = 0.0;  // FPE / closed-form grid, 1e-3 .. 1e3
    std::size_t n_nodes = 2048;
    double hist_lo = 0.0, hist_hi = 0.0;    // histogram window, 1e-2 .. 1e3
    std::size_t hist_bins = 100;
    std::uint64_t hist_steps = 10000000;    // post-burn-in states binned
    double fit_lo = 0.0, fit_hi = 0.0;      // tail-fit window, 10 .. 100
};

/// Return nodes in units of sqrt(r0 dt), plus x = 0.
struct XGrid {
    double lo = 1e-3;
    double hi = 3e3;
    std::size_t n = 300;
};

struct TailsConfig {
    std::vector<std::string> sources{"quadrature", "asymptotic"};
    std::uint64_t mc_samples = 1000000;
    std::uint64_t substeps = 8;
    double pbar_lo = 1e-5;
    double pbar_hi = 1e-2;
    std::uint64_t min_exceed = 100;
};

struct RegimeConfig {
    double sigma2 = 400.0;     // [1/yr]
    double dt_minutes = 5.0;
};

struct IngestConfig {
    std::string csv;
    bool mean_subtract = true;
    bool overlapping = false;
    double gap_minutes = 30.0;  // consecutive observations further apart open a gap
    std::uint64_t min_returns = 1000;
    std::size_t x_nodes = 40;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    units::TimeConvention time_convention = units::TimeConvention::trading;
    ModelConfig model;
    SimConfig sim;
    DensityConfig density;
    std::vector<double> dt_minutes{5, 10, 30, 60, 120};
    XGrid x_grid;
    TailsConfig tails;
    RegimeConfig regime;
    IngestConfig ingest;

    [[nodiscard]] double dt_years(double minutes) const {
        return units::minutes_to_years(minutes, time_convention);
    }
};

/// Schema check, then defaults. Omitted model-dependent fields (dt_sim,
/// burn-in, sigma0, floor/cap, density windows) are resolved from the model.
/// Throws ErrorKind::config listing every schema issue.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& j);

/// Fully resolved form; parse_config(to_json(c)) == c field by field.
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& c);

/// Reads a config file, or the "config" member of a manifest.
[[nodiscard]] nlohmann::json load_config_json(const std::filesystem::path& path);

/// FNV-1a 64 of the compact serialized resolved config, output_dir excluded.
[[nodiscard]] std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace voltail::io
