// SPDX-License-Identifier: Apache-2.0
#include "voltail/io/report_json.hpp"

#include <cstdio>
#include <ostream>

namespace voltail::io {

using nlohmann::json;

json to_json(const dims::DimReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"expected", c.expected.to_string()},
                          {"actual", c.actual.to_string()},
                          {"pass", c.pass}});
    }
    return {{"pass", r.pass()}, {"checks", checks}};
}

json to_json(const model::AsymptoticReport& r) {
    return {{"pass", r.pass()},
            {"f0", r.f0},
            {"f_prime0", r.f_prime0},
            {"g0", r.g0},
            {"A", r.A},
            {"B", r.B},
            {"f_prime0_error", r.f_prime0_error},
            {"g0_error", r.g0_error},
            {"f0_zero", r.f0_zero},
            {"f_prime_nonpositive", r.f_prime_nonpositive},
            {"g0_positive", r.g0_positive},
            {"violations", r.violations()}};
}

json to_json(const model::StylizedFactReport& r) {
    return {{"pass", r.pass()},
            {"mean_reversion_ok", r.mean_reversion_ok},
            {"worst_sigma", r.worst_sigma},
            {"worst_alpha", r.worst_alpha},
            {"long_memory_ok", r.long_memory_ok},
            {"tail_drift_sup", r.tail_drift_sup},
            {"tail_drift_final", r.tail_drift_final},
            {"tail_drift_decreasing", r.tail_drift_decreasing},
            {"vvol_ok", r.vvol_ok},
            {"tail_vvol_inf", r.tail_vvol_inf},
            {"tail_vvol_slope", r.tail_vvol_slope}};
}

json to_json(const model::RegimeReport& r) {
    return {{"sigma2_dt", r.sigma2_dt},
            {"sigma2_over_r0", r.sigma2_over_r0},
            {"short_term_ok", r.short_term_ok},
            {"high_vol_ok", r.high_vol_ok}};
}

json to_json(const estimators::FitResult& r) {
    return {{"estimate", r.estimate}, {"std_error", r.std_error}, {"window", r.window}, {"n_used", r.n_used}};
}

json to_json(const density::TailFit& r) {
    return {{"exponent", r.exponent},
            {"exponent_stderr", r.exponent_stderr},
            {"prefactor", r.prefactor},
            {"C0", r.C0},
            {"n_points", r.n_points}};
}

json to_json(const tails::ScalingFit& r) {
    return {{"exponent", r.exponent}, {"std_error", r.std_error}, {"x_ref", r.x_ref}, {"dt", r.dt}, {"pbar", r.pbar}};
}

void write_density_csv(std::ostream& os, const density::DensityGrid& d) {
    os << "sigma,q,source\n";
    const std::string src = density::to_string(d.source);
    char buf[80];
    for (std::size_t i = 0; i < d.sigma.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,", d.sigma[i], d.q[i]);
        os << buf << src << '\n';
    }
}

}  // namespace voltail::io
