// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-lane reference operations. The scalar kernel set is a loop over these,
// and the AVX2 kernels use them for remainder lanes.

#include <algorithm>
#include <cmath>

#include "voltail/rng.hpp"
#include "voltail/simd/detmath.hpp"
#include "voltail/simd/kernels.hpp"

namespace voltail::simd::lane {

inline void uniform_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t block,
                         double& u0, double& u1) noexcept {
    const rng::Block w = rng::draw_block(seed, stream, block);
    u0 = rng::uniform_open(w[0], w[1]);
    u1 = rng::uniform_open(w[2], w[3]);
}

inline void normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t block, double& z0,
                        double& z1) noexcept {
    double u0, u1;
    uniform_pair(seed, stream, block, u0, u1);
    detmath::box_muller(u0, u1, z0, z1);
}

inline double reciprocal_step(const ReciprocalStep& p, double v, double z0, double z1, double z2,
                              ClampCounts& counts) noexcept {
    const double w0 = v + p.b_sqrt_h * z0;
    const double w1 = p.b_sqrt_h * z1;
    const double w2 = p.b_sqrt_h * z2;
    const double r = std::sqrt((w0 * w0 + w1 * w1) + w2 * w2);
    double out = (r * p.growth) / (1.0 + p.damping * r);
    if (out > p.v_hi) {
        out = p.v_hi + (p.v_hi - out);
        ++counts.floor_hits;
    }
    if (out < p.v_lo) {
        out = p.v_lo + (p.v_lo - out);
        ++counts.cap_hits;
    }
    return std::min(std::max(out, p.v_lo), p.v_hi);
}

inline double log_price_step(const LogPriceStep& p, double v, double z0, double z3,
                             double log_s) noexcept {
    const double sig = 1.0 / v;
    const double drift = (p.mu - 0.5 * (sig * sig)) * p.h;
    const double dw2 = -(p.sqrt_h * z0);
    const double dw1 = p.rho * dw2 + p.rho_perp * (p.sqrt_h * z3);
    return log_s + (drift + sig * dw1);
}

/// Index into a counts array laid out as for KernelSet::accumulate_log_bins.
inline std::size_t log_bin_slot(double x, double scale, double log_lo, double inv_width,
                                std::size_t n_bins) noexcept {
    const double t = (scale * detmath::log(x) - log_lo) * inv_width;
    if (!(t >= 0.0)) return 0;
    if (t >= static_cast<double>(n_bins)) return n_bins + 1;
    return static_cast<std::size_t>(t) + 1;
}

}  // namespace voltail::simd::lane
