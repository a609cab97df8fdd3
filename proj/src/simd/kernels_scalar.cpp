// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "scalar_lane.hpp"
#include "voltail/simd/kernels.hpp"

namespace voltail::simd {
namespace {

void uniform_pairs(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block, std::size_t n,
                   double* u0, double* u1) {
    for (std::size_t i = 0; i < n; ++i) lane::uniform_pair(seed, stream0 + i, block, u0[i], u1[i]);
}

void normal_pairs(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block, std::size_t n,
                  double* z0, double* z1) {
    for (std::size_t i = 0; i < n; ++i) lane::normal_pair(seed, stream0 + i, block, z0[i], z1[i]);
}

void reciprocal_step(const ReciprocalStep& p, std::size_t n, double* v, const double* z0,
                     const double* z1, const double* z2, ClampCounts* counts) {
    for (std::size_t i = 0; i < n; ++i) v[i] = lane::reciprocal_step(p, v[i], z0[i], z1[i], z2[i], *counts);
}

void log_price_step(const LogPriceStep& p, std::size_t n, const double* v, const double* z0,
                    const double* z3, double* log_s) {
    for (std::size_t i = 0; i < n; ++i) log_s[i] = lane::log_price_step(p, v[i], z0[i], z3[i], log_s[i]);
}

void scaled_products(double c, std::size_t n, const double* sigma, const double* z, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = sigma[i] * (c * z[i]);
}

std::uint64_t count_abs_ge(std::size_t n, const double* x, double threshold) {
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += std::fabs(x[i]) >= threshold ? 1 : 0;
    return count;
}

void accumulate_log_bins(std::size_t n, const double* x, double scale, double log_lo,
                         double inv_width, std::size_t n_bins, std::uint64_t* counts) {
    for (std::size_t i = 0; i < n; ++i) ++counts[lane::log_bin_slot(x[i], scale, log_lo, inv_width, n_bins)];
}

constexpr KernelSet kScalar{
    "scalar",        &uniform_pairs,   &normal_pairs, &reciprocal_step,
    &log_price_step, &scaled_products, &count_abs_ge, &accumulate_log_bins,
};

}  // namespace

const KernelSet& scalar_kernels() noexcept { return kScalar; }

}  // namespace voltail::simd
