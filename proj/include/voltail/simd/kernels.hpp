// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Data-parallel inner loops with a scalar reference and an AVX2 variant.
///
/// Every kernel is defined by its scalar implementation; the AVX2 version
/// performs the same IEEE operations lane by lane and must agree bit for bit
/// (tests/test_kernels.cpp enforces this). The active set is chosen once at
/// first use: the best variant the CPU supports, or the one named by the
/// VOLTAIL_KERNELS environment variable ("scalar" or "avx2").

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace voltail::simd {

/// One Lie-splitting step of v = 1/sigma for the built-in model:
///   v <- | v e1 + b sqrt(h) (z0, z1, z2) |        (exact Bessel-3 part)
///   v <- v E / (1 + D v)                          (exact logistic flow)
/// followed by reflection into [v_lo, v_hi].
struct ReciprocalStep {
    double b_sqrt_h = 0.0;  // B sqrt(h)
    double growth = 1.0;    // E = exp(A r0 h)
    double damping = 0.0;   // D = k r0^{3/2} expm1(A r0 h) / (A r0), or k r0^{3/2} h
    double v_lo = 0.0;      // 1 / sigma_cap
    double v_hi = 0.0;      // 1 / sigma_floor
};

/// ln S += (mu - sigma^2/2) h + sigma (rho dW2 + rho_perp sqrt(h) z3), dW2 = -sqrt(h) z0,
/// with sigma = 1/v frozen over the step.
struct LogPriceStep {
    double h = 0.0;
    double sqrt_h = 0.0;
    double mu = 0.0;
    double rho = 0.0;
    double rho_perp = 1.0;
};

struct ClampCounts {
    std::uint64_t floor_hits = 0;  // sigma fell below sigma_floor (v above v_hi)
    std::uint64_t cap_hits = 0;    // sigma rose above sigma_cap (v below v_lo)
};

struct KernelSet {
    std::string_view name;

    /// Lane i draws block `block` of stream `stream0 + i` and maps it to two
    /// uniforms on (0, 1).
    void (*uniform_pairs)(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block,
                          std::size_t n, double* u0, double* u1);

    /// As uniform_pairs, followed by the Box-Muller transform.
    void (*normal_pairs)(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block,
                         std::size_t n, double* z0, double* z1);

    void (*reciprocal_step)(const ReciprocalStep& p, std::size_t n, double* v, const double* z0,
                            const double* z1, const double* z2, ClampCounts* counts);

    void (*log_price_step)(const LogPriceStep& p, std::size_t n, const double* v,
                           const double* z0, const double* z3, double* log_s);

    /// out[i] = sigma[i] * (c * z[i]).
    void (*scaled_products)(double c, std::size_t n, const double* sigma, const double* z,
                            double* out);

    /// Number of i with |x[i]| >= threshold.
    std::uint64_t (*count_abs_ge)(std::size_t n, const double* x, double threshold);

    /// Histogram of scale * ln x[i] on n_bins equal bins starting at log_lo:
    /// counts[0] takes underflow, counts[1 + j] bin j, counts[n_bins + 1] overflow.
    /// The logarithm is detmath::log, so every variant assigns identical bins.
    void (*accumulate_log_bins)(std::size_t n, const double* x, double scale, double log_lo,
                                double inv_width, std::size_t n_bins, std::uint64_t* counts);
};

[[nodiscard]] const KernelSet& scalar_kernels() noexcept;

/// nullptr when the build or the CPU lacks AVX2.
[[nodiscard]] const KernelSet* avx2_kernels() noexcept;

/// The dispatch target used by the rest of the library.
[[nodiscard]] const KernelSet& active_kernels() noexcept;

}  // namespace voltail::simd
