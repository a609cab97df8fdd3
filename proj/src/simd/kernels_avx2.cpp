// SPDX-License-Identifier: Apache-2.0
#include "voltail/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__GNUC__)

#include <immintrin.h>

#include <bit>
#include <cstdint>

#include "scalar_lane.hpp"

// Only the functions below are compiled for AVX2. Header inlines stay generic
// so the linker can never pick an AVX2 copy for a scalar caller.
#pragma GCC push_options
#pragma GCC target("avx2")

namespace voltail::simd {
namespace {

constexpr std::size_t kLanes = 4;

struct Words {
    __m256i w[4];  // 32-bit words in the low half of each 64-bit slot
};

inline __m256i lo32(__m256i x) { return _mm256_and_si256(x, _mm256_set1_epi64x(0xFFFFFFFFll)); }

Words philox4(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block) {
    const __m256i idx = _mm256_set_epi64x(3, 2, 1, 0);
    const __m256i stream = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(stream0)), idx);
    __m256i c0 = _mm256_set1_epi64x(static_cast<std::uint32_t>(block));
    __m256i c1 = _mm256_set1_epi64x(static_cast<std::uint32_t>(block >> 32));
    __m256i c2 = lo32(stream);
    __m256i c3 = _mm256_srli_epi64(stream, 32);
    const __m256i m0 = _mm256_set1_epi64x(rng::kPhiloxM0);
    const __m256i m1 = _mm256_set1_epi64x(rng::kPhiloxM1);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k0 += rng::kPhiloxW0;
            k1 += rng::kPhiloxW1;
        }
        const __m256i p0 = _mm256_mul_epu32(m0, c0);
        const __m256i p1 = _mm256_mul_epu32(m1, c2);
        const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), c1),
                                            _mm256_set1_epi64x(k0));
        const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), c3),
                                            _mm256_set1_epi64x(k1));
        c0 = n0;
        c1 = lo32(p1);
        c2 = n2;
        c3 = lo32(p0);
    }
    return {{c0, c1, c2, c3}};
}

inline __m256d uniform_open4(__m256i lo, __m256i hi) {
    const __m256i m52 = _mm256_or_si256(_mm256_slli_epi64(hi, 20), _mm256_srli_epi64(lo, 12));
    const __m256d one_m =
        _mm256_castsi256_pd(_mm256_or_si256(m52, _mm256_set1_epi64x(0x3FF0000000000000ll)));
    return _mm256_add_pd(_mm256_sub_pd(one_m, _mm256_set1_pd(1.0)), _mm256_set1_pd(0x1p-53));
}

inline __m256d log4(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    __m256i ebits = _mm256_srli_epi64(bits, 52);
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
                        _mm256_set1_epi64x(0x3FF0000000000000ll)));
    const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(detmath::kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
    ebits = _mm256_sub_epi64(ebits, _mm256_castpd_si256(big));
    // ebits < 2^11: exact conversion through the 2^52 exponent trick.
    const __m256d magic = _mm256_set1_pd(0x1p52);
    const __m256d ed = _mm256_sub_pd(
        _mm256_castsi256_pd(_mm256_or_si256(ebits, _mm256_castpd_si256(magic))), magic);
    const __m256d e = _mm256_sub_pd(ed, _mm256_set1_pd(1023.0));
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d z = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(detmath::kLogP[0]);
    for (int i = 1; i < 10; ++i)
        p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(detmath::kLogP[i]));
    const __m256d t = _mm256_add_pd(s, _mm256_mul_pd(_mm256_mul_pd(s, z), p));
    const __m256d log_m = _mm256_add_pd(t, t);
    return _mm256_add_pd(
        _mm256_mul_pd(e, _mm256_set1_pd(detmath::kLn2Hi)),
        _mm256_add_pd(_mm256_mul_pd(e, _mm256_set1_pd(detmath::kLn2Lo)), log_m));
}

inline void sincos_2pi4(__m256d u, __m256d& c, __m256d& s) {
    const __m256d t4 = _mm256_mul_pd(u, _mm256_set1_pd(4.0));
    const __m256d q = _mm256_floor_pd(_mm256_add_pd(t4, _mm256_set1_pd(0.5)));
    const __m256d theta = _mm256_mul_pd(_mm256_sub_pd(t4, q), _mm256_set1_pd(detmath::kHalfPi));
    const __m256d z = _mm256_mul_pd(theta, theta);
    __m256d sp = _mm256_set1_pd(detmath::kSinP[0]);
    for (int i = 1; i < 9; ++i)
        sp = _mm256_add_pd(_mm256_mul_pd(sp, z), _mm256_set1_pd(detmath::kSinP[i]));
    __m256d cp = _mm256_set1_pd(detmath::kCosP[0]);
    for (int i = 1; i < 9; ++i)
        cp = _mm256_add_pd(_mm256_mul_pd(cp, z), _mm256_set1_pd(detmath::kCosP[i]));
    const __m256d sin_t = _mm256_add_pd(theta, _mm256_mul_pd(_mm256_mul_pd(theta, z), sp));
    const __m256d cos_t =
        _mm256_add_pd(_mm256_sub_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(0.5), z)),
                      _mm256_mul_pd(_mm256_mul_pd(z, z), cp));

    const __m256i qi = _mm256_cvtepi32_epi64(_mm256_cvttpd_epi32(q));
    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i two = _mm256_set1_epi64x(2);
    const __m256d odd = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, one), one));
    const __m256d neg_c = _mm256_castsi256_pd(
        _mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(qi, one), two), two));
    const __m256d neg_s = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, two), two));
    const __m256d a = _mm256_blendv_pd(cos_t, sin_t, odd);
    const __m256d b = _mm256_blendv_pd(sin_t, cos_t, odd);
    const __m256d sign = _mm256_set1_pd(-0.0);
    c = _mm256_blendv_pd(a, _mm256_xor_pd(a, sign), neg_c);
    s = _mm256_blendv_pd(b, _mm256_xor_pd(b, sign), neg_s);
}

void uniform_pairs(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block, std::size_t n,
                   double* u0, double* u1) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const Words w = philox4(seed, stream0 + i, block);
        _mm256_storeu_pd(u0 + i, uniform_open4(w.w[0], w.w[1]));
        _mm256_storeu_pd(u1 + i, uniform_open4(w.w[2], w.w[3]));
    }
    for (; i < n; ++i) lane::uniform_pair(seed, stream0 + i, block, u0[i], u1[i]);
}

void normal_pairs(std::uint64_t seed, std::uint64_t stream0, std::uint64_t block, std::size_t n,
                  double* z0, double* z1) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const Words w = philox4(seed, stream0 + i, block);
        const __m256d a = uniform_open4(w.w[0], w.w[1]);
        const __m256d b = uniform_open4(w.w[2], w.w[3]);
        const __m256d r = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log4(a)));
        __m256d c, s;
        sincos_2pi4(b, c, s);
        _mm256_storeu_pd(z0 + i, _mm256_mul_pd(r, c));
        _mm256_storeu_pd(z1 + i, _mm256_mul_pd(r, s));
    }
    for (; i < n; ++i) lane::normal_pair(seed, stream0 + i, block, z0[i], z1[i]);
}

void reciprocal_step(const ReciprocalStep& p, std::size_t n, double* v, const double* z0,
                     const double* z1, const double* z2, ClampCounts* counts) {
    const __m256d bsh = _mm256_set1_pd(p.b_sqrt_h);
    const __m256d growth = _mm256_set1_pd(p.growth);
    const __m256d damping = _mm256_set1_pd(p.damping);
    const __m256d v_lo = _mm256_set1_pd(p.v_lo);
    const __m256d v_hi = _mm256_set1_pd(p.v_hi);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d w0 = _mm256_add_pd(_mm256_loadu_pd(v + i), _mm256_mul_pd(bsh, _mm256_loadu_pd(z0 + i)));
        const __m256d w1 = _mm256_mul_pd(bsh, _mm256_loadu_pd(z1 + i));
        const __m256d w2 = _mm256_mul_pd(bsh, _mm256_loadu_pd(z2 + i));
        const __m256d r = _mm256_sqrt_pd(_mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(w0, w0), _mm256_mul_pd(w1, w1)), _mm256_mul_pd(w2, w2)));
        __m256d out = _mm256_div_pd(_mm256_mul_pd(r, growth), _mm256_add_pd(one, _mm256_mul_pd(damping, r)));
        const __m256d over = _mm256_cmp_pd(out, v_hi, _CMP_GT_OQ);
        out = _mm256_blendv_pd(out, _mm256_add_pd(v_hi, _mm256_sub_pd(v_hi, out)), over);
        counts->floor_hits += static_cast<unsigned>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(over))));
        const __m256d under = _mm256_cmp_pd(out, v_lo, _CMP_LT_OQ);
        out = _mm256_blendv_pd(out, _mm256_add_pd(v_lo, _mm256_sub_pd(v_lo, out)), under);
        counts->cap_hits += static_cast<unsigned>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(under))));
        // std::max / std::min semantics: replace only on strict comparison.
        out = _mm256_blendv_pd(out, v_lo, _mm256_cmp_pd(out, v_lo, _CMP_LT_OQ));
        out = _mm256_blendv_pd(out, v_hi, _mm256_cmp_pd(v_hi, out, _CMP_LT_OQ));
        _mm256_storeu_pd(v + i, out);
    }
    for (; i < n; ++i) v[i] = lane::reciprocal_step(p, v[i], z0[i], z1[i], z2[i], *counts);
}

void log_price_step(const LogPriceStep& p, std::size_t n, const double* v, const double* z0,
                    const double* z3, double* log_s) {
    const __m256d h = _mm256_set1_pd(p.h);
    const __m256d sqrt_h = _mm256_set1_pd(p.sqrt_h);
    const __m256d mu = _mm256_set1_pd(p.mu);
    const __m256d rho = _mm256_set1_pd(p.rho);
    const __m256d rho_perp = _mm256_set1_pd(p.rho_perp);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d sig = _mm256_div_pd(_mm256_set1_pd(1.0), _mm256_loadu_pd(v + i));
        const __m256d drift = _mm256_mul_pd(_mm256_sub_pd(mu, _mm256_mul_pd(half, _mm256_mul_pd(sig, sig))), h);
        const __m256d dw2 = _mm256_xor_pd(_mm256_mul_pd(sqrt_h, _mm256_loadu_pd(z0 + i)), sign);
        const __m256d dw1 = _mm256_add_pd(_mm256_mul_pd(rho, dw2),
                                          _mm256_mul_pd(rho_perp, _mm256_mul_pd(sqrt_h, _mm256_loadu_pd(z3 + i))));
        const __m256d ls = _mm256_add_pd(_mm256_loadu_pd(log_s + i),
                                         _mm256_add_pd(drift, _mm256_mul_pd(sig, dw1)));
        _mm256_storeu_pd(log_s + i, ls);
    }
    for (; i < n; ++i) log_s[i] = lane::log_price_step(p, v[i], z0[i], z3[i], log_s[i]);
}

void scaled_products(double c, std::size_t n, const double* sigma, const double* z, double* out) {
    const __m256d cv = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(sigma + i), _mm256_mul_pd(cv, _mm256_loadu_pd(z + i))));
    for (; i < n; ++i) out[i] = sigma[i] * (c * z[i]);
}

std::uint64_t count_abs_ge(std::size_t n, const double* x, double threshold) {
    const __m256d thr = _mm256_set1_pd(threshold);
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::uint64_t count = 0;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d ax = _mm256_andnot_pd(sign, _mm256_loadu_pd(x + i));
        count += static_cast<unsigned>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(_mm256_cmp_pd(ax, thr, _CMP_GE_OQ)))));
    }
    for (; i < n; ++i) count += std::fabs(x[i]) >= threshold ? 1 : 0;
    return count;
}

void accumulate_log_bins(std::size_t n, const double* x, double scale, double log_lo,
                         double inv_width, std::size_t n_bins, std::uint64_t* counts) {
    const __m256d sc = _mm256_set1_pd(scale);
    const __m256d lo = _mm256_set1_pd(log_lo);
    const __m256d iw = _mm256_set1_pd(inv_width);
    const double top = static_cast<double>(n_bins);
    alignas(32) double t[kLanes];
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d l = log4(_mm256_loadu_pd(x + i));
        _mm256_store_pd(t, _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(sc, l), lo), iw));
        for (std::size_t j = 0; j < kLanes; ++j) {
            const double tj = t[j];
            const std::size_t slot = !(tj >= 0.0) ? 0 : tj >= top ? n_bins + 1 : static_cast<std::size_t>(tj) + 1;
            ++counts[slot];
        }
    }
    for (; i < n; ++i) ++counts[lane::log_bin_slot(x[i], scale, log_lo, inv_width, n_bins)];
}

constexpr KernelSet kAvx2{
    "avx2",          &uniform_pairs,   &normal_pairs, &reciprocal_step,
    &log_price_step, &scaled_products, &count_abs_ge, &accumulate_log_bins,
};

}  // namespace
}  // namespace voltail::simd

#pragma GCC pop_options

namespace voltail::simd {

const KernelSet* avx2_kernels() noexcept {
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &kAvx2 : nullptr;
}

}  // namespace voltail::simd

#else

namespace voltail::simd {

const KernelSet* avx2_kernels() noexcept { return nullptr; }

}  // namespace voltail::simd

#endif
