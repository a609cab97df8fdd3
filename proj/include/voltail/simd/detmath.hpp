// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Elementary functions with a fixed operation sequence.
///
/// libm results differ across platforms and never match a vectorised
/// implementation bit for bit. The Box-Muller transform therefore uses these
/// polynomial versions; the AVX2 kernels replay exactly the same IEEE
/// operations in the same order, so every dispatch path yields identical bits.
/// Accuracy is a few ulp, which is ample for generating normals.

#include <bit>
#include <cmath>
#include <cstdint>

namespace voltail::simd::detmath {

inline constexpr double kSqrt2 = 1.41421356237309514547;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kHalfPi = 1.57079632679489655800;

// atanh series: log(m) = 2 (s + s z P(z)), s = (m-1)/(m+1), z = s^2, |s| <= 0.1716.
inline constexpr double kLogP[10] = {1.0 / 21, 1.0 / 19, 1.0 / 17, 1.0 / 15, 1.0 / 13,
                                     1.0 / 11, 1.0 / 9,  1.0 / 7,  1.0 / 5,  1.0 / 3};

// Taylor coefficients on [-pi/4, pi/4], highest order first.
inline constexpr double kSinP[9] = {
    -1.0 / 121645100408832000.0,  // -1/19!
    1.0 / 355687428096000.0,      // 1/17!
    -1.0 / 1307674368000.0,       // -1/15!
    1.0 / 6227020800.0,           // 1/13!
    -1.0 / 39916800.0,            // -1/11!
    1.0 / 362880.0,               // 1/9!
    -1.0 / 5040.0,                // -1/7!
    1.0 / 120.0,                  // 1/5!
    -1.0 / 6.0,                   // -1/3!
};
inline constexpr double kCosP[9] = {
    1.0 / 2432902008176640000.0,  // 1/20!
    -1.0 / 6402373705728000.0,    // -1/18!
    1.0 / 20922789888000.0,       // 1/16!
    -1.0 / 87178291200.0,         // -1/14!
    1.0 / 479001600.0,            // 1/12!
    -1.0 / 3628800.0,             // -1/10!
    1.0 / 40320.0,                // 1/8!
    -1.0 / 720.0,                 // -1/6!
    1.0 / 24.0,                   // 1/4!
};

/// Natural log of a positive normal double.
[[nodiscard]] inline double log(double x) noexcept {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    std::uint64_t ebits = bits >> 52;
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
    if (m > kSqrt2) {
        m = m * 0.5;
        ebits += 1;
    }
    const double e = static_cast<double>(ebits) - 1023.0;
    const double s = (m - 1.0) / (m + 1.0);
    const double z = s * s;
    double p = kLogP[0];
    for (int i = 1; i < 10; ++i) p = p * z + kLogP[i];
    const double t = s + (s * z) * p;
    const double log_m = t + t;
    return e * kLn2Hi + (e * kLn2Lo + log_m);
}

/// cos(2 pi u) and sin(2 pi u) for u in [0, 1); the quadrant is taken from u
/// directly so no multiple of pi is ever rounded.
inline void sincos_2pi(double u, double& c, double& s) noexcept {
    const double t4 = u * 4.0;
    const double q = std::floor(t4 + 0.5);
    const double theta = (t4 - q) * kHalfPi;
    const double z = theta * theta;
    double sp = kSinP[0];
    for (int i = 1; i < 9; ++i) sp = sp * z + kSinP[i];
    double cp = kCosP[0];
    for (int i = 1; i < 9; ++i) cp = cp * z + kCosP[i];
    const double sin_t = theta + (theta * z) * sp;
    const double cos_t = (1.0 - 0.5 * z) + (z * z) * cp;
    const int qi = static_cast<int>(q) & 3;
    const double a = (qi & 1) ? sin_t : cos_t;
    const double b = (qi & 1) ? cos_t : sin_t;
    c = ((qi + 1) & 2) ? -a : a;
    s = (qi & 2) ? -b : b;
}

/// Two independent standard normals from two uniforms on (0, 1).
inline void box_muller(double u1, double u2, double& z0, double& z1) noexcept {
    const double r = std::sqrt(-2.0 * detmath::log(u1));
    double c, s;
    sincos_2pi(u2, c, s);
    z0 = r * c;
    z1 = r * s;
}

}  // namespace voltail::simd::detmath
