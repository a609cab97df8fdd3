// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace voltail::detail {

/// Slope of ln y against ln x at node j, from whichever neighbours are positive.
inline double loglog_node_slope(std::span<const double> x, std::span<const double> y, std::size_t j) {
    const std::size_t n = x.size();
    auto secant = [&](std::size_t a, std::size_t b) {
        return (std::log(y[b]) - std::log(y[a])) / (std::log(x[b]) - std::log(x[a]));
    };
    const bool left = j > 0 && y[j - 1] > 0.0 && x[j - 1] > 0.0;
    const bool right = j + 1 < n && y[j + 1] > 0.0;
    if (left && right) return secant(j - 1, j + 1);
    if (right) return secant(j, j + 1);
    if (left) return secant(j - 1, j);
    return 0.0;
}

/// Cubic Hermite in (ln x, ln y) on [x[i], x[i+1]]; linear in y when an end is not positive.
inline double loglog_eval(std::span<const double> x, std::span<const double> y, std::size_t i, double v) {
    const double y0 = y[i], y1 = y[i + 1];
    if (!(y0 > 0.0 && y1 > 0.0 && x[i] > 0.0)) return y0 + (y1 - y0) * (v - x[i]) / (x[i + 1] - x[i]);
    const double l0 = std::log(x[i]), h = std::log(x[i + 1]) - l0;
    const double t = (std::log(v) - l0) / h;
    const double m0 = loglog_node_slope(x, y, i) * h, m1 = loglog_node_slope(x, y, i + 1) * h;
    const double a = std::log(y0), b = std::log(y1);
    const double t2 = t * t, t3 = t2 * t;
    return std::exp((2 * t3 - 3 * t2 + 1) * a + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * b + (t3 - t2) * m1);
}

}  // namespace voltail::detail
