// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Tail-index, regression, autocorrelation and vol-of-vol estimators. All pure.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace voltail::estimators {

struct FitResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::string window;
    std::size_t n_used = 0;
};

/// n^{2/3} capped at n/10.
[[nodiscard]] std::size_t hill_default_k(std::size_t n);

/// Tail index a of P(X >= x) ~ x^-a from the k largest of `samples`
/// (k >= 10, k < n/2, the k+1 largest must be positive). stderr = a / sqrt(k).
[[nodiscard]] FitResult hill(std::span<const double> samples, std::size_t k);

/// OLS slope of ln y on ln x over points with lo <= x <= hi (>= 5 points;
/// positive data required inside the window).
[[nodiscard]] FitResult loglog_slope(std::span<const double> x, std::span<const double> y,
                                     double lo, double hi);

/// Biased (1/n) autocorrelation at each lag. Zero-variance series rejected.
[[nodiscard]] std::vector<double> acf(std::span<const double> series,
                                      std::span<const std::size_t> lags);

/// Realised standard deviation of (sigma(t+w) - sigma(t)) / sigma(t) over
/// disjoint windows of length w, divided by sqrt(w) and reported in percent
/// per sqrt(year). dt is the path spacing; w must be at least 10 dt and the
/// path must hold at least 10 windows.
[[nodiscard]] double vol_of_vol(std::span<const double> sigma_path, double dt, double window);

}  // namespace voltail::estimators
