// SPDX-License-Identifier: Apache-2.0
#include "voltail/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "voltail/error.hpp"

namespace voltail::estimators {

std::size_t hill_default_k(std::size_t n) {
    const auto k = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n) * static_cast<double>(n))));
    return std::min(k, n / 10);
}

FitResult hill(std::span<const double> samples, std::size_t k) {
    const std::size_t n = samples.size();
    require(k >= 10 && 2 * k < n, ErrorKind::insufficient_data, "hill: need 10 <= k < n/2");
    std::vector<double> top(samples.begin(), samples.end());
    // Largest k+1 values in descending order.
    std::partial_sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k + 1), top.end(), std::greater<>());
    const double threshold = top[k];
    require(threshold > 0.0, ErrorKind::domain, "hill: order statistic at k is not positive");
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(top[i] / threshold);
    require(s > 0.0, ErrorKind::insufficient_data, "hill: top order statistics are all equal");
    FitResult r;
    r.estimate = static_cast<double>(k) / s;
    r.std_error = r.estimate / std::sqrt(static_cast<double>(k));
    r.n_used = k;
    std::ostringstream w;
    w.precision(17);
    w << "top " << k << " of " << n << ", x >= " << threshold;
    r.window = w.str();
    return r;
}

FitResult loglog_slope(std::span<const double> x, std::span<const double> y, double lo, double hi) {
    require(x.size() == y.size(), ErrorKind::dimension, "loglog_slope: x and y differ in length");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lo && x[i] <= hi)) continue;
        require(x[i] > 0.0 && y[i] > 0.0, ErrorKind::domain, "loglog_slope: non-positive data in window");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const std::size_t n = lx.size();
    require(n >= 5, ErrorKind::insufficient_data, "loglog_slope: fewer than 5 points in window");
    const double N = static_cast<double>(n);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= N;
    my /= N;
    double vx = 0, cxy = 0, vy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        vx += (lx[i] - mx) * (lx[i] - mx);
        cxy += (lx[i] - mx) * (ly[i] - my);
        vy += (ly[i] - my) * (ly[i] - my);
    }
    require(vx > 0.0, ErrorKind::domain, "loglog_slope: window holds a single x value");
    FitResult r;
    r.estimate = cxy / vx;
    const double rss = std::max(0.0, vy - r.estimate * cxy);
    r.std_error = std::sqrt(rss / (N - 2.0) / vx);
    r.n_used = n;
    std::ostringstream w;
    w.precision(17);
    w << "x in [" << lo << ", " << hi << "]";
    r.window = w.str();
    return r;
}

std::vector<double> acf(std::span<const double> series, std::span<const std::size_t> lags) {
    const std::size_t n = series.size();
    require(n >= 2, ErrorKind::insufficient_data, "acf: series too short");
    double m = 0.0;
    for (double v : series) m += v;
    m /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - m) * (v - m);
    require(c0 > 0.0, ErrorKind::domain, "acf: series has zero variance");
    std::vector<double> out;
    out.reserve(lags.size());
    for (const std::size_t lag : lags) {
        require(lag < n, ErrorKind::insufficient_data, "acf: lag not smaller than the series length");
        double c = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) c += (series[t] - m) * (series[t + lag] - m);
        out.push_back(c / c0);
    }
    return out;
}

double vol_of_vol(std::span<const double> sigma_path, double dt, double window) {
    require(dt > 0.0 && window > 0.0, ErrorKind::domain, "vol_of_vol: dt and window must be positive");
    const auto m = static_cast<std::size_t>(std::llround(window / dt));
    require(m >= 10, ErrorKind::domain, "vol_of_vol: window must span at least 10 path steps");
    const std::size_t n_win = sigma_path.empty() ? 0 : (sigma_path.size() - 1) / m;
    require(n_win >= 10, ErrorKind::insufficient_data,
            "vol_of_vol: path holds fewer than 10 windows");
    double s = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < n_win; ++j) {
        const double a = sigma_path[j * m], b = sigma_path[(j + 1) * m];
        require(a > 0.0, ErrorKind::domain, "vol_of_vol: non-positive volatility");
        const double r = (b - a) / a;
        s += r;
        ss += r * r;
    }
    const double N = static_cast<double>(n_win);
    const double var = std::max(0.0, (ss - s * s / N) / (N - 1.0));
    return 100.0 * std::sqrt(var / (static_cast<double>(m) * dt));
}

}  // namespace voltail::estimators
