// SPDX-License-Identifier: Apache-2.0
#include "voltail/quad.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "voltail/error.hpp"

namespace voltail::quad {

Result integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 unsigned max_depth) {
    Result r;
    try {
        r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol,
                                                                                &r.error, &r.l1);
    } catch (const std::exception& e) {
        fail(ErrorKind::quadrature, std::string("quadrature: ") + e.what());
    }
    if (!std::isfinite(r.value) || r.error > rel_tol * r.l1 + 1e-300) {
        std::ostringstream os;
        os << "quadrature on [" << a << ", " << b << "] did not converge: value " << r.value
           << ", error " << r.error;
        fail(ErrorKind::quadrature, os.str());
    }
    return r;
}

namespace {

double gl5(const std::function<double(double)>& f, double a, double b, double& abs_sum) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0, sa = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double v = f(mid + half * GaussLegendre5::x[k]);
        s += GaussLegendre5::w[k] * v;
        sa += GaussLegendre5::w[k] * std::abs(v);
    }
    abs_sum = sa * half;
    return s * half;
}

void refine(const std::function<double(double)>& f, double a, double b, double whole, double rel_tol,
            unsigned depth, Result& r) {
    const double m = 0.5 * (a + b);
    double la = 0.0, lb = 0.0;
    const double left = gl5(f, a, m, la), right = gl5(f, m, b, lb);
    const double err = std::abs(left + right - whole);
    if (err <= rel_tol * (la + lb) || err < 1e-300 || depth == 0) {
        r.value += left + right;
        r.error += err;
        r.l1 += la + lb;
        return;
    }
    refine(f, a, m, left, rel_tol, depth - 1, r);
    refine(f, m, b, right, rel_tol, depth - 1, r);
}

}  // namespace

Result integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& breaks,
                        double rel_tol, unsigned max_depth) {
    Result r;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        if (!(b > a)) continue;
        double l = 0.0;
        refine(f, a, b, gl5(f, a, b, l), rel_tol, max_depth, r);
    }
    if (!std::isfinite(r.value) || r.error > rel_tol * r.l1 + 1e-300) {
        std::ostringstream os;
        os << "piecewise quadrature did not converge: value " << r.value << ", error " << r.error;
        fail(ErrorKind::quadrature, os.str());
    }
    return r;
}

}  // namespace voltail::quad
