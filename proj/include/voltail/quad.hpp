// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Adaptive Gauss-Kronrod quadrature (Boost.Math) with error reporting.

#include <functional>
#include <vector>

namespace voltail::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    double l1 = 0.0;     // integral of |f|
};

/// Integral of f over [a, b]; either limit may be infinite. Throws
/// ErrorKind::quadrature when the error estimate exceeds rel_tol * l1.
[[nodiscard]] Result integrate(const std::function<double(double)>& f, double a, double b,
                               double rel_tol = 1e-10, unsigned max_depth = 25);

/// Integral of f over consecutive pieces [breaks[i], breaks[i+1]]: 5-point
/// Gauss-Legendre on each piece, bisected until the whole-piece and two-half
/// estimates agree to rel_tol. Suited to integrands smooth between breaks.
[[nodiscard]] Result integrate_pieces(const std::function<double(double)>& f,
                                      const std::vector<double>& breaks, double rel_tol = 1e-10,
                                      unsigned max_depth = 30);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre5 {
    static constexpr double x[5] = {-0.90617984593866399280, -0.53846931010568309104, 0.0,
                                    0.53846931010568309104, 0.90617984593866399280};
    static constexpr double w[5] = {0.23692688505618908751, 0.47862867049936646804,
                                    0.56888888888888888889, 0.47862867049936646804,
                                    0.23692688505618908751};
};

}  // namespace voltail::quad
