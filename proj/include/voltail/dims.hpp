// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Exact dimensional algebra over powers of the time unit T.
///
/// Every quantity in the volatility model has dimension T^e for a rational e:
/// the Wiener process carries T^{1/2}, volatility T^{-1/2}, the drift of
/// volatility T^{-3/2}, its diffusion T^{-1} and every rate parameter T^{-1}.
/// Exponents are kept as reduced fractions so that checks are bit-exact.

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace voltail::dims {

/// Reduced fraction with positive denominator. Arithmetic throws on int64 overflow.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    [[nodiscard]] std::int64_t num() const noexcept { return num_; }
    [[nodiscard]] std::int64_t den() const noexcept { return den_; }
    [[nodiscard]] double to_double() const noexcept {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }
    [[nodiscard]] bool is_zero() const noexcept { return num_ == 0; }
    [[nodiscard]] std::string to_string() const;

    friend Rational operator+(Rational a, Rational b);
    friend Rational operator-(Rational a, Rational b);
    friend Rational operator*(Rational a, Rational b);
    friend Rational operator/(Rational a, Rational b);
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(Rational b) { return *this = *this + b; }

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Dimension T^exponent.
struct TimeDim {
    Rational exponent;

    [[nodiscard]] static TimeDim dimensionless() { return {}; }
    [[nodiscard]] static TimeDim time_pow(Rational e) { return TimeDim{e}; }
    [[nodiscard]] bool is_dimensionless() const { return exponent.is_zero(); }
    [[nodiscard]] std::string to_string() const;  // "T^{-1/2}"

    friend bool operator==(const TimeDim&, const TimeDim&) = default;
};

/// Canonical dimensions of the model's symbols.
namespace canonical {
TimeDim wiener();       // T^{1/2}
TimeDim volatility();   // T^{-1/2}
TimeDim drift();        // T^{-3/2}
TimeDim diffusion();    // T^{-1}
TimeDim rate();         // T^{-1}
}  // namespace canonical

[[nodiscard]] TimeDim combine(TimeDim a, TimeDim b);
[[nodiscard]] TimeDim power(TimeDim a, Rational p);

/// Weighted product of dimensions: exponent = sum_i weight_i * exponent_i.
[[nodiscard]] TimeDim combine(std::span<const TimeDim> dims, std::span<const Rational> weights);

/// A value with a time dimension. Addition requires equal dimensions.
struct Quantity {
    double value = 0.0;
    TimeDim dim;

    friend Quantity operator+(const Quantity& a, const Quantity& b);
    friend Quantity operator-(const Quantity& a, const Quantity& b);
    friend Quantity operator*(const Quantity& a, const Quantity& b);
    friend Quantity operator/(const Quantity& a, const Quantity& b);
};

struct DimCheck {
    std::string name;
    Rational expected;
    Rational actual;
    bool pass = false;
};

struct DimReport {
    std::vector<DimCheck> checks;
    [[nodiscard]] bool pass() const;
};

/// Checks [sigma]=T^{-1/2}, [alpha]=T^{-3/2}, [beta]=T^{-1} and each parameter T^{-1}.
/// Failures are report entries, never exceptions.
[[nodiscard]] DimReport check_sde_dims(TimeDim alpha_dim, TimeDim beta_dim, TimeDim sigma_dim,
                                       std::span<const TimeDim> param_dims);

struct NamedDim {
    std::string name;
    TimeDim dim;
};

/// A monomial prod_i p_i^{w_i} of the input parameters with dimension T^{-1}.
struct ReducedParam {
    std::vector<std::string> names;
    std::vector<Rational> exponents;
    TimeDim dim;

    [[nodiscard]] std::string expression() const;  // e.g. "r0^-2 * r1^-1"
    [[nodiscard]] std::size_t support_size() const;
};

/// Bounds of the exponent search: denominators 1..max_den, |numerator| <= max_num.
struct ExponentGrid {
    std::int64_t max_den = 4;
    std::int64_t max_num = 8;
};

/// Finds rational exponents w with sum_i w_i * [p_i] = -1 (an inverse-time
/// combination). Preference order: fewest nonzero exponents, then the support
/// with the lowest parameter indices, then smallest common denominator, then
/// smallest sum |w_i|. Throws ErrorKind::no_inverse_time when every parameter
/// is dimensionless or no combination exists inside the grid.
[[nodiscard]] ReducedParam reduce_parameters(std::span<const NamedDim> params,
                                             ExponentGrid grid = {});

/// Samples of the dimensionless pair (f, g) recovered from alpha and beta.
struct SampledPair {
    std::vector<double> x;
    std::vector<double> f;
    std::vector<double> g;
};

/// Inverts alpha = sigma^3 f(r0 sigma^-2), beta = sigma^2 g(r0 sigma^-2) on a grid of x > 0.
[[nodiscard]] SampledPair nondimensionalize(const std::function<double(double)>& alpha_fn,
                                            const std::function<double(double)>& beta_fn,
                                            double r0, std::span<const double> x_grid);

}  // namespace voltail::dims
