// SPDX-License-Identifier: Apache-2.0
#include "voltail/dims.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "voltail/error.hpp"

namespace voltail::dims {
namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::domain, "rational overflow");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::domain, "rational overflow");
    return r;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    require(den != 0, ErrorKind::domain, "rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(Rational a, Rational b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const std::int64_t den = checked_mul(a.den_ / g, b.den_);
    const std::int64_t num =
        checked_add(checked_mul(a.num_, b.den_ / g), checked_mul(b.num_, a.den_ / g));
    return Rational(num, den);
}

Rational operator-(Rational a, Rational b) { return a + (-b); }

Rational operator*(Rational a, Rational b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    const std::int64_t n1 = g1 == 0 ? a.num_ : a.num_ / g1;
    const std::int64_t d2 = g1 == 0 ? b.den_ : b.den_ / g1;
    const std::int64_t n2 = g2 == 0 ? b.num_ : b.num_ / g2;
    const std::int64_t d1 = g2 == 0 ? a.den_ : a.den_ / g2;
    return Rational(checked_mul(n1, n2), checked_mul(d1, d2));
}

Rational operator/(Rational a, Rational b) {
    require(!b.is_zero(), ErrorKind::domain, "rational division by zero");
    return a * Rational(b.den_, b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    // Denominators are positive, so cross multiplication preserves order.
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::string TimeDim::to_string() const { return "T^{" + exponent.to_string() + "}"; }

namespace canonical {
TimeDim wiener() { return TimeDim{Rational(1, 2)}; }
TimeDim volatility() { return TimeDim{Rational(-1, 2)}; }
TimeDim drift() { return TimeDim{Rational(-3, 2)}; }
TimeDim diffusion() { return TimeDim{Rational(-1)}; }
TimeDim rate() { return TimeDim{Rational(-1)}; }
}  // namespace canonical

TimeDim combine(TimeDim a, TimeDim b) { return TimeDim{a.exponent + b.exponent}; }

TimeDim power(TimeDim a, Rational p) { return TimeDim{a.exponent * p}; }

TimeDim combine(std::span<const TimeDim> dims, std::span<const Rational> weights) {
    require(dims.size() == weights.size(), ErrorKind::dimension,
            "combine: " + std::to_string(dims.size()) + " dimensions but " +
                std::to_string(weights.size()) + " weights");
    Rational total;
    for (std::size_t i = 0; i < dims.size(); ++i) total += dims[i].exponent * weights[i];
    return TimeDim{total};
}

Quantity operator+(const Quantity& a, const Quantity& b) {
    require(a.dim == b.dim, ErrorKind::dimension,
            "cannot add " + a.dim.to_string() + " and " + b.dim.to_string());
    return {a.value + b.value, a.dim};
}

Quantity operator-(const Quantity& a, const Quantity& b) {
    require(a.dim == b.dim, ErrorKind::dimension,
            "cannot subtract " + b.dim.to_string() + " from " + a.dim.to_string());
    return {a.value - b.value, a.dim};
}

Quantity operator*(const Quantity& a, const Quantity& b) {
    return {a.value * b.value, combine(a.dim, b.dim)};
}

Quantity operator/(const Quantity& a, const Quantity& b) {
    return {a.value / b.value, combine(a.dim, power(b.dim, Rational(-1)))};
}

bool DimReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const DimCheck& c) { return c.pass; });
}

DimReport check_sde_dims(TimeDim alpha_dim, TimeDim beta_dim, TimeDim sigma_dim,
                         std::span<const TimeDim> param_dims) {
    DimReport report;
    auto add = [&](std::string name, TimeDim expected, TimeDim actual) {
        report.checks.push_back(
            {std::move(name), expected.exponent, actual.exponent, expected == actual});
    };
    add("sigma", canonical::volatility(), sigma_dim);
    // d(sigma) = alpha dt + beta dW fixes the coefficient dimensions relative to sigma.
    add("alpha", canonical::drift(), alpha_dim);
    add("beta", canonical::diffusion(), beta_dim);
    add("alpha_dt_matches_sigma", sigma_dim, combine(alpha_dim, TimeDim{Rational(1)}));
    add("beta_dW_matches_sigma", sigma_dim, combine(beta_dim, canonical::wiener()));
    for (std::size_t i = 0; i < param_dims.size(); ++i) {
        add("param[" + std::to_string(i) + "]", canonical::rate(), param_dims[i]);
    }
    return report;
}

std::string ReducedParam::expression() const {
    std::ostringstream out;
    bool first = true;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (exponents[i].is_zero()) continue;
        if (!first) out << " * ";
        first = false;
        out << names[i];
        if (exponents[i] != Rational(1)) out << "^" << exponents[i].to_string();
    }
    return first ? "1" : out.str();
}

std::size_t ReducedParam::support_size() const {
    return static_cast<std::size_t>(std::count_if(
        exponents.begin(), exponents.end(), [](const Rational& w) { return !w.is_zero(); }));
}

namespace {

bool in_grid(const Rational& w, const ExponentGrid& grid) {
    return !w.is_zero() && w.den() <= grid.max_den && std::abs(w.num()) <= grid.max_num;
}

std::vector<Rational> grid_values(const ExponentGrid& grid) {
    std::set<Rational> values;
    for (std::int64_t d = 1; d <= grid.max_den; ++d) {
        for (std::int64_t n = -grid.max_num; n <= grid.max_num; ++n) {
            if (n == 0) continue;
            Rational w(n, d);
            if (in_grid(w, grid)) values.insert(w);
        }
    }
    return {values.begin(), values.end()};
}

struct Candidate {
    std::vector<Rational> w;  // exponents on the support, in support order

    [[nodiscard]] std::int64_t common_den() const {
        std::int64_t l = 1;
        for (const auto& x : w) l = std::lcm(l, x.den());
        return l;
    }
    [[nodiscard]] Rational abs_sum() const {
        Rational s;
        for (const auto& x : w) s += x.num() < 0 ? -x : x;
        return s;
    }
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.common_den() != b.common_den()) return a.common_den() < b.common_den();
    const Rational sa = a.abs_sum(), sb = b.abs_sum();
    if (sa != sb) return sa < sb;
    return std::lexicographical_compare(a.w.begin(), a.w.end(), b.w.begin(), b.w.end());
}

// Enumerates exponents for support[0..s-2] from the grid and solves for the last one.
void search_support(const std::vector<Rational>& exps, const std::vector<Rational>& values,
                    const ExponentGrid& grid, std::vector<Rational>& partial,
                    std::optional<Candidate>& best) {
    const std::size_t s = exps.size();
    if (partial.size() + 1 == s) {
        Rational acc(-1);
        for (std::size_t i = 0; i < partial.size(); ++i) acc = acc - partial[i] * exps[i];
        const Rational last = acc / exps.back();
        if (!in_grid(last, grid)) return;
        Candidate c{partial};
        c.w.push_back(last);
        if (!best || better(c, *best)) best = std::move(c);
        return;
    }
    for (const auto& v : values) {
        partial.push_back(v);
        search_support(exps, values, grid, partial, best);
        partial.pop_back();
    }
}

}  // namespace

ReducedParam reduce_parameters(std::span<const NamedDim> params, ExponentGrid grid) {
    const std::size_t n = params.size();
    std::vector<std::size_t> dimensional;
    for (std::size_t i = 0; i < n; ++i) {
        if (!params[i].dim.is_dimensionless()) dimensional.push_back(i);
    }
    require(!dimensional.empty(), ErrorKind::no_inverse_time,
            "reduce_parameters: every parameter is dimensionless");

    const auto values = grid_values(grid);
    // A dimensionless parameter never belongs to a minimal support.
    for (std::size_t s = 1; s <= dimensional.size(); ++s) {
        std::vector<bool> pick(dimensional.size(), false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(s), true);
        // prev_permutation on a leading-true mask walks subsets in lexicographic index order.
        do {
            std::vector<std::size_t> support;
            std::vector<Rational> exps;
            for (std::size_t j = 0; j < dimensional.size(); ++j) {
                if (pick[j]) {
                    support.push_back(dimensional[j]);
                    exps.push_back(params[dimensional[j]].dim.exponent);
                }
            }
            std::optional<Candidate> best;
            std::vector<Rational> partial;
            search_support(exps, values, grid, partial, best);
            if (best) {
                ReducedParam out;
                out.exponents.assign(n, Rational());
                for (const auto& p : params) out.names.push_back(p.name);
                for (std::size_t j = 0; j < support.size(); ++j) out.exponents[support[j]] = best->w[j];
                std::vector<TimeDim> dims;
                for (const auto& p : params) dims.push_back(p.dim);
                out.dim = combine(dims, out.exponents);
                return out;
            }
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    fail(ErrorKind::no_inverse_time,
         "reduce_parameters: no inverse-time combination with denominators <= " +
             std::to_string(grid.max_den) + " and |numerator| <= " + std::to_string(grid.max_num));
}

SampledPair nondimensionalize(const std::function<double(double)>& alpha_fn,
                              const std::function<double(double)>& beta_fn, double r0,
                              std::span<const double> x_grid) {
    require(r0 > 0.0, ErrorKind::domain, "nondimensionalize: r0 must be positive");
    SampledPair out;
    out.x.reserve(x_grid.size());
    out.f.reserve(x_grid.size());
    out.g.reserve(x_grid.size());
    for (const double x : x_grid) {
        require(x > 0.0, ErrorKind::domain, "nondimensionalize: grid values must be positive");
        const double sigma = std::sqrt(r0 / x);
        out.x.push_back(x);
        out.f.push_back(alpha_fn(sigma) / (sigma * sigma * sigma));
        out.g.push_back(beta_fn(sigma) / (sigma * sigma));
    }
    return out;
}

}  // namespace voltail::dims
