#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "sonc/measure.hpp"
#include "sonc/rng.hpp"

namespace sonc {

// Closed-form dimensional constants. All gamma-function ratios are evaluated
// in log space so everything stays finite up to d = 200 and beyond.

namespace detail {

inline double lfact(double x) { return std::lgamma(x + 1.0); }

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLn2 = 0.693147180559945309417232121458176568;

} // namespace detail

/// gamma_d: lower bound for lambda_1 * mass of the unit ball; gamma_1 = 1,
/// gamma_2 = 45*pi/128, gamma_3 = 7/6, and gamma_d -> sqrt(2).
inline double gamma_d(int d) {
    if (d < 1) throw std::invalid_argument("gamma_d: d >= 1");
    double lead = (2.0 * d + 1.0) / (2.0 * d + 4.0);
    double le;
    if (d % 2 == 0) {
        le = std::log(d + 1.0) + detail::lfact(2.0 * d) + std::log(detail::kPi) -
             3.0 * d * detail::kLn2 - 2.0 * detail::lfact(d / 2.0) -
             detail::lfact(d);
    } else {
        le = std::log(d + 1.0) + 2.0 * detail::lfact((d - 1.0) / 2.0) +
             detail::lfact(2.0 * d) - d * detail::kLn2 - 3.0 * detail::lfact(d);
    }
    return lead * std::exp(le);
}

/// beta_d: mean distance between two independent uniform points in the unit
/// ball (reciprocal closed form to gamma_d).
inline double beta_d(int d) {
    if (d < 1) throw std::invalid_argument("beta_d: d >= 1");
    double lead = (2.0 * d) / (2.0 * d + 1.0);
    double le;
    if (d % 2 == 0) {
        le = (3.0 * d + 1.0) * detail::kLn2 + 2.0 * detail::lfact(d / 2.0) +
             detail::lfact(d) - std::log(d + 1.0) - detail::lfact(2.0 * d) -
             std::log(detail::kPi);
    } else {
        le = (d + 1.0) * detail::kLn2 + 3.0 * detail::lfact(d) -
             std::log(d + 1.0) - 2.0 * detail::lfact((d - 1.0) / 2.0) -
             detail::lfact(2.0 * d);
    }
    return lead * std::exp(le);
}

/// |gamma_{d+2}/gamma_d - (1 + (7d+13)/((d+1)(2d+4)(2d+8)))|.
inline double gamma_ratio_check(int d) {
    double ratio = gamma_d(d + 2) / gamma_d(d);
    double rhs = 1.0 + (7.0 * d + 13.0) /
                           ((d + 1.0) * (2.0 * d + 4.0) * (2.0 * d + 8.0));
    return std::abs(ratio - rhs);
}

/// lambda_1 * mass for the uniform measure on the unit sphere S^{d-1}.
inline double lambda1_sphere_mass(int d) {
    if (d < 2) throw std::invalid_argument("lambda1_sphere_mass: d >= 2");
    return std::exp(std::lgamma(d - 0.5) + std::lgamma((d - 1.0) / 2.0) -
                    std::lgamma(d - 1.0) - std::lgamma(d / 2.0));
}

/// lambda_1 * mass for the unit-weight cross-polytope vertices.
inline double lambda1_crosspolytope_mass(int d) {
    if (d < 1) throw std::invalid_argument("lambda1_crosspolytope_mass: d >= 1");
    return 2.0 * d / ((d - 1.0) * std::sqrt(2.0) + 1.0);
}

/// lambda_1 = lambda_* for a two-point measure.
inline double lambda1_two_points(const Vector& x0, const Vector& x1, double a0,
                                 double a1) {
    if (!(a0 > 0) || !(a1 > 0))
        throw std::invalid_argument("lambda1_two_points: masses must be positive");
    return (x1 - x0).norm() / (a0 + a1);
}

/// (gamma_d, 2^{1-1/d}): bracket for lambda_1 * mass of the unit ball.
inline std::pair<double, double> ball_lambda1_bounds_mass(int d) {
    if (d < 1) throw std::invalid_argument("ball_lambda1_bounds_mass: d >= 1");
    return {gamma_d(d), std::pow(2.0, 1.0 - 1.0 / d)};
}

/// Surface area of the unit (d-1)-sphere, 2 pi^{d/2} / Gamma(d/2).
inline double sphere_area(int d) {
    if (d < 1) throw std::invalid_argument("sphere_area: d >= 1");
    return std::exp(detail::kLn2 + 0.5 * d * std::log(detail::kPi) -
                    std::lgamma(d / 2.0));
}

/// lambda_1 of the |x|^{-(d-1)}-weighted ball; independent of R.
inline double lambda1_power_law_ball(int d, double big_r) {
    if (d < 1 || !(big_r > 0))
        throw std::invalid_argument("lambda1_power_law_ball: bad parameters");
    return 2.0 / sphere_area(d);
}

/// Monte-Carlo estimate of E|X - Y| for X, Y uniform in the unit ball;
/// deterministic per seed.
inline double mc_mean_pairwise_distance(int d, std::size_t n_pairs,
                                        std::uint64_t seed) {
    if (d < 1 || n_pairs < 1)
        throw std::invalid_argument("mc_mean_pairwise_distance: bad parameters");
    CounterRng rng(seed);
    double acc = 0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        Vector x = detail::uniform_in_ball(rng, d);
        Vector y = detail::uniform_in_ball(rng, d);
        acc += (x - y).norm();
    }
    return acc / static_cast<double>(n_pairs);
}

struct ConstantsTable {
    int d = 1;
    double gamma_d = 0;
    double beta_d = 0;
    double ball_upper = 0;  // 2^{1-1/d}
    double sphere_lambda1_mass = 0;  // NaN for d = 1
    double crosspolytope_lambda1_mass = 0;
    double alpha_dminus1 = 0;
};

inline ConstantsTable constants_table(int d) {
    if (d < 1 || d > 200)
        throw std::invalid_argument("constants_table: 1 <= d <= 200");
    ConstantsTable t;
    t.d = d;
    t.gamma_d = gamma_d(d);
    t.beta_d = beta_d(d);
    t.ball_upper = std::pow(2.0, 1.0 - 1.0 / d);
    t.sphere_lambda1_mass =
        d >= 2 ? lambda1_sphere_mass(d) : std::nan("");
    t.crosspolytope_lambda1_mass = lambda1_crosspolytope_mass(d);
    t.alpha_dminus1 = sphere_area(d);
    return t;
}

} // namespace sonc
