#pragma once

#include <cmath>

#include "maxid/errors.hpp"
#include "maxid/roots.hpp"

namespace maxid {

// Below this beta the Weibull-type magnitude measure is evaluated through its
// beta -> 0 limit r^{-alpha}; with expm1 arithmetic the two branches agree to
// well under 1e-6 across r in [0.01, 100] at the switch.
inline constexpr double kBetaSwitch = 1e-8;

// mean measure of (r, inf) for the magnitude point process
inline double kappa_tail(double r, double alpha, double beta) {
    const double lr = std::log(r);
    if (beta <= kBetaSwitch) return std::exp(-alpha * lr);
    return std::exp(-beta * lr - alpha * std::expm1(beta * lr) / beta);
}

inline double log_kappa_tail(double r, double alpha, double beta) {
    const double lr = std::log(r);
    if (beta <= kBetaSwitch) return -alpha * lr;
    return -beta * lr - alpha * std::expm1(beta * lr) / beta;
}

// density -d/dr kappa_tail
inline double kappa_density(double r, double alpha, double beta) {
    if (beta <= kBetaSwitch) return alpha * std::pow(r, -alpha - 1.0);
    const double lr = std::log(r);
    return std::exp(-alpha * std::expm1(beta * lr) / beta) *
           (beta * std::exp(-(beta + 1.0) * lr) + alpha / r);
}

// r such that kappa_tail(r) equals mass; the tail is strictly decreasing
// from +inf to 0 so the solution exists for every positive mass
inline double kappa_inverse(double mass, double alpha, double beta) {
    if (!(mass > 0.0)) throw NumericalError("kappa_inverse: mass must be positive");
    if (beta <= kBetaSwitch) return std::exp(-std::log(mass) / alpha);
    // solve in x = log r; the tail is log-concave in x which keeps the
    // bracket expansion cheap
    auto g = [&](double x) {
        return -beta * x - alpha * std::expm1(beta * x) / beta - std::log(mass);
    };
    double x0 = -std::log(mass) / alpha;   // beta -> 0 guess
    double lo = x0, hi = x0;
    double w = 1.0;
    for (int it = 0; it < 200 && g(lo) < 0.0; ++it) lo -= w *= 2.0;
    w = 1.0;
    for (int it = 0; it < 200 && g(hi) > 0.0; ++it) hi += w *= 2.0;
    return std::exp(brent_root(g, lo, hi, 1e-13));
}

} // namespace maxid
