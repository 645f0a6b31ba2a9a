#pragma once

#include <cmath>

#include "maxid/exponent.hpp"
#include "maxid/marginal_table.hpp"
#include "maxid/normal.hpp"
#include "maxid/student_t.hpp"

namespace maxid {

// Log density of the bivariate max-id vector at the points themselves: the
// pair cdf exp(-V) differentiated once in each argument.
inline double maxid_pair_logdensity_at(double z1, double z2, double alpha,
                                       double beta, const PairCorrelation& corr,
                                       const QuadratureSpec& spec = {},
                                       ExponentRoute route = ExponentRoute::automatic) {
    const auto t = exponent_terms(z1, z2, alpha, beta, corr, spec, route);
    double bracket = t.V1 * t.V2 - t.V12;
    // exactly nonnegative in theory; quadrature noise can graze zero
    if (bracket < 1e-300) bracket = 1e-300;
    return -t.V + std::log(bracket);
}

// Log density of the bivariate copula of the max-id process: the joint
// density above divided by the marginal densities at the back-transformed
// points z1, z2.
inline double maxid_pair_copula_logdensity_at(double z1, double z2, double alpha,
                                              double beta, const PairCorrelation& corr,
                                              const MarginalTable& table,
                                              const QuadratureSpec& spec = {},
                                              ExponentRoute route = ExponentRoute::automatic) {
    return maxid_pair_logdensity_at(z1, z2, alpha, beta, corr, spec, route) -
           table.log_density(z1) - table.log_density(z2);
}

inline double maxid_pair_copula_logdensity(double u1, double u2, double alpha,
                                           double beta, const PairCorrelation& corr,
                                           const MarginalTable& table,
                                           const QuadratureSpec& spec = {},
                                           ExponentRoute route = ExponentRoute::automatic) {
    return maxid_pair_copula_logdensity_at(table.quantile(u1), table.quantile(u2),
                                           alpha, beta, corr, table, spec, route);
}

// Gaussian copula log density at normal scores x, y.
inline double gaussian_copula_logdensity_scores(double x, double y, double rho) {
    const double omr2 = (1.0 - rho) * (1.0 + rho);
    return -0.5 * std::log(omr2) +
           (2.0 * rho * x * y - rho * rho * (x * x + y * y)) / (2.0 * omr2);
}

inline double gaussian_pair_copula_logdensity(double u1, double u2, double rho) {
    return gaussian_copula_logdensity_scores(norm_quantile(u1), norm_quantile(u2), rho);
}

// t copula log density at t scores x, y with the given dof.
inline double t_copula_logdensity_scores(double x, double y, double rho, double dof) {
    const double omr2 = (1.0 - rho) * (1.0 + rho);
    const double q = (x * x - 2.0 * rho * x * y + y * y) / omr2;
    const double log_joint = std::lgamma(0.5 * dof + 1.0) - std::lgamma(0.5 * dof) -
                             std::log(dof * M_PI) - 0.5 * std::log(omr2) -
                             (0.5 * dof + 1.0) * std::log1p(q / dof);
    return log_joint - t_logpdf(x, dof) - t_logpdf(y, dof);
}

inline double t_pair_copula_logdensity(double u1, double u2, double rho, double dof) {
    return t_copula_logdensity_scores(t_quantile(u1, dof), t_quantile(u2, dof), rho, dof);
}

} // namespace maxid
