#pragma once

#include <array>
#include <cmath>
#include <string>

#include "maxid/correlation.hpp"
#include "maxid/errors.hpp"
#include "maxid/kappa.hpp"
#include "maxid/normal.hpp"
#include "maxid/quadrature.hpp"
#include "maxid/student_t.hpp"

namespace maxid {

enum class ExponentRoute { automatic, quadrature, closed_form };

// bivariate exponent function and its partial derivatives;
// V1 = dV/dz1 and V12 = d2V/dz1dz2 keep their natural (negative) signs
struct ExponentTerms {
    double V = 0.0;
    double V1 = 0.0;
    double V2 = 0.0;
    double V12 = 0.0;
};

// half-normal moment E[max(W,0)^alpha], the scale constant of the
// max-stable-limit marginal exponent c_alpha * z^(-alpha)
inline double halfnormal_moment(double alpha) {
    return std::exp((0.5 * alpha - 1.0) * std::log(2.0) +
                    std::lgamma(0.5 * (alpha + 1.0))) /
           std::sqrt(M_PI);
}

namespace detail {

// s such that the standard normal tail times the magnitude density factor
// r^(beta+1) is negligible relative to the bulk of the exponent integrals
inline double gauss_cut(double beta) {
    return std::sqrt(90.0 + 4.6 * (beta + 1.0));
}

// integration window in u = log r for integrands carried by
// phi-type factors in z/r and killed on the right by the measure tail
inline void clip_bounds(double z_min, double alpha, double beta,
                        const QuadratureSpec& spec, double* u_lo, double* u_hi) {
    const double v_lb =
        norm_sf(1.0) * std::max(kappa_tail(z_min, alpha, beta) -
                                    kappa_tail(2.0 * z_min, alpha, beta),
                                1e-290);
    const double mass = std::min(0.1, 1e-3 * std::max(spec.abs_tol, spec.rel_tol * v_lb));
    double r_hi = kappa_inverse(mass, alpha, beta);
    r_hi = std::max(r_hi, 4.0 * z_min);
    *u_lo = std::log(z_min / gauss_cut(beta));
    *u_hi = std::log(r_hi);
}

} // namespace detail

// marginal exponent V(z) = integral of the normal tail P(rW > z) against the
// magnitude measure, plus its derivative; cdf of the process margin is
// exp(-V(z)) and the density exp(-V(z)) * (-V'(z))
struct MarginalTerms {
    double V = 0.0;
    double Vprime = 0.0;   // negative
};

inline MarginalTerms marginal_terms(double z, double alpha, double beta,
                                    const QuadratureSpec& spec = {},
                                    ExponentRoute route = ExponentRoute::automatic) {
    if (!(z > 0.0)) throw std::domain_error("marginal_terms: z must be positive");
    const bool closed = (beta <= kBetaSwitch);
    if (route == ExponentRoute::closed_form && !closed)
        throw ConfigError("closed form requested but beta > 0");
    if (closed && route != ExponentRoute::quadrature) {
        const double c = halfnormal_moment(alpha);
        MarginalTerms t;
        t.V = c * std::pow(z, -alpha);
        t.Vprime = -alpha * t.V / z;
        return t;
    }
    double u_lo, u_hi;
    detail::clip_bounds(z, alpha, beta, spec, &u_lo, &u_hi);
    auto f = [&](double u) {
        const double r = std::exp(u);
        const double k = kappa_density(r, alpha, beta) * r;
        const double s = z / r;
        return std::array<double, 2>{norm_sf(s) * k, -(1.0 / r) * norm_pdf(s) * k};
    };
    const auto got = integrate_adaptive<2>(f, u_lo, u_hi, spec);
    return {got[0], got[1]};
}

inline double marginal_V(double z, double alpha, double beta,
                         const QuadratureSpec& spec = {},
                         ExponentRoute route = ExponentRoute::automatic) {
    return marginal_terms(z, alpha, beta, spec, route).V;
}

namespace detail {

// closed-form exponent terms in the max-stable limit with magnitude-free
// correlation: the classical extremal-t expressions with dof alpha + 1,
// rescaled from unit-Frechet to the process margins via x = z^alpha / c_alpha
inline ExponentTerms extremal_t_terms(double z1, double z2, double alpha,
                                      double rho) {
    rho = std::min(1.0 - 1e-12, std::max(-1.0 + 1e-12, rho));
    const double dof = alpha + 1.0;
    const double calpha = halfnormal_moment(alpha);
    const double x1 = std::pow(z1, alpha) / calpha;
    const double x2 = std::pow(z2, alpha) / calpha;
    const double c = std::sqrt(dof / ((1.0 - rho) * (1.0 + rho)));
    const double a1 = c * (z2 / z1 - rho);
    const double a2 = c * (z1 / z2 - rho);
    const double dT1 = alpha * x1 / z1;   // dx1/dz1
    const double dT2 = alpha * x2 / z2;

    ExponentTerms t;
    t.V = t_cdf(a1, dof) / x1 + t_cdf(a2, dof) / x2;
    t.V1 = -t_cdf(a1, dof) / (x1 * x1) * dT1;
    t.V2 = -t_cdf(a2, dof) / (x2 * x2) * dT2;
    t.V12 = -t_pdf(a1, dof) * c * (z2 / z1) / (alpha * x1 * x1 * x2) * dT1 * dT2;
    return t;
}

} // namespace detail

// Exponent function of the bivariate max-id vector at one pair of sites.
// The quadrature route evaluates all four integrals on shared nodes; the
// closed form applies in the max-stable limit (beta = 0) whenever the
// correlation does not depend on the magnitude (nu = 0).
inline ExponentTerms exponent_terms(double z1, double z2, double alpha,
                                    double beta, const PairCorrelation& corr,
                                    const QuadratureSpec& spec = {},
                                    ExponentRoute route = ExponentRoute::automatic) {
    if (!(z1 > 0.0 && z2 > 0.0))
        throw std::domain_error("exponent_terms: z must be positive");
    const bool closed_ok = (beta <= kBetaSwitch && corr.nu == 0.0);
    if (route == ExponentRoute::closed_form && !closed_ok)
        throw ConfigError("closed form requires beta = 0 and nu = 0");
    if (closed_ok && route != ExponentRoute::quadrature)
        return detail::extremal_t_terms(z1, z2, alpha, corr.rho(1.0));

    double u_lo, u_hi;
    detail::clip_bounds(std::min(z1, z2), alpha, beta, spec, &u_lo, &u_hi);
    auto f = [&](double u) {
        const double r = std::exp(u);
        const double k = kappa_density(r, alpha, beta) * r;
        const double s1 = z1 / r;
        const double s2 = z2 / r;
        double rho = corr.rho(r);
        rho = std::min(1.0 - 1e-12, std::max(-1.0 + 1e-12, rho));
        const double omr = std::sqrt((1.0 - rho) * (1.0 + rho));
        std::array<double, 4> out;
        out[0] = (1.0 - bvn_cdf(s1, s2, rho)) * k;
        out[1] = -(1.0 / r) * norm_pdf(s1) * norm_cdf((s2 - rho * s1) / omr) * k;
        out[2] = -(1.0 / r) * norm_pdf(s2) * norm_cdf((s1 - rho * s2) / omr) * k;
        out[3] = -(1.0 / (r * r)) * bvn_pdf(s1, s2, rho) * k;
        return out;
    };
    const auto got = integrate_adaptive<4>(f, u_lo, u_hi, spec);
    ExponentTerms t;
    t.V = got[0];
    t.V1 = got[1];
    t.V2 = got[2];
    t.V12 = got[3];
    return t;
}

} // namespace maxid
