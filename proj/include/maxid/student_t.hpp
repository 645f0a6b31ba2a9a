#pragma once

#include <cmath>
#include <stdexcept>

#include "maxid/errors.hpp"
#include "maxid/normal.hpp"
#include "maxid/roots.hpp"

namespace maxid {

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    const double eps = 3e-16, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NumericalError("incomplete beta continued fraction did not converge");
}

} // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double inc_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0))
        throw std::domain_error("inc_beta: parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double t_logpdf(double x, double nu) {
    if (!(nu > 0.0)) throw std::domain_error("t_logpdf: dof must be positive");
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * M_PI) -
           0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

inline double t_pdf(double x, double nu) { return std::exp(t_logpdf(x, nu)); }

inline double t_cdf(double x, double nu) {
    if (!(nu > 0.0)) throw std::domain_error("t_cdf: dof must be positive");
    if (x == 0.0) return 0.5;
    const double half = 0.5 * inc_beta(0.5 * nu, 0.5, nu / (nu + x * x));
    return x < 0.0 ? half : 1.0 - half;
}

// Exact lower tail, P(T > x) = t_cdf(-x) by symmetry.
inline double t_sf(double x, double nu) { return t_cdf(-x, nu); }

inline double t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("t_quantile: p must lie in (0,1)");
    if (p == 0.5) return 0.0;
    // bracket around the normal quantile, widened for heavy tails
    double x0 = norm_quantile(p);
    double width = std::max(1.0, std::abs(x0));
    double lo = x0 - width, hi = x0 + width;
    for (int it = 0; it < 200 && t_cdf(lo, nu) > p; ++it) lo -= width *= 2.0;
    width = std::max(1.0, std::abs(x0));
    for (int it = 0; it < 200 && t_cdf(hi, nu) < p; ++it) hi += width *= 2.0;
    auto f = [&](double x) { return t_cdf(x, nu) - p; };
    return brent_root(f, lo, hi, 1e-13);
}

} // namespace maxid
