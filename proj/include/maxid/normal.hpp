#pragma once

#include <cmath>
#include <stdexcept>

#include "maxid/quadrature.hpp"

namespace maxid {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2Pi = 2.5066282746310002;
inline constexpr double kLogSqrt2Pi = 0.9189385332046727;

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

inline double norm_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Upper tail with full relative precision, P(X > x).
inline double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// Inverse CDF.  A tail-asymptotic (or central polynomial) start is polished
// by Newton steps on log(Phi), which stays well conditioned in both tails.
// Accurate to a few ulp for p in [1e-290, 1 - 1e-16].
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_quantile: p must lie in (0,1)");
    const bool upper = p > 0.5;
    double pl = upper ? 1.0 - p : p;
    if (pl < 1e-299) pl = 1e-299;

    double x;
    if (pl < 0.1) {
        const double w = -2.0 * std::log(pl);
        x = -std::sqrt(w - std::log(w) - std::log(2.0 * M_PI));
    } else {
        const double q = 0.5 - pl;
        x = -q * kSqrt2Pi * (1.0 + 1.6 * q * q);
    }
    for (int it = 0; it < 9; ++it) {
        const double c = norm_cdf(x);
        const double step = (std::log(c) - std::log(pl)) * c / norm_pdf(x);
        x -= step;
        if (x < -37.0) x = -37.0;
        if (x > 0.6) x = 0.6;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    return upper ? -x : x;
}

// Bivariate normal density with correlation rho, written so the exponent
// stays stable as |rho| approaches 1.
inline double bvn_pdf(double x, double y, double rho) {
    const double omr2 = (1.0 - rho) * (1.0 + rho);
    const double dev = x - rho * y;
    return std::exp(-0.5 * (y * y + dev * dev / omr2)) / (2.0 * M_PI * std::sqrt(omr2));
}

namespace detail {

// integrand of the single-integral representation on the arcsin arc
inline double bvn_arc(double h, double k, double sin_t, double cos2_t) {
    return std::exp(-(h * h + k * k - 2.0 * h * k * sin_t) / (2.0 * cos2_t));
}

} // namespace detail

// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
// Follows Genz's rearrangement of Drezner-Wesolowsky: Gauss-Legendre on the
// arcsin arc for moderate |rho|; for |rho| > 0.925 the complementary arc is
// mapped to v = sqrt(1 - sin theta) and integrated on panels refined toward
// v = 0, where exp(-(h-k)^2 / (2 v^2 (2 - v^2))) has its boundary layer.
inline double bvn_cdf(double h, double k, double rho) {
    if (!(rho >= -1.0 && rho <= 1.0))
        throw std::domain_error("bvn_cdf: correlation outside [-1,1]");
    if (rho == 0.0) return norm_cdf(h) * norm_cdf(k);
    if (rho == 1.0) return norm_cdf(std::min(h, k));
    if (rho == -1.0) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);

    if (std::abs(rho) <= 0.925) {
        const int n = std::abs(rho) < 0.3 ? 12 : (std::abs(rho) < 0.75 ? 20 : 40);
        const GlRule& gl = gauss_legendre(n);
        const double upper = std::asin(rho);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double theta = 0.5 * upper * (gl.node[i] + 1.0);
            const double st = std::sin(theta);
            sum += gl.weight[i] * detail::bvn_arc(h, k, st, 1.0 - st * st);
        }
        sum *= 0.5 * upper / (2.0 * M_PI);
        return norm_cdf(h) * norm_cdf(k) + sum;
    }

    if (rho < 0.0) return norm_cdf(h) - bvn_cdf(h, -k, -rho);

    // tail correction below the comonotone bound
    const double L = std::sqrt(1.0 - rho);
    const double b = std::abs(h - k);
    const double hk = h * k;
    const GlRule& gl = gauss_legendre(20);
    auto panel = [&](double va, double vb) {
        double s = 0.0;
        for (int i = 0; i < 20; ++i) {
            const double v = 0.5 * ((vb - va) * gl.node[i] + va + vb);
            const double tms = 2.0 - v * v;
            const double ex =
                std::exp(-b * b / (2.0 * v * v * tms) - hk / tms);
            s += gl.weight[i] * ex / std::sqrt(tms);
        }
        return s * 0.5 * (vb - va);
    };
    double tail = 0.0;
    double edge = L;
    const double stop = std::max(b / 16.0, L * 0x1p-9);
    int j = 0;
    while (edge > stop && j < 60) {
        tail += panel(0.5 * edge, edge);
        edge *= 0.5;
        ++j;
    }
    tail += panel(0.0, edge);
    return norm_cdf(std::min(h, k)) - tail / M_PI;
}

} // namespace maxid
