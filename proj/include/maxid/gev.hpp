#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxid {

// shape values this close to zero use the Gumbel limit expressions
inline constexpr double kGumbelEps = 1e-6;

struct GevParams {
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;
};

inline double gev_cdf(double z, const GevParams& p) {
    if (!(p.sigma > 0.0)) throw std::domain_error("gev_cdf: sigma must be positive");
    const double y = (z - p.mu) / p.sigma;
    if (std::abs(p.xi) < kGumbelEps) return std::exp(-std::exp(-y));
    const double t = 1.0 + p.xi * y;
    if (t <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::pow(t, -1.0 / p.xi));
}

inline double gev_logpdf(double z, const GevParams& p) {
    if (!(p.sigma > 0.0)) throw std::domain_error("gev_logpdf: sigma must be positive");
    const double y = (z - p.mu) / p.sigma;
    if (std::abs(p.xi) < kGumbelEps)
        return -std::log(p.sigma) - y - std::exp(-y);
    const double t = 1.0 + p.xi * y;
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    return -std::log(p.sigma) - (1.0 + 1.0 / p.xi) * std::log(t) -
           std::pow(t, -1.0 / p.xi);
}

inline double gev_quantile(double u, const GevParams& p) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("gev_quantile: u outside (0,1)");
    const double w = -std::log(u);
    if (std::abs(p.xi) < kGumbelEps) return p.mu - p.sigma * std::log(w);
    return p.mu + p.sigma * (std::pow(w, -p.xi) - 1.0) / p.xi;
}

// level exceeded once per period blocks on average
inline double gev_return_level(double period, const GevParams& p) {
    if (!(period > 1.0))
        throw std::domain_error("gev_return_level: period must exceed 1");
    return gev_quantile(1.0 - 1.0 / period, p);
}

// maps an observation to the standard Gumbel scale; the basis of QQ plots
inline double gumbel_residual(double z, const GevParams& p) {
    const double y = (z - p.mu) / p.sigma;
    if (std::abs(p.xi) < kGumbelEps) return y;
    const double t = 1.0 + p.xi * y;
    if (t <= 0.0)
        return p.xi > 0.0 ? -std::numeric_limits<double>::infinity()
                          : std::numeric_limits<double>::infinity();
    return std::log(t) / p.xi;
}

} // namespace maxid
