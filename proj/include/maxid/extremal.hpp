#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "maxid/correlation.hpp"
#include "maxid/exponent.hpp"
#include "maxid/marginal_table.hpp"
#include "maxid/mvn.hpp"
#include "maxid/roots.hpp"

namespace maxid {

// Pair extremal coefficient at return level z (in years): theta = 1 means
// complete dependence, 2 independence.  Computed as z * V(t, t) with t the
// marginal quantile of exp(-1/z).
inline double theta2(double z, double alpha, double beta,
                     const PairCorrelation& corr, const MarginalTable& table,
                     const QuadratureSpec& spec = {},
                     ExponentRoute route = ExponentRoute::automatic) {
    if (!(z > 0.0)) throw std::domain_error("theta2: level must be positive");
    const double t = table.quantile(std::exp(-1.0 / z));
    return z * exponent_terms(t, t, alpha, beta, corr, spec, route).V;
}

// D-site extremal coefficient.  For D > 2 the Gaussian orthant probability
// inside the magnitude integral comes from randomized QMC, so the result
// carries Monte Carlo noise of roughly the mvn_cdf error level.
inline double thetaD(double z, const DependenceParams& p, const StudyDesign& design,
                     double time, const MarginalTable& table, Rng& rng,
                     const QuadratureSpec& spec = {}) {
    const int d = design.n_sites();
    if (d == 2) {
        const PairCorrelation c = pair_correlation_terms(p, design, 0, 1, time);
        return theta2(z, p.alpha, p.beta, c, table, spec);
    }
    const double t = table.quantile(std::exp(-1.0 / z));
    double u_lo, u_hi;
    detail::clip_bounds(t, p.alpha, p.beta, spec, &u_lo, &u_hi);
    auto f = [&](double u) {
        const double r = std::exp(u);
        const Eigen::MatrixXd sig = correlation_matrix(p, design, time, r);
        const Eigen::VectorXd b = Eigen::VectorXd::Constant(d, t / r);
        const double orthant = mvn_cdf(b, sig, rng, 1024, 8).value;
        return std::array<double, 1>{(1.0 - orthant) *
                                     kappa_density(r, p.alpha, p.beta) * r};
    };
    // fixed panels: adaptivity would chase the QMC noise
    double total = 0.0;
    const int panels = 40;
    for (int i = 0; i < panels; ++i) {
        const double a = u_lo + (u_hi - u_lo) * i / panels;
        const double b = u_lo + (u_hi - u_lo) * (i + 1) / panels;
        total += detail::gk15<1>(f, a, b).value[0];
    }
    return z * total;
}

// Tail dependence summary of the process as beta moves it away from the
// max-stable case: eta = ((1 + rho) / 2)^(beta / (beta + 2)).
inline double eta_closed_form(double beta, double rho) {
    if (!(beta >= 0.0)) throw std::domain_error("eta_closed_form: beta < 0");
    if (beta == 0.0) return 1.0;
    return std::pow(0.5 * (1.0 + rho), beta / (beta + 2.0));
}

// Smallest distance at which the pair extremal coefficient reaches the
// target at level z, holding altitude and time fixed at both sites.  The
// attainable coefficients lie between the coincident-site value (1) and the
// zero-correlation limit, which stays below 2 at finite levels because the
// two sites always share the magnitude process.
inline double effective_range(const DependenceParams& p, double alt, double time,
                              double z, const MarginalTable& table,
                              double target = 1.95,
                              const QuadratureSpec& spec = {}) {
    StudyDesign d;
    d.metric = DistanceMetric::euclidean;
    d.sites = {{"o", 0.0, 0.0, alt}, {"h", 0.0, 0.0, alt}};
    auto theta_at = [&](double h) {
        d.sites[1].lon = h;
        const PairCorrelation c = pair_correlation_terms(p, d, 0, 1, time);
        return theta2(z, p.alpha, p.beta, c, table, spec);
    };

    const double theta_zero = theta_at(0.0);
    PairCorrelation uncorrelated{0.0, 0.0, 0.0};
    const double theta_limit = theta2(z, p.alpha, p.beta, uncorrelated, table, spec);
    if (target < 1.0 || target >= theta_limit)
        throw ConfigError("effective_range: target " + std::to_string(target) +
                          " outside the attainable coefficients [1, " +
                          std::to_string(theta_limit) + ")");
    if (target <= theta_zero) return 0.0;

    const double lambda = lambda_range(p, alt, time);
    double hi = lambda;
    int it = 0;
    for (; it < 200 && theta_at(hi) < target; ++it) hi *= 2.0;
    if (it == 200)
        throw NumericalError("effective_range: no distance reaches the target");
    return brent_root([&](double h) { return theta_at(h) - target; }, 0.0, hi,
                      1e-7 * hi);
}

struct EmpiricalTheta {
    double theta = 0.0;
    double std_error = 0.0;
    double p_hat = 0.0;   // fraction of replicates jointly below the level
    int n = 0;
};

// Empirical D-site extremal coefficient at level z from uniform-scale maxima
// (rows replicates, columns the chosen stations; NaN marks missing).  Uses
// -z log P(all U_j <= u) at u = exp(-1/z), a binomial proportion over the
// replicates where every chosen station is observed.
inline EmpiricalTheta empirical_thetaD(const Eigen::MatrixXd& uniform, double z,
                                       int min_replicates = 20) {
    if (!(z > 0.0)) throw std::domain_error("empirical_thetaD: level must be positive");
    const double u = std::exp(-1.0 / z);
    const int d = static_cast<int>(uniform.cols());
    int n = 0, hits = 0;
    for (Eigen::Index k = 0; k < uniform.rows(); ++k) {
        bool complete = true, all = true;
        for (Eigen::Index j = 0; j < uniform.cols(); ++j) {
            const double v = uniform(k, j);
            if (std::isnan(v)) {
                complete = false;
                break;
            }
            if (v > u) all = false;
        }
        if (!complete) continue;
        ++n;
        if (all) ++hits;
    }
    EmpiricalTheta out;
    out.n = n;
    if (n < min_replicates)
        throw ConfigError("empirical_thetaD: only " + std::to_string(n) +
                          " fully observed replicates, need " +
                          std::to_string(min_replicates));
    if (hits == 0)
        throw NumericalError(
            "empirical_thetaD: the level was never jointly reached; try a lower z");
    const double p = hits / double(n);
    out.p_hat = p;
    out.theta = std::min(double(d), std::max(1.0, -z * std::log(p)));
    const double se_p = std::sqrt(p * (1.0 - p) / n);
    out.std_error = se_p * z / p;
    return out;
}

} // namespace maxid
