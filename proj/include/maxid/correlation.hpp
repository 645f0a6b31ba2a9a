#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "maxid/design.hpp"
#include "maxid/params.hpp"

namespace maxid {

// log-linear kernel scale at a site, clamped so extreme trial parameters in
// an optimizer cannot overflow
inline double lambda_range(const DependenceParams& p, double alt, double t) {
    double u = p.lambda0 + p.lambda1 * alt + p.lambda2 * t;
    u = std::min(30.0, std::max(-30.0, u));
    return std::exp(u);
}

// anisotropy shape A(theta) = R(theta) diag(1, a) R(theta)^T, unit determinant
// is not enforced; only relative geometry matters after the lambda scaling
inline Eigen::Matrix2d aniso_matrix(const DependenceParams& p) {
    const double c = std::cos(p.aniso_angle), s = std::sin(p.aniso_angle);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    d(0, 0) = 1.0;
    d(1, 1) = p.aniso_ratio;
    return r * d * r.transpose();
}

// Correlation between two sites as a function of the magnitude r.  The
// kernel-convolution (Paciorek-Schervish) form with site kernels
// Omega_s(r) = lambda_s^2 (1+r)^(-2 nu) A collapses to
//   rho(r) = prefactor * exp(-scale_h * (1+r)^nu):
// the determinant terms reduce to a magnitude-free prefactor
// 2 lambda_1 lambda_2 / (lambda_1^2 + lambda_2^2) and the Mahalanobis
// distance scales as (1+r)^nu.
struct PairCorrelation {
    double prefactor = 1.0;
    double scale_h = 0.0;
    double nu = 0.0;

    double rho(double r) const {
        return prefactor * std::exp(-scale_h * std::pow(1.0 + r, nu));
    }
};

inline PairCorrelation pair_correlation_terms(const DependenceParams& p,
                                              const StudyDesign& design, int i,
                                              int j, double t) {
    const double la = lambda_range(p, design.sites[i].alt, t);
    const double lb = lambda_range(p, design.sites[j].alt, t);
    double q;   // h^T A^{-1} h
    if (p.aniso_ratio == 1.0) {
        const double h = design.distance(i, j);
        q = h * h;
    } else {
        const Eigen::Vector2d h = design.displacement(i, j);
        q = h.dot(aniso_matrix(p).inverse() * h);
    }
    PairCorrelation out;
    out.prefactor = 2.0 * la * lb / (la * la + lb * lb);
    out.scale_h = std::sqrt(2.0 * q / (la * la + lb * lb));
    out.nu = p.nu;
    return out;
}

inline double pair_correlation(const DependenceParams& p, const StudyDesign& design,
                               int i, int j, double t, double r) {
    return pair_correlation_terms(p, design, i, j, t).rho(r);
}

// full D x D correlation at magnitude r (unit diagonal)
inline Eigen::MatrixXd correlation_matrix(const DependenceParams& p,
                                          const StudyDesign& design, double t,
                                          double r) {
    const int d = design.n_sites();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            m(i, j) = m(j, i) = pair_correlation(p, design, i, j, t, r);
    return m;
}

} // namespace maxid
