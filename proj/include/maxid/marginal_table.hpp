#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "maxid/errors.hpp"
#include "maxid/exponent.hpp"

namespace maxid {

// Marginal distribution of the max-id process at a site: cdf exp(-V(z)).
// For beta > 0 the exponent has no closed form, so V and V' are tabulated on
// a log grid wide enough for quantiles of u in [1e-10, 1 - 1e-10] and
// interpolated with cubic Hermite pieces in (log z, log V), using the exact
// derivative d log V / d log z = z V' / V at the knots.  Relative accuracy is
// comfortably below 1e-8 between knots.  In the max-stable limit everything
// is analytic: V(z) = c_alpha z^(-alpha).
class MarginalTable {
public:
    static constexpr double kUClamp = 1e-10;

    MarginalTable(double alpha, double beta, const QuadratureSpec& spec = {})
        : alpha_(alpha), beta_(beta) {
        if (!(alpha > 0.0) || !(beta >= 0.0))
            throw ConfigError("MarginalTable: need alpha > 0 and beta >= 0");
        analytic_ = (beta <= kBetaSwitch);
        if (analytic_) {
            calpha_ = halfnormal_moment(alpha);
            return;
        }
        QuadratureSpec knot_spec = spec;
        knot_spec.rel_tol = std::min(spec.rel_tol, 1e-9);

        // V is decreasing in z; cover V from just above the clamped upper
        // quantile (-log(1 - 1e-10) ~ 1e-10) down past the lower one (~23)
        double z_lo = 1.0, z_hi = 1.0;
        while (marginal_terms(z_lo, alpha, beta, knot_spec).V < 34.5 && z_lo > 1e-60)
            z_lo *= 0.5;
        while (marginal_terms(z_hi, alpha, beta, knot_spec).V > 0.9e-11 && z_hi < 1e60)
            z_hi *= 2.0;

        const int decades = static_cast<int>(std::ceil(std::log10(z_hi / z_lo)));
        const int n = std::max(400, 40 * decades);
        x_.resize(n);
        y_.resize(n);
        dy_.resize(n);
        const double x0 = std::log(z_lo), x1 = std::log(z_hi);
        for (int i = 0; i < n; ++i) {
            x_[i] = x0 + (x1 - x0) * i / (n - 1.0);
            const double z = std::exp(x_[i]);
            const auto t = marginal_terms(z, alpha, beta, knot_spec);
            y_[i] = std::log(t.V);
            dy_[i] = z * t.Vprime / t.V;
        }
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    bool analytic() const { return analytic_; }
    double z_lo() const { return analytic_ ? 0.0 : std::exp(x_.front()); }
    double z_hi() const { return analytic_ ? 0.0 : std::exp(x_.back()); }

    double V(double z) const {
        check_z(z);
        if (analytic_) return calpha_ * std::pow(z, -alpha_);
        return std::exp(eval(std::log(z)).first);
    }

    // dV/dz, negative
    double Vprime(double z) const {
        check_z(z);
        if (analytic_) return -alpha_ * calpha_ * std::pow(z, -alpha_ - 1.0);
        const auto [y, dy] = eval(std::log(z));
        return std::exp(y) * dy / z;
    }

    double cdf(double z) const { return std::exp(-V(z)); }

    double log_density(double z) const {
        check_z(z);
        if (analytic_)
            return -calpha_ * std::pow(z, -alpha_) + std::log(alpha_ * calpha_) -
                   (alpha_ + 1.0) * std::log(z);
        const auto [y, dy] = eval(std::log(z));
        const double v = std::exp(y);
        // density = exp(-V) * (-V') and -V' = V * (-dy) / z
        return -v + y + std::log(-dy) - std::log(z);
    }

    double density(double z) const { return std::exp(log_density(z)); }

    // inverse cdf with the probability clamped to [1e-10, 1 - 1e-10]
    double quantile(double u) const {
        if (!(u > 0.0 && u < 1.0))
            throw std::domain_error("MarginalTable::quantile: u outside (0,1)");
        u = std::min(1.0 - kUClamp, std::max(kUClamp, u));
        const double target = -std::log(u);   // V at the quantile
        if (analytic_) return std::pow(calpha_ / target, 1.0 / alpha_);
        const double ty = std::log(target);
        // y is decreasing in x; locate the knot interval then polish
        if (ty >= y_.front()) return std::exp(x_.front());
        if (ty <= y_.back()) return std::exp(x_.back());
        int lo = 0, hi = static_cast<int>(y_.size()) - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (y_[mid] > ty ? lo : hi) = mid;
        }
        double a = x_[lo], b = x_[hi];
        double xm = 0.5 * (a + b);
        for (int it = 0; it < 60; ++it) {
            const auto [y, dy] = eval(xm);
            const double diff = y - ty;
            if (diff > 0.0) a = xm; else b = xm;
            const double step = diff / dy;
            double next = xm - step;
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (std::abs(next - xm) < 1e-13 * (1.0 + std::abs(xm))) { xm = next; break; }
            xm = next;
        }
        return std::exp(xm);
    }

private:
    void check_z(double z) const {
        if (!(z > 0.0)) throw std::domain_error("MarginalTable: z must be positive");
    }

    // Hermite cubic in (x, y) with clamping outside the grid; returns value
    // and slope
    std::pair<double, double> eval(double x) const {
        if (x <= x_.front()) {
            const double y = y_.front() + dy_.front() * (x - x_.front());
            return {y, dy_.front()};
        }
        if (x >= x_.back()) {
            const double y = y_.back() + dy_.back() * (x - x_.back());
            return {y, dy_.back()};
        }
        int lo = 0, hi = static_cast<int>(x_.size()) - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (x_[mid] <= x ? lo : hi) = mid;
        }
        const double h = x_[hi] - x_[lo];
        const double t = (x - x_[lo]) / h;
        const double y0 = y_[lo], y1 = y_[hi];
        const double m0 = dy_[lo] * h, m1 = dy_[hi] * h;
        const double t2 = t * t, t3 = t2 * t;
        const double y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 +
                         (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        const double dy = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 +
                           (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1) /
                          h;
        return {y, dy};
    }

    double alpha_, beta_;
    bool analytic_ = false;
    double calpha_ = 0.0;
    std::vector<double> x_, y_, dy_;
};

} // namespace maxid
