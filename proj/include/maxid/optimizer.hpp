#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "maxid/errors.hpp"

namespace maxid {

struct NelderMeadOptions {
    int max_iter = 2000;
    double f_tol = 1e-6;       // stop when the simplex value spread drops below
    double x_tol = 1e-5;       // ... and its diameter below
    double init_step = 0.1;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Downhill simplex with the standard reflection/expansion/contraction/shrink
// coefficients.  Objective values that are not finite are treated as +inf so
// the simplex backs away from invalid regions.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw ConfigError("nelder_mead: empty parameter vector");
    auto safe = [&](const Eigen::VectorXd& x) {
        const double v = f(x);
        return std::isfinite(v) ? v : 1e300;
    };

    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> val(n + 1);
    for (int i = 0; i < n; ++i)
        pts[i + 1][i] += opt.init_step * std::max(0.25, std::abs(x0[i]));
    for (int i = 0; i <= n; ++i) val[i] = safe(pts[i]);

    std::vector<int> ord(n + 1);
    NelderMeadResult res;
    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return val[a] < val[b]; });
        const int best = ord[0], worst = ord[n], second = ord[n - 1];

        double diam = 0.0;
        for (int i = 1; i <= n; ++i)
            diam = std::max(diam, (pts[ord[i]] - pts[best]).norm());
        if (val[worst] - val[best] < opt.f_tol && diam < opt.x_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= n;

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = safe(xr);
        if (fr < val[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = safe(xe);
            if (fe < fr) {
                pts[worst] = xe;
                val[worst] = fe;
            } else {
                pts[worst] = xr;
                val[worst] = fr;
            }
        } else if (fr < val[second]) {
            pts[worst] = xr;
            val[worst] = fr;
        } else {
            const bool outside = fr < val[worst];
            const Eigen::VectorXd xc =
                centroid + 0.5 * ((outside ? xr : pts[worst]) - centroid);
            const double fc = safe(xc);
            if (fc < (outside ? fr : val[worst])) {
                pts[worst] = xc;
                val[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    val[i] = safe(pts[i]);
                }
            }
        }
    }
    const int arg = static_cast<int>(
        std::min_element(val.begin(), val.end()) - val.begin());
    res.x = pts[arg];
    res.f = val[arg];
    return res;
}

} // namespace maxid
