#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "maxid/errors.hpp"
#include "maxid/linalg.hpp"
#include "maxid/normal.hpp"
#include "maxid/rng.hpp"

namespace maxid {

struct MvnResult {
    double value = 0.0;
    double std_error = 0.0;
};

// P(X <= upper) for X ~ N(0, sigma), dimension up to 25.  Genz sequential
// conditioning with a randomly shifted Richtmyer lattice; variables are
// sorted by upper bound so the narrowest margins are conditioned first.
inline MvnResult mvn_cdf(const Eigen::VectorXd& upper,
                         const Eigen::MatrixXd& sigma, Rng& rng,
                         int points_per_shift = 4096, int shifts = 12) {
    const int d = static_cast<int>(upper.size());
    if (d < 1 || d > 25)
        throw ConfigError("mvn_cdf: dimension must be between 1 and 25");
    if (sigma.rows() != d || sigma.cols() != d)
        throw ConfigError("mvn_cdf: covariance dimension mismatch");
    if (d == 1)
        return {norm_cdf(upper[0] / std::sqrt(sigma(0, 0))), 0.0};

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return upper[i] / std::sqrt(sigma(i, i)) < upper[j] / std::sqrt(sigma(j, j));
    });
    Eigen::VectorXd b(d);
    Eigen::MatrixXd s(d, d);
    for (int i = 0; i < d; ++i) {
        b[i] = upper[order[i]];
        for (int j = 0; j < d; ++j) s(i, j) = sigma(order[i], order[j]);
    }
    const Eigen::MatrixXd L = cholesky_jittered(s);

    static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
    std::vector<double> lat(d - 1);
    for (int i = 0; i < d - 1; ++i) lat[i] = std::sqrt(static_cast<double>(primes[i]));

    std::vector<double> shift(d - 1), y(d);
    double mean = 0.0, m2 = 0.0;
    for (int rep = 0; rep < shifts; ++rep) {
        for (int i = 0; i < d - 1; ++i) shift[i] = rng.uniform();
        double acc = 0.0;
        for (int k = 1; k <= points_per_shift; ++k) {
            double prod = 1.0;
            for (int i = 0; i < d && prod > 0.0; ++i) {
                double t = b[i];
                for (int j = 0; j < i; ++j) t -= L(i, j) * y[j];
                const double e = norm_cdf(t / L(i, i));
                prod *= e;
                if (i < d - 1) {
                    double u = k * lat[i] + shift[i];
                    u = std::abs(2.0 * (u - std::floor(u)) - 1.0);
                    double arg = u * e;
                    arg = std::min(std::max(arg, 1e-280), 1.0 - 1e-16);
                    y[i] = norm_quantile(arg);
                }
            }
            acc += (prod - acc) / k;
        }
        const double delta = acc - mean;
        mean += delta / (rep + 1);
        m2 += delta * (acc - mean);
    }
    MvnResult out;
    out.value = mean;
    out.std_error = std::sqrt(m2 / (shifts * (shifts - 1.0)));
    return out;
}

} // namespace maxid
