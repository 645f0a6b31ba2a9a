#pragma once

#include <Eigen/Dense>
#include <string>

#include "maxid/errors.hpp"

namespace maxid {

// Lower Cholesky factor of a symmetric positive semi-definite matrix.
// On failure the diagonal is inflated, starting at 1e-10 times the mean
// diagonal and escalating tenfold, before giving up.
inline Eigen::MatrixXd cholesky_jittered(const Eigen::MatrixXd& a,
                                         double* jitter_used = nullptr) {
    const double mean_diag = a.diagonal().mean();
    double jitter = 0.0;
    for (int attempt = 0; attempt < 9; ++attempt) {
        Eigen::MatrixXd m = a;
        if (jitter > 0.0)
            m.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = jitter;
            return llt.matrixL();
        }
        jitter = (jitter == 0.0) ? 1e-10 * mean_diag : 10.0 * jitter;
    }
    throw NumericalError("cholesky_jittered: matrix not positive definite even "
                         "with jitter " + std::to_string(jitter / 10.0));
}

} // namespace maxid
