#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "maxid/csv.hpp"
#include "maxid/dataset.hpp"
#include "maxid/errors.hpp"
#include "maxid/gev.hpp"
#include "maxid/optimizer.hpp"
#include "maxid/rng.hpp"

namespace maxid {

// Covariate basis for the GEV location, one row per (replicate, station)
// cell.  The default is intercept only; richer bases come from a CSV keyed
// by replicate and station.
struct BasisTable {
    int n_rep = 0, n_sites = 0, p = 1;
    Eigen::MatrixXd rows;   // (n_rep * n_sites) x p

    Eigen::RowVectorXd at(int k, int j) const { return rows.row(k * n_sites + j); }

    static BasisTable intercept(int n_rep, int n_sites) {
        BasisTable b;
        b.n_rep = n_rep;
        b.n_sites = n_sites;
        b.p = 1;
        b.rows = Eigen::MatrixXd::Ones(n_rep * n_sites, 1);
        return b;
    }

    static BasisTable from_csv(const std::string& path, const MaximaDataset& data) {
        const csv::Table t = csv::read(path);
        if (t.header.size() < 3 || t.header[0] != "replicate" || t.header[1] != "station")
            throw ConfigError("basis csv '" + path +
                              "' must start with replicate,station columns");
        BasisTable b;
        b.n_rep = data.n_rep();
        b.n_sites = data.n_sites();
        b.p = static_cast<int>(t.header.size()) - 2;
        b.rows.setConstant(b.n_rep * b.n_sites, b.p,
                           std::numeric_limits<double>::quiet_NaN());
        auto rep_index = [&](const std::string& id) {
            for (int k = 0; k < data.n_rep(); ++k)
                if (data.replicate_ids[k] == id) return k;
            return -1;
        };
        auto site_index = [&](const std::string& name) {
            for (int j = 0; j < data.n_sites(); ++j)
                if (data.stations[j] == name) return j;
            return -1;
        };
        for (const auto& row : t.rows) {
            const int k = rep_index(row[0]);
            const int j = site_index(row[1]);
            if (k < 0 || j < 0) continue;   // rows for cells outside the data are fine
            for (int q = 0; q < b.p; ++q)
                b.rows(k * b.n_sites + j, q) =
                    csv::to_double(row[q + 2], "basis value");
        }
        for (int k = 0; k < data.n_rep(); ++k)
            for (int j = 0; j < data.n_sites(); ++j)
                if (!data.is_missing(k, j) && std::isnan(b.rows(k * b.n_sites + j, 0)))
                    throw ConfigError("basis csv lacks a row for replicate " +
                                      data.replicate_ids[k] + ", station " +
                                      data.stations[j]);
        return b;
    }
};

struct MarginalFit {
    Eigen::VectorXd mu_coef;
    double sigma = 1.0;
    double xi = 0.0;
    double nll = 0.0;
    int iterations = 0;
    bool converged = false;

    GevParams at(const BasisTable& basis, int k, int j) const {
        if (basis.p != static_cast<int>(mu_coef.size()))
            throw ConfigError("basis has " + std::to_string(basis.p) +
                              " columns but the fit has " +
                              std::to_string(mu_coef.size()) +
                              " location coefficients");
        GevParams g;
        g.mu = basis.at(k, j).dot(mu_coef);
        g.sigma = sigma;
        g.xi = xi;
        return g;
    }
};

struct MarginFitOptions {
    int restarts = 3;
    std::uint64_t seed = 1;
    double xi_bound = 0.5;          // soft constraint |xi| < bound
    double ridge = 0.0;             // optional L2 penalty on non-intercept coefs
    NelderMeadOptions nm;
};

// Independence (composite) likelihood fit of GEV margins with a linear model
// for the location and constant scale and shape across cells.
inline MarginalFit fit_gev_independence(const MaximaDataset& data,
                                        const BasisTable& basis,
                                        const MarginFitOptions& opt = {}) {
    if (basis.n_rep != data.n_rep() || basis.n_sites != data.n_sites())
        throw ConfigError("fit_gev_independence: basis dimensions do not match data");
    const int p = basis.p;

    auto objective = [&](const Eigen::VectorXd& th) {
        GevParams g;
        g.sigma = std::exp(th[p]);
        g.xi = th[p + 1];
        double nll = 0.0;
        for (int k = 0; k < data.n_rep(); ++k)
            for (int j = 0; j < data.n_sites(); ++j) {
                if (data.is_missing(k, j)) continue;
                g.mu = basis.at(k, j).dot(th.head(p));
                const double lp = gev_logpdf(data.values(k, j), g);
                if (!std::isfinite(lp)) return 1e12;
                nll -= lp;
            }
        const double over = std::abs(g.xi) - opt.xi_bound;
        if (over > 0.0) nll += 1e4 * over * over;
        for (int q = 1; q < p; ++q) nll += opt.ridge * th[q] * th[q];
        return nll;
    };

    // moment start on the Gumbel assumption
    double mean = 0.0, sq = 0.0;
    int n = 0;
    for (int k = 0; k < data.n_rep(); ++k)
        for (int j = 0; j < data.n_sites(); ++j)
            if (!data.is_missing(k, j)) {
                mean += data.values(k, j);
                sq += data.values(k, j) * data.values(k, j);
                ++n;
            }
    if (n < 30) throw ConfigError("fit_gev_independence: fewer than 30 observations");
    mean /= n;
    const double sd = std::sqrt(std::max(1e-12, sq / n - mean * mean));
    const double sigma0 = sd * std::sqrt(6.0) / M_PI;

    Eigen::VectorXd th0 = Eigen::VectorXd::Zero(p + 2);
    th0[0] = mean - 0.5772156649015329 * sigma0;
    th0[p] = std::log(sigma0);
    th0[p + 1] = 0.1;

    Rng rng(opt.seed);
    NelderMeadResult best;
    best.f = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(1, opt.restarts); ++s) {
        Eigen::VectorXd start = th0;
        if (s > 0)
            for (int i = 0; i < start.size(); ++i)
                start[i] += 0.25 * (rng.uniform() - 0.5) * std::max(1.0, std::abs(start[i]));
        const NelderMeadResult r = nelder_mead(objective, start, opt.nm);
        if (r.f < best.f) best = r;
    }
    if (!std::isfinite(best.f) || best.f >= 1e12)
        throw NumericalError("fit_gev_independence: no valid optimum found");

    MarginalFit fit;
    fit.mu_coef = best.x.head(p);
    fit.sigma = std::exp(best.x[p]);
    fit.xi = best.x[p + 1];
    fit.nll = best.f;
    fit.iterations = best.iterations;
    fit.converged = best.converged;
    return fit;
}

// probability integral transform to uniform margins
inline MaximaDataset pit_uniform(const MaximaDataset& data, const MarginalFit& fit,
                                 const BasisTable& basis) {
    MaximaDataset out = data;
    out.scale = "uniform";
    for (int k = 0; k < data.n_rep(); ++k)
        for (int j = 0; j < data.n_sites(); ++j) {
            if (data.is_missing(k, j)) continue;
            out.values(k, j) = gev_cdf(data.values(k, j), fit.at(basis, k, j));
        }
    return out;
}

// inverse transform of uniform draws back to the data scale
inline MaximaDataset pit_inverse(const MaximaDataset& uniform, const MarginalFit& fit,
                                 const BasisTable& basis) {
    MaximaDataset out = uniform;
    out.scale = "data";
    for (int k = 0; k < uniform.n_rep(); ++k)
        for (int j = 0; j < uniform.n_sites(); ++j) {
            if (uniform.is_missing(k, j)) continue;
            const double u =
                std::min(1.0 - 1e-12, std::max(1e-12, uniform.values(k, j)));
            out.values(k, j) = gev_quantile(u, fit.at(basis, k, j));
        }
    return out;
}

// Kolmogorov-Smirnov distance of a sample against the uniform law, with the
// asymptotic p-value
struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n = 0;
};

inline KsResult ks_uniform(std::vector<double> u) {
    KsResult r;
    r.n = static_cast<int>(u.size());
    if (r.n == 0) throw NumericalError("ks_uniform: empty sample");
    std::sort(u.begin(), u.end());
    for (int i = 0; i < r.n; ++i) {
        const double lo = u[i] - i / double(r.n);
        const double hi = (i + 1) / double(r.n) - u[i];
        r.statistic = std::max({r.statistic, lo, hi});
    }
    const double sn = std::sqrt(double(r.n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * r.statistic;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * (k % 2 ? 1.0 : -1.0) *
                            std::exp(-2.0 * k * k * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    r.p_value = std::min(1.0, std::max(0.0, p));
    return r;
}

// per-station KS of the PIT values; flags misfit margins
inline std::vector<KsResult> pit_ks_by_station(const MaximaDataset& uniform) {
    std::vector<KsResult> out;
    for (int j = 0; j < uniform.n_sites(); ++j) {
        std::vector<double> u;
        for (int k = 0; k < uniform.n_rep(); ++k)
            if (!uniform.is_missing(k, j)) u.push_back(uniform.values(k, j));
        out.push_back(ks_uniform(std::move(u)));
    }
    return out;
}

// sorted standard-Gumbel residuals paired with their plotting quantiles
inline std::vector<std::pair<double, double>> qq_gumbel(
    const MaximaDataset& data, const MarginalFit& fit, const BasisTable& basis) {
    std::vector<double> res;
    for (int k = 0; k < data.n_rep(); ++k)
        for (int j = 0; j < data.n_sites(); ++j)
            if (!data.is_missing(k, j))
                res.push_back(gumbel_residual(data.values(k, j), fit.at(basis, k, j)));
    std::sort(res.begin(), res.end());
    std::vector<std::pair<double, double>> out;
    const int n = static_cast<int>(res.size());
    for (int i = 0; i < n; ++i) {
        const double q = (i + 0.5) / n;
        out.emplace_back(-std::log(-std::log(q)), res[i]);
    }
    return out;
}

} // namespace maxid
