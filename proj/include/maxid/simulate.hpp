#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "maxid/correlation.hpp"
#include "maxid/dataset.hpp"
#include "maxid/design.hpp"
#include "maxid/kappa.hpp"
#include "maxid/linalg.hpp"
#include "maxid/marginal_table.hpp"
#include "maxid/params.hpp"
#include "maxid/rng.hpp"
#include "maxid/student_t.hpp"

namespace maxid {

struct SimulationOptions {
    std::uint64_t seed = 0;
    double epsilon = 1e-4;      // stop once D * P(next point exceeds the field) < epsilon
    int max_points = 100000;
    bool uniform_scale = false; // return margins as exp(-V(z))
};

struct SimulationResult {
    MaximaDataset data;
    std::vector<int> points_used;
    std::vector<bool> bound_met;
};

namespace detail {

inline double quantize_3sig(double x) {
    if (x <= 0.0) return x;
    const double f = std::pow(10.0, std::floor(std::log10(x)) - 2.0);
    return std::round(x / f) * f;
}

// correlation matrix at dependence factor g = (1+r)^nu, from precomputed
// pair terms
inline Eigen::MatrixXd corr_at_factor(const std::vector<PairCorrelation>& terms,
                                      int d, double g) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    int idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j, ++idx)
            m(i, j) = m(j, i) =
                terms[idx].prefactor * std::exp(-terms[idx].scale_h * g);
    return m;
}

} // namespace detail

// Spectral simulation of the max-id field: Poisson magnitudes R_1 > R_2 > ...
// from the inverted mean measure paired with Gaussian fields whose
// correlation range shrinks with the magnitude.  Each replicate draws from
// its own substream, so replicate r of a given seed is reproducible
// regardless of how many replicates are requested.
inline SimulationResult simulate_maxid(const StudyDesign& design,
                                       const DependenceParams& p, int n_rep,
                                       const SimulationOptions& opt,
                                       const std::vector<double>* times = nullptr,
                                       const QuadratureSpec& spec = {}) {
    validate(p, Family::max_id);
    const int d = design.n_sites();
    SimulationResult out;
    out.data.scale = opt.uniform_scale ? "uniform" : "data";
    for (const auto& s : design.sites) out.data.stations.push_back(s.name);
    out.data.values.resize(n_rep, d);
    if (times) {
        if (static_cast<int>(times->size()) != n_rep)
            throw ConfigError("simulate_maxid: times length != replicates");
        out.data.times = *times;
    }
    for (int k = 0; k < n_rep; ++k)
        out.data.replicate_ids.push_back(std::to_string(k + 1));
    if (!times) out.data.default_times();

    std::unique_ptr<MarginalTable> table;
    if (opt.uniform_scale)
        table = std::make_unique<MarginalTable>(p.alpha, std::max(p.beta, 0.0), spec);

    for (int k = 0; k < n_rep; ++k) {
        Rng rng = Rng::substream(opt.seed, k);
        const double t_k = out.data.times[k];

        std::vector<PairCorrelation> terms;
        terms.reserve(d * (d - 1) / 2);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                terms.push_back(pair_correlation_terms(p, design, i, j, t_k));

        std::map<double, Eigen::MatrixXd> chol_cache;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd w(d);
        double e_cum = 0.0;
        int used = 0;
        bool met = false;
        while (used < opt.max_points) {
            e_cum += rng.exponential();
            const double r = kappa_inverse(e_cum, p.alpha, p.beta);
            const double g = detail::quantize_3sig(std::pow(1.0 + r, p.nu));
            auto it = chol_cache.find(g);
            if (it == chol_cache.end())
                it = chol_cache
                         .emplace(g, cholesky_jittered(
                                          detail::corr_at_factor(terms, d, g)))
                         .first;
            for (int j = 0; j < d; ++j) w[j] = rng.normal();
            w = it->second * w;
            ++used;
            if (used == 1)
                z = r * w;
            else
                z = z.cwiseMax(r * w);
            if (z.minCoeff() > 0.0 &&
                d * norm_sf(z.minCoeff() / r) < opt.epsilon) {
                met = true;
                break;
            }
        }
        out.points_used.push_back(used);
        out.bound_met.push_back(met);
        for (int j = 0; j < d; ++j)
            out.data.values(k, j) =
                opt.uniform_scale ? std::exp(-table->V(std::max(z[j], 1e-300)))
                                  : z[j];
    }
    return out;
}

// Uniform-scale simulation from the Gaussian or t copula with the same
// correlation family evaluated at r = 0.
inline SimulationResult simulate_copula(const StudyDesign& design,
                                        const DependenceParams& p, Family family,
                                        int n_rep, const SimulationOptions& opt,
                                        const std::vector<double>* times = nullptr) {
    if (family == Family::max_id)
        throw ConfigError("simulate_copula: use simulate_maxid for the max-id family");
    validate(p, family);
    const int d = design.n_sites();
    SimulationResult out;
    out.data.scale = "uniform";
    for (const auto& s : design.sites) out.data.stations.push_back(s.name);
    out.data.values.resize(n_rep, d);
    if (times) {
        if (static_cast<int>(times->size()) != n_rep)
            throw ConfigError("simulate_copula: times length != replicates");
        out.data.times = *times;
    }
    for (int k = 0; k < n_rep; ++k)
        out.data.replicate_ids.push_back(std::to_string(k + 1));
    if (!times) out.data.default_times();

    std::map<double, Eigen::MatrixXd> chol_cache;
    Eigen::VectorXd x(d);
    for (int k = 0; k < n_rep; ++k) {
        Rng rng = Rng::substream(opt.seed, k);
        const double t_k = out.data.times[k];
        auto it = chol_cache.find(t_k);
        if (it == chol_cache.end())
            it = chol_cache
                     .emplace(t_k, cholesky_jittered(
                                       correlation_matrix(p, design, t_k, 0.0)))
                     .first;
        for (int j = 0; j < d; ++j) x[j] = rng.normal();
        x = it->second * x;
        if (family == Family::gaussian_copula) {
            for (int j = 0; j < d; ++j) out.data.values(k, j) = norm_cdf(x[j]);
        } else {
            const double dof = p.alpha;
            const double scale = std::sqrt(dof / rng.chi_squared(dof));
            for (int j = 0; j < d; ++j)
                out.data.values(k, j) = t_cdf(x[j] * scale, dof);
        }
        out.points_used.push_back(1);
        out.bound_met.push_back(true);
    }
    return out;
}

// Simulation dispatch for refit pipelines.  uniform_maxid keeps max-id draws
// on the uniform scale like the copula families; pass false to get raw block
// maxima, matching a data-scale fit.
inline SimulationResult simulate_model(const StudyDesign& design,
                                       const DependenceParams& p, Family family,
                                       int n_rep, const SimulationOptions& opt,
                                       const std::vector<double>* times = nullptr,
                                       const QuadratureSpec& spec = {},
                                       bool uniform_maxid = true) {
    if (family == Family::max_id) {
        SimulationOptions o = opt;
        o.uniform_scale = uniform_maxid;
        return simulate_maxid(design, p, n_rep, o, times, spec);
    }
    return simulate_copula(design, p, family, n_rep, opt, times);
}

// altitude profile of the synthetic transect: a Gaussian bump centered mid
// domain, rescaled to [-1, 2*pdf(0; 0, 0.25) - 1]
inline double mountain_profile(double x) {
    const double s = 0.25;
    const double dev = (x - 0.5) / s;
    return 2.0 * std::exp(-0.5 * dev * dev) / (s * kSqrt2Pi) - 1.0;
}

// jittered square grid on (0,1)^2 with the mountain profile as altitude
inline StudyDesign mountain_range_design(int n_side = 7, double jitter = 0.015,
                                         std::uint64_t seed = 99) {
    StudyDesign d;
    d.metric = DistanceMetric::euclidean;
    Rng rng(seed);
    int id = 0;
    for (int iy = 0; iy < n_side; ++iy)
        for (int ix = 0; ix < n_side; ++ix) {
            Site s;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "s%02d", ++id);
            s.name = buf;
            s.lon = std::min(0.99, std::max(0.01, (ix + 0.5) / n_side +
                                                      jitter * rng.normal()));
            s.lat = std::min(0.99, std::max(0.01, (iy + 0.5) / n_side +
                                                      jitter * rng.normal()));
            s.alt = mountain_profile(s.lon);
            d.sites.push_back(std::move(s));
        }
    return d;
}

} // namespace maxid
