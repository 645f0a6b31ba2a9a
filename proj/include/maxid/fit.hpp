#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "maxid/optimizer.hpp"
#include "maxid/pairwise.hpp"
#include "maxid/rng.hpp"

namespace maxid {

// Unconstrained optimizer coordinates for each dependence parameter: log for
// the positive ones, identity for the location-scale coefficients and nu,
// and a scaled logistic for the anisotropy angle.  beta keeps a small floor
// so the magnitude measure stays integrable while the optimizer explores.
inline constexpr double kBetaFloor = 1e-3;

inline double param_to_unconstrained(int index, double natural) {
    switch (index) {
        case 0: return std::log(natural);
        case 1: return std::log(std::max(natural, kBetaFloor));
        case 6: return std::log(natural);
        case 7: {
            const double f =
                std::min(1.0 - 1e-9, std::max(1e-9, natural / (M_PI / 2.0)));
            return std::log(f / (1.0 - f));
        }
        default: return natural;
    }
}

inline double param_to_natural(int index, double x) {
    switch (index) {
        case 0: return std::exp(std::min(x, 700.0));
        case 1: return std::max(std::exp(std::min(x, 700.0)), kBetaFloor);
        case 6: return std::exp(std::min(x, 700.0));
        case 7: return (M_PI / 2.0) / (1.0 + std::exp(-x));
        default: return x;
    }
}

inline std::vector<int> free_indices(const ModelSpec& spec) {
    std::vector<int> idx;
    for (int i = 0; i < DependenceParams::count; ++i)
        if (spec.free[i]) idx.push_back(i);
    return idx;
}

inline Eigen::VectorXd pack_free(const ModelSpec& spec, const DependenceParams& p) {
    const std::vector<int> idx = free_indices(spec);
    Eigen::VectorXd x(idx.size());
    for (size_t q = 0; q < idx.size(); ++q)
        x[q] = param_to_unconstrained(idx[q], p.get(idx[q]));
    return x;
}

inline DependenceParams unpack_free(const ModelSpec& spec, const Eigen::VectorXd& x) {
    DependenceParams p = spec.value;
    const std::vector<int> idx = free_indices(spec);
    for (size_t q = 0; q < idx.size(); ++q)
        p.set(idx[q], param_to_natural(idx[q], x[q]));
    return p;
}

struct FitOptions {
    int restarts = 3;
    double restart_jitter = 0.3;   // uniform half-width on the optimizer scale
    std::uint64_t seed = 1;
    int threads = 1;
    bool polish = true;            // rerun from the incumbent with a fresh simplex
    ValueScale scale = ValueScale::uniform;
    NelderMeadOptions nm;
    QuadratureSpec quad;

    FitOptions() {
        quad.rel_tol = 1e-6;
        quad.abs_tol = 1e-12;
    }
};

struct RestartTrace {
    Eigen::VectorXd start;
    double objective = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

struct FitResult {
    ModelSpec spec;
    DependenceParams params;
    Eigen::VectorXd transformed;
    double nll = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<RestartTrace> trace;
};

// Pairwise-likelihood fit of one model, multi-start simplex on the
// unconstrained scale.  opt.scale declares what the dataset cells are:
// pseudo-uniform transforms (the default) or raw max-id block maxima.
inline FitResult fit_dependence(const MaximaDataset& data, const StudyDesign& design,
                                const ModelSpec& spec, const PairWeights& weights,
                                const FitOptions& opt = {}) {
    if (design.n_sites() < 2)
        throw ConfigError("fit_dependence: need at least 2 stations");
    if (data.n_rep() < 10)
        throw ConfigError("fit_dependence: need at least 10 replicates");
    if (spec.n_free() == 0)
        throw ConfigError("fit_dependence: the model has no free parameters");

    const PairwiseContext ctx =
        make_pairwise_context(data, design, weights, -1, opt.scale);
    auto objective = [&](const Eigen::VectorXd& x) {
        try {
            return negative_log_pl(unpack_free(spec, x), spec.family, ctx,
                                   opt.quad, opt.threads);
        } catch (const NumericalError&) {
            return 1e300;
        }
    };

    const Eigen::VectorXd x0 = pack_free(spec, spec.value);
    FitResult out;
    out.spec = spec;
    NelderMeadResult best;
    best.f = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(1, opt.restarts); ++s) {
        Eigen::VectorXd start = x0;
        if (s > 0) {
            Rng rng = Rng::substream(opt.seed, s);
            for (int q = 0; q < start.size(); ++q)
                start[q] += opt.restart_jitter * (2.0 * rng.uniform() - 1.0);
        }
        const NelderMeadResult r = nelder_mead(objective, start, opt.nm);
        RestartTrace t;
        t.start = start;
        t.objective = r.f;
        t.iterations = r.iterations;
        t.converged = r.converged;
        out.trace.push_back(std::move(t));
        if (r.f < best.f) best = r;
    }
    if (!(best.f < 1e299)) {
        std::string detail;
        for (const auto& t : out.trace)
            detail += " " + std::to_string(t.objective);
        throw NumericalError(
            "fit_dependence: every restart ended without a finite objective;"
            " restart objectives:" + detail);
    }
    if (opt.polish) {
        // a fresh simplex at the incumbent escapes premature simplex
        // collapse, which matters on the long curved ridges this
        // objective develops between beta, nu and the range
        const NelderMeadResult r = nelder_mead(objective, best.x, opt.nm);
        RestartTrace t;
        t.start = best.x;
        t.objective = r.f;
        t.iterations = r.iterations;
        t.converged = r.converged;
        out.trace.push_back(std::move(t));
        if (r.f < best.f) best = r;
    }
    out.params = unpack_free(spec, best.x);
    out.transformed = best.x;
    out.nll = best.f;
    out.iterations = best.iterations;
    out.converged = best.converged;
    return out;
}

} // namespace maxid
