#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "maxid/fit.hpp"
#include "maxid/simulate.hpp"

namespace maxid {

namespace detail {

// empirical quantile with linear interpolation between order statistics
inline double sample_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - lo;
    return (1.0 - w) * v[lo] + w * v[hi];
}

} // namespace detail

struct BootstrapOptions {
    int B = 300;
    std::uint64_t seed = 1;
    int threads = 1;            // across bootstrap replicates
    FitOptions fit;             // warm-started refits, so one start is enough
    SimulationOptions sim;

    BootstrapOptions() { fit.restarts = 1; }
};

struct ParameterInterval {
    std::string name;
    double estimate = 0.0;
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
};

struct BootstrapEnsemble {
    std::vector<FitResult> fits;
    std::vector<ParameterInterval> intervals;   // free parameters, natural scale
    std::uint64_t seed = 0;
    int n_converged = 0;
    bool warning_nonconverged = false;
};

// Simulate-then-refit uncertainty assessment: B datasets from the fitted
// model at the data locations, each with the original missing cells blanked
// out, refitted with a warm start at the point estimate.  Percentile
// intervals use converged refits only.
inline BootstrapEnsemble parametric_bootstrap(const FitResult& fit,
                                              const MaximaDataset& data,
                                              const StudyDesign& design,
                                              const PairWeights& weights,
                                              const BootstrapOptions& opt = {}) {
    if (opt.B < 2) throw ConfigError("parametric_bootstrap: need B >= 2");
    if (!fit.converged)
        throw ConfigError("parametric_bootstrap: the base fit did not converge");

    ModelSpec warm = fit.spec;
    warm.value = fit.params;
    const int n_rep = data.n_rep();
    const std::vector<double>* times = data.times.empty() ? nullptr : &data.times;
    // replicate datasets must live on the scale the refits expect
    const bool uniform_maxid = opt.fit.scale == ValueScale::uniform;

    BootstrapEnsemble out;
    out.seed = opt.seed;
    out.fits.resize(opt.B);
    parallel_for(opt.B, opt.threads, [&](int b) {
        SimulationOptions sim = opt.sim;
        sim.seed = Rng::substream(opt.seed, b).raw();
        FitOptions fopt = opt.fit;
        fopt.seed = sim.seed;
        fopt.threads = 1;
        try {
            MaximaDataset boot =
                simulate_model(design, fit.params, fit.spec.family, n_rep, sim,
                               times, {}, uniform_maxid)
                    .data;
            for (int k = 0; k < n_rep; ++k)
                for (int j = 0; j < data.n_sites(); ++j)
                    if (data.is_missing(k, j))
                        boot.values(k, j) = std::numeric_limits<double>::quiet_NaN();
            boot.times = data.times;
            out.fits[b] = fit_dependence(boot, design, warm, weights, fopt);
        } catch (const std::exception&) {
            out.fits[b] = FitResult{};
            out.fits[b].spec = warm;
            out.fits[b].converged = false;
        }
    });

    for (const auto& f : out.fits) out.n_converged += f.converged ? 1 : 0;
    out.warning_nonconverged = out.n_converged < std::ceil(0.8 * opt.B);

    for (int idx : free_indices(fit.spec)) {
        ParameterInterval iv;
        iv.name = DependenceParams::names()[idx];
        iv.estimate = fit.params.get(idx);
        std::vector<double> values;
        for (const auto& f : out.fits)
            if (f.converged) values.push_back(f.params.get(idx));
        if (values.size() >= 2) {
            iv.lo = detail::sample_quantile(values, 0.025);
            iv.hi = detail::sample_quantile(values, 0.975);
        }
        out.intervals.push_back(std::move(iv));
    }
    return out;
}

} // namespace maxid
