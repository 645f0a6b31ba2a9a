#pragma once

#include <string>
#include <vector>

#include "maxid/fit.hpp"

namespace maxid {

struct StationScore {
    std::string station;
    double score = 0.0;
    int n_terms = 0;
    bool ok = false;
    std::string note;
};

struct CvResult {
    ModelSpec spec;
    double total = 0.0;       // lower is better
    int n_ok = 0;
    std::vector<StationScore> stations;
    std::vector<FitResult> refits;
};

namespace detail {

inline StudyDesign drop_site(const StudyDesign& design, int j0) {
    StudyDesign d;
    d.metric = design.metric;
    for (int j = 0; j < design.n_sites(); ++j)
        if (j != j0) d.sites.push_back(design.sites[j]);
    return d;
}

inline MaximaDataset drop_station(const MaximaDataset& data, int j0) {
    MaximaDataset d = data;
    d.stations.clear();
    d.values.resize(data.n_rep(), data.n_sites() - 1);
    int c = 0;
    for (int j = 0; j < data.n_sites(); ++j) {
        if (j == j0) continue;
        d.stations.push_back(data.stations[j]);
        d.values.col(c++) = data.values.col(j);
    }
    return d;
}

} // namespace detail

// Leave-one-station-out predictive comparison: refit the model without each
// station, then score the pairs joining that station to the rest with the
// negative log pairwise density.  Stations whose refit fails are flagged and
// left out of the total, so totals are only comparable across models with
// the same set of scored stations.
inline CvResult cv_logscore(const MaximaDataset& data, const StudyDesign& design,
                            const ModelSpec& spec, const PairWeights& weights,
                            const FitOptions& refit_opt = {},
                            const FitResult* full_fit = nullptr,
                            int station_threads = 1) {
    if (design.n_sites() < 3)
        throw ConfigError("cv_logscore: need at least 3 stations");

    ModelSpec warm = spec;
    if (full_fit == nullptr) {
        FitOptions full_opt = refit_opt;
        const FitResult full = fit_dependence(data, design, spec, weights, full_opt);
        warm.value = full.params;
    } else {
        warm.value = full_fit->params;
    }

    const int d = design.n_sites();
    CvResult out;
    out.spec = spec;
    out.stations.resize(d);
    out.refits.resize(d);
    parallel_for(d, station_threads, [&](int j0) {
        StationScore& s = out.stations[j0];
        s.station = design.sites[j0].name;
        try {
            const StudyDesign sub_design = detail::drop_site(design, j0);
            const MaximaDataset sub_data = detail::drop_station(data, j0);
            const PairWeights sub_weights = weights.for_design(sub_design);
            FitOptions fopt = refit_opt;
            fopt.restarts = 1;   // warm start from the full-data optimum
            fopt.threads = refit_opt.threads;
            const FitResult refit =
                fit_dependence(sub_data, sub_design, warm, sub_weights, fopt);
            out.refits[j0] = refit;

            const PairwiseContext star =
                make_pairwise_context(data, design, weights, j0, refit_opt.scale);
            s.n_terms = star.n_terms();
            s.score = negative_log_pl(refit.params, spec.family, star,
                                      refit_opt.quad, refit_opt.threads);
            s.ok = true;
        } catch (const std::exception& e) {
            s.ok = false;
            s.note = e.what();
        }
    });
    for (const auto& s : out.stations)
        if (s.ok) {
            out.total += s.score;
            ++out.n_ok;
        }
    return out;
}

} // namespace maxid
