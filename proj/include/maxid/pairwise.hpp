#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "maxid/copula.hpp"
#include "maxid/correlation.hpp"
#include "maxid/dataset.hpp"
#include "maxid/design.hpp"
#include "maxid/errors.hpp"
#include "maxid/marginal_table.hpp"
#include "maxid/parallel.hpp"
#include "maxid/params.hpp"

namespace maxid {

// Pair weights of the composite likelihood: either every pair counts, or
// only pairs within a cutoff distance.
struct PairWeights {
    enum class Rule { all_ones, distance_cutoff };
    Rule rule = Rule::all_ones;
    double delta = 0.0;
    Eigen::MatrixXd omega;

    static PairWeights all_ones(const StudyDesign& design) {
        PairWeights w;
        w.rule = Rule::all_ones;
        const int d = design.n_sites();
        w.omega = Eigen::MatrixXd::Ones(d, d);
        w.omega.diagonal().setZero();
        return w;
    }

    static PairWeights distance_cutoff(const StudyDesign& design, double delta) {
        if (!(delta > 0.0))
            throw ConfigError("distance cutoff must be positive");
        PairWeights w;
        w.rule = Rule::distance_cutoff;
        w.delta = delta;
        const int d = design.n_sites();
        w.omega = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                w.omega(i, j) = w.omega(j, i) =
                    design.distance(i, j) <= delta ? 1.0 : 0.0;
        return w;
    }

    // the same rule materialized for another design (used by leave-one-out)
    PairWeights for_design(const StudyDesign& design) const {
        return rule == Rule::all_ones ? all_ones(design)
                                      : distance_cutoff(design, delta);
    }
};

// Scale the dataset cells live on.  uniform means pseudo-uniform values in
// (0,1), the common ground for comparing copula families.  data means the
// raw block maxima of the max-id process itself; fitting on that scale keeps
// the marginal information about alpha and beta in the objective.
enum class ValueScale { uniform, data };

// Preprocessed form of one dataset for repeated objective evaluations: the
// positively weighted pairs in an order independent of station numbering,
// each with the replicates where both cells are observed, sorted by
// replicate id so totals do not depend on row order either.
struct PairwiseContext {
    struct Pair {
        int i = 0, j = 0;
        double weight = 1.0;
        std::vector<int> reps;
    };

    const StudyDesign* design = nullptr;
    ValueScale scale = ValueScale::uniform;
    Eigen::MatrixXd u;              // cells on the declared scale; NaN where missing
    Eigen::MatrixXd normal_scores;  // norm_quantile of uniform cells; NaN on data scale
    std::vector<double> times;
    std::vector<Pair> pairs;

    int n_terms() const {
        int n = 0;
        for (const auto& p : pairs) n += static_cast<int>(p.reps.size());
        return n;
    }
};

namespace detail {

inline std::vector<int> canonical_replicate_order(const MaximaDataset& data) {
    std::vector<int> order(data.n_rep());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return data.replicate_ids[a] < data.replicate_ids[b];
    });
    return order;
}

} // namespace detail

inline PairwiseContext make_pairwise_context(const MaximaDataset& data,
                                             const StudyDesign& design,
                                             const PairWeights& weights,
                                             int star_center = -1,
                                             ValueScale scale = ValueScale::uniform) {
    const int d = design.n_sites();
    const int k = data.n_rep();
    if (data.n_sites() != d)
        throw ConfigError("pairwise context: data and design disagree on stations");
    if (weights.omega.rows() != d)
        throw ConfigError("pairwise context: weight matrix size mismatch");

    PairwiseContext ctx;
    ctx.design = &design;
    ctx.scale = scale;
    ctx.times = data.times.empty() ? std::vector<double>(k, 0.0) : data.times;

    ctx.u = data.values;
    ctx.normal_scores.setConstant(k, d, std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < d; ++c) {
            if (data.is_missing(r, c)) continue;
            const double v = data.values(r, c);
            if (scale == ValueScale::uniform) {
                if (v < 0.0 || v > 1.0)
                    throw ConfigError("pairwise context: value outside [0,1] at replicate " +
                                      data.replicate_ids[r] + ", station " +
                                      data.stations[c] + "; transform the data first");
                ctx.u(r, c) = std::min(1.0 - 1e-10, std::max(1e-10, v));
                ctx.normal_scores(r, c) = norm_quantile(ctx.u(r, c));
            } else if (!(v > 0.0)) {
                throw ConfigError("pairwise context: nonpositive value at replicate " +
                                  data.replicate_ids[r] + ", station " +
                                  data.stations[c] +
                                  "; data-scale fits need positive block maxima");
            }
        }

    const std::vector<int> rep_order = detail::canonical_replicate_order(data);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            if (star_center >= 0 && i != star_center && j != star_center) continue;
            if (!(weights.omega(i, j) > 0.0)) continue;
            PairwiseContext::Pair p;
            p.i = i;
            p.j = j;
            p.weight = weights.omega(i, j);
            for (int r : rep_order)
                if (!data.is_missing(r, i) && !data.is_missing(r, j))
                    p.reps.push_back(r);
            if (!p.reps.empty()) ctx.pairs.push_back(std::move(p));
        }
    // station numbering must not influence the summation order
    std::sort(ctx.pairs.begin(), ctx.pairs.end(),
              [&](const PairwiseContext::Pair& a, const PairwiseContext::Pair& b) {
                  const auto key = [&](const PairwiseContext::Pair& p) {
                      const std::string& x = design.sites[p.i].name;
                      const std::string& y = design.sites[p.j].name;
                      return x < y ? std::pair(x, y) : std::pair(y, x);
                  };
                  return key(a) < key(b);
              });
    return ctx;
}

// Weighted negative log pairwise likelihood of the given family.  On the
// uniform scale every family contributes its copula density.  On the data
// scale the max-id family contributes the joint density of each pair, so
// the margins inform alpha and beta too; the other families have no notion
// of that scale and are rejected.  Parameter values that break a quadrature
// raise NumericalError naming the offending pair and replicate.
inline double negative_log_pl(const DependenceParams& p, Family family,
                              const PairwiseContext& ctx,
                              const QuadratureSpec& quad = {}, int threads = 1) {
    validate(p, family);
    if (ctx.scale == ValueScale::data && family != Family::max_id)
        throw ConfigError(
            "negative_log_pl: gaussian and t copulas need pseudo-uniform data");
    const StudyDesign& design = *ctx.design;
    const int n_pairs = static_cast<int>(ctx.pairs.size());
    if (n_pairs == 0) return 0.0;

    // per-cell transforms to the family's own scale, shared across pairs
    Eigen::MatrixXd z;
    std::unique_ptr<MarginalTable> table;
    if (family == Family::max_id && ctx.scale == ValueScale::uniform) {
        table = std::make_unique<MarginalTable>(p.alpha, p.beta, quad);
        z.setConstant(ctx.u.rows(), ctx.u.cols(),
                      std::numeric_limits<double>::quiet_NaN());
        parallel_for(static_cast<int>(ctx.u.cols()), threads, [&](int c) {
            for (Eigen::Index r = 0; r < ctx.u.rows(); ++r)
                if (!std::isnan(ctx.u(r, c))) z(r, c) = table->quantile(ctx.u(r, c));
        });
    } else if (family == Family::t_copula) {
        z.setConstant(ctx.u.rows(), ctx.u.cols(),
                      std::numeric_limits<double>::quiet_NaN());
        parallel_for(static_cast<int>(ctx.u.cols()), threads, [&](int c) {
            for (Eigen::Index r = 0; r < ctx.u.rows(); ++r)
                if (!std::isnan(ctx.u(r, c))) z(r, c) = t_quantile(ctx.u(r, c), p.alpha);
        });
    }

    std::vector<double> subtotal(n_pairs, 0.0);
    std::vector<std::string> failure(n_pairs);
    parallel_for(n_pairs, threads, [&](int idx) {
        const auto& pr = ctx.pairs[idx];
        const bool time_varying = p.lambda2 != 0.0;
        PairCorrelation corr;
        bool corr_ready = false;
        double acc = 0.0;
        for (int r : pr.reps) {
            if (time_varying || !corr_ready) {
                corr = pair_correlation_terms(p, design, pr.i, pr.j, ctx.times[r]);
                corr_ready = true;
            }
            double logc;
            switch (family) {
                case Family::max_id:
                    logc = table ? maxid_pair_copula_logdensity_at(
                                       z(r, pr.i), z(r, pr.j), p.alpha, p.beta,
                                       corr, *table, quad)
                                 : maxid_pair_logdensity_at(
                                       ctx.u(r, pr.i), ctx.u(r, pr.j), p.alpha,
                                       p.beta, corr, quad);
                    break;
                case Family::gaussian_copula:
                    logc = gaussian_copula_logdensity_scores(
                        ctx.normal_scores(r, pr.i), ctx.normal_scores(r, pr.j),
                        corr.rho(0.0));
                    break;
                case Family::t_copula:
                    logc = t_copula_logdensity_scores(z(r, pr.i), z(r, pr.j),
                                                      corr.rho(0.0), p.alpha);
                    break;
                default:
                    logc = std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(logc)) {
                failure[idx] = "non-finite pairwise term for stations (" +
                               design.sites[pr.i].name + ", " +
                               design.sites[pr.j].name + "), replicate index " +
                               std::to_string(r);
                return;
            }
            acc += pr.weight * logc;
        }
        subtotal[idx] = acc;
    });
    for (const auto& f : failure)
        if (!f.empty()) throw NumericalError("negative_log_pl: " + f);
    double total = 0.0;
    for (double s : subtotal) total += s;
    return -total;
}

inline double negative_log_pl(const DependenceParams& p, Family family,
                              const MaximaDataset& data, const StudyDesign& design,
                              const PairWeights& weights,
                              const QuadratureSpec& quad = {}, int threads = 1,
                              ValueScale scale = ValueScale::uniform) {
    const PairwiseContext ctx = make_pairwise_context(data, design, weights, -1, scale);
    return negative_log_pl(p, family, ctx, quad, threads);
}

} // namespace maxid
