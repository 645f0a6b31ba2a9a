#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "maxid/bootstrap.hpp"
#include "maxid/cv.hpp"
#include "maxid/fit.hpp"
#include "maxid/pairwise.hpp"
#include "maxid/serialize.hpp"
#include "maxid/simulate.hpp"

using namespace maxid;
using Catch::Approx;

namespace {

StudyDesign grid_design(int nx, int ny, double spacing, double alt_slope = 0.0) {
    StudyDesign d;
    d.metric = DistanceMetric::euclidean;
    int id = 0;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            Site s;
            s.name = "g" + std::to_string(++id);
            s.lon = ix * spacing;
            s.lat = iy * spacing;
            s.alt = alt_slope * s.lon;
            d.sites.push_back(std::move(s));
        }
    return d;
}

} // namespace

TEST_CASE("pair weights") {
    const StudyDesign d = grid_design(3, 1, 0.5);
    const PairWeights all = PairWeights::all_ones(d);
    CHECK(all.omega.diagonal().isZero());
    CHECK(all.omega(0, 2) == 1.0);

    const PairWeights cut = PairWeights::distance_cutoff(d, 0.6);
    CHECK(cut.omega(0, 1) == 1.0);   // 0.5 apart
    CHECK(cut.omega(0, 2) == 0.0);   // 1.0 apart
    CHECK(cut.omega.isApprox(cut.omega.transpose()));

    StudyDesign closer = d;
    closer.sites[2].lon = 0.55;
    CHECK(cut.for_design(closer).omega(0, 2) == 1.0);

    CHECK_THROWS_AS(PairWeights::distance_cutoff(d, 0.0), ConfigError);
}

TEST_CASE("pairwise context") {
    const StudyDesign d = grid_design(3, 1, 0.5);
    MaximaDataset data;
    data.stations = {"g1", "g2", "g3"};
    data.replicate_ids = {"b", "a"};
    data.values.resize(2, 3);
    data.values << 0.2, 0.4, 0.6, 0.5, std::nan(""), 0.7;
    data.default_times();

    const PairwiseContext ctx =
        make_pairwise_context(data, d, PairWeights::all_ones(d));
    REQUIRE(ctx.pairs.size() == 3);
    // replicate "a" (row 1) is ordered before "b" (row 0)
    const auto& p01 = ctx.pairs[0];
    CHECK(p01.i == 0);
    CHECK(p01.j == 1);
    REQUIRE(p01.reps.size() == 1);     // row 1 misses station g2
    CHECK(p01.reps[0] == 0);
    const auto& p02 = ctx.pairs[1];
    CHECK(p02.reps == std::vector<int>{1, 0});
    CHECK(ctx.n_terms() == 4);

    // a star context keeps only pairs touching the centre
    const PairwiseContext star =
        make_pairwise_context(data, d, PairWeights::all_ones(d), 2);
    CHECK(star.pairs.size() == 2);
    for (const auto& p : star.pairs) CHECK((p.i == 2 || p.j == 2));

    MaximaDataset bad = data;
    bad.values(0, 0) = 1.5;
    CHECK_THROWS_AS(make_pairwise_context(bad, d, PairWeights::all_ones(d)),
                    ConfigError);
}

TEST_CASE("negative log pairwise likelihood") {
    const StudyDesign d = grid_design(2, 2, 0.6);
    DependenceParams p;
    p.lambda0 = -0.2;
    SimulationOptions opt;
    opt.seed = 3;
    const MaximaDataset data =
        simulate_copula(d, p, Family::gaussian_copula, 12, opt).data;
    const PairWeights weights = PairWeights::all_ones(d);

    SECTION("single pair, single replicate") {
        StudyDesign two;
        two.sites = {d.sites[0], d.sites[1]};
        MaximaDataset one;
        one.stations = {two.sites[0].name, two.sites[1].name};
        one.replicate_ids = {"r"};
        one.values.resize(1, 2);
        one.values << 0.3, 0.8;
        one.times = {0.25};
        const double nll = negative_log_pl(p, Family::gaussian_copula, one, two,
                                           PairWeights::all_ones(two));
        const double rho = pair_correlation(p, two, 0, 1, 0.25, 0.0);
        CHECK(nll == Approx(-gaussian_pair_copula_logdensity(0.3, 0.8, rho))
                         .epsilon(1e-14));
    }

    SECTION("no weighted pairs gives zero") {
        const PairWeights none = PairWeights::distance_cutoff(d, 1e-6);
        CHECK(negative_log_pl(p, Family::gaussian_copula, data, d, none) == 0.0);
    }

    SECTION("invariant to station and replicate permutation") {
        const double base =
            negative_log_pl(p, Family::gaussian_copula, data, d, weights);

        StudyDesign dp;
        dp.metric = d.metric;
        const std::vector<int> perm{2, 0, 3, 1};
        for (int j : perm) dp.sites.push_back(d.sites[j]);
        MaximaDataset shuffled;
        shuffled.replicate_ids = data.replicate_ids;
        shuffled.times = data.times;
        shuffled.values.resize(data.n_rep(), data.n_sites());
        for (size_t c = 0; c < perm.size(); ++c) {
            shuffled.stations.push_back(data.stations[perm[c]]);
            shuffled.values.col(c) = data.values.col(perm[c]);
        }
        CHECK(negative_log_pl(p, Family::gaussian_copula, shuffled, dp,
                              PairWeights::all_ones(dp)) == base);

        MaximaDataset rows = data;
        for (int k = 0; k < data.n_rep(); ++k) {
            const int src = (k + 5) % data.n_rep();
            rows.values.row(k) = data.values.row(src);
            rows.replicate_ids[k] = data.replicate_ids[src];
            rows.times[k] = data.times[src];
        }
        CHECK(negative_log_pl(p, Family::gaussian_copula, rows, d, weights) == base);
    }

    SECTION("parallel evaluation is bit stable") {
        const double t1 = negative_log_pl(p, Family::gaussian_copula, data, d,
                                          weights, QuadratureSpec{}, 1);
        const double t4 = negative_log_pl(p, Family::gaussian_copula, data, d,
                                          weights, QuadratureSpec{}, 4);
        CHECK(t1 == t4);
    }

    SECTION("max-id family matches a direct term sum") {
        DependenceParams mp;
        mp.alpha = 1.0;
        mp.beta = 1.0;
        mp.lambda0 = -0.2;
        mp.nu = 0.25;
        SimulationOptions mopt;
        mopt.seed = 9;
        mopt.uniform_scale = true;
        StudyDesign small = grid_design(3, 1, 0.5);
        const MaximaDataset mdata = simulate_maxid(small, mp, 4, mopt).data;
        QuadratureSpec quad;
        quad.rel_tol = 1e-6;
        const double nll = negative_log_pl(mp, Family::max_id, mdata, small,
                                           PairWeights::all_ones(small), quad);
        MarginalTable table(mp.alpha, mp.beta, quad);
        double direct = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                const PairCorrelation corr =
                    pair_correlation_terms(mp, small, i, j, 0.0);
                for (int k = 0; k < 4; ++k) {
                    const double u1 = std::clamp(mdata.values(k, i), 1e-10, 1.0 - 1e-10);
                    const double u2 = std::clamp(mdata.values(k, j), 1e-10, 1.0 - 1e-10);
                    direct -= maxid_pair_copula_logdensity(
                        u1, u2, mp.alpha, mp.beta, corr, table, quad);
                }
            }
        // times are not all zero, but lambda2 = 0 makes the correlation
        // time free, so the direct sum should agree to summation order
        CHECK(nll == Approx(direct).epsilon(1e-12));
    }

    SECTION("max-stable terms agree with the forced quadrature route") {
        DependenceParams sp;
        sp.alpha = 1.3;
        sp.beta = 0.0;
        sp.lambda0 = 0.0;
        StudyDesign two = grid_design(2, 1, 0.4);
        MaximaDataset pairs;
        pairs.stations = {"g1", "g2"};
        pairs.values.resize(3, 2);
        pairs.values << 0.25, 0.7, 0.6, 0.55, 0.9, 0.12;
        for (int k = 0; k < 3; ++k) pairs.replicate_ids.push_back(std::to_string(k));
        pairs.default_times();

        QuadratureSpec tight;
        tight.rel_tol = 1e-9;
        const double closed = negative_log_pl(sp, Family::max_id, pairs, two,
                                              PairWeights::all_ones(two), tight);
        MarginalTable table(sp.alpha, 0.0, tight);
        double quad_route = 0.0;
        const PairCorrelation corr = pair_correlation_terms(sp, two, 0, 1, 0.0);
        for (int k = 0; k < 3; ++k)
            quad_route -= maxid_pair_copula_logdensity(
                pairs.values(k, 0), pairs.values(k, 1), sp.alpha, 0.0, corr, table,
                tight, ExponentRoute::quadrature);
        CHECK(closed == Approx(quad_route).epsilon(1e-6));
    }

    SECTION("deleting a cell changes only its own terms") {
        const double full =
            negative_log_pl(p, Family::gaussian_copula, data, d, weights);
        MaximaDataset dropped = data;
        const int k0 = 4, j0 = 1;
        dropped.values(k0, j0) = std::nan("");
        const double without =
            negative_log_pl(p, Family::gaussian_copula, dropped, d, weights);
        double affected = 0.0;
        for (int j = 0; j < d.n_sites(); ++j) {
            if (j == j0 || data.is_missing(k0, j)) continue;
            const double rho = pair_correlation(p, d, j0, j, data.times[k0], 0.0);
            affected -= gaussian_pair_copula_logdensity(data.values(k0, j0),
                                                        data.values(k0, j), rho);
        }
        CHECK(full - without == Approx(affected).epsilon(1e-10).margin(1e-12));
    }

    SECTION("coincident sites make the score matrix singular") {
        StudyDesign co = grid_design(2, 1, 0.4);
        co.sites[1].lon = co.sites[0].lon;
        MaximaDataset narrow;
        narrow.stations = {co.sites[0].name, co.sites[1].name};
        narrow.replicate_ids = data.replicate_ids;
        narrow.times = data.times;
        narrow.values = data.values.leftCols(2);
        CHECK_THROWS_AS(negative_log_pl(p, Family::gaussian_copula, narrow, co,
                                        PairWeights::all_ones(co)),
                        NumericalError);
    }
}

TEST_CASE("parameter transforms") {
    DependenceParams p;
    p.alpha = 2.5;
    p.beta = 0.7;
    p.lambda0 = -0.4;
    p.nu = 1.2;
    p.aniso_ratio = 3.0;
    p.aniso_angle = 0.6;
    for (int i = 0; i < DependenceParams::count; ++i) {
        const double x = param_to_unconstrained(i, p.get(i));
        CHECK(param_to_natural(i, x) == Approx(p.get(i)).epsilon(1e-12));
    }
    // the beta floor holds from below
    CHECK(param_to_natural(1, std::log(1e-7)) == kBetaFloor);
    // the angle stays inside [0, pi/2] for extreme coordinates
    CHECK(param_to_natural(7, 40.0) <= M_PI / 2.0);
    CHECK(param_to_natural(7, -40.0) >= 0.0);

    const ModelSpec m6 = model_spec(6);
    const Eigen::VectorXd x = pack_free(m6, m6.value);
    REQUIRE(x.size() == 6);
    const DependenceParams back = unpack_free(m6, x);
    for (int i = 0; i < DependenceParams::count; ++i)
        CHECK(back.get(i) == Approx(m6.value.get(i)).epsilon(1e-12));
}

TEST_CASE("dependence fit") {
    SECTION("gaussian copula range recovery") {
        const StudyDesign d = grid_design(3, 2, 0.4);
        DependenceParams truth;
        truth.lambda0 = -0.3;
        SimulationOptions opt;
        opt.seed = 21;
        const MaximaDataset data =
            simulate_copula(d, truth, Family::gaussian_copula, 150, opt).data;
        FitOptions fopt;
        fopt.seed = 2;
        const FitResult fit = fit_dependence(data, d, model_spec(7),
                                             PairWeights::all_ones(d), fopt);
        CHECK(fit.converged);
        CHECK(fit.params.lambda0 == Approx(-0.3).margin(0.2));
        CHECK(fit.trace.size() == 3);
        CHECK(std::isfinite(fit.nll));
    }

    SECTION("max-stable fit through the closed route") {
        const StudyDesign d = grid_design(3, 1, 0.5);
        DependenceParams truth;
        truth.alpha = 1.0;
        truth.beta = 0.0;
        truth.lambda0 = -0.2;
        SimulationOptions opt;
        opt.seed = 14;
        opt.uniform_scale = true;
        const MaximaDataset data = simulate_maxid(d, truth, 60, opt).data;
        const PairWeights w = PairWeights::all_ones(d);
        FitOptions fopt;
        fopt.restarts = 2;

        // alpha and lambda0 ride a likelihood ridge at this design size, so
        // the joint fit is only required to dominate the generating values
        const FitResult fit = fit_dependence(data, d, model_spec(1), w, fopt);
        CHECK(fit.converged);
        CHECK(fit.params.beta == 0.0);
        const double at_truth =
            negative_log_pl(truth, Family::max_id, data, d, w, fopt.quad);
        CHECK(fit.nll <= at_truth + 1e-6);

        // with alpha pinned the range parameter is identifiable
        ModelSpec range_only = model_spec(1);
        range_only.free = {};
        range_only.free[2] = true;
        const FitResult fr = fit_dependence(data, d, range_only, w, fopt);
        CHECK(fr.converged);
        CHECK(fr.params.alpha == 1.0);
        CHECK(fr.params.lambda0 == Approx(-0.2).margin(0.4));
    }

    SECTION("nested models cannot fit worse") {
        const StudyDesign d = grid_design(3, 1, 0.5, 0.8);
        DependenceParams truth;
        truth.alpha = 1.0;
        truth.lambda0 = -0.2;
        SimulationOptions opt;
        opt.seed = 17;
        opt.uniform_scale = true;
        const MaximaDataset data = simulate_maxid(d, truth, 50, opt).data;
        const PairWeights w = PairWeights::all_ones(d);
        FitOptions fopt;
        fopt.restarts = 1;
        const FitResult m1 = fit_dependence(data, d, model_spec(1), w, fopt);
        ModelSpec warm2 = model_spec(2);
        warm2.value = m1.params;
        const FitResult m2 = fit_dependence(data, d, warm2, w, fopt);
        CHECK(m2.nll <= m1.nll + 1e-4);
    }

    SECTION("input validation") {
        const StudyDesign d = grid_design(2, 1, 0.5);
        DependenceParams p;
        SimulationOptions opt;
        opt.seed = 1;
        const MaximaDataset data =
            simulate_copula(d, p, Family::gaussian_copula, 12, opt).data;
        const PairWeights w = PairWeights::all_ones(d);

        StudyDesign one;
        one.sites = {d.sites[0]};
        CHECK_THROWS_AS(
            fit_dependence(data, one, model_spec(7), PairWeights::all_ones(one)),
            ConfigError);

        const MaximaDataset few =
            simulate_copula(d, p, Family::gaussian_copula, 5, opt).data;
        CHECK_THROWS_AS(fit_dependence(few, d, model_spec(7), w), ConfigError);

        ModelSpec pinned = model_spec(7);
        pinned.free = {};
        CHECK_THROWS_AS(fit_dependence(data, d, pinned, w), ConfigError);
    }
}

TEST_CASE("parametric bootstrap") {
    const StudyDesign d = grid_design(2, 2, 0.5);
    DependenceParams truth;
    truth.lambda0 = -0.1;
    SimulationOptions opt;
    opt.seed = 40;
    MaximaDataset data =
        simulate_copula(d, truth, Family::gaussian_copula, 60, opt).data;
    data.values(3, 1) = std::nan("");
    data.values(7, 0) = std::nan("");
    const PairWeights w = PairWeights::all_ones(d);
    FitOptions fopt;
    fopt.seed = 8;
    const FitResult fit = fit_dependence(data, d, model_spec(7), w, fopt);
    REQUIRE(fit.converged);

    BootstrapOptions bopt;
    bopt.B = 4;
    bopt.seed = 123;
    const BootstrapEnsemble e = parametric_bootstrap(fit, data, d, w, bopt);
    REQUIRE(e.fits.size() == 4);
    CHECK(e.n_converged >= 3);
    REQUIRE(e.intervals.size() == 1);
    CHECK(e.intervals[0].name == "lambda0");
    CHECK(e.intervals[0].lo <= e.intervals[0].hi);
    CHECK(std::isfinite(e.intervals[0].lo));

    // the simulate-refit pipeline keeps the missing mask
    for (const auto& f : e.fits) CHECK(f.converged);

    // identical seeds give identical ensembles
    const BootstrapEnsemble e2 = parametric_bootstrap(fit, data, d, w, bopt);
    CHECK(e2.intervals[0].lo == e.intervals[0].lo);
    CHECK(e2.intervals[0].hi == e.intervals[0].hi);
    for (int b = 0; b < 4; ++b)
        CHECK(e2.fits[b].params.lambda0 == e.fits[b].params.lambda0);

    BootstrapOptions bad = bopt;
    bad.B = 1;
    CHECK_THROWS_AS(parametric_bootstrap(fit, data, d, w, bad), ConfigError);
    FitResult broken = fit;
    broken.converged = false;
    CHECK_THROWS_AS(parametric_bootstrap(broken, data, d, w, bopt), ConfigError);

    // starving the refits flags the ensemble
    BootstrapOptions starved = bopt;
    starved.fit.nm.max_iter = 1;
    const BootstrapEnsemble se = parametric_bootstrap(fit, data, d, w, starved);
    CHECK(se.warning_nonconverged);
}

TEST_CASE("cross validated log score") {
    const StudyDesign d = grid_design(3, 1, 0.5);
    DependenceParams truth;
    truth.lambda0 = -0.2;
    SimulationOptions opt;
    opt.seed = 33;
    const MaximaDataset data =
        simulate_copula(d, truth, Family::gaussian_copula, 80, opt).data;
    const PairWeights w = PairWeights::all_ones(d);
    FitOptions fopt;
    fopt.seed = 4;

    const CvResult cv = cv_logscore(data, d, model_spec(7), w, fopt);
    REQUIRE(cv.stations.size() == 3);
    CHECK(cv.n_ok == 3);
    double total = 0.0;
    for (const auto& s : cv.stations) {
        CHECK(s.ok);
        total += s.score;
    }
    CHECK(cv.total == Approx(total).epsilon(1e-14));

    // a station's score is the pairwise objective of its star, under the
    // parameters refitted without it
    for (int j0 = 0; j0 < 3; ++j0) {
        const PairwiseContext star = make_pairwise_context(data, d, w, j0);
        const double manual = negative_log_pl(cv.refits[j0].params,
                                              Family::gaussian_copula, star);
        CHECK(cv.stations[j0].score == Approx(manual).epsilon(1e-13));
        CHECK(cv.stations[j0].n_terms == 160);
    }

    StudyDesign two;
    two.sites = {d.sites[0], d.sites[1]};
    CHECK_THROWS_AS(cv_logscore(data, two, model_spec(7), w, fopt), ConfigError);
}

TEST_CASE("json round trips") {
    SECTION("model spec and params") {
        const ModelSpec m = model_spec(6);
        const json j = m;
        const ModelSpec back = j.get<ModelSpec>();
        CHECK(back.id == 6);
        CHECK(back.family == Family::max_id);
        CHECK(back.free == m.free);
        CHECK(back.value.beta == m.value.beta);

        json broken = j;
        broken["free"].push_back("bogus");
        CHECK_THROWS_AS(broken.get<ModelSpec>(), ConfigError);
    }

    SECTION("fit result") {
        FitResult f;
        f.spec = model_spec(3);
        f.params = f.spec.value;
        f.params.alpha = 1.7;
        f.transformed = pack_free(f.spec, f.params);
        f.nll = 123.456;
        f.iterations = 321;
        f.converged = true;
        RestartTrace t;
        t.start = f.transformed;
        t.objective = 124.0;
        t.iterations = 300;
        t.converged = true;
        f.trace.push_back(t);

        const json j = f;
        CHECK(j.at("schema_version") == kSchemaVersion);
        const FitResult back = j.get<FitResult>();
        CHECK(back.params.alpha == 1.7);
        CHECK(back.nll == 123.456);
        CHECK(back.spec.id == 3);
        CHECK(back.trace.size() == 1);
        CHECK(back.trace[0].objective == 124.0);
    }

    SECTION("marginal fit") {
        MarginalFit f;
        f.mu_coef = Eigen::VectorXd::Constant(2, 1.5);
        f.sigma = 2.0;
        f.xi = 0.12;
        f.nll = 7.0;
        f.converged = true;
        const json j = marginal_fit_to_json(f, {"a"}, {KsResult{0.1, 0.8, 50}});
        const MarginalFit back = marginal_fit_from_json(j);
        CHECK(back.mu_coef[1] == 1.5);
        CHECK(back.sigma == 2.0);
        CHECK(back.xi == 0.12);
        CHECK(j.at("ks_by_station")[0].at("p_value") == 0.8);
    }

    SECTION("files") {
        namespace fs = std::filesystem;
        const auto dir = fs::temp_directory_path() / "maxid_json_test";
        fs::create_directories(dir);
        const std::string path = (dir / "fit.json").string();
        save_json(path, json{{"x", 1}});
        CHECK(load_json(path).at("x") == 1);
        CHECK_THROWS_AS(load_json((dir / "absent.json").string()), ConfigError);
        std::ofstream(path) << "{not json";
        CHECK_THROWS_AS(load_json(path), ConfigError);
    }
}

TEST_CASE("parallel for") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 8, [&](int i) { hits[i] = i * i; });
    for (int i = 0; i < 100; ++i) CHECK(hits[i] == i * i);

    CHECK_THROWS_AS(parallel_for(10, 4,
                                 [&](int i) {
                                     if (i == 7) throw NumericalError("boom");
                                 }),
                    NumericalError);
}
