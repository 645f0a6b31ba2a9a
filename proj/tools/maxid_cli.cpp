// Batch front end for the maxid library.
//
// Commands: simulate, fit-margins, transform, fit-dependence, bootstrap,
// cv, diagnostics. Every run is driven by a single JSON config (plus a few
// preset shortcuts); all randomness comes from explicit seeds, so reruns
// with the same config produce byte-identical files.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "maxid/bootstrap.hpp"
#include "maxid/cv.hpp"
#include "maxid/design.hpp"
#include "maxid/extremal.hpp"
#include "maxid/fit.hpp"
#include "maxid/margins.hpp"
#include "maxid/pairwise.hpp"
#include "maxid/serialize.hpp"
#include "maxid/simulate.hpp"

namespace fs = std::filesystem;
using maxid::json;

namespace {

// ---------------------------------------------------------------- plumbing

struct Run {
    json cfg;
    fs::path base;  // directory of the config file; relative paths resolve here
    fs::path out;   // output directory, already created
};

std::string resolve(const Run& run, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return p.string();
    return (run.base / p).string();
}

std::string need_file(const Run& run, const std::string& key) {
    if (!run.cfg.contains(key))
        throw maxid::ConfigError("config is missing required key '" + key + "'");
    const std::string raw = run.cfg.at(key).get<std::string>();
    const std::string full = resolve(run, raw);
    if (!fs::exists(full))
        throw maxid::ConfigError("config key '" + key + "': file not found: " + raw);
    return full;
}

template <class T>
T need(const json& cfg, const std::string& key) {
    if (!cfg.contains(key))
        throw maxid::ConfigError("config is missing required key '" + key + "'");
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw maxid::ConfigError("config key '" + key + "': " + e.what());
    }
}

std::uint64_t need_seed(const json& cfg) {
    if (!cfg.contains("seed"))
        throw maxid::ConfigError(
            "config is missing required key 'seed' (stochastic command)");
    return cfg.at("seed").get<std::uint64_t>();
}

Run open_run(const std::string& config_path) {
    Run run;
    run.cfg = maxid::load_json(config_path);
    if (!run.cfg.contains("schema_version"))
        throw maxid::ConfigError("config is missing 'schema_version'");
    if (run.cfg.at("schema_version").get<int>() != maxid::kSchemaVersion)
        throw maxid::ConfigError("unsupported schema_version (expected " +
                                 std::to_string(maxid::kSchemaVersion) + ")");
    run.base = fs::path(config_path).parent_path();
    const std::string out = run.cfg.value("output_dir", std::string("."));
    run.out = fs::path(resolve(run, out));
    fs::create_directories(run.out);
    return run;
}

// In-memory configs built by --preset flags; outputs land under `out`.
Run open_preset(const json& cfg, const std::string& out) {
    Run run;
    run.cfg = cfg;
    run.cfg["schema_version"] = maxid::kSchemaVersion;
    run.base = fs::current_path();
    run.out = fs::path(resolve(run, out));
    fs::create_directories(run.out);
    return run;
}

std::string wrote(const fs::path& p) {
    std::cout << "wrote " << p.string() << "\n";
    return p.string();
}

maxid::DependenceParams params_from(const json& cfg, const std::string& key,
                                    maxid::DependenceParams base = {}) {
    if (cfg.contains(key)) maxid::from_json(cfg.at(key), base);
    return base;
}

maxid::QuadratureSpec quad_from(const json& cfg) {
    maxid::QuadratureSpec q;
    q.rel_tol = 1e-6;  // likelihood-grade default; fits dominate CLI use
    q.abs_tol = 1e-12;
    if (cfg.contains("quad")) {
        const json& o = cfg.at("quad");
        q.rel_tol = o.value("rel_tol", q.rel_tol);
        q.abs_tol = o.value("abs_tol", q.abs_tol);
        q.max_subdivisions = o.value("max_subdivisions", q.max_subdivisions);
    }
    return q;
}

void nm_from(const json& cfg, maxid::NelderMeadOptions& nm) {
    if (!cfg.contains("nm")) return;
    const json& o = cfg.at("nm");
    nm.max_iter = o.value("max_iter", nm.max_iter);
    nm.f_tol = o.value("f_tol", nm.f_tol);
    nm.x_tol = o.value("x_tol", nm.x_tol);
    nm.init_step = o.value("init_step", nm.init_step);
}

maxid::FitOptions fit_options_from(const json& cfg) {
    maxid::FitOptions o;
    o.restarts = cfg.value("restarts", o.restarts);
    o.restart_jitter = cfg.value("restart_jitter", o.restart_jitter);
    o.seed = need_seed(cfg);
    o.threads = cfg.value("threads", 1);
    if (cfg.value("data_scale", false)) o.scale = maxid::ValueScale::data;
    o.quad = quad_from(cfg);
    nm_from(cfg, o.nm);
    return o;
}

maxid::ModelSpec model_from(const json& cfg, const json& entry) {
    maxid::ModelSpec spec;
    if (entry.is_string()) {
        const std::string name = entry.get<std::string>();
        if (name.rfind("model", 0) != 0)
            throw maxid::ConfigError("unknown model name '" + name +
                                     "' (expected model1..model10)");
        int id = 0;
        try {
            id = std::stoi(name.substr(5));
        } catch (const std::exception&) {
            throw maxid::ConfigError("unknown model name '" + name + "'");
        }
        spec = maxid::model_spec(id);
    } else if (entry.is_object()) {
        spec = entry.get<maxid::ModelSpec>();
    } else {
        throw maxid::ConfigError("'model' must be a name or a full model object");
    }

    if (cfg.contains("free")) {
        std::array<bool, maxid::DependenceParams::count> mask{};
        for (const auto& item : cfg.at("free")) {
            const std::string name = item.get<std::string>();
            int idx = -1;
            for (int i = 0; i < maxid::DependenceParams::count; ++i)
                if (maxid::DependenceParams::names()[i] == name) idx = i;
            if (idx < 0)
                throw maxid::ConfigError("unknown parameter '" + name + "' in 'free'");
            if (!spec.free[idx])
                throw maxid::ConfigError("parameter '" + name +
                                         "' is not free in the requested model");
            mask[idx] = true;
        }
        spec.free = mask;
    }
    if (cfg.contains("init")) {
        const json& o = cfg.at("init");
        for (auto it = o.begin(); it != o.end(); ++it) {
            int idx = -1;
            for (int i = 0; i < maxid::DependenceParams::count; ++i)
                if (maxid::DependenceParams::names()[i] == it.key()) idx = i;
            if (idx < 0)
                throw maxid::ConfigError("unknown parameter '" + it.key() +
                                         "' in 'init'");
            if (!spec.free[idx])
                throw maxid::ConfigError("cannot set pinned parameter '" + it.key() +
                                         "' through 'init'");
            spec.value.set(idx, it.value().get<double>());
        }
    }
    return spec;
}

maxid::PairWeights weights_from(const json& cfg, const maxid::StudyDesign& design) {
    if (!cfg.contains("weights")) return maxid::PairWeights::all_ones(design);
    const json& o = cfg.at("weights");
    const std::string rule = need<std::string>(o, "rule");
    if (rule == "all_ones") return maxid::PairWeights::all_ones(design);
    if (rule == "distance_cutoff")
        return maxid::PairWeights::distance_cutoff(design, need<double>(o, "delta"));
    throw maxid::ConfigError("unknown weights rule '" + rule + "'");
}

maxid::Family family_from(const json& cfg) {
    return maxid::family_from_name(cfg.value("family", std::string("max_id")));
}

void apply_times(const json& cfg, maxid::MaximaDataset& data) {
    if (!cfg.contains("times")) return;
    const auto t = cfg.at("times").get<std::vector<double>>();
    if (static_cast<int>(t.size()) != data.n_rep())
        throw maxid::ConfigError("'times' has " + std::to_string(t.size()) +
                                 " entries for " + std::to_string(data.n_rep()) +
                                 " replicates");
    data.times = t;
}

maxid::BasisTable basis_from(const Run& run, const std::string& key,
                             const maxid::MaximaDataset& data) {
    if (!run.cfg.contains(key))
        return maxid::BasisTable::intercept(data.n_rep(), data.n_sites());
    return maxid::BasisTable::from_csv(need_file(run, key), data);
}

std::vector<double> z_grid_from(const json& o) {
    if (o.is_array()) return o.get<std::vector<double>>();
    const double lo = need<double>(o, "lo");
    const double hi = need<double>(o, "hi");
    const int n = need<int>(o, "n");
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw maxid::ConfigError("z grid needs 0 < lo < hi and n >= 2");
    const bool log_spaced = o.value("log", true);
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / (n - 1);
        z[i] = log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                          : lo + f * (hi - lo);
    }
    return z;
}

// a two-site probe used by the curve and range diagnostics: one site at the
// origin, one at distance h along the first axis, both at a common altitude
maxid::StudyDesign probe_pair(double h, double alt) {
    maxid::StudyDesign d;
    d.metric = maxid::DistanceMetric::euclidean;
    maxid::Site a;
    a.name = "origin";
    a.alt = alt;
    maxid::Site b;
    b.name = "probe";
    b.lon = h;
    b.alt = alt;
    d.sites = {a, b};
    return d;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Run& run) {
    const json& cfg = run.cfg;
    const int reps = need<int>(cfg, "reps");
    if (reps <= 0) throw maxid::ConfigError("'reps' must be positive");

    maxid::StudyDesign design;
    bool preset_design = false;
    if (cfg.contains("design_preset")) {
        const json& o = cfg.at("design_preset");
        const std::string name = need<std::string>(o, "name");
        if (name != "mountain-range")
            throw maxid::ConfigError("unknown design preset '" + name + "'");
        design = maxid::mountain_range_design(o.value("n_side", 7),
                                              o.value("jitter", 0.015),
                                              o.value("seed", std::uint64_t{99}));
        preset_design = true;
    } else {
        design = maxid::read_design(need_file(run, "design"));
    }

    const maxid::Family family = family_from(cfg);
    const maxid::DependenceParams p = params_from(cfg, "params");
    maxid::validate(p, family);

    maxid::SimulationOptions opt;
    opt.seed = need_seed(cfg);
    opt.epsilon = cfg.value("epsilon", opt.epsilon);
    opt.max_points = cfg.value("max_points", opt.max_points);
    opt.uniform_scale = cfg.value("uniform_scale", false);

    std::optional<std::vector<double>> times;
    if (cfg.contains("times")) {
        times = cfg.at("times").get<std::vector<double>>();
        if (static_cast<int>(times->size()) != reps)
            throw maxid::ConfigError("'times' length must equal 'reps'");
    }

    const maxid::SimulationResult res = maxid::simulate_model(
        design, p, family, reps, opt, times ? &*times : nullptr, quad_from(cfg));

    const std::string prefix = cfg.value("prefix", std::string("sim"));
    if (preset_design) {
        maxid::write_design((run.out / (prefix + "_design.csv")).string(), design);
        wrote(run.out / (prefix + "_design.csv"));
    }
    maxid::write_data((run.out / (prefix + "_data.csv")).string(), res.data);
    wrote(run.out / (prefix + "_data.csv"));

    int pts_min = 0, pts_max = 0;
    long pts_total = 0;
    bool all_bound = true;
    if (!res.points_used.empty()) {
        pts_min = *std::min_element(res.points_used.begin(), res.points_used.end());
        pts_max = *std::max_element(res.points_used.begin(), res.points_used.end());
        for (int n : res.points_used) pts_total += n;
        for (bool b : res.bound_met) all_bound = all_bound && b;
    }
    json meta{{"schema_version", maxid::kSchemaVersion},
              {"command", "simulate"},
              {"seed", opt.seed},
              {"epsilon", opt.epsilon},
              {"max_points", opt.max_points},
              {"family", maxid::family_name(family)},
              {"params", p},
              {"reps", reps},
              {"n_sites", design.n_sites()},
              {"scale", res.data.scale},
              {"config", cfg}};
    if (family == maxid::Family::max_id)
        meta["points"] = json{{"min", pts_min},
                              {"max", pts_max},
                              {"total", pts_total},
                              {"bound_met", all_bound}};
    maxid::save_json((run.out / (prefix + "_meta.json")).string(), meta);
    wrote(run.out / (prefix + "_meta.json"));
    return 0;
}

json sim_study_config(double beta, double lambda1, int reps, std::uint64_t seed) {
    json params{{"alpha", 1.0}, {"beta", beta},      {"lambda0", -0.5},
                {"lambda1", lambda1}, {"nu", 0.25}};
    return json{{"command", "simulate"},
                {"design_preset", json{{"name", "mountain-range"}}},
                {"family", "max_id"},
                {"params", params},
                {"reps", reps},
                {"seed", seed},
                {"uniform_scale", true},
                {"prefix", "sim"}};
}

// ------------------------------------------------------------- fit-margins

int cmd_fit_margins(const Run& run) {
    const json& cfg = run.cfg;
    const maxid::StudyDesign design = maxid::read_design(need_file(run, "design"));
    maxid::MaximaDataset data =
        maxid::align_to_design(maxid::read_data(need_file(run, "data")), design);
    apply_times(cfg, data);
    const maxid::BasisTable basis = basis_from(run, "basis", data);

    maxid::MarginFitOptions opt;
    opt.restarts = cfg.value("restarts", opt.restarts);
    opt.seed = need_seed(cfg);
    opt.xi_bound = cfg.value("xi_bound", opt.xi_bound);
    opt.ridge = cfg.value("ridge", opt.ridge);
    nm_from(cfg, opt.nm);

    const maxid::MarginalFit fit = maxid::fit_gev_independence(data, basis, opt);
    const maxid::MaximaDataset uniform = maxid::pit_uniform(data, fit, basis);
    const std::vector<maxid::KsResult> ks = maxid::pit_ks_by_station(uniform);

    const std::string prefix = cfg.value("prefix", std::string("margins"));
    maxid::save_json((run.out / (prefix + ".json")).string(),
                     maxid::marginal_fit_to_json(fit, data.stations, ks));
    wrote(run.out / (prefix + ".json"));

    maxid::csv::Table kst;
    kst.header = {"station", "n", "statistic", "p_value"};
    for (std::size_t j = 0; j < ks.size(); ++j)
        kst.rows.push_back({data.stations[j], std::to_string(ks[j].n),
                            maxid::csv::num(ks[j].statistic),
                            maxid::csv::num(ks[j].p_value)});
    maxid::csv::write((run.out / (prefix + "_ks.csv")).string(), kst);
    wrote(run.out / (prefix + "_ks.csv"));

    const auto qq = maxid::qq_gumbel(data, fit, basis);
    maxid::csv::Table qqt;
    qqt.header = {"empirical", "theoretical"};
    for (const auto& [theo, emp] : qq)
        qqt.rows.push_back({maxid::csv::num(emp), maxid::csv::num(theo)});
    maxid::csv::write((run.out / (prefix + "_qq.csv")).string(), qqt);
    wrote(run.out / (prefix + "_qq.csv"));

    if (cfg.value("write_uniform", true)) {
        maxid::write_data((run.out / (prefix + "_uniform.csv")).string(), uniform);
        wrote(run.out / (prefix + "_uniform.csv"));
    }
    return 0;
}

// --------------------------------------------------------------- transform

int cmd_transform(const Run& run) {
    const json& cfg = run.cfg;
    maxid::MaximaDataset data = maxid::read_data(need_file(run, "data"));
    if (cfg.contains("design"))
        data = maxid::align_to_design(
            data, maxid::read_design(need_file(run, "design")));
    apply_times(cfg, data);
    const maxid::MarginalFit fit =
        maxid::marginal_fit_from_json(maxid::load_json(need_file(run, "margins")));
    const maxid::BasisTable basis = basis_from(run, "basis", data);

    const std::string direction = need<std::string>(cfg, "direction");
    const std::string prefix = cfg.value("prefix", std::string("transform"));
    maxid::MaximaDataset out;
    std::string suffix;
    if (direction == "to_uniform") {
        out = maxid::pit_uniform(data, fit, basis);
        suffix = "_uniform.csv";
    } else if (direction == "from_uniform") {
        out = maxid::pit_inverse(data, fit, basis);
        suffix = "_data.csv";
    } else {
        throw maxid::ConfigError(
            "'direction' must be 'to_uniform' or 'from_uniform'");
    }
    maxid::write_data((run.out / (prefix + suffix)).string(), out);
    wrote(run.out / (prefix + suffix));
    return 0;
}

// ---------------------------------------------------------- fit-dependence

int cmd_fit_dependence(const Run& run) {
    const json& cfg = run.cfg;
    const maxid::StudyDesign design = maxid::read_design(need_file(run, "design"));
    maxid::MaximaDataset data =
        maxid::align_to_design(maxid::read_data(need_file(run, "data")), design);
    apply_times(cfg, data);

    const maxid::ModelSpec spec = model_from(cfg, need<json>(cfg, "model"));
    const maxid::PairWeights weights = weights_from(cfg, design);
    const maxid::FitOptions opt = fit_options_from(cfg);

    const maxid::FitResult fit =
        maxid::fit_dependence(data, design, spec, weights, opt);

    const std::string prefix = cfg.value("prefix", std::string("fit"));
    maxid::save_json((run.out / (prefix + ".json")).string(), json(fit));
    wrote(run.out / (prefix + ".json"));

    std::cout << "model " << (spec.id > 0 ? std::to_string(spec.id) : "custom")
              << ": negative log PL " << maxid::csv::num(fit.nll)
              << (fit.converged ? "" : " (not converged)") << "\n";
    return 0;
}

// ----------------------------------------------------------------bootstrap

int cmd_bootstrap(const Run& run) {
    const json& cfg = run.cfg;
    const maxid::StudyDesign design = maxid::read_design(need_file(run, "design"));
    maxid::MaximaDataset data =
        maxid::align_to_design(maxid::read_data(need_file(run, "data")), design);
    apply_times(cfg, data);
    const maxid::FitResult fit =
        maxid::load_json(need_file(run, "fit")).get<maxid::FitResult>();
    const maxid::PairWeights weights = weights_from(cfg, design);

    maxid::BootstrapOptions opt;
    opt.B = need<int>(cfg, "B");
    opt.seed = need_seed(cfg);
    opt.threads = cfg.value("threads", 1);
    if (cfg.value("data_scale", false)) opt.fit.scale = maxid::ValueScale::data;
    opt.sim.epsilon = cfg.value("epsilon", opt.sim.epsilon);
    opt.sim.max_points = cfg.value("max_points", opt.sim.max_points);
    if (cfg.contains("refit")) {
        const json& o = cfg.at("refit");
        opt.fit.restarts = o.value("restarts", opt.fit.restarts);
        nm_from(o, opt.fit.nm);
    }
    opt.fit.quad = quad_from(cfg);

    const maxid::BootstrapEnsemble e =
        maxid::parametric_bootstrap(fit, data, design, weights, opt);

    const std::string prefix = cfg.value("prefix", std::string("bootstrap"));
    maxid::save_json((run.out / (prefix + ".json")).string(), json(e));
    wrote(run.out / (prefix + ".json"));

    maxid::csv::Table t;
    t.header = {"parameter", "estimate", "lo", "hi"};
    for (const auto& iv : e.intervals)
        t.rows.push_back({iv.name, maxid::csv::num(iv.estimate),
                          maxid::csv::num(iv.lo), maxid::csv::num(iv.hi)});
    maxid::csv::write((run.out / (prefix + "_intervals.csv")).string(), t);
    wrote(run.out / (prefix + "_intervals.csv"));

    if (e.warning_nonconverged)
        std::cerr << "warning: only " << e.n_converged << " of " << opt.B
                  << " bootstrap refits converged\n";
    return 0;
}

// ----------------------------------------------------------------------- cv

int cmd_cv(const Run& run) {
    const json& cfg = run.cfg;
    const maxid::StudyDesign design = maxid::read_design(need_file(run, "design"));
    maxid::MaximaDataset data =
        maxid::align_to_design(maxid::read_data(need_file(run, "data")), design);
    apply_times(cfg, data);
    const maxid::PairWeights weights = weights_from(cfg, design);
    const maxid::FitOptions opt = fit_options_from(cfg);
    const int station_threads = cfg.value("threads", 1);

    std::vector<json> entries;
    if (cfg.contains("models"))
        for (const auto& e : cfg.at("models")) entries.push_back(e);
    else if (cfg.contains("model"))
        entries.push_back(cfg.at("model"));
    if (entries.empty())
        throw maxid::ConfigError("cv needs a 'model' or a 'models' list");

    json results = json::array();
    maxid::csv::Table scores;
    scores.header = {"model", "station", "score", "n_terms", "ok", "note"};
    maxid::csv::Table summary;
    summary.header = {"model", "total", "n_ok", "rank"};
    std::vector<std::pair<double, std::size_t>> order;

    std::vector<std::string> labels;
    std::vector<maxid::CvResult> cvs;
    for (std::size_t m = 0; m < entries.size(); ++m) {
        const maxid::ModelSpec spec = model_from(cfg, entries[m]);
        const std::string label = entries[m].is_string()
                                      ? entries[m].get<std::string>()
                                      : "custom" + std::to_string(m + 1);
        maxid::FitOptions fopt = opt;
        const maxid::FitResult full =
            maxid::fit_dependence(data, design, spec, weights, fopt);
        const maxid::CvResult cv = maxid::cv_logscore(
            data, design, spec, weights, fopt, &full, station_threads);
        labels.push_back(label);
        cvs.push_back(cv);
        order.emplace_back(cv.total, m);

        json jcv = cv;
        jcv["model_label"] = label;
        jcv["full_fit"] = full;
        results.push_back(std::move(jcv));
        for (const auto& s : cv.stations)
            scores.rows.push_back({label, s.station, maxid::csv::num(s.score),
                                   std::to_string(s.n_terms), s.ok ? "1" : "0",
                                   s.note});
    }

    std::stable_sort(order.begin(), order.end());
    std::vector<int> rank(entries.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r].second] = r + 1;
    for (std::size_t m = 0; m < entries.size(); ++m)
        summary.rows.push_back({labels[m], maxid::csv::num(cvs[m].total),
                                std::to_string(cvs[m].n_ok),
                                std::to_string(rank[m])});

    const std::string prefix = cfg.value("prefix", std::string("cv"));
    maxid::save_json((run.out / (prefix + ".json")).string(),
                     json{{"schema_version", maxid::kSchemaVersion},
                          {"results", results}});
    wrote(run.out / (prefix + ".json"));
    maxid::csv::write((run.out / (prefix + "_scores.csv")).string(), scores);
    wrote(run.out / (prefix + "_scores.csv"));
    maxid::csv::write((run.out / (prefix + "_summary.csv")).string(), summary);
    wrote(run.out / (prefix + "_summary.csv"));
    return 0;
}

// -------------------------------------------------------------- diagnostics

void diag_theta2_curves(const Run& run, const json& o) {
    const maxid::DependenceParams base = params_from(o, "params");
    const double alt = o.value("alt", 0.0);
    const double time = o.value("time", 0.0);
    std::vector<double> betas{base.beta};
    std::vector<double> nus{base.nu};
    if (o.contains("beta")) betas = o.at("beta").get<std::vector<double>>();
    if (o.contains("nu")) nus = o.at("nu").get<std::vector<double>>();
    const auto distances = need<std::vector<double>>(o, "distances");
    const auto z = z_grid_from(need<json>(o, "z"));
    const maxid::QuadratureSpec quad = quad_from(o);

    maxid::csv::Table t;
    t.header = {"beta", "nu", "distance", "z", "theta2"};
    for (double beta : betas) {
        const maxid::MarginalTable table(base.alpha, beta, quad);
        for (double nu : nus) {
            maxid::DependenceParams p = base;
            p.beta = beta;
            p.nu = nu;
            for (double h : distances) {
                const maxid::StudyDesign probe = probe_pair(h, alt);
                const maxid::PairCorrelation corr =
                    maxid::pair_correlation_terms(p, probe, 0, 1, time);
                for (double zi : z)
                    t.rows.push_back({maxid::csv::num(beta), maxid::csv::num(nu),
                                      maxid::csv::num(h), maxid::csv::num(zi),
                                      maxid::csv::num(maxid::theta2(
                                          zi, p.alpha, beta, corr, table, quad))});
            }
        }
    }
    maxid::csv::write((run.out / "theta2_curves.csv").string(), t);
    wrote(run.out / "theta2_curves.csv");
}

void diag_theta_scatter(const Run& run, const json& o) {
    const maxid::StudyDesign design =
        maxid::read_design(resolve(run, need<std::string>(o, "design")));
    maxid::MaximaDataset data = maxid::align_to_design(
        maxid::read_data(resolve(run, need<std::string>(o, "data"))), design);
    maxid::DependenceParams p;
    if (o.contains("fit"))
        p = maxid::load_json(resolve(run, need<std::string>(o, "fit")))
                .get<maxid::FitResult>()
                .params;
    else
        p = params_from(o, "params");
    maxid::validate(p, maxid::Family::max_id);
    const double time = o.value("time", 0.0);
    const auto zs = need<std::vector<double>>(o, "z");
    const int min_reps = o.value("min_replicates", 20);
    const maxid::QuadratureSpec quad = quad_from(o);
    const maxid::MarginalTable table(p.alpha, p.beta, quad);

    maxid::csv::Table t;
    t.header = {"z",     "station_i", "station_j", "distance",
                "model", "empirical", "std_error"};
    Eigen::MatrixXd pair_u(data.n_rep(), 2);
    for (double z : zs)
        for (int i = 0; i < design.n_sites(); ++i)
            for (int j = i + 1; j < design.n_sites(); ++j) {
                const maxid::PairCorrelation corr =
                    maxid::pair_correlation_terms(p, design, i, j, time);
                const double model =
                    maxid::theta2(z, p.alpha, p.beta, corr, table, quad);
                pair_u.col(0) = data.values.col(i);
                pair_u.col(1) = data.values.col(j);
                const maxid::EmpiricalTheta emp =
                    maxid::empirical_thetaD(pair_u, z, min_reps);
                t.rows.push_back({maxid::csv::num(z), design.sites[i].name,
                                  design.sites[j].name,
                                  maxid::csv::num(design.distance(i, j)),
                                  maxid::csv::num(model),
                                  maxid::csv::num(emp.theta),
                                  maxid::csv::num(emp.std_error)});
            }
    maxid::csv::write((run.out / "theta_scatter.csv").string(), t);
    wrote(run.out / "theta_scatter.csv");
}

void diag_effective_range(const Run& run, const json& o) {
    maxid::DependenceParams p;
    if (o.contains("fit"))
        p = maxid::load_json(resolve(run, need<std::string>(o, "fit")))
                .get<maxid::FitResult>()
                .params;
    else
        p = params_from(o, "params");
    const double z = need<double>(o, "z");
    const double target = o.value("target", 1.95);
    const auto alts = need<std::vector<double>>(o, "alts");
    const auto times = need<std::vector<double>>(o, "times");
    const maxid::QuadratureSpec quad = quad_from(o);
    const maxid::MarginalTable table(p.alpha, p.beta, quad);

    maxid::csv::Table t;
    t.header = {"alt", "time", "range"};
    for (double alt : alts)
        for (double time : times) {
            std::string cell;
            try {
                cell = maxid::csv::num(maxid::effective_range(
                    p, alt, time, z, table, target, quad));
            } catch (const maxid::ConfigError&) {
                cell = "";  // contour not attainable at this altitude and time
            }
            t.rows.push_back({maxid::csv::num(alt), maxid::csv::num(time), cell});
        }
    maxid::csv::write((run.out / "effective_range.csv").string(), t);
    wrote(run.out / "effective_range.csv");
}

void diag_return_periods(const Run& run, const json& o) {
    const maxid::StudyDesign design =
        maxid::read_design(resolve(run, need<std::string>(o, "design")));
    const maxid::MaximaDataset event = maxid::align_to_design(
        maxid::read_data(resolve(run, need<std::string>(o, "event"))), design);
    if (event.n_rep() != 1)
        throw maxid::ConfigError("'event' must contain exactly one replicate row");

    // keep only the stations where the event was observed
    maxid::StudyDesign sub;
    sub.metric = design.metric;
    std::vector<int> keep;
    for (int j = 0; j < design.n_sites(); ++j)
        if (!event.is_missing(0, j)) {
            keep.push_back(j);
            sub.sites.push_back(design.sites[j]);
        }
    if (sub.n_sites() < 2)
        throw maxid::ConfigError("'event' must cover at least two stations");

    const maxid::FitResult fit =
        maxid::load_json(resolve(run, need<std::string>(o, "fit")))
            .get<maxid::FitResult>();
    const maxid::MarginalFit margins = maxid::marginal_fit_from_json(
        maxid::load_json(resolve(run, need<std::string>(o, "margins"))));

    struct Reference {
        std::string name;
        double time = 0.0;
    };
    std::vector<Reference> refs;
    for (const auto& r : need<json>(o, "references"))
        refs.push_back({need<std::string>(r, "name"), need<double>(r, "time")});
    if (refs.empty()) throw maxid::ConfigError("'references' is empty");

    const int n_sim = o.value("n_sim", 100000);
    if (n_sim < 100) throw maxid::ConfigError("'n_sim' must be at least 100");
    const std::uint64_t seed = need_seed(o);

    // GEV parameters per (reference, station) come from a basis table keyed
    // by the reference names
    maxid::MaximaDataset key;
    key.stations = event.stations;
    for (const auto& r : refs) key.replicate_ids.push_back(r.name);
    key.values = Eigen::MatrixXd::Zero(refs.size(), event.n_sites());
    for (int j = 0; j < event.n_sites(); ++j)
        if (event.is_missing(0, j)) key.values.col(j).setConstant(std::nan(""));
    key.default_times();
    maxid::BasisTable basis =
        o.contains("basis")
            ? maxid::BasisTable::from_csv(resolve(run, need<std::string>(o, "basis")),
                                          key)
            : maxid::BasisTable::intercept(key.n_rep(), key.n_sites());

    maxid::SimulationOptions sopt;
    sopt.epsilon = o.value("epsilon", 1e-4);
    sopt.uniform_scale = true;

    const std::vector<std::string> stats{"max", "min", "mean"};
    maxid::csv::Table t;
    t.header = {"reference", "time",        "statistic",   "observed",
                "exceedances", "n_sim",     "probability", "return_period"};

    for (std::size_t ri = 0; ri < refs.size(); ++ri) {
        sopt.seed = maxid::Rng::substream(seed, ri).raw();
        const std::vector<double> times(n_sim, refs[ri].time);
        const maxid::MaximaDataset sim =
            maxid::simulate_model(sub, fit.params, fit.spec.family, n_sim, sopt,
                                  &times, quad_from(o))
                .data;

        // map each station's uniform draws through its reference-year GEV
        std::vector<maxid::GevParams> gev(sub.n_sites());
        for (int c = 0; c < sub.n_sites(); ++c)
            gev[c] = margins.at(basis, static_cast<int>(ri), keep[c]);

        Eigen::VectorXd obs(sub.n_sites());
        for (int c = 0; c < sub.n_sites(); ++c) obs[c] = event.values(0, keep[c]);
        const double obs_stat[3] = {obs.maxCoeff(), obs.minCoeff(), obs.mean()};

        long count[3] = {0, 0, 0};
        Eigen::VectorXd field(sub.n_sites());
        for (int k = 0; k < n_sim; ++k) {
            for (int c = 0; c < sub.n_sites(); ++c)
                field[c] = maxid::gev_quantile(sim.values(k, c), gev[c]);
            const double s[3] = {field.maxCoeff(), field.minCoeff(), field.mean()};
            for (int q = 0; q < 3; ++q)
                if (s[q] >= obs_stat[q]) ++count[q];
        }
        for (int q = 0; q < 3; ++q) {
            const double prob = static_cast<double>(count[q]) / n_sim;
            const double rp = count[q] > 0
                                  ? static_cast<double>(n_sim) / count[q]
                                  : std::numeric_limits<double>::infinity();
            t.rows.push_back({refs[ri].name, maxid::csv::num(refs[ri].time),
                              stats[q], maxid::csv::num(obs_stat[q]),
                              std::to_string(count[q]), std::to_string(n_sim),
                              maxid::csv::num(prob), maxid::csv::num(rp)});
        }
    }
    maxid::csv::write((run.out / "return_periods.csv").string(), t);
    wrote(run.out / "return_periods.csv");
}

int cmd_diagnostics(const Run& run) {
    const json& cfg = run.cfg;
    bool did = false;
    if (cfg.contains("theta2_curves")) {
        diag_theta2_curves(run, cfg.at("theta2_curves"));
        did = true;
    }
    if (cfg.contains("theta_scatter")) {
        diag_theta_scatter(run, cfg.at("theta_scatter"));
        did = true;
    }
    if (cfg.contains("effective_range")) {
        diag_effective_range(run, cfg.at("effective_range"));
        did = true;
    }
    if (cfg.contains("return_periods")) {
        diag_return_periods(run, cfg.at("return_periods"));
        did = true;
    }
    if (!did)
        throw maxid::ConfigError(
            "diagnostics config needs at least one of: theta2_curves, "
            "theta_scatter, effective_range, return_periods");
    return 0;
}

json figure1_config() {
    json curves{{"params", json{{"alpha", 1.0}, {"lambda0", std::log(0.5)}}},
                {"beta", json::array({0.0, 0.5, 1.0, 2.0})},
                {"nu", json::array({0.0, 0.25, 0.5, 1.0})},
                {"distances", json::array({0.5})},
                {"z", json{{"lo", 0.7}, {"hi", 100.0}, {"n", 25}, {"log", true}}}};
    return json{{"command", "diagnostics"}, {"theta2_curves", curves}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"max-infinitely-divisible spatial extremes toolkit"};
    app.require_subcommand(1);

    std::string config;
    std::string preset;
    std::string out_dir;
    double beta = 0.5, lambda1 = -0.25;
    int reps = 50;
    std::uint64_t seed = 1;

    auto add_config = [&config](CLI::App* sub) {
        sub->add_option("--config", config, "path to a run config JSON");
    };

    CLI::App* sim = app.add_subcommand("simulate", "draw replicates of a model");
    add_config(sim);
    sim->add_option("--preset", preset, "named study preset (sim-study)");
    sim->add_option("--beta", beta, "preset: tail decay parameter");
    sim->add_option("--lambda1", lambda1, "preset: altitude effect on range");
    sim->add_option("--reps", reps, "preset: number of replicates");
    sim->add_option("--seed", seed, "preset: simulation seed");
    sim->add_option("--out", out_dir, "preset: output directory");

    CLI::App* margins = app.add_subcommand("fit-margins", "GEV margins by station");
    add_config(margins);
    CLI::App* transform = app.add_subcommand(
        "transform", "move data between its own scale and the uniform scale");
    add_config(transform);
    CLI::App* fitdep =
        app.add_subcommand("fit-dependence", "pairwise likelihood model fit");
    add_config(fitdep);
    CLI::App* boot =
        app.add_subcommand("bootstrap", "parametric bootstrap intervals");
    add_config(boot);
    CLI::App* cv = app.add_subcommand("cv", "leave-one-station-out comparison");
    add_config(cv);
    CLI::App* diag =
        app.add_subcommand("diagnostics", "dependence summaries and tables");
    add_config(diag);
    diag->add_option("--preset", preset, "named table preset (figure-1)");
    diag->add_option("--out", out_dir, "preset: output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Run run;
        if (app.got_subcommand(sim)) {
            if (!preset.empty()) {
                if (preset != "sim-study")
                    throw maxid::ConfigError("unknown preset '" + preset + "'");
                if (!config.empty())
                    throw maxid::ConfigError("--preset and --config are exclusive");
                if (reps <= 0) throw maxid::ConfigError("'reps' must be positive");
                run = open_preset(sim_study_config(beta, lambda1, reps, seed),
                                  out_dir.empty() ? "sim-study" : out_dir);
            } else if (!config.empty()) {
                run = open_run(config);
            } else {
                throw maxid::ConfigError("simulate needs --config or --preset");
            }
            return cmd_simulate(run);
        }
        if (app.got_subcommand(diag)) {
            if (!preset.empty()) {
                if (preset != "figure-1")
                    throw maxid::ConfigError("unknown preset '" + preset + "'");
                if (!config.empty())
                    throw maxid::ConfigError("--preset and --config are exclusive");
                run = open_preset(figure1_config(),
                                  out_dir.empty() ? "figure-1" : out_dir);
            } else if (!config.empty()) {
                run = open_run(config);
            } else {
                throw maxid::ConfigError("diagnostics needs --config or --preset");
            }
            return cmd_diagnostics(run);
        }

        if (config.empty())
            throw maxid::ConfigError("missing --config");
        run = open_run(config);
        if (app.got_subcommand(margins)) return cmd_fit_margins(run);
        if (app.got_subcommand(transform)) return cmd_transform(run);
        if (app.got_subcommand(fitdep)) return cmd_fit_dependence(run);
        if (app.got_subcommand(boot)) return cmd_bootstrap(run);
        if (app.got_subcommand(cv)) return cmd_cv(run);
        throw maxid::ConfigError("no command given");
    } catch (const maxid::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const maxid::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
