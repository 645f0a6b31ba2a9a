#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxid/bootstrap.hpp"
#include "maxid/cv.hpp"
#include "maxid/errors.hpp"
#include "maxid/fit.hpp"
#include "maxid/margins.hpp"

namespace maxid {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

inline json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Eigen::VectorXd json_to_vector(const json& a) {
    Eigen::VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

inline void to_json(json& j, const DependenceParams& p) {
    j = json::object();
    for (int i = 0; i < DependenceParams::count; ++i)
        j[DependenceParams::names()[i]] = p.get(i);
}

inline void from_json(const json& j, DependenceParams& p) {
    for (int i = 0; i < DependenceParams::count; ++i) {
        const auto& name = DependenceParams::names()[i];
        if (j.contains(name)) p.set(i, j.at(name).get<double>());
    }
}

inline void to_json(json& j, const ModelSpec& m) {
    json free = json::array();
    for (int i = 0; i < DependenceParams::count; ++i)
        if (m.free[i]) free.push_back(DependenceParams::names()[i]);
    j = json{{"id", m.id},
             {"family", family_name(m.family)},
             {"free", free},
             {"value", m.value}};
}

inline void from_json(const json& j, ModelSpec& m) {
    m.id = j.value("id", 0);
    m.family = family_from_name(j.at("family").get<std::string>());
    m.free = {};
    for (const auto& name : j.at("free")) {
        bool found = false;
        for (int i = 0; i < DependenceParams::count; ++i)
            if (DependenceParams::names()[i] == name.get<std::string>()) {
                m.free[i] = true;
                found = true;
            }
        if (!found)
            throw ConfigError("unknown free parameter '" +
                              name.get<std::string>() + "'");
    }
    m.value = j.at("value").get<DependenceParams>();
}

inline void to_json(json& j, const RestartTrace& t) {
    j = json{{"start", vector_to_json(t.start)},
             {"objective", t.objective},
             {"iterations", t.iterations},
             {"converged", t.converged}};
}

inline void from_json(const json& j, RestartTrace& t) {
    t.start = json_to_vector(j.at("start"));
    t.objective = j.at("objective").get<double>();
    t.iterations = j.at("iterations").get<int>();
    t.converged = j.at("converged").get<bool>();
}

inline void to_json(json& j, const FitResult& f) {
    j = json{{"schema_version", kSchemaVersion},
             {"model", f.spec},
             {"params", f.params},
             {"transformed", vector_to_json(f.transformed)},
             {"negative_log_pl", f.nll},
             {"iterations", f.iterations},
             {"converged", f.converged},
             {"trace", f.trace}};
}

inline void from_json(const json& j, FitResult& f) {
    f.spec = j.at("model").get<ModelSpec>();
    f.params = j.at("params").get<DependenceParams>();
    f.transformed = json_to_vector(j.at("transformed"));
    f.nll = j.at("negative_log_pl").get<double>();
    f.iterations = j.at("iterations").get<int>();
    f.converged = j.at("converged").get<bool>();
    f.trace = j.value("trace", std::vector<RestartTrace>{});
}

inline void to_json(json& j, const ParameterInterval& iv) {
    j = json{{"name", iv.name},
             {"estimate", iv.estimate},
             {"lo", iv.lo},
             {"hi", iv.hi}};
}

inline void from_json(const json& j, ParameterInterval& iv) {
    iv.name = j.at("name").get<std::string>();
    iv.estimate = j.at("estimate").get<double>();
    iv.lo = j.at("lo").get<double>();
    iv.hi = j.at("hi").get<double>();
}

inline void to_json(json& j, const BootstrapEnsemble& e) {
    json fits = json::array();
    for (const auto& f : e.fits)
        fits.push_back(json{{"params", f.params},
                            {"negative_log_pl", f.nll},
                            {"converged", f.converged}});
    j = json{{"schema_version", kSchemaVersion},
             {"seed", e.seed},
             {"replicates", e.fits.size()},
             {"n_converged", e.n_converged},
             {"warning_nonconverged", e.warning_nonconverged},
             {"intervals", e.intervals},
             {"fits", fits}};
}

inline void to_json(json& j, const StationScore& s) {
    j = json{{"station", s.station},
             {"score", s.score},
             {"n_terms", s.n_terms},
             {"ok", s.ok},
             {"note", s.note}};
}

inline void to_json(json& j, const CvResult& r) {
    j = json{{"schema_version", kSchemaVersion},
             {"model", r.spec},
             {"total", r.total},
             {"n_ok", r.n_ok},
             {"stations", r.stations}};
}

inline void to_json(json& j, const KsResult& k) {
    j = json{{"statistic", k.statistic}, {"p_value", k.p_value}, {"n", k.n}};
}

inline json marginal_fit_to_json(const MarginalFit& f,
                                 const std::vector<std::string>& stations,
                                 const std::vector<KsResult>& ks) {
    json per_station = json::array();
    for (size_t j = 0; j < ks.size(); ++j)
        per_station.push_back(json{{"station", stations[j]},
                                   {"statistic", ks[j].statistic},
                                   {"p_value", ks[j].p_value},
                                   {"n", ks[j].n}});
    return json{{"schema_version", kSchemaVersion},
                {"mu_coef", vector_to_json(f.mu_coef)},
                {"sigma", f.sigma},
                {"xi", f.xi},
                {"negative_log_lik", f.nll},
                {"iterations", f.iterations},
                {"converged", f.converged},
                {"ks_by_station", per_station}};
}

inline MarginalFit marginal_fit_from_json(const json& j) {
    MarginalFit f;
    f.mu_coef = json_to_vector(j.at("mu_coef"));
    f.sigma = j.at("sigma").get<double>();
    f.xi = j.at("xi").get<double>();
    f.nll = j.value("negative_log_lik", 0.0);
    f.iterations = j.value("iterations", 0);
    f.converged = j.value("converged", true);
    return f;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

} // namespace maxid
