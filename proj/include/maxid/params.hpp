#pragma once

#include <array>
#include <cmath>
#include <string>

#include "maxid/errors.hpp"

namespace maxid {

enum class Family { max_id, gaussian_copula, t_copula };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::max_id: return "max_id";
        case Family::gaussian_copula: return "gaussian_copula";
        case Family::t_copula: return "t_copula";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "max_id") return Family::max_id;
    if (s == "gaussian_copula") return Family::gaussian_copula;
    if (s == "t_copula") return Family::t_copula;
    throw ConfigError("unknown family '" + s + "'");
}

// Dependence parameters shared by every family.  For the max-id process,
// alpha and beta shape the magnitude measure tail and lambda*/nu/aniso*
// shape the magnitude-dependent correlation range.  The copula families use
// the same correlation at r = 0; the t copula reads its degrees of freedom
// from alpha.
struct DependenceParams {
    double alpha = 1.0;
    double beta = 0.0;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double nu = 0.0;
    double aniso_ratio = 1.0;
    double aniso_angle = 0.0;

    static constexpr int count = 8;

    double get(int i) const {
        switch (i) {
            case 0: return alpha;
            case 1: return beta;
            case 2: return lambda0;
            case 3: return lambda1;
            case 4: return lambda2;
            case 5: return nu;
            case 6: return aniso_ratio;
            case 7: return aniso_angle;
        }
        throw std::out_of_range("DependenceParams index");
    }

    void set(int i, double v) {
        switch (i) {
            case 0: alpha = v; return;
            case 1: beta = v; return;
            case 2: lambda0 = v; return;
            case 3: lambda1 = v; return;
            case 4: lambda2 = v; return;
            case 5: nu = v; return;
            case 6: aniso_ratio = v; return;
            case 7: aniso_angle = v; return;
        }
        throw std::out_of_range("DependenceParams index");
    }

    static const std::array<std::string, count>& names() {
        static const std::array<std::string, count> n = {
            "alpha", "beta", "lambda0", "lambda1",
            "lambda2", "nu", "aniso_ratio", "aniso_angle"};
        return n;
    }
};

inline void validate(const DependenceParams& p, Family family) {
    if (!(p.alpha > 0.0))
        throw ConfigError(family == Family::t_copula
                              ? "t copula degrees of freedom (alpha) must be positive"
                              : "alpha must be positive");
    if (family == Family::max_id && !(p.beta >= 0.0))
        throw ConfigError("beta must be nonnegative");
    if (!(p.aniso_ratio > 0.0)) throw ConfigError("aniso_ratio must be positive");
    if (!(p.aniso_angle >= 0.0 && p.aniso_angle <= M_PI / 2.0))
        throw ConfigError("aniso_angle must lie in [0, pi/2]");
}

// A fittable model: family, which parameters move, and the values of the
// pinned ones (also the default starting point of the free ones).
struct ModelSpec {
    Family family = Family::max_id;
    std::array<bool, DependenceParams::count> free{};
    DependenceParams value;
    int id = 0;

    int n_free() const {
        int n = 0;
        for (bool b : free) n += b;
        return n;
    }
};

// The ten-model catalogue used for model comparison.  1-2 max-stable
// (beta = 0, nu = 0), 3-4 magnitude-independent max-id (nu = 0), 5-6 full
// max-id, 7-8 Gaussian copulas, 9-10 t copulas; even numbers add the
// altitude and time range effects.
inline ModelSpec model_spec(int id) {
    if (id < 1 || id > 10) throw ConfigError("model id must be 1..10");
    ModelSpec m;
    m.id = id;
    const bool nonstat = (id % 2 == 0);
    auto open = [&](std::initializer_list<int> idx) {
        for (int i : idx) m.free[i] = true;
    };
    switch (id) {
        case 1:
        case 2:
            m.family = Family::max_id;
            m.value.beta = 0.0;
            m.value.nu = 0.0;
            open({0, 2});
            break;
        case 3:
        case 4:
            m.family = Family::max_id;
            m.value.beta = 1.0;
            m.value.nu = 0.0;
            open({0, 1, 2});
            break;
        case 5:
        case 6:
            m.family = Family::max_id;
            m.value.beta = 1.0;
            m.value.nu = 0.5;
            open({0, 1, 2, 5});
            break;
        case 7:
        case 8:
            m.family = Family::gaussian_copula;
            open({2});
            break;
        case 9:
        case 10:
            m.family = Family::t_copula;
            m.value.alpha = 5.0;
            open({0, 2});
            break;
    }
    if (nonstat) open({3, 4});
    return m;
}

} // namespace maxid
