#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "maxid/normal.hpp"

namespace maxid {

// Deterministic generator: mt19937_64 plus inverse-CDF transforms only, so
// streams are reproducible across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          0x9e3779b9u, 0x7f4a7c15u};
        gen_.seed(seq);
    }

    // independent stream for a work unit (replicate, bootstrap sample, ...)
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        Rng r(0);
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9u};
        r.gen_.seed(seq);
        return r;
    }

    // uniform on the open interval (0, 1), 53-bit resolution
    double uniform() {
        const std::uint64_t bits = gen_();
        return ((bits >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return norm_quantile(uniform()); }

    double exponential() { return -std::log(uniform()); }

    // Marsaglia-Tsang; shape boost for a < 1. Unit scale.
    double gamma(double a) {
        if (a < 1.0) {
            const double u = uniform();
            return gamma(a + 1.0) * std::pow(u, 1.0 / a);
        }
        const double d = a - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace maxid
