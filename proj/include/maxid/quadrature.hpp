#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <queue>
#include <string>
#include <vector>

#include "maxid/errors.hpp"

namespace maxid {

enum class Substitution { log_r, rational };

struct QuadratureSpec {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    int max_subdivisions = 400;
    Substitution substitution = Substitution::log_r;
};

struct GlRule {
    std::vector<double> node;   // on [-1, 1]
    std::vector<double> weight;
};

// Gauss-Legendre rule of order n, computed once by Newton iteration on P_n
// and cached. Avoids transcribing big constant tables.
inline const GlRule& gauss_legendre(int n) {
    static std::map<int, GlRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GlRule rule;
    rule.node.resize(n);
    rule.weight.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.node[i] = -x;
        rule.node[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weight[i] = w;
        rule.weight[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

namespace detail {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
inline constexpr std::array<double, 8> kGk15Node = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0};

inline constexpr std::array<double, 8> kGk15WeightK = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGk15WeightG = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <int N>
struct Panel {
    double a = 0.0, b = 0.0;
    std::array<double, N> value{};
    std::array<double, N> error{};
    double score = 0.0;
};

// Evaluates one Gauss-Kronrod panel. f(x) returns std::array<double, N>.
template <int N, class F>
Panel<N> gk15(F& f, double a, double b) {
    Panel<N> p;
    p.a = a;
    p.b = b;
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    std::array<double, N> resk{}, resg{}, resabs{};
    std::array<std::array<double, N>, 15> fx;
    int slot = 0;
    for (int i = 0; i < 8; ++i) {
        const double off = h * kGk15Node[i];
        fx[slot] = f(c - off);
        if (i < 7) fx[slot + 1] = f(c + off);
        for (int q = 0; q < N; ++q) {
            double s = fx[slot][q] + (i < 7 ? fx[slot + 1][q] : 0.0);
            resk[q] += kGk15WeightK[i] * s;
            resabs[q] += kGk15WeightK[i] *
                         (std::abs(fx[slot][q]) + (i < 7 ? std::abs(fx[slot + 1][q]) : 0.0));
            if (i % 2 == 1) resg[q] += kGk15WeightG[i / 2] * s;
        }
        slot += (i < 7) ? 2 : 1;
    }

    for (int q = 0; q < N; ++q) {
        const double mean = 0.5 * resk[q];
        double resasc = 0.0;
        for (int i = 0; i < 15; ++i) resasc += std::abs(fx[i][q] - mean) *
                                               kGk15WeightK[i < 14 ? i / 2 : 7];
        resasc *= h;
        p.value[q] = resk[q] * h;
        double err = std::abs(resk[q] - resg[q]) * h;
        if (resasc != 0.0 && err != 0.0)
            err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
        const double floor = 50.0 * 2.22e-16 * resabs[q] * h;
        p.error[q] = std::max(err, floor);
    }
    return p;
}

} // namespace detail

// Adaptive Gauss-Kronrod over [a, b] for a vector-valued integrand.  All
// components are driven to max(abs_tol, rel_tol * |integral|) at once, which
// lets an exponent integral and its parameter derivatives share evaluations.
template <int N, class F>
std::array<double, N> integrate_adaptive(F&& f, double a, double b,
                                         const QuadratureSpec& spec,
                                         int initial_panels = 0) {
    using detail::Panel;
    if (initial_panels <= 0)
        initial_panels = std::max(1, std::min(16, (int)std::ceil((b - a) / 2.0)));

    auto cmp = [](const Panel<N>& x, const Panel<N>& y) { return x.score < y.score; };
    std::priority_queue<Panel<N>, std::vector<Panel<N>>, decltype(cmp)> heap(cmp);

    std::array<double, N> total{}, toterr{};
    auto push = [&](Panel<N> p) {
        double score = 0.0;
        for (int q = 0; q < N; ++q) {
            const double scale = std::max(spec.abs_tol, spec.rel_tol * std::abs(total[q]));
            score = std::max(score, p.error[q] / scale);
        }
        p.score = score;
        heap.push(std::move(p));
    };

    std::vector<Panel<N>> seed;
    for (int i = 0; i < initial_panels; ++i) {
        const double pa = a + (b - a) * i / initial_panels;
        const double pb = a + (b - a) * (i + 1) / initial_panels;
        seed.push_back(detail::gk15<N>(f, pa, pb));
        for (int q = 0; q < N; ++q) {
            total[q] += seed.back().value[q];
            toterr[q] += seed.back().error[q];
        }
    }
    for (auto& p : seed) push(std::move(p));

    int panels = initial_panels;
    while (true) {
        bool ok = true;
        for (int q = 0; q < N; ++q)
            if (toterr[q] > std::max(spec.abs_tol, spec.rel_tol * std::abs(total[q])))
                ok = false;
        if (ok) break;
        if (panels >= spec.max_subdivisions) {
            std::vector<double> best(total.begin(), total.end());
            throw QuadratureError("adaptive integration failed to converge after " +
                                      std::to_string(panels) + " panels",
                                  best);
        }
        Panel<N> worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel<N> left = detail::gk15<N>(f, worst.a, mid);
        Panel<N> right = detail::gk15<N>(f, mid, worst.b);
        for (int q = 0; q < N; ++q) {
            total[q] += left.value[q] + right.value[q] - worst.value[q];
            toterr[q] += left.error[q] + right.error[q] - worst.error[q];
        }
        push(std::move(left));
        push(std::move(right));
        ++panels;
    }
    for (int q = 0; q < N; ++q)
        if (!std::isfinite(total[q]))
            throw NumericalError("integrand produced a non-finite value");
    return total;
}

template <class F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
    auto wrap = [&f](double x) { return std::array<double, 1>{f(x)}; };
    return integrate_adaptive<1>(wrap, a, b, spec)[0];
}

// Integral of f over (0, inf) for a continuous, absolutely integrable f with
// decaying tails.  The substitution maps to a finite axis; the support is
// then located by panel-mass expansion before the tolerance-driven pass.
template <class F>
double integrate_semi_infinite(F&& f, const QuadratureSpec& spec = {}) {
    if (spec.substitution == Substitution::rational) {
        auto g = [&f](double t) {
            const double om = 1.0 - t;
            const double r = t / om;
            return std::array<double, 1>{f(r) / (om * om)};
        };
        // geometric seed panels resolve both endpoints of t = r/(1+r)
        static const double knots[] = {1e-14, 1e-10, 1e-7, 1e-4, 1e-2, 0.1, 0.3,
                                       0.5,  0.7,  0.9,  0.99, 1 - 1e-4, 1 - 1e-7,
                                       1 - 1e-10, 1 - 1e-14};
        const int nk = sizeof(knots) / sizeof(knots[0]);
        std::array<double, 1> total{};
        QuadratureSpec inner = spec;
        for (int i = 0; i + 1 < nk; ++i)
            total[0] += integrate_adaptive<1>(g, knots[i], knots[i + 1], inner, 1)[0];
        return total[0];
    }

    // log substitution r = e^u
    auto g = [&f](double u) {
        const double r = std::exp(u);
        return std::array<double, 1>{f(r) * r};
    };
    const double step = 2.0;
    double total = 0.0;
    double lo = -1.0, hi = 1.0;
    total += detail::gk15<1>(g, lo, hi).value[0];
    const auto small = [&](double v) {
        return std::abs(v) <= 0.125 * std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
    };
    // always sweep out to |u| = 9 so mass away from r = 1 is not missed
    for (int side = 0; side < 2; ++side) {
        int calm = 0;
        while (calm < 2) {
            double a, b;
            if (side == 0) {
                a = lo - step;
                b = lo;
                lo = a;
            } else {
                a = hi;
                b = hi + step;
                hi = b;
            }
            const double mass = detail::gk15<1>(g, a, b).value[0];
            total += mass;
            const double reach = (side == 0) ? -lo : hi;
            calm = (small(mass) && reach >= 9.0) ? calm + 1 : 0;
            if (lo < -700.0 || hi > 700.0) break;
        }
    }
    auto wrapped = [&g](double u) { return g(u); };
    return integrate_adaptive<1>(wrapped, lo, hi, spec,
                                 std::max(8, (int)((hi - lo) / step)))[0];
}

} // namespace maxid
