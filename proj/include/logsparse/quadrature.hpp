#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace logsparse {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    double tail_cut = 12.0;    // truncate the Gaussian at +-tail_cut std devs
    int max_subdivisions = 200;
};

/// Raised when the subdivision budget runs out before the tolerance is met.
/// Carries the best estimate and its accumulated error bound.
struct QuadratureError : std::runtime_error {
    QuadratureError(double est, double err)
        : std::runtime_error("gaussian_expectation: subdivision budget exhausted"),
          estimate(est),
          error_bound(err) {}
    double estimate;
    double error_bound;
};

namespace detail {

inline double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) * 0.3989422804014326779;
}

// Gauss-Kronrod 7-15 abscissae and weights on [-1, 1].
inline constexpr double kGkNodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double kGaussWeights[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

/// One GK 7-15 panel on [a, b]. Returns (Kronrod estimate, error bound).
template <class F>
std::pair<double, double> gk15(F&& g, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double resk = 0.0;
    double resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = hw * kGkNodes[i];
        double v;
        if (i == 7) {
            v = g(c);
        } else {
            v = g(c - x) + g(c + x);
        }
        resk += kKronrodWeights[i] * v;
        if (i % 2 == 1)
            resg += kGaussWeights[i / 2] * v;
    }
    resk *= hw;
    resg *= hw;
    return {resk, std::abs(resk - resg)};
}

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const {
        if (error != o.error)
            return error > o.error;  // largest error first
        return a < o.a;
    }
};

}  // namespace detail

/// Integral of f(z) phi(z) dz against the standard normal density, computed by
/// adaptive Gauss-Kronrod panels over [-tail_cut, tail_cut] split at the given
/// kink points. Refinement bisects the worst panel until the accumulated error
/// bound meets max(abs_tol, rel_tol * |estimate|).
template <class F>
double gaussian_expectation(F&& f, const std::vector<double>& kinks,
                            const QuadratureConfig& quad = {}) {
    const double T = quad.tail_cut;
    std::vector<double> pts;
    pts.push_back(-T);
    for (double k : kinks) {
        if (!std::isfinite(k))
            throw std::domain_error("gaussian_expectation: non-finite kink");
        if (k > -T && k < T)
            pts.push_back(k);
    }
    pts.push_back(T);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    auto g = [&f](double z) { return f(z) * detail::std_normal_pdf(z); };

    std::multiset<detail::Segment> segs;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        auto [v, e] = detail::gk15(g, pts[i], pts[i + 1]);
        segs.insert({pts[i], pts[i + 1], v, e});
        total += v;
        total_err += e;
    }

    int subdivisions = 0;
    while (total_err > std::max(quad.abs_tol, quad.rel_tol * std::abs(total))) {
        if (subdivisions >= quad.max_subdivisions)
            throw QuadratureError(total, total_err);
        auto worst = *segs.begin();
        segs.erase(segs.begin());
        total -= worst.value;
        total_err -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        auto [v1, e1] = detail::gk15(g, worst.a, mid);
        auto [v2, e2] = detail::gk15(g, mid, worst.b);
        segs.insert({worst.a, mid, v1, e1});
        segs.insert({mid, worst.b, v2, e2});
        total += v1 + v2;
        total_err += e1 + e2;
        ++subdivisions;
    }
    return total;
}

}  // namespace logsparse
