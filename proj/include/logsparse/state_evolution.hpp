#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "logsparse/penalty.hpp"
#include "logsparse/quadrature.hpp"

namespace logsparse {

struct SeConfig {
    double alpha = 0.5;
    double rho = 0.1;
    double sigma2 = 0.0;
    double lambda_pen = 0.0;
    double damping = 0.2;           // fraction of the previous iterate retained
    int max_iter = 1000;
    double mse_stop = 1e-10;
    double fixed_point_tol = 1e-12; // stop when |E_next - E| falls below this
    PenaltySpec penalty;
    QuadratureConfig quad;

    void validate() const {
        if (!(alpha > 0.0))
            throw std::domain_error("SeConfig: alpha must be positive");
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::domain_error("SeConfig: rho must be in [0, 1]");
        if (!(sigma2 >= 0.0) || !(lambda_pen >= 0.0))
            throw std::domain_error("SeConfig: sigma2 and lambda_pen must be non-negative");
        if (!(damping >= 0.0 && damping < 1.0))
            throw std::domain_error("SeConfig: damping must be in [0, 1)");
        if (max_iter < 1)
            throw std::domain_error("SeConfig: max_iter must be >= 1");
    }
};

struct SeState {
    double e = 0.0;    // MSE order parameter E
    double chi = 1.0;  // effective-noise variance
    int iter = 0;
};

enum class SeStatus { FixedPoint, MseStop, MaxIter, QuadFailure, Diverged };

inline const char* to_string(SeStatus s) {
    switch (s) {
        case SeStatus::FixedPoint: return "fixed_point";
        case SeStatus::MseStop: return "mse_stop";
        case SeStatus::MaxIter: return "max_iter";
        case SeStatus::QuadFailure: return "quad_failure";
        case SeStatus::Diverged: return "diverged";
    }
    return "unknown";
}

struct SeTraceRow {
    int iter;
    double e, chi, lambda_prox;
};

struct SeResult {
    SeState state;
    SeStatus status = SeStatus::MaxIter;
    std::vector<SeTraceRow> trace;
};

namespace detail {

/// Gaussian moments of the prox map S for h ~ Normal(0, sigma_h^2):
/// E[S'(h)], E[S(h)^2], E[S(h) h].
struct ProxMoments {
    double s_deriv = 0.0;
    double s_sq = 0.0;
    double s_h = 0.0;
};

inline ProxMoments prox_moments_quadrature(double sigma_h, const ProxParams& params,
                                           const PenaltySpec& spec,
                                           const QuadratureConfig& quad) {
    ProxMoments m;
    if (sigma_h == 0.0) {
        // h is the point mass at 0; S(0) = 0 always, S'(0) = 1 only at the
        // identity limit.
        m.s_deriv = prox_derivative(0.0, params, spec);
        return m;
    }
    const double thr = prox_threshold(params, spec);
    std::vector<double> kinks;
    if (thr > 0.0)
        kinks = {-thr / sigma_h, thr / sigma_h};
    m.s_deriv = gaussian_expectation(
        [&](double z) { return prox_derivative(sigma_h * z, params, spec); }, kinks, quad);
    m.s_sq = gaussian_expectation(
        [&](double z) {
            const double s = prox(sigma_h * z, params, spec);
            return s * s;
        },
        kinks, quad);
    m.s_h = gaussian_expectation(
        [&](double z) { return prox(sigma_h * z, params, spec) * sigma_h * z; }, kinks,
        quad);
    return m;
}

/// Closed-form soft-threshold moments via the complementary error function.
inline ProxMoments soft_threshold_moments(double sigma_h, double lambda) {
    ProxMoments m;
    if (lambda == 0.0) {
        m.s_deriv = 1.0;
        m.s_sq = sigma_h * sigma_h;
        m.s_h = sigma_h * sigma_h;
        return m;
    }
    if (sigma_h == 0.0)
        return m;  // all zero: S(0) = 0, S'(0) = 0
    const double a = lambda / sigma_h;
    const double q = 0.5 * std::erfc(a / std::sqrt(2.0));  // P(z > a)
    const double pdf = std_normal_pdf(a);
    const double v = sigma_h * sigma_h;
    m.s_deriv = 2.0 * q;
    m.s_sq = 2.0 * v * ((1.0 + a * a) * q - a * pdf);
    m.s_h = 2.0 * v * q;
    return m;
}

/// Assembles one SE update from per-branch moments. The x0 = 0 branch sees
/// h ~ Normal(0, s^2); the x0 != 0 branch sees h ~ Normal(0, 1 + s^2) with
/// E[x0 | h] = h / (1 + s^2), which reduces every expectation to 1-D.
inline SeState assemble_se_step(
    const SeState& state, const SeConfig& config,
    const std::function<ProxMoments(double sigma_h, const ProxParams&)>& moments) {
    const double s2 = config.sigma2 + state.e / config.alpha;
    const double lam = (state.chi + config.lambda_pen) / config.alpha;
    const ProxParams params = make_prox_params(lam, config.penalty);

    const ProxMoments m0 = moments(std::sqrt(s2), params);
    const ProxMoments m1 = moments(std::sqrt(1.0 + s2), params);

    const double k = ((1.0 - config.rho) * m0.s_deriv + config.rho * m1.s_deriv) /
                     config.alpha;
    double e_raw = (1.0 - config.rho) * m0.s_sq +
                   config.rho * (m1.s_sq - 2.0 * m1.s_h / (1.0 + s2) + 1.0);
    if (e_raw < 0.0)
        e_raw = 0.0;  // cancellation near exact recovery
    const double chi_raw = (state.chi + config.lambda_pen) * k;

    const double d = config.damping;
    SeState next;
    next.e = (1.0 - d) * e_raw + d * state.e;
    next.chi = (1.0 - d) * chi_raw + d * state.chi;
    next.iter = state.iter + 1;
    return next;
}

}  // namespace detail

inline SeState se_step(const SeState& state, const SeConfig& config) {
    config.validate();
    return detail::assemble_se_step(
        state, config, [&](double sigma_h, const ProxParams& params) {
            return detail::prox_moments_quadrature(sigma_h, params, config.penalty,
                                                   config.quad);
        });
}

inline SeState se_step_l1_closed_form(const SeState& state, const SeConfig& config) {
    config.validate();
    if (config.penalty.kind != PenaltyKind::L1)
        throw std::domain_error("se_step_l1_closed_form: penalty must be L1");
    return detail::assemble_se_step(
        state, config, [](double sigma_h, const ProxParams& params) {
            return detail::soft_threshold_moments(sigma_h, params.lambda_prox);
        });
}

/// Iterates the SE recursion from E = rho, chi = 1. The L1 path uses the
/// closed-form step; the two paths agree to quadrature tolerance.
inline SeResult run_se(const SeConfig& config) {
    config.validate();
    SeResult result;
    SeState state{config.rho, 1.0, 0};
    result.state = state;
    for (int t = 0; t < config.max_iter; ++t) {
        const double lam = (state.chi + config.lambda_pen) / config.alpha;
        SeState next;
        try {
            next = (config.penalty.kind == PenaltyKind::L1)
                       ? se_step_l1_closed_form(state, config)
                       : se_step(state, config);
        } catch (const QuadratureError&) {
            result.status = SeStatus::QuadFailure;
            result.state = state;
            return result;
        }
        // In the failure phase with lambda_pen = 0 the recursion can blow up
        // (E grows geometrically through the identity-prox limit); report that
        // instead of feeding non-finite values back into the quadrature.
        if (!std::isfinite(next.e) || !std::isfinite(next.chi) || next.e > 1e8) {
            result.status = SeStatus::Diverged;
            result.state = std::isfinite(next.e) ? next : state;
            return result;
        }
        result.trace.push_back({next.iter, next.e, next.chi, lam});
        const double delta = std::abs(next.e - state.e);
        state = next;
        if (state.e < config.mse_stop) {
            result.status = SeStatus::MseStop;
            result.state = state;
            return result;
        }
        if (delta < config.fixed_point_tol) {
            result.status = SeStatus::FixedPoint;
            result.state = state;
            return result;
        }
    }
    result.status = SeStatus::MaxIter;
    result.state = state;
    return result;
}

/// Smallest alpha with noiseless exact recovery (fixed-point E below
/// success_mse), located by bisection to the given resolution. The boundary
/// search runs the undamped recursion with lambda_pen = 0 and stops each run
/// once E crosses success_mse.
inline double phase_boundary(double rho, const SeConfig& tmpl, double lo = 1e-3,
                             double hi = 1.5, double resolution = 1e-3,
                             double success_mse = 1e-4) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::domain_error("phase_boundary: rho must be in (0, 1]");
    SeConfig cfg = tmpl;
    cfg.rho = rho;
    cfg.sigma2 = 0.0;
    cfg.lambda_pen = 0.0;
    cfg.damping = 0.0;
    cfg.mse_stop = success_mse;
    auto success = [&](double alpha) {
        cfg.alpha = alpha;
        const SeResult r = run_se(cfg);
        return r.state.e < success_mse;
    };
    if (success(lo) || !success(hi))
        throw std::runtime_error(
            "phase_boundary: success not monotone over bracket [" + std::to_string(lo) +
            ", " + std::to_string(hi) + "] at rho=" + std::to_string(rho));
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (success(mid) ? hi : lo) = mid;
    }
    return hi;
}

struct BestMse {
    double lambda_star = 0.0;
    double mse_star = 0.0;
};

/// Minimum fixed-point E over a log-spaced lambda_pen grid, refined by
/// golden-section search in log-lambda around the grid minimum.
inline BestMse best_mse_over_lambda(const SeConfig& tmpl, double lambda_lo = 1e-4,
                                    double lambda_hi = 1e2, int grid_points = 60) {
    if (!(tmpl.sigma2 > 0.0))
        throw std::domain_error("best_mse_over_lambda: requires sigma2 > 0");
    if (grid_points < 3)
        throw std::domain_error("best_mse_over_lambda: grid_points must be >= 3");
    SeConfig cfg = tmpl;
    auto eval = [&](double log_lambda) {
        cfg.lambda_pen = std::pow(10.0, log_lambda);
        const SeResult r = run_se(cfg);
        if (r.status == SeStatus::QuadFailure || !std::isfinite(r.state.e))
            return std::numeric_limits<double>::quiet_NaN();
        return r.state.e;
    };

    const double llo = std::log10(lambda_lo);
    const double lhi = std::log10(lambda_hi);
    int best_idx = -1;
    double best_e = 0.0;
    std::vector<double> grid_e(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        const double ll = llo + (lhi - llo) * i / (grid_points - 1);
        grid_e[i] = eval(ll);
        if (std::isnan(grid_e[i]))
            continue;
        if (best_idx < 0 || grid_e[i] < best_e) {
            best_idx = i;
            best_e = grid_e[i];
        }
    }
    if (best_idx < 0)
        throw std::runtime_error("best_mse_over_lambda: every lambda failed");

    const double step = (lhi - llo) / (grid_points - 1);
    double a = llo + step * std::max(best_idx - 1, 0);
    double b = llo + step * std::min(best_idx + 1, grid_points - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > 1e-3) {
        if (std::isnan(fc) || (!std::isnan(fd) && fd < fc)) {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = eval(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = eval(c);
        }
    }
    BestMse out;
    const double lmid = 0.5 * (a + b);
    const double fmid = eval(lmid);
    out.lambda_star = std::pow(10.0, lmid);
    out.mse_star = fmid;
    if (!std::isnan(fc) && fc < out.mse_star) {
        out.lambda_star = std::pow(10.0, c);
        out.mse_star = fc;
    }
    if (!std::isnan(fd) && fd < out.mse_star) {
        out.lambda_star = std::pow(10.0, d);
        out.mse_star = fd;
    }
    if (best_e < out.mse_star) {
        out.lambda_star = std::pow(10.0, llo + step * best_idx);
        out.mse_star = best_e;
    }
    return out;
}

}  // namespace logsparse
