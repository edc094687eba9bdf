#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace logsparse {

enum class PenaltyKind { LogSum, L1 };

/// Which penalty to use and how its log-sum smoothing margin is chosen.
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::LogSum;
    double delta_eps = 1e-10;  // margin added to sqrt(lambda_prox), LogSum only
};

/// Scalar prox parameterization. `epsilon` is ignored for L1.
struct ProxParams {
    double lambda_prox = 1.0;
    double epsilon = 1.0;
};

/// Thrown when a log-sum prox is requested with epsilon <= sqrt(lambda_prox),
/// where the proximal objective is bimodal and the operator discontinuous.
struct RegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

inline double penalty_value(double x, const PenaltySpec& spec, double epsilon = 1.0) {
    if (!std::isfinite(x))
        throw std::domain_error("penalty_value: non-finite x");
    if (spec.kind == PenaltyKind::L1)
        return std::abs(x);
    if (!(epsilon > 0.0))
        throw std::domain_error("penalty_value: epsilon must be positive");
    return std::log1p(std::abs(x) / epsilon);
}

/// Smoothing rule epsilon = sqrt(lambda_prox) + delta_eps, which keeps the
/// log-sum prox in its continuous regime.
inline double adaptive_epsilon(double lambda_prox, double delta_eps) {
    if (!(lambda_prox > 0.0) || !std::isfinite(lambda_prox))
        throw std::domain_error("adaptive_epsilon: lambda_prox must be positive");
    if (!(delta_eps > 0.0) || !std::isfinite(delta_eps))
        throw std::domain_error("adaptive_epsilon: delta_eps must be positive");
    const double root = std::sqrt(lambda_prox);
    double eps = root + delta_eps;
    // For very large lambda_prox the margin can fall below one ulp of the
    // root; bump to the next representable value so the convex-regime
    // invariant eps > sqrt(lambda_prox) survives rounding.
    if (!(eps > root))
        eps = std::nextafter(root, HUGE_VAL);
    return eps;
}

/// Builds ProxParams for a given prox scale. lambda_prox = 0 is allowed and
/// makes the prox the identity (the zero-penalty limit of both penalties).
inline ProxParams make_prox_params(double lambda_prox, const PenaltySpec& spec) {
    if (!(lambda_prox >= 0.0) || !std::isfinite(lambda_prox))
        throw std::domain_error("make_prox_params: lambda_prox must be non-negative");
    if (spec.kind == PenaltyKind::L1 || lambda_prox == 0.0)
        return {lambda_prox, 0.0};
    return {lambda_prox, adaptive_epsilon(lambda_prox, spec.delta_eps)};
}

namespace detail {

inline void check_logsum_regime(const ProxParams& p) {
    if (!(p.epsilon > std::sqrt(p.lambda_prox)))
        throw RegimeError("log-sum prox requires epsilon > sqrt(lambda_prox), got epsilon=" +
                          std::to_string(p.epsilon) + " lambda_prox=" +
                          std::to_string(p.lambda_prox));
}

/// Discriminant (|h| + eps)^2 - 4 lambda of the active-branch quadratic,
/// floored at its true minimum over the active set. The minimum, attained at
/// the dead-zone boundary |h| = lambda/eps, equals ((eps^2 - lambda)/eps)^2
/// and is far below the rounding error of the squared form when eps barely
/// exceeds sqrt(lambda), so the naive expression can round to zero or below.
inline double active_discriminant(double a, const ProxParams& p) {
    const double disc = (a + p.epsilon) * (a + p.epsilon) - 4.0 * p.lambda_prox;
    const double gap = (p.epsilon * p.epsilon - p.lambda_prox) / p.epsilon;
    return std::max(disc, gap * gap);
}

}  // namespace detail

/// Dead-zone half-width of the prox: lambda_prox/epsilon (LogSum),
/// lambda_prox (L1), 0 at the identity limit.
inline double prox_threshold(const ProxParams& p, const PenaltySpec& spec) {
    if (p.lambda_prox == 0.0)
        return 0.0;
    if (spec.kind == PenaltyKind::L1)
        return p.lambda_prox;
    return p.lambda_prox / p.epsilon;
}

inline double prox(double h, const ProxParams& p, const PenaltySpec& spec) {
    if (!std::isfinite(h))
        throw std::domain_error("prox: non-finite h");
    if (!(p.lambda_prox >= 0.0))
        throw std::domain_error("prox: lambda_prox must be non-negative");
    if (p.lambda_prox == 0.0)
        return h;
    const double a = std::abs(h);
    if (spec.kind == PenaltyKind::L1)
        return std::copysign(std::max(a - p.lambda_prox, 0.0), h);
    detail::check_logsum_regime(p);
    if (a <= p.lambda_prox / p.epsilon)
        return 0.0;
    double r = 0.5 * (a - p.epsilon + std::sqrt(detail::active_discriminant(a, p)));
    if (r < 0.0)
        r = 0.0;
    return std::copysign(r, h);
}

/// d/dh prox(h). At the exact dead-zone boundary returns the inactive-branch
/// value 0. The active log-sum branch may exceed 1 near the boundary.
inline double prox_derivative(double h, const ProxParams& p, const PenaltySpec& spec) {
    if (!std::isfinite(h))
        throw std::domain_error("prox_derivative: non-finite h");
    if (!(p.lambda_prox >= 0.0))
        throw std::domain_error("prox_derivative: lambda_prox must be non-negative");
    if (p.lambda_prox == 0.0)
        return 1.0;
    const double a = std::abs(h);
    if (spec.kind == PenaltyKind::L1)
        return a > p.lambda_prox ? 1.0 : 0.0;
    detail::check_logsum_regime(p);
    if (a <= p.lambda_prox / p.epsilon)
        return 0.0;
    const double disc = detail::active_discriminant(a, p);
    return 0.5 * (1.0 + (a + p.epsilon) / std::sqrt(disc));
}

}  // namespace logsparse
