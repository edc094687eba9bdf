#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "logsparse/penalty.hpp"
#include "logsparse/problem.hpp"

namespace logsparse {

struct AmpConfig {
    double lambda_pen = 0.0;
    double damping = 0.2;        // fraction of the previous iterate retained
    int max_iter = 1000;
    double mse_stop = 1e-10;     // checked against ground truth
    double change_stop = 1e-12;  // relative iterate change, fixed-point stop
    double diverge_mse = 1e6;
    PenaltySpec penalty;

    void validate() const {
        if (!(lambda_pen >= 0.0))
            throw std::domain_error("AmpConfig: lambda_pen must be non-negative");
        if (!(damping >= 0.0 && damping < 1.0))
            throw std::domain_error("AmpConfig: damping must be in [0, 1)");
        if (max_iter < 1)
            throw std::domain_error("AmpConfig: max_iter must be >= 1");
    }
};

struct AmpState {
    Eigen::VectorXd x_hat;  // length N
    Eigen::VectorXd z;      // length M, corrected residual
    double chi = 1.0;
    int iter = 0;
};

enum class AmpStatus { MseStop, MaxIter, Diverged, Stationary };

inline const char* to_string(AmpStatus s) {
    switch (s) {
        case AmpStatus::MseStop: return "mse_stop";
        case AmpStatus::MaxIter: return "max_iter";
        case AmpStatus::Diverged: return "diverged";
        case AmpStatus::Stationary: return "stationary";
    }
    return "unknown";
}

struct AmpTraceRow {
    int iter;
    double mse, chi, lambda_prox;
};

struct AmpResult {
    AmpState state;
    AmpStatus status = AmpStatus::MaxIter;
    std::vector<AmpTraceRow> trace;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One AMP iteration: effective field, Onsager coefficient, prox update,
/// corrected residual, effective-noise variance. Damping retains a fraction
/// of the previous x_hat and chi; z is recomputed from the damped x_hat.
inline AmpState amp_step(const AmpState& state, const ProblemInstance& instance,
                         const AmpConfig& config) {
    config.validate();
    const auto n = instance.a.cols();
    const auto m = instance.a.rows();
    if (state.x_hat.size() != n || state.z.size() != m)
        throw std::domain_error("amp_step: state dimensions do not match instance");
    const double alpha = static_cast<double>(m) / static_cast<double>(n);

    Eigen::VectorXd h = state.x_hat + (1.0 / alpha) * (instance.a.transpose() * state.z);
    const double lam = (state.chi + config.lambda_pen) / alpha;
    const ProxParams params = make_prox_params(lam, config.penalty);

    Eigen::VectorXd x_raw(n);
    double deriv_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        x_raw(i) = prox(h(i), params, config.penalty);
        deriv_sum += prox_derivative(h(i), params, config.penalty);
    }
    const double k = deriv_sum / static_cast<double>(n) / alpha;
    const double chi_raw = (state.chi + config.lambda_pen) * k;

    const double d = config.damping;
    AmpState next;
    next.x_hat = (1.0 - d) * x_raw + d * state.x_hat;
    next.chi = (1.0 - d) * chi_raw + d * state.chi;
    next.z = instance.y - instance.a * next.x_hat + k * state.z;
    next.iter = state.iter + 1;

    if (!next.x_hat.allFinite() || !next.z.allFinite() || !std::isfinite(next.chi))
        throw DivergenceError("amp_step: non-finite iterate");
    return next;
}

/// Runs AMP from x_hat = 0, z = y, chi = 1 until the true-MSE stop, a
/// stationary iterate, divergence, or max_iter.
inline AmpResult run_amp(const ProblemInstance& instance, const AmpConfig& config) {
    config.validate();
    const auto n = instance.a.cols();
    AmpResult result;
    AmpState state;
    state.x_hat = Eigen::VectorXd::Zero(n);
    state.z = instance.y;
    state.chi = 1.0;
    state.iter = 0;

    for (int t = 0; t < config.max_iter; ++t) {
        const double alpha =
            static_cast<double>(instance.a.rows()) / static_cast<double>(n);
        const double lam = (state.chi + config.lambda_pen) / alpha;
        AmpState next;
        try {
            next = amp_step(state, instance, config);
        } catch (const DivergenceError&) {
            result.status = AmpStatus::Diverged;
            result.state = state;
            return result;
        }
        const double err = mse(next.x_hat, instance.x_true);
        result.trace.push_back({next.iter, err, next.chi, lam});
        if (!std::isfinite(err) || err > config.diverge_mse) {
            result.status = AmpStatus::Diverged;
            result.state = next;
            return result;
        }
        const double change = (next.x_hat - state.x_hat).norm() /
                              std::max(state.x_hat.norm(), 1.0);
        state = next;
        if (err < config.mse_stop) {
            result.status = AmpStatus::MseStop;
            result.state = state;
            return result;
        }
        if (change < config.change_stop) {
            result.status = AmpStatus::Stationary;
            result.state = state;
            return result;
        }
    }
    result.status = AmpStatus::MaxIter;
    result.state = state;
    return result;
}

}  // namespace logsparse
