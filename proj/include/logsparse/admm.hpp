#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "logsparse/penalty.hpp"
#include "logsparse/problem.hpp"

namespace logsparse {

enum class AdmmMode { Noisy, Noiseless };

struct AdmmConfig {
    double lambda_pen = 0.0;
    double rho_admm0 = 1.0;
    double alpha_relax = 0.5;  // noisy mode only
    double rho_growth = 1.01;  // noiseless mode only
    int max_iter = 1000;
    double tol_primal = 1e-10;
    double tol_dual = 1e-10;
    double mse_stop = 0.0;     // 0 disables the true-MSE stop
    double diverge_mse = 1e6;
    PenaltySpec penalty;
    AdmmMode mode = AdmmMode::Noisy;

    void validate() const {
        if (!(lambda_pen >= 0.0))
            throw std::domain_error("AdmmConfig: lambda_pen must be non-negative");
        if (!(rho_admm0 > 0.0))
            throw std::domain_error("AdmmConfig: rho_admm0 must be positive");
        if (!(alpha_relax > 0.0 && alpha_relax < 2.0))
            throw std::domain_error("AdmmConfig: alpha_relax must be in (0, 2)");
        if (!(rho_growth >= 1.0))
            throw std::domain_error("AdmmConfig: rho_growth must be >= 1");
        if (max_iter < 1)
            throw std::domain_error("AdmmConfig: max_iter must be >= 1");
        if (!(tol_primal > 0.0 && tol_dual > 0.0))
            throw std::domain_error("AdmmConfig: tolerances must be positive");
    }
};

struct AdmmState {
    Eigen::VectorXd x, z, u;  // length N; u is the scaled dual
    double rho_admm = 1.0;
    int iter = 0;
};

/// Noisy mode: factorization of AtA + rho I plus the cached A^T y.
/// Noiseless mode: factorization of A At plus the cached A^T (A At)^-1 y,
/// so the affine projection is applied without forming the N x N projector.
struct LinearSolveCache {
    AdmmMode mode = AdmmMode::Noisy;
    double rho = 0.0;  // the rho the noisy factorization was built for
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd aty;        // noisy: A^T y
    Eigen::VectorXd particular; // noiseless: A^T (A At)^-1 y
};

/// Counts cache constructions; lets tests assert the factor-once contract.
inline std::atomic<long>& cache_build_count() {
    static std::atomic<long> count{0};
    return count;
}

inline LinearSolveCache build_cache(const ProblemInstance& instance, double rho_admm,
                                    AdmmMode mode) {
    if (!(rho_admm > 0.0))
        throw std::domain_error("build_cache: rho_admm must be positive");
    LinearSolveCache cache;
    cache.mode = mode;
    cache.rho = rho_admm;
    if (mode == AdmmMode::Noisy) {
        const auto n = instance.a.cols();
        Eigen::MatrixXd gram = instance.a.transpose() * instance.a;
        gram.diagonal().array() += rho_admm;
        cache.llt.compute(gram);
        if (cache.llt.info() != Eigen::Success)
            throw std::runtime_error("build_cache: AtA + rho I factorization failed");
        cache.aty = instance.a.transpose() * instance.y;
        (void)n;
    } else {
        Eigen::MatrixXd aat = instance.a * instance.a.transpose();
        cache.llt.compute(aat);
        if (cache.llt.info() != Eigen::Success)
            throw std::runtime_error("build_cache: A At factorization failed (singular?)");
        cache.particular = instance.a.transpose() * cache.llt.solve(instance.y);
    }
    ++cache_build_count();
    return cache;
}

/// Applies v -> (I - A^T (A At)^-1 A) v through the cached factorization.
inline Eigen::VectorXd project_nullspace(const Eigen::VectorXd& v,
                                         const ProblemInstance& instance,
                                         const LinearSolveCache& cache) {
    if (cache.mode != AdmmMode::Noiseless)
        throw std::domain_error("project_nullspace: cache is not in Noiseless mode");
    return v - instance.a.transpose() * cache.llt.solve(instance.a * v);
}

namespace detail {

inline void check_admm_finite(const AdmmState& s) {
    if (!s.x.allFinite() || !s.z.allFinite() || !s.u.allFinite())
        throw std::runtime_error("admm: non-finite iterate");
}

}  // namespace detail

/// Ridge solve, over-relaxation, prox on x + u with lambda_prox =
/// lambda_pen / rho_admm (epsilon fixed across iterations), dual ascent.
inline AdmmState admm_noisy_step(const AdmmState& state, const ProblemInstance& instance,
                                 const LinearSolveCache& cache, const AdmmConfig& config) {
    if (cache.mode != AdmmMode::Noisy || cache.rho != state.rho_admm)
        throw std::domain_error("admm_noisy_step: cache does not match state");
    const Eigen::VectorXd rhs = cache.aty + state.rho_admm * (state.z - state.u);
    const Eigen::VectorXd x_tilde = cache.llt.solve(rhs);

    AdmmState next;
    next.x = config.alpha_relax * x_tilde + (1.0 - config.alpha_relax) * state.z;
    const ProxParams params =
        make_prox_params(config.lambda_pen / state.rho_admm, config.penalty);
    const Eigen::VectorXd v = next.x + state.u;
    next.z.resize(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        next.z(i) = prox(v(i), params, config.penalty);
    next.u = state.u + next.x - next.z;
    next.rho_admm = state.rho_admm;
    next.iter = state.iter + 1;
    detail::check_admm_finite(next);
    return next;
}

/// Projection onto the affine set A x = y, prox with lambda_prox = 1 / rho_admm,
/// dual ascent, then the geometric rho schedule. No relaxation in this mode.
inline AdmmState admm_noiseless_step(const AdmmState& state,
                                     const ProblemInstance& instance,
                                     const LinearSolveCache& cache,
                                     const AdmmConfig& config) {
    if (cache.mode != AdmmMode::Noiseless)
        throw std::domain_error("admm_noiseless_step: cache is not in Noiseless mode");
    AdmmState next;
    next.x = cache.particular + project_nullspace(state.z - state.u, instance, cache);
    const ProxParams params = make_prox_params(1.0 / state.rho_admm, config.penalty);
    const Eigen::VectorXd v = next.x + state.u;
    next.z.resize(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        next.z(i) = prox(v(i), params, config.penalty);
    next.u = state.u + next.x - next.z;
    next.rho_admm = state.rho_admm * config.rho_growth;
    next.iter = state.iter + 1;
    detail::check_admm_finite(next);
    return next;
}

enum class AdmmStatus { Converged, MseStop, MaxIter, Diverged };

inline const char* to_string(AdmmStatus s) {
    switch (s) {
        case AdmmStatus::Converged: return "converged";
        case AdmmStatus::MseStop: return "mse_stop";
        case AdmmStatus::MaxIter: return "max_iter";
        case AdmmStatus::Diverged: return "diverged";
    }
    return "unknown";
}

struct AdmmTraceRow {
    int iter;
    double mse, primal_residual, dual_residual, rho_admm;
};

struct AdmmResult {
    AdmmState state;
    AdmmStatus status = AdmmStatus::MaxIter;
    bool primal_met = false;
    bool dual_met = false;
    std::vector<AdmmTraceRow> trace;
    /// Reconstruction: the sparse z iterate.
    const Eigen::VectorXd& estimate() const { return state.z; }
};

inline AdmmResult run_admm(const ProblemInstance& instance, const AdmmConfig& config) {
    config.validate();
    if (config.mode == AdmmMode::Noiseless && instance.config.sigma2 != 0.0)
        throw std::domain_error("run_admm: Noiseless mode requires a sigma2 = 0 instance");
    const auto n = instance.a.cols();
    AdmmResult result;
    AdmmState state;
    state.x = Eigen::VectorXd::Zero(n);
    state.z = Eigen::VectorXd::Zero(n);
    state.u = Eigen::VectorXd::Zero(n);
    state.rho_admm = config.rho_admm0;
    state.iter = 0;
    const LinearSolveCache cache = build_cache(instance, config.rho_admm0, config.mode);

    for (int t = 0; t < config.max_iter; ++t) {
        AdmmState next;
        try {
            next = (config.mode == AdmmMode::Noisy)
                       ? admm_noisy_step(state, instance, cache, config)
                       : admm_noiseless_step(state, instance, cache, config);
        } catch (const std::runtime_error&) {
            result.status = AdmmStatus::Diverged;
            result.state = state;
            return result;
        }
        const double primal = (next.z - next.x).norm();
        const double dual = state.rho_admm * (next.z - state.z).norm();
        const double err = mse(next.z, instance.x_true);
        result.trace.push_back({next.iter, err, primal, dual, state.rho_admm});
        state = next;
        if (!std::isfinite(err) || err > config.diverge_mse) {
            result.status = AdmmStatus::Diverged;
            result.state = state;
            return result;
        }
        result.primal_met = primal < config.tol_primal;
        result.dual_met = dual < config.tol_dual;
        if (result.primal_met && result.dual_met) {
            result.status = AdmmStatus::Converged;
            result.state = state;
            return result;
        }
        if (config.mse_stop > 0.0 && err < config.mse_stop) {
            result.status = AdmmStatus::MseStop;
            result.state = state;
            return result;
        }
    }
    result.status = AdmmStatus::MaxIter;
    result.state = state;
    return result;
}

}  // namespace logsparse
