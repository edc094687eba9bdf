#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "logsparse/admm.hpp"
#include "logsparse/problem.hpp"

using namespace logsparse;

namespace {

AdmmConfig noisy_config(double lambda_pen, PenaltyKind kind = PenaltyKind::LogSum) {
    AdmmConfig cfg;
    cfg.lambda_pen = lambda_pen;
    cfg.mode = AdmmMode::Noisy;
    cfg.penalty.kind = kind;
    return cfg;
}

AdmmConfig noiseless_config(PenaltyKind kind = PenaltyKind::LogSum) {
    AdmmConfig cfg;
    cfg.mode = AdmmMode::Noiseless;
    cfg.penalty.kind = kind;
    cfg.mse_stop = 1e-4;
    return cfg;
}

// Proximal-gradient LASSO reference, run to tight tolerance. Test-only.
Eigen::VectorXd lasso_reference(const ProblemInstance& inst, double lambda_pen) {
    const Eigen::MatrixXd gram = inst.a.transpose() * inst.a;
    const Eigen::VectorXd aty = inst.a.transpose() * inst.y;
    const double lip =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(inst.a.cols());
    Eigen::VectorXd yv = x;
    double t = 1.0;
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd grad = gram * yv - aty;
        Eigen::VectorXd x_new = yv - grad / lip;
        const double step = lambda_pen / lip;
        for (Eigen::Index i = 0; i < x_new.size(); ++i)
            x_new(i) = std::copysign(std::max(std::abs(x_new(i)) - step, 0.0), x_new(i));
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const Eigen::VectorXd diff = x_new - x;
        yv = x_new + ((t - 1.0) / t_new) * diff;
        x = x_new;
        t = t_new;
        if (diff.norm() < 1e-14)
            break;
    }
    return x;
}

double lasso_objective(const ProblemInstance& inst, const Eigen::VectorXd& x,
                       double lambda_pen) {
    return 0.5 * (inst.a * x - inst.y).squaredNorm() + lambda_pen * x.lpNorm<1>();
}

}  // namespace

TEST_CASE("noisy cache on the identity matrix halves the input") {
    ProblemInstance inst;
    inst.a = Eigen::MatrixXd::Identity(4, 4);
    inst.y = Eigen::VectorXd::Ones(4);
    inst.x_true = Eigen::VectorXd::Zero(4);
    inst.config = {4, 1.0, 0.0, 0.0, 0};
    const auto cache = build_cache(inst, 1.0, AdmmMode::Noisy);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
    CHECK((cache.llt.solve(b) - 0.5 * b).norm() < 1e-14);
}

TEST_CASE("noisy cache solve residual is tiny") {
    const auto inst = generate_instance({100, 0.5, 0.3, 1e-2, 21});
    const double rho = 1.0;
    const auto cache = build_cache(inst, rho, AdmmMode::Noisy);
    Eigen::MatrixXd reg = inst.a.transpose() * inst.a;
    reg.diagonal().array() += rho;
    const Eigen::VectorXd b = Eigen::VectorXd::Random(100);
    const Eigen::VectorXd x = cache.llt.solve(b);
    CHECK((reg * x - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("noiseless projector annihilates the row space") {
    const auto inst = generate_instance({120, 0.5, 0.3, 0.0, 23});
    const auto cache = build_cache(inst, 1.0, AdmmMode::Noiseless);
    const Eigen::VectorXd row_vec =
        inst.a.transpose() * Eigen::VectorXd::Random(inst.a.rows());
    CHECK(project_nullspace(row_vec, inst, cache).norm() <= 1e-10 * row_vec.norm());
    // and the projection is idempotent on a generic vector
    const Eigen::VectorXd v = Eigen::VectorXd::Random(120);
    const Eigen::VectorXd pv = project_nullspace(v, inst, cache);
    CHECK((project_nullspace(pv, inst, cache) - pv).norm() <= 1e-10 * v.norm());
}

TEST_CASE("zero penalty makes z track x + u and resets the dual") {
    const auto inst = generate_instance({60, 0.8, 0.3, 1e-2, 25});
    const auto cache = build_cache(inst, 1.0, AdmmMode::Noisy);
    AdmmConfig cfg = noisy_config(0.0);
    AdmmState state;
    state.x = Eigen::VectorXd::Random(60);
    state.z = Eigen::VectorXd::Random(60);
    state.u = Eigen::VectorXd::Random(60);
    state.rho_admm = 1.0;
    const AdmmState next = admm_noisy_step(state, inst, cache, cfg);
    CHECK((next.z - (next.x + state.u)).norm() < 1e-14);
    CHECK(next.u.norm() < 1e-14);
}

TEST_CASE("huge penalty shrinks z to zero") {
    const auto inst = generate_instance({60, 0.8, 0.3, 1e-2, 27});
    const auto cache = build_cache(inst, 1.0, AdmmMode::Noisy);
    AdmmConfig cfg = noisy_config(1e8);
    AdmmState state;
    state.x = Eigen::VectorXd::Zero(60);
    state.z = Eigen::VectorXd::Zero(60);
    state.u = Eigen::VectorXd::Zero(60);
    state.rho_admm = 1.0;
    const AdmmState next = admm_noisy_step(state, inst, cache, cfg);
    CHECK(next.z.norm() == 0.0);
}

TEST_CASE("scaled dual identity holds to rounding") {
    const auto inst = generate_instance({80, 0.7, 0.3, 1e-2, 29});
    const auto cache = build_cache(inst, 1.0, AdmmMode::Noisy);
    AdmmConfig cfg = noisy_config(0.2);
    AdmmState state;
    state.x = Eigen::VectorXd::Zero(80);
    state.z = Eigen::VectorXd::Zero(80);
    state.u = Eigen::VectorXd::Zero(80);
    state.rho_admm = 1.0;
    for (int t = 0; t < 5; ++t) {
        const AdmmState next = admm_noisy_step(state, inst, cache, cfg);
        CHECK((next.u - state.u - (next.x - next.z)).norm() < 1e-12);
        state = next;
    }
}

TEST_CASE("noisy L1 ADMM solves the LASSO") {
    const auto inst = generate_instance({40, 0.75, 0.2, 1e-2, 31});
    REQUIRE(inst.a.rows() == 30);
    const double lambda_pen = 0.1;
    AdmmConfig cfg = noisy_config(lambda_pen, PenaltyKind::L1);
    cfg.max_iter = 20000;
    const AdmmResult r = run_admm(inst, cfg);
    CHECK(r.status == AdmmStatus::Converged);
    const Eigen::VectorXd ref = lasso_reference(inst, lambda_pen);
    CHECK(lasso_objective(inst, r.estimate(), lambda_pen) <=
          lasso_objective(inst, ref, lambda_pen) + 1e-8);
}

TEST_CASE("noiseless iterates stay feasible and rho follows the schedule") {
    const auto inst = generate_instance({200, 0.7, 0.2, 0.0, 33});
    AdmmConfig cfg = noiseless_config();
    cfg.max_iter = 50;
    cfg.mse_stop = 0.0;  // run all 50 iterations
    const auto cache = build_cache(inst, cfg.rho_admm0, AdmmMode::Noiseless);
    AdmmState state;
    state.x = Eigen::VectorXd::Zero(200);
    state.z = Eigen::VectorXd::Zero(200);
    state.u = Eigen::VectorXd::Zero(200);
    state.rho_admm = cfg.rho_admm0;
    for (int t = 0; t < 50; ++t) {
        state = admm_noiseless_step(state, inst, cache, cfg);
        CHECK((inst.a * state.x - inst.y).norm() <= 1e-8 * inst.y.norm());
        CHECK_THAT(state.rho_admm,
                   Catch::Matchers::WithinRel(std::pow(1.01, t + 1), 1e-12));
    }
}

TEST_CASE("projection fixes an already feasible point") {
    const auto inst = generate_instance({100, 0.6, 0.3, 0.0, 35});
    const auto cache = build_cache(inst, 1.0, AdmmMode::Noiseless);
    AdmmConfig cfg = noiseless_config();
    AdmmState state;
    state.z = inst.x_true;
    state.u = Eigen::VectorXd::Zero(100);
    state.x = Eigen::VectorXd::Zero(100);
    state.rho_admm = 1.0;
    const AdmmState next = admm_noiseless_step(state, inst, cache, cfg);
    CHECK((next.x - inst.x_true).norm() <= 1e-10 * (1.0 + inst.x_true.norm()));
}

TEST_CASE("noiseless mode rejects noisy instances, cache is built once per run") {
    const auto noisy_inst = generate_instance({50, 0.6, 0.3, 1e-2, 37});
    CHECK_THROWS_AS(run_admm(noisy_inst, noiseless_config()), std::domain_error);

    const auto inst = generate_instance({80, 0.8, 0.2, 0.0, 39});
    const long before = cache_build_count().load();
    const AdmmResult r = run_admm(inst, noiseless_config());
    CHECK(cache_build_count().load() == before + 1);
    CHECK(r.status != AdmmStatus::Diverged);
}

TEST_CASE("noiseless recovery well inside the success region") {
    const auto inst = generate_instance({400, 0.8, 0.2, 0.0, 41});
    const AdmmResult r = run_admm(inst, noiseless_config());
    CHECK(mse(r.estimate(), inst.x_true) < 1e-4);
}

TEST_CASE("final support matches the prox threshold at the last iterate") {
    const auto inst = generate_instance({60, 0.8, 0.3, 1e-2, 43});
    AdmmConfig cfg = noisy_config(0.5);
    const AdmmResult r = run_admm(inst, cfg);
    const ProxParams params =
        make_prox_params(cfg.lambda_pen / r.state.rho_admm, cfg.penalty);
    const double thr = prox_threshold(params, cfg.penalty);
    // support of z is exactly where |x + u| clears the threshold; the u here
    // is the pre-update dual, which equals u_final - (x_final - z_final)
    const Eigen::VectorXd u_prev = r.state.u - (r.state.x - r.state.z);
    for (int i = 0; i < 60; ++i) {
        const bool active = std::abs(r.state.x(i) + u_prev(i)) > thr;
        CHECK((r.state.z(i) != 0.0) == active);
    }
}
