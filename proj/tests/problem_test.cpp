#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "logsparse/problem.hpp"

using namespace logsparse;

TEST_CASE("config validation and M rounding") {
    ProblemConfig c{100, 0.5, 0.1, 0.0, 1};
    CHECK(c.m() == 50);
    c.alpha = 0.004;
    CHECK(c.m() == 1);  // floor at 1
    c.alpha = 0.876;
    CHECK(c.m() == 88);

    ProblemConfig bad = c;
    bad.rho = 1.5;
    CHECK_THROWS_AS(generate_instance(bad), std::domain_error);
    bad = c;
    bad.n = 0;
    CHECK_THROWS_AS(generate_instance(bad), std::domain_error);
    bad = c;
    bad.sigma2 = -1.0;
    CHECK_THROWS_AS(generate_instance(bad), std::domain_error);
}

TEST_CASE("zero density gives zero signal, y = w") {
    const auto inst = generate_instance({200, 0.5, 0.0, 1e-2, 42});
    CHECK(inst.x_true.norm() == 0.0);
    CHECK((inst.y - inst.noise).norm() == 0.0);
}

TEST_CASE("noiseless instance satisfies y = A x exactly") {
    const auto inst = generate_instance({300, 0.7, 0.3, 0.0, 5});
    CHECK(inst.noise.norm() == 0.0);
    CHECK((inst.y - inst.a * inst.x_true).norm() == 0.0);
}

TEST_CASE("observation identity holds to machine precision") {
    const auto inst = generate_instance({400, 0.6, 0.2, 1e-2, 9});
    CHECK((inst.y - inst.a * inst.x_true - inst.noise).lpNorm<Eigen::Infinity>() <
          1e-14);
}

TEST_CASE("same seed reproduces bit-identical instances") {
    const ProblemConfig c{150, 0.5, 0.3, 1e-2, 77};
    const auto a = generate_instance(c);
    const auto b = generate_instance(c);
    CHECK(a.a == b.a);
    CHECK(a.x_true == b.x_true);
    CHECK(a.y == b.y);
    ProblemConfig c2 = c;
    c2.seed = 78;
    const auto d = generate_instance(c2);
    CHECK(a.a != d.a);
}

TEST_CASE("large-N statistics match the generating laws") {
    const int n = 100000;
    const double rho = 0.3;
    const auto inst = generate_instance({n, 0.05, rho, 0.0, 123});

    // ||x||^2 / N estimates rho; its std error is sqrt(Var[x^2]) / sqrt(N)
    // with Var[x^2] = 3 rho - rho^2 for the Bernoulli-Gaussian prior.
    const double power = inst.x_true.squaredNorm() / n;
    const double se_power = std::sqrt((3.0 * rho - rho * rho)) / std::sqrt(n);
    CHECK(std::abs(power - rho) < 3.0 * se_power);

    // entries of A have variance 1/N
    const double var_a = inst.a.array().square().mean();
    const double se_var = std::sqrt(2.0) / (n * std::sqrt(inst.a.size()));
    CHECK(std::abs(var_a - 1.0 / n) < 3.0 * se_var);
}

TEST_CASE("mse operation") {
    Eigen::VectorXd a(3), b(3);
    a << 1, 2, 3;
    b << 1, 2, 3;
    CHECK(mse(a, b) == 0.0);
    const Eigen::VectorXd c = a.array() + 0.5;
    CHECK_THAT(mse(c, a), Catch::Matchers::WithinAbs(0.25, 1e-15));
    Eigen::VectorXd wrong(2);
    CHECK_THROWS_AS(mse(a, wrong), std::domain_error);

    // dense standard-normal signal has unit power
    const auto inst = generate_instance({100000, 0.05, 1.0, 0.0, 3});
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(inst.x_true.size());
    const double se = std::sqrt(2.0 / 100000.0);
    CHECK(std::abs(mse(zero, inst.x_true) - 1.0) < 3.0 * se);
}

TEST_CASE("support size follows Binomial(N, rho)") {
    // 100 seeds at N = 1e4; chi-square over equiprobable normal-approx bins,
    // critical value at significance 1e-3 with 7 dof.
    const int n = 10000;
    const double rho = 0.3;
    const int reps = 100;
    const double mean = n * rho;
    const double sd = std::sqrt(n * rho * (1.0 - rho));
    // standard normal quantiles at k/8
    const double q[7] = {-1.150349, -0.674490, -0.318639, 0.0,
                         0.318639,  0.674490,  1.150349};
    int counts[8] = {0};
    for (int r = 0; r < reps; ++r) {
        const auto inst =
            generate_instance({n, 0.01, rho, 0.0, 1000 + static_cast<unsigned>(r)});
        const int support = static_cast<int>(
            (inst.x_true.array() != 0.0).count());
        const double zscore = (support - mean) / sd;
        int bin = 0;
        while (bin < 7 && zscore > q[bin])
            ++bin;
        ++counts[bin];
    }
    double chi2 = 0.0;
    const double expected = reps / 8.0;
    for (int b = 0; b < 8; ++b)
        chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    CHECK(chi2 < 24.32);  // chi2 critical value, df = 7, p = 1e-3
}

TEST_CASE("instance serialization round trip") {
    const auto inst = generate_instance({60, 0.5, 0.3, 1e-2, 11});
    const std::string path = "instance_roundtrip.bin";
    save_instance(inst, path);
    const auto back = load_instance(path);
    std::remove(path.c_str());
    CHECK(back.a == inst.a);
    CHECK(back.x_true == inst.x_true);
    CHECK(back.noise == inst.noise);
    CHECK(back.y == inst.y);
    CHECK(back.config.n == inst.config.n);
    CHECK(back.config.seed == inst.config.seed);
}
