#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "logsparse/quadrature.hpp"

using namespace logsparse;

TEST_CASE("normalization and second moment of the standard normal") {
    QuadratureConfig quad;
    CHECK_THAT(gaussian_expectation([](double) { return 1.0; }, {}, quad),
               Catch::Matchers::WithinAbs(1.0, quad.abs_tol));
    CHECK_THAT(gaussian_expectation([](double z) { return z * z; }, {}, quad),
               Catch::Matchers::WithinAbs(1.0, quad.abs_tol));
    CHECK_THAT(gaussian_expectation([](double z) { return z; }, {}, quad),
               Catch::Matchers::WithinAbs(0.0, quad.abs_tol));
}

TEST_CASE("tail indicator matches erfc") {
    QuadratureConfig quad;
    const double want = 0.5 * std::erfc(1.5 / std::sqrt(2.0));
    const double got = gaussian_expectation(
        [](double z) { return z > 1.5 ? 1.0 : 0.0; }, {1.5}, quad);
    CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-10));
    CHECK_THAT(want, Catch::Matchers::WithinAbs(0.0668072, 1e-7));
}

TEST_CASE("kink splitting handles a discontinuous integrand") {
    QuadratureConfig quad;
    // E[|z| > a] with the kinks supplied: converges fast and exactly
    const double a = 0.37;
    const double want = std::erfc(a / std::sqrt(2.0));
    const double got = gaussian_expectation(
        [a](double z) { return std::abs(z) > a ? 1.0 : 0.0; }, {-a, a}, quad);
    CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-10));
}

TEST_CASE("budget exhaustion raises with the best estimate attached") {
    QuadratureConfig quad;
    quad.max_subdivisions = 2;
    quad.abs_tol = 1e-14;
    quad.rel_tol = 1e-14;
    bool threw = false;
    try {
        gaussian_expectation([](double z) { return std::abs(z) > 0.777 ? 1.0 : 0.0; },
                             {}, quad);
    } catch (const QuadratureError& e) {
        threw = true;
        CHECK(std::isfinite(e.estimate));
        CHECK(e.error_bound > 0.0);
    }
    CHECK(threw);
}

TEST_CASE("kinks outside the truncated domain are ignored") {
    QuadratureConfig quad;
    const double got =
        gaussian_expectation([](double z) { return z * z; }, {-50.0, 50.0}, quad);
    CHECK_THAT(got, Catch::Matchers::WithinAbs(1.0, quad.abs_tol));
}
