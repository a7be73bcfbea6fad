#include <doctest.h>

#include <cmath>
#include <random>

#include "phibranch/config.hpp"
#include "phibranch/problem.hpp"
#include "support.hpp"

using namespace phibranch;
using testing_support::autonomous;
using testing_support::perturbed;

TEST_SUITE("problem") {

TEST_CASE("partial inverse on known values") {
    auto ex1 = builtin_example("ex1");
    auto ex2 = builtin_example("ex2");
    auto ex3 = builtin_example("ex3");
    // v^3 + v = 10 at v = 2
    CHECK(psi(ex1.spec, 0.0, 0.3, 10.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(psi(ex3.spec, 0.0, 0.5, 0.7) == doctest::Approx(0.7).epsilon(1e-12));
    // v^3 + v = 2 at v = 1
    CHECK(psi(ex3.spec, 1.0, 0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(phi0_inverse(ex2.spec, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(phi0_inverse(ex1.spec, -2.0) == doctest::Approx(-1.0).epsilon(1e-12));
    for (const auto& id : builtin_ids()) CHECK(std::abs(phi0_inverse(builtin_example(id).spec, 0.0)) <= 1e-14);
}

TEST_CASE("inversion identity on random samples") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> lam(0.0, 2.0), x(-3.0, 3.0), u(-50.0, 50.0);
    for (const auto& id : builtin_ids()) {
        auto cfg = builtin_example(id);
        for (int i = 0; i < 1000; ++i) {
            double l = lam(rng), xx = x(rng), uu = u(rng);
            double q = psi(cfg.spec, l, xx, uu);
            CHECK(std::abs(cfg.spec.phi(l, xx, q) - uu) <= 1e-10 * (1.0 + std::abs(uu)));
        }
    }
}

TEST_CASE("phi0 inverse does not depend on x") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> x(-5.0, 5.0), u(-20.0, 20.0);
    for (const auto& id : builtin_ids()) {
        auto cfg = builtin_example(id);
        for (int i = 0; i < 200; ++i) {
            double uu = u(rng);
            CHECK(psi(cfg.spec, 0.0, x(rng), uu) == doctest::Approx(psi(cfg.spec, 0.0, x(rng), uu)).epsilon(1e-12));
        }
    }
}

TEST_CASE("Hadamard quotient") {
    auto ex1 = builtin_example("ex1");
    auto ex3 = builtin_example("ex3");
    CHECK(hadamard_h(ex1.spec, 0.7, 0.2, 3.0) == doctest::Approx(0.0));
    // psi(1, x, 2) = 1, phi0^{-1}(2) = 2
    CHECK(hadamard_h(ex3.spec, 1.0, 0.0, 2.0) == doctest::Approx(-1.0).epsilon(1e-10));
    // h(lam, x, u) -> -u^3 as lam -> 0 for phi = lam v^3 + v
    CHECK(hadamard_h(ex3.spec, 1e-4, 0.0, 0.5) == doctest::Approx(-0.125).epsilon(1e-3));
    CHECK(std::abs(hadamard_h(ex3.spec, 1e-3, 0.0, 0.5) - hadamard_h(ex3.spec, 1e-4, 0.0, 0.5)) < 1e-2);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> lam(0.05, 2.0), u(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        double l = lam(rng), uu = u(rng);
        double lhs = psi(ex3.spec, l, 0.0, uu);
        double rhs = phi0_inverse(ex3.spec, uu) + l * hadamard_h(ex3.spec, l, 0.0, uu);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("average wind") {
    auto ex1 = builtin_example("ex1");
    auto ex2 = builtin_example("ex2");
    CHECK(average_wind(ex1.spec, 0.4) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(average_wind(ex2.spec, 0.3) == doctest::Approx(0.18).epsilon(1e-10));
    CHECK(average_wind(ex2.spec, 1.7) == doctest::Approx(5.78).epsilon(1e-10));
    auto zero = perturbed("v", "0");
    CHECK(average_wind(zero.spec, 2.0) == 0.0);
    auto constant = perturbed("v", "x^2 - 3*x");
    CHECK(average_wind(constant.spec, 1.5) == doctest::Approx(constant.spec.f(0.0, 1.5, 0.0, 0.0)));
    // cos^2 averages to 1/2 over a period
    auto sq = perturbed("v", "cos(2*pi*t)^2 + x");
    CHECK(average_wind(sq.spec, 0.25) == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("gamma field") {
    CHECK(gamma(builtin_example("ex1").spec, 1.0) == doctest::Approx(std::atan(1.0)));
    auto ex2 = builtin_example("ex2");
    CHECK(gamma(ex2.spec, 0.0) == 0.0);
    CHECK(gamma(ex2.spec, 1.0) == 0.0);
    CHECK(gamma(ex2.spec, 2.0) == 2.0);
    auto ex3 = builtin_example("ex3");
    CHECK(gamma(ex3.spec, 1.0) == 0.0);
    CHECK(gamma(ex3.spec, -1.0) == 0.0);
    auto lp = perturbed("v", "x");
    CHECK_THROWS_AS(gamma(lp.spec, 0.0), NumericError);
}

TEST_CASE("inverse failures are reported") {
    // v^2 never reaches -1
    auto even = autonomous("v^2", "x", "0");
    CHECK_THROWS_AS(psi(even.spec, 0.0, 0.0, -1.0), NumericError);
    CHECK_FALSE(check_monotone(autonomous("v^3 - v", "x", "0").spec, 1.0).passed);
    CHECK(check_monotone(builtin_example("ex3").spec, 2.0).passed);
}

TEST_CASE("configuration diagnostics") {
    CHECK_FALSE(check_phi0_independent(autonomous("x*v + v", "x", "0").spec).passed);
    CHECK(check_phi0_independent(builtin_example("ex3").spec).passed);
    CHECK_FALSE(check_periodicity(autonomous("v", "x", "t").spec).passed);
    for (const auto& id : builtin_ids()) {
        auto cfg = builtin_example(id);
        CAPTURE(id);
        CHECK(check_inversion(cfg.spec, 2.0).passed);
        CHECK(check_periodicity(cfg.spec).passed);
    }
}

TEST_CASE("variables outside the signature are rejected") {
    CHECK_THROWS_AS(autonomous("v", "t*x", "0"), ConfigError);
    CHECK_THROWS_AS(autonomous("v + u", "x", "0"), ConfigError);
    CHECK_THROWS_AS(autonomous("v", "x", "y"), ConfigError);
}

TEST_CASE("domains") {
    Domain line;
    CHECK(line.contains(1e300));
    const double holes[] = {0.0, 1.0};
    Domain punctured = line.excluding(holes);
    REQUIRE(punctured.intervals().size() == 3);
    CHECK_FALSE(punctured.contains(0.0));
    CHECK_FALSE(punctured.contains(1.0));
    CHECK(punctured.component(0.5) == 1);
    CHECK(punctured.component(-2.0) == 0);
    CHECK(punctured.component(1.0) == -1);
    CHECK(punctured.contains(punctured.sample_point()));
    CHECK_THROWS_AS(Domain({{1.0, 0.0}}, 1), ConfigError);
    CHECK_THROWS_AS(Domain({{0.0, 2.0}, {1.0, 3.0}}, 1), ConfigError);
}

TEST_CASE("adaptive Simpson") {
    double v = adaptive_simpson([](double t) { return std::exp(t); }, 0.0, 1.0, 1e-12, 1e-14);
    CHECK(v == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
}

}  // TEST_SUITE
