#include <doctest.h>

#include <cmath>
#include <random>

#include "phibranch/config.hpp"
#include "phibranch/normalform.hpp"
#include "support.hpp"

using namespace phibranch;

TEST_SUITE("normalform") {

TEST_CASE("direct right-hand side on ex3") {
    auto cfg = builtin_example("ex3");
    SystemRhs sys(cfg.spec, 1.0);
    // y = 2 gives x' = 1; y' = g(0) + f(0, 0, 1, 1) = -1 + 1
    State d = rhs(sys, 0.0, State{{0.0}, {2.0}});
    CHECK(d.x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.y[0] == doctest::Approx(0.0).epsilon(1e-12));
    d = rhs(sys, 0.25, State{{2.0}, {0.0}});
    CHECK(d.x[0] == 0.0);
    // g(2) = 3/5, f(1/4, 2, 0) = 4 + 1 - 2
    CHECK(d.y[0] == doctest::Approx(0.6 + 3.0).epsilon(1e-12));
}

TEST_CASE("split form agrees with the direct form") {
    auto cfg = builtin_example("ex3");
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> lam(0.0, 2.0), x(-3.0, 3.0), y(-10.0, 10.0), t(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        SystemRhs sys(cfg.spec, lam(rng));
        State s{{x(rng)}, {y(rng)}};
        double tt = t(rng);
        State a = rhs(sys, tt, s), b = rhs_split(sys, tt, s);
        worst = std::max(worst, std::abs(a.x[0] - b.x[0]) / (1.0 + std::abs(a.x[0])));
        worst = std::max(worst, std::abs(a.y[0] - b.y[0]) / (1.0 + std::abs(a.y[0])));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("lam-independent phi makes both forms identical") {
    auto cfg = builtin_example("ex1");
    SystemRhs sys(cfg.spec, 0.8);
    for (double y : {-3.0, -0.1, 0.0, 0.4, 7.0}) {
        State s{{0.3}, {y}};
        State a = rhs(sys, 0.1, s), b = rhs_split(sys, 0.1, s);
        CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-14));
        CHECK(a.y[0] == doctest::Approx(b.y[0]).epsilon(1e-14));
    }
}

TEST_CASE("at lam = 0 the system is the unperturbed one") {
    auto cfg = builtin_example("ex2");
    SystemRhs sys(cfg.spec, 0.0);
    State d = rhs(sys, 1.3, State{{0.5}, {3.0}});
    CHECK(d.x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.y[0] == doctest::Approx(0.25 - 0.5));

    auto lp = testing_support::perturbed("v^3 + v", "x - sin(2*pi*t)");
    SystemRhs lsys(lp.spec, 0.0);
    CHECK(rhs(lsys, 0.2, State{{0.7}, {1.0}}).y[0] == 0.0);
}

TEST_CASE("velocity and state conversion are inverse") {
    auto cfg = builtin_example("ex3");
    SystemRhs sys(cfg.spec, 0.6);
    for (double v : {-2.0, -0.3, 0.0, 0.9, 4.0}) {
        double x[] = {0.4}, vv[] = {v}, s[2], back[1];
        sys.state_from_velocity(0.0, x, vv, s);
        sys.velocity(0.0, s, back);
        CHECK(back[0] == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("forcing integral is appended") {
    auto lp = testing_support::perturbed("v", "x + 2");
    SystemRhs sys = SystemRhs(lp.spec, 0.5).with_forcing_integral();
    CHECK(sys.accumulates_forcing());
    CHECK(sys.state_dim() == 3);
    double s[] = {1.0, 0.0, 0.0}, ds[3];
    sys(0.0, s, ds);
    CHECK(ds[1] == doctest::Approx(1.5));
    CHECK(ds[2] == doctest::Approx(3.0));
}

TEST_CASE("states outside the domain are rejected") {
    nlohmann::ordered_json j = builtin_config("ex2");
    j["domain"] = {{0.5, "inf"}};
    auto cfg = parse_problem_config(j);
    SystemRhs sys(cfg.spec, 0.0);
    CHECK_THROWS_AS(rhs(sys, 0.0, State{{0.1}, {0.0}}), NumericError);
}

}  // TEST_SUITE
