#include <doctest.h>

#include <cmath>

#include "phibranch/config.hpp"
#include "phibranch/shoot.hpp"
#include "support.hpp"

using namespace phibranch;
using testing_support::autonomous;

namespace {

// Same orbit set up to tol, in order.
bool same_set(const std::vector<PeriodicOrbit>& a, const std::vector<PeriodicOrbit>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i].start.p - b[i].start.p) > tol || std::abs(a[i].start.v - b[i].start.v) > tol) return false;
    return true;
}

}  // namespace

TEST_SUITE("shoot") {

TEST_CASE("period map at equilibria") {
    auto ex1 = builtin_example("ex1");
    auto r = period_map(ex1.spec, 0.0, 0.0, 0.0);
    CHECK_FALSE(r.escaped);
    CHECK(std::abs(r.p_T) <= 1e-12);
    CHECK(std::abs(r.v_T) <= 1e-12);
    auto ex2 = builtin_example("ex2");
    r = period_map(ex2.spec, 0.0, 1.0, 0.0);
    CHECK(std::abs(r.p_T - 1.0) <= 1e-12);
    r = period_map(ex2.spec, 0.0, 0.5, 0.0);
    CHECK(std::hypot(r.p_T - 0.5, r.v_T) > 1e-3);
}

TEST_CASE("period map fixes exactly the zeros of gamma along v = 0") {
    for (const std::string id : {"ex1", "ex2", "ex3"}) {
        auto cfg = builtin_example(id);
        for (double p = -1.5; p <= 1.5; p += 0.125) {
            auto r = period_map(cfg.spec, 0.0, p, 0.0);
            if (r.escaped) continue;
            bool fixed = std::max(std::abs(r.p_T - p), std::abs(r.v_T)) <= 1e-8;
            CAPTURE(id);
            CAPTURE(p);
            CHECK(fixed == (std::abs(gamma(cfg.spec, p)) <= 1e-12));
        }
    }
}

TEST_CASE("escapes are reported, not thrown") {
    auto cfg = autonomous("v", "x^3", "0");
    auto r = period_map(cfg.spec, 0.0, 20.0, 50.0);
    CHECK(r.escaped);
    CHECK(r.status != IntegrateStatus::Ok);
}

TEST_CASE("Newton finds the trivial pairs") {
    auto ex1 = builtin_example("ex1");
    auto n1 = newton_periodic(ex1.spec, 0.0, 0.1, 0.1);
    REQUIRE(n1.converged());
    CHECK(std::abs(n1.orbit->start.p) <= 1e-8);
    CHECK(n1.orbit->diam <= 1e-6);

    auto ex3 = builtin_example("ex3");
    auto n3 = newton_periodic(ex3.spec, 0.0, 0.9, 0.0);
    REQUIRE(n3.converged());
    CHECK(n3.orbit->start.p == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(n3.orbit->residual <= 1e-10);
}

TEST_CASE("Newton is idempotent on a converged orbit") {
    auto ex2 = builtin_example("ex2");
    auto first = newton_periodic(ex2.spec, 0.6, 0.2, 0.3);
    REQUIRE(first.converged());
    auto again = newton_periodic(ex2.spec, 0.6, first.orbit->start.p, first.orbit->start.v);
    REQUIRE(again.converged());
    CHECK(again.iterations <= 1);
    CHECK(again.orbit->start.p == doctest::Approx(first.orbit->start.p).epsilon(1e-9));
    CHECK(again.orbit->start.v == doctest::Approx(first.orbit->start.v).epsilon(1e-9));
}

TEST_CASE("metrics of simple trajectories") {
    Trajectory constant;
    constant.times = {0.0, 0.5, 1.0};
    constant.states = {{2.0, 0.0}, {2.0, 0.0}, {2.0, 0.0}};
    constant.velocities = {{0.0}, {0.0}, {0.0}};
    auto m = metrics(constant);
    CHECK(m.diam == 0.0);
    CHECK(m.c1norm == 2.0);

    // x = cos t traces the unit circle in the phase plane
    auto cfg = autonomous("v", "-x", "0", 2.0 * M_PI);
    SystemRhs sys(cfg.spec, 0.0);
    IntegrateOptions o;
    o.samples = 2000;
    Trajectory tr = integrate(sys, State{{1.0}, {0.0}}, 2.0 * M_PI, o);
    REQUIRE(tr.ok());
    double oracle = 0.0;
    for (int i = 0; i < 2000; ++i)
        for (int j = 0; j < 2000; j += 7) {
            double a = 2.0 * M_PI * i / 2000, b = 2.0 * M_PI * j / 2000;
            oracle = std::max(oracle, std::hypot(std::cos(a) - std::cos(b), std::sin(a) - std::sin(b)));
        }
    auto h = metrics(tr);
    CHECK(h.diam == doctest::Approx(oracle).epsilon(1e-3));
    CHECK(h.c1norm == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(metrics(tr, C1Norm::Max).c1norm == doctest::Approx(1.0).epsilon(1e-6));

    Trajectory scaled = tr;
    for (auto& s : scaled.states)
        for (auto& c : s) c *= 2.0;
    for (auto& v : scaled.velocities) v[0] *= 2.0;
    auto hs = metrics(scaled);
    CHECK(hs.diam == doctest::Approx(2.0 * h.diam));
    CHECK(hs.c1norm == doctest::Approx(2.0 * h.c1norm));
}

TEST_CASE("grid scan at lam = 0 on ex3") {
    auto cfg = builtin_example("ex3");
    Box box{-2.0, 2.0, -1.0, 1.0};
    auto coarse = grid_scan(cfg.spec, 0.0, box, 15);
    REQUIRE(coarse.orbits.size() == 2);
    CHECK(coarse.orbits[0].start.p == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(coarse.orbits[1].start.p == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(coarse.seeds == 225);
    for (const auto& o : coarse.orbits) {
        auto fresh = verify_orbit(cfg.spec, 0.0, o.start.p, o.start.v);
        REQUIRE(fresh.has_value());
        CHECK(fresh->residual <= 1e-8);
    }
    auto fine = grid_scan(cfg.spec, 0.0, box, 30);
    CHECK(same_set(coarse.orbits, fine.orbits, 1e-5));
}

TEST_CASE("grid scan at lam = 0.6 on ex3 is refinement invariant") {
    auto cfg = builtin_example("ex3");
    auto coarse = grid_scan(cfg.spec, 0.6, *cfg.run.box, 15);
    auto fine = grid_scan(cfg.spec, 0.6, *cfg.run.box, 30);
    CHECK(coarse.orbits.size() == 3);
    CHECK(same_set(coarse.orbits, fine.orbits, 1e-5));
}

TEST_CASE("deduplication") {
    std::vector<PeriodicOrbit> v(3);
    v[0].start = {0.0, 1.0, 0.0};
    v[1].start = {0.0, 1.0 + 1e-7, 0.0};
    v[2].start = {0.0, -1.0, 0.0};
    auto d = dedup_orbits(v, 1e-5);
    REQUIRE(d.size() == 2);
    CHECK(d[0].start.p == -1.0);
}

}  // TEST_SUITE
