#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "phibranch/config.hpp"
#include "phibranch/degree.hpp"
#include "support.hpp"

using namespace phibranch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Polynomial with simple roots r_i and leading coefficient c.
struct RootPoly {
    double c = 1.0;
    std::vector<double> roots;

    double operator()(double x) const {
        double y = c;
        for (double r : roots) y *= x - r;
        return y;
    }
    // Sum of sign p'(r) over roots in (a, b): the degree from first principles.
    int oracle(double a, double b) const {
        int d = 0;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (!(a < roots[i] && roots[i] < b)) continue;
            double dp = c;
            for (std::size_t j = 0; j < roots.size(); ++j)
                if (j != i) dp *= roots[i] - roots[j];
            d += dp > 0 ? 1 : -1;
        }
        return d;
    }
};

RootPoly random_poly(std::mt19937& rng) {
    std::uniform_int_distribution<int> count(1, 5);
    std::uniform_real_distribution<double> root(-4.0, 4.0), lead(0.5, 2.0);
    RootPoly p;
    p.c = (rng() % 2 ? 1.0 : -1.0) * lead(rng);
    int k = count(rng);
    while (static_cast<int>(p.roots.size()) < k) {
        double r = root(rng);
        bool close = false;
        for (double q : p.roots) close = close || std::abs(q - r) < 0.2;
        if (!close) p.roots.push_back(r);
    }
    std::sort(p.roots.begin(), p.roots.end());
    return p;
}

// A point at least 0.05 from every root.
double clear_point(const RootPoly& p, std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (;;) {
        double x = u(rng);
        bool ok = true;
        for (double r : p.roots) ok = ok && std::abs(x - r) > 0.05;
        if (ok) return x;
    }
}

VectorField plane_field(std::function<double(double)> first) {
    VectorField F;
    F.dim = 2;
    F.eval = [first](std::span<const double> z, std::span<double> out) {
        out[0] = first(z[0]);
        out[1] = z[1];
    };
    return F;
}

}  // namespace

TEST_SUITE("degree") {

TEST_CASE("scalar degrees of the examples") {
    auto ex1 = builtin_example("ex1");
    CHECK(degree_1d(gamma_field(ex1.spec), Interval{-10.0, 10.0}).degree == 1);
    CHECK(degree_1d(gamma_field(ex1.spec), Interval{-kInf, kInf}).degree == 1);

    auto ex2 = builtin_example("ex2");
    auto g2 = gamma_field(ex2.spec);
    CHECK(degree_1d(g2, Interval{-0.5, 0.5}).degree == -1);
    CHECK(degree_1d(g2, Interval{0.5, 1.5}).degree == 1);
    CHECK(degree_1d(g2, Domain({{-0.5, 0.5}, {0.5, 1.5}}, 1)).degree == 0);
    const double holes[] = {0.0, 1.0};
    auto punctured = degree_1d(g2, Domain().excluding(holes));
    CHECK(punctured.degree == 0);
    CHECK(punctured.zeros.empty());

    auto ex3 = builtin_example("ex3");
    auto g3 = gamma_field(ex3.spec);
    CHECK(degree_1d(g3, Interval{-kInf, 0.0}).degree == -1);
    CHECK(degree_1d(g3, Interval{0.0, kInf}).degree == 1);
    auto whole = degree_1d(g3, Interval{-kInf, kInf});
    CHECK(whole.degree == 0);
    REQUIRE(whole.zeros.size() == 2);
    CHECK(whole.zeros[0].point[0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(whole.zeros[0].sign == -1);
    CHECK(whole.zeros[1].sign == 1);
}

TEST_CASE("scalar degree errors") {
    auto id = VectorField::scalar([](double x) { return x; }, "id");
    CHECK_THROWS_AS(degree_1d(id, Interval{0.0, 1.0}), NumericError);
    auto wave = VectorField::scalar([](double x) { return std::sin(x); }, "sin");
    CHECK_THROWS_AS(degree_1d(wave, Interval{0.5, kInf}), NumericError);
    try {
        degree_1d(id, Interval{-1.0, 0.0});
    } catch (const NumericError& e) {
        CHECK(e.kind() == NumericError::Kind::Inadmissible);
    }
}

TEST_CASE("regular degree on boxes") {
    const Interval box[] = {{-5.0, 5.0}, {-5.0, 5.0}};
    CHECK(degree_regular(plane_field([](double) { return -1.0; }), box, 8).degree == 0);
    CHECK(degree_regular(plane_field([](double p) { return std::atan(p); }), box, 8).degree == 1);
    const Interval box2[] = {{-0.5, 1.5}, {-1.0, 1.0}};
    auto d = degree_regular(plane_field([](double p) { return p * p - p; }), box2, 8);
    CHECK(d.degree == 0);
    CHECK(d.zeros.size() == 2);
    const Interval near[] = {{-0.5, 0.5}, {-1.0, 1.0}};
    CHECK(degree_regular(plane_field([](double p) { return p * p - p; }), near, 8).degree == -1);
}

TEST_CASE("regular degree errors") {
    const Interval edge[] = {{0.0, 1.0}, {-1.0, 1.0}};
    try {
        degree_regular(plane_field([](double p) { return p - 1e-5; }), edge, 8);
        FAIL("no error");
    } catch (const NumericError& e) {
        CHECK(e.kind() == NumericError::Kind::Inadmissible);
    }
    const Interval box[] = {{-1.0, 1.0}, {-1.0, 1.0}};
    try {
        degree_regular(plane_field([](double p) { return p * p; }), box, 8);
        FAIL("no error");
    } catch (const NumericError& e) {
        CHECK(e.kind() == NumericError::Kind::Degenerate);
    }
}

TEST_CASE("three dimensional boxes") {
    VectorField F;
    F.dim = 3;
    F.eval = [](std::span<const double> z, std::span<double> out) {
        out[0] = z[1];
        out[1] = z[0];
        out[2] = z[2] * z[2] * z[2] + z[2];
    };
    const Interval box[] = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
    CHECK(degree_regular(F, box, 6).degree == -1);
}

TEST_CASE("axioms on random polynomials") {
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 50; ++trial) {
        RootPoly p = random_poly(rng);
        auto F = VectorField::scalar(p, "poly");
        double a = clear_point(p, rng, -5.0, -1.0), b = clear_point(p, rng, 1.0, 5.0);
        double c = clear_point(p, rng, a + 0.1, b - 0.1);
        CAPTURE(trial);
        int whole = degree_1d(F, Interval{a, b}).degree;
        CHECK(whole == p.oracle(a, b));
        // additivity
        CHECK(whole == degree_1d(F, Interval{a, c}).degree + degree_1d(F, Interval{c, b}).degree);
        // excision: removing a closed set free of zeros
        CHECK(whole == degree_1d(F, Domain({{a, c - 0.01}, {c + 0.01, b}}, 1)).degree);
        // homotopy under a perturbation smaller than min |F| on the boundary
        double eps = 0.5 * std::min(std::abs(p(a)), std::abs(p(b)));
        auto G = VectorField::scalar([p, eps](double x) { return p(x) + eps * std::sin(3.0 * x); }, "pert");
        CHECK(degree_1d(G, Interval{a, b}).degree == whole);
        // agreement with the regular-value computation on the product with id
        const Interval box[] = {{a, b}, {-1.0, 1.0}};
        CHECK(degree_regular(plane_field(p), box, 24).degree == whole);
        // zero signs match the derivative
        for (const auto& z : degree_1d(F, Interval{a, b}).zeros) {
            double h = 1e-6;
            double dp = (p(z.point[0] + h) - p(z.point[0] - h)) / (2 * h);
            CHECK(z.sign == (dp > 0 ? 1 : -1));
        }
    }
}

TEST_CASE("reduced degree check on the examples") {
    auto ex1 = builtin_example("ex1");
    auto r1 = reduced_degree_check(ex1.spec, Interval{-kInf, kInf});
    CHECK(r1.reduced_degree == 1);
    CHECK(r1.magnitudes_equal);
    CHECK(std::abs(r1.product_degree) == 1);

    auto ex2 = builtin_example("ex2");
    auto r0 = reduced_degree_check(ex2.spec, Interval{-0.5, 0.5});
    CHECK(r0.reduced_degree == -1);
    CHECK(r0.magnitudes_equal);
    auto r2 = reduced_degree_check(ex2.spec, Interval{0.5, 1.5});
    CHECK(r2.reduced_degree == 1);
    CHECK(r2.magnitudes_equal);
}

TEST_CASE("identity problem") {
    // G(p, u) = (u, p) has Jacobian determinant -1
    auto cfg = testing_support::autonomous("v", "x", "0");
    auto r = reduced_degree_check(cfg.spec, Interval{-2.0, 2.0});
    CHECK(r.reduced_degree == 1);
    CHECK(r.product_degree == -1);
    CHECK(r.magnitudes_equal);
    CHECK(r.inverse_slope_sign == 1);
}

TEST_CASE("average wind degree for the lambda-perturbed form") {
    auto cfg = testing_support::perturbed("v^3 + v", "x^2 - 1 + sin(2*pi*t)");
    auto w = wind_field(cfg.spec);
    CHECK(w(2.0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(degree_1d(w, Interval{0.0, 3.0}).degree == 1);
    CHECK(degree_1d(w, Interval{-3.0, 0.0}).degree == -1);
    auto r = reduced_degree_check(cfg.spec, Interval{0.0, 3.0});
    CHECK(r.reduced_name == "w");
    CHECK(r.magnitudes_equal);

    auto ex1 = builtin_example("ex1");
    auto w1 = wind_field(ex1.spec);
    CHECK(w1(0.3) == doctest::Approx(-1.0).epsilon(1e-10));
}

}  // TEST_SUITE
