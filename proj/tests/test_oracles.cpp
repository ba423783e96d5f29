#include <cmath>

#include "conservd/oracles.hpp"
#include "doctest.h"

using namespace conservd;

namespace {

ScalarField one_d(const std::string& text) { return expression_field(text, 1); }

double ex1_plus_phi(double L) { return std::log((L + std::sqrt(2.0)) / std::sqrt(2.0)) - L / (L + std::sqrt(2.0)); }

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) mx += std::log(x[k]), my += std::log(y[k]);
    mx /= x.size(), my /= y.size();
    double num = 0, den = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        num += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
        den += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
    }
    return num / den;
}

}  // namespace

TEST_CASE("Feller test for Brownian motion on the line") {
    FellerResult r = feller_test(one_d("1"), one_d("1"));
    REQUIRE(r.plus.L.size() == r.plus.phi.size());
    for (std::size_t k = 0; k < r.plus.L.size(); ++k) {
        const double L = r.plus.L[k];
        CHECK(r.plus.phi[k] == doctest::Approx(L * L / 2.0).epsilon(1e-9));
        CHECK(r.minus.phi[k] == doctest::Approx(L * L / 2.0).epsilon(1e-9));
        CHECK(r.plus.h[k] == doctest::Approx(L).epsilon(1e-9));
        CHECK(r.minus.h[k] == doctest::Approx(-L).epsilon(1e-9));
    }
    CHECK(r.plus.verdict == SideVerdict::diverges);
    CHECK(r.minus.verdict == SideVerdict::diverges);
    CHECK(r.plus.slope == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("Feller test on the one-dimensional example") {
    ScalarField A = one_d("piecewise(x1 >= 0 ? (x1 + sqrt(2))^2 : (x1^4 - x1^3 + 6) / 3)");
    ScalarField phi = one_d("piecewise(x1 > -1 ? 1 : abs(x1)^(-3))");
    FellerResult r = feller_test(A, phi);
    for (std::size_t k = 0; k < r.plus.L.size(); ++k)
        CHECK(r.plus.phi[k] == doctest::Approx(ex1_plus_phi(r.plus.L[k])).epsilon(1e-9));
    CHECK(r.plus.verdict == SideVerdict::diverges);
    CHECK(r.minus.verdict == SideVerdict::diverges);
    CHECK(r.max_dual_rel_diff < 1e-8);
    CHECK(r.h_monotone);
    CHECK(ex1_plus_phi(1e4) - ex1_plus_phi(1e3) == doctest::Approx(2.30004).epsilon(1e-5));
}

TEST_CASE("Feller test for an explosive diffusion") {
    FellerResult r = feller_test(one_d("(1 + x1^2)^2"), one_d("1"));
    CHECK(r.plus.verdict == SideVerdict::bounded);
    CHECK(r.minus.verdict == SideVerdict::bounded);
    CHECK(r.max_dual_rel_diff < 1e-8);
    // h(inf) = pi/4 for 1/(1+x^2)^2.
    CHECK(r.plus.h.back() == doctest::Approx(M_PI / 4.0).epsilon(1e-6));
}

TEST_CASE("scale function is increasing on the grid") {
    for (std::string a : {"1", "(1 + x1^2)^2", "1 + abs(x1)", "exp(-x1^2) + 1"}) {
        FellerResult r = feller_test(one_d(a), one_d("1 + x1^2"));
        CHECK_MESSAGE(r.h_monotone, a);
        for (std::size_t k = 1; k < r.grid_h.size(); ++k) REQUIRE(r.grid_h[k] >= r.grid_h[k - 1]);
    }
}

TEST_CASE("both routes to Phi agree when h keeps growing") {
    for (std::string a : {"1", "1 + x1^2", "exp(-x1^2) + 1"}) {
        FellerResult r = feller_test(one_d(a), one_d("1"));
        CHECK_MESSAGE(r.max_dual_rel_diff < 1e-8, a);
    }
}

TEST_CASE("Wilson interval") {
    double lo, hi;
    wilson_interval(0, 100, lo, hi);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(1.96 * 1.96 / (100 + 1.96 * 1.96)));
    wilson_interval(50, 100, lo, hi);
    CHECK(lo + hi == doctest::Approx(1.0));
    CHECK(lo == doctest::Approx(0.40383).epsilon(1e-4));
    wilson_interval(100, 100, lo, hi);
    CHECK(hi == doctest::Approx(1.0));
    CHECK(lo < 1.0);
}

TEST_CASE("escape probabilities of planar Brownian motion") {
    EmOptions o;
    o.x0 = {0.0, 0.0};
    o.T = 1.0;
    o.dt = 1e-2;
    o.paths = 20000;
    o.seed = 7;
    ExplosionEstimate e = em_explosion_mc(identity_matrix(2, 0.5), zero_vector(2), constant_field(1.0, 2), 1, o);
    REQUIRE(e.rungs.size() == 3);
    for (std::size_t k = 1; k < e.rungs.size(); ++k) CHECK(e.rungs[k].p <= e.rungs[k - 1].p);
    // Union bound over coordinates with the reflection principle: 2 * 4 * P(Z >= 8 / sqrt(2)).
    const double bound = 8.0 * 0.5 * std::erfc(8.0 / std::sqrt(2.0) / std::sqrt(2.0));
    CHECK(bound < 1e-3);
    CHECK(e.rungs.back().p < 1e-3);
    CHECK(e.invalid_paths == 0);

    // Halving dt moves the estimate by less than two combined confidence radii.
    EmOptions half = o;
    half.dt = 5e-3;
    ExplosionEstimate f = em_explosion_mc(identity_matrix(2, 0.5), zero_vector(2), constant_field(1.0, 2), 1, half);
    const auto& a = e.rungs.front();
    const auto& b = f.rungs.front();
    CHECK(std::abs(a.p - b.p) <= (a.hi - a.lo) + (b.hi - b.lo));
}

TEST_CASE("Monte Carlo runs are reproducible") {
    EmOptions o;
    o.x0 = {0.0};
    o.dt = 1e-2;
    o.paths = 2000;
    o.seed = 3;
    auto run = [&] { return em_explosion_mc(identity_matrix(1), zero_vector(1), constant_field(1.0, 1), 1, o); };
    ExplosionEstimate a = run(), b = run();
    for (std::size_t k = 0; k < a.rungs.size(); ++k) CHECK(a.rungs[k].escaped == b.rungs[k].escaped);
}

TEST_CASE("drift and diffusion of the generated SDE") {
    // A = 1 + x^2 on the line, phi = exp(x): b = 2x + (1 + x^2) * 1 + B.
    SdeModel s = make_sde(matrix_from_expressions({"1 + x1^2"}, 1), vector_from_expressions({"3"}, 1),
                          one_d("exp(x1)"), 1);
    double x = 0.7, b, sig;
    s.coefficients(&x, &b, &sig);
    CHECK(b == doctest::Approx(2 * x + 1 + x * x + 3).epsilon(1e-6));
    CHECK(sig * sig == doctest::Approx(2 * (1 + x * x)));
    SdeModel s2 = make_sde(matrix_from_expressions({"1 + x1^2"}, 1), zero_vector(1), one_d("exp(x1)"), 2);
    s2.coefficients(&x, &b, &sig);
    CHECK(b == doctest::Approx(2 * x + 2 * (1 + x * x)).epsilon(1e-6));
}

TEST_CASE("one Euler step matches the generator to second order") {
    const std::vector<double> dts = {1e-2, 5e-3, 2.5e-3};
    SUBCASE("squared norm under Brownian motion is exact") {
        SdeModel s = make_sde(identity_matrix(2, 0.5), zero_vector(2), constant_field(1.0, 2), 1);
        const Vec x0 = {0.3, -1.2};
        auto f = [](const double* x) { return x[0] * x[0] + x[1] * x[1]; };
        for (double dt : dts) {
            const double defect = em_step_expectation(s, f, x0, dt) - f(x0.data()) - dt * 2.0;
            CHECK(std::abs(defect) < 1e-12);
        }
    }
    SUBCASE("fourth power under Brownian motion") {
        SdeModel s = make_sde(identity_matrix(1, 0.5), zero_vector(1), constant_field(1.0, 1), 1);
        const Vec x0 = {0.8};
        auto f = [](const double* x) { return std::pow(x[0], 4); };
        std::vector<double> defects;
        for (double dt : dts)
            defects.push_back(std::abs(em_step_expectation(s, f, x0, dt) - f(x0.data()) - dt * 6.0 * 0.64));
        CHECK(log_slope(dts, defects) >= 1.8);
    }
    SUBCASE("variable coefficients") {
        // A = 1 + x^2, phi = 1: Lf = (1 + x^2) f'' + 2x f'; for f = x^4, Lf = 12x^2 + 20x^4.
        SdeModel s = make_sde(matrix_from_expressions({"1 + x1^2"}, 1), zero_vector(1), constant_field(1.0, 1), 1);
        const Vec x0 = {0.6};
        auto f = [](const double* x) { return std::pow(x[0], 4); };
        const double x = x0[0];
        const double Lf = 12 * x * x + 20 * std::pow(x, 4);
        std::vector<double> defects;
        for (double dt : dts) defects.push_back(std::abs(em_step_expectation(s, f, x0, dt) - f(x0.data()) - dt * Lf));
        CHECK(log_slope(dts, defects) >= 1.8);
    }
}
