#include <cmath>

#include "conservd/criteria.hpp"
#include "conservd/registry.hpp"
#include "doctest.h"

using namespace conservd;

namespace {

const std::vector<int> kSchedule = {1, 2, 4, 8, 16, 32, 64};

SamplePlan small_plan(std::size_t samples = 4000) {
    SamplePlan p;
    p.samples = samples;
    p.refinement_rounds = 1;
    p.refine_samples = 200;
    return p;
}

CriterionFields plain_fields(const Problem& p) {
    return make_criterion_fields(p.A, p.B, p.phi, p.mu_power, p.domain);
}

CriterionFields sectorial_fields(const Problem& p) {
    auto [sym, anti] = split_matrix(p.A);
    return make_criterion_fields(sym, beta_field(anti, p.B, p.phi), p.phi, p.mu_power, p.domain);
}

GrowthSampler registry_sampler(const std::string& name, std::vector<int> schedule = kSchedule,
                               std::size_t samples = 4000) {
    return GrowthSampler(plain_fields(build_problem(registry_entry(name))), std::move(schedule), small_plan(samples));
}

Problem with_zero_drift(Problem p) {
    p.B = zero_vector(p.dim);
    return p;
}

}  // namespace

TEST_CASE("phi families") {
    auto lp = PhiFamily::log_power(3.0, 1.0);
    CHECK(lp.phi(std::exp(1.0) - 1.0) == doctest::Approx(3.0));
    CHECK(lp.dphi(1.0) == doctest::Approx(1.5));
    auto q = PhiFamily::quadratic(2.0);
    CHECK(q.phi(3.0) == doctest::Approx(9.0));
    CHECK(q.dphi(3.0) == doctest::Approx(6.0));
    auto ll = PhiFamily::loglog(1.0);
    CHECK(ll.phi(0.0) == 0.0);
    CHECK(ll.dphi(0.0) == doctest::Approx(1.0));
    CHECK_THROWS(PhiFamily::log_power(1.0, 2.0));
    CHECK_THROWS(PhiFamily::quadratic(0.0));
    // dphi agrees with a central difference and every family is increasing.
    for (const auto& f : {lp, q, ll, PhiFamily::log_power(0.5, 0.0), PhiFamily::log_power(2.0, 1.5)}) {
        double prev = f.phi(0.0);
        for (double r = 0.5; r < 300.0; r *= 1.7) {
            const double h = 1e-5 * r;
            CHECK(f.dphi(r) == doctest::Approx((f.phi(r + h) - f.phi(r - h)) / (2.0 * h)).epsilon(1e-6));
            CHECK(f.phi(r) > prev);
            prev = f.phi(r);
        }
    }
}

TEST_CASE("growth quantities for Brownian motion with the quadratic phi") {
    GrowthSampler s = registry_sampler("brownian", {1, 2, 4, 8});
    GrowthTable t = build_growth_table(s, PhiFamily::quadratic(1.0));
    REQUIRE(t.rows.size() == 4);
    for (const auto& r : t.rows) {
        CHECK(r.a.value == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(r.b.value <= 4.0 * r.n * (1.0 + 1e-12));
        CHECK(r.b.value >= 4.0 * r.n * 0.99);
        CHECK(r.bnorm.value == 0.0);
        CHECK(r.vol.value == doctest::Approx(12.0 * M_PI * r.n * r.n).epsilon(1e-12));
    }
}

TEST_CASE("A_hat recomposes from its parts") {
    for (const char* name : {"brownian", "symdf", "gim-trutnau-2d", "gim-trutnau-1d"}) {
        GrowthSampler s = registry_sampler(name, {1, 2, 4, 8}, 2000);
        GrowthTable t = build_growth_table(s, PhiFamily::log_power(2.0, 1.0));
        for (const auto& r : t.rows) {
            const double expect = (std::sqrt(r.a.value) + r.b.value) * std::sqrt(r.vol.value) + r.bnorm.value;
            CHECK(r.a_hat == expect);
            CHECK(recompose_a_hat(r) == r.a_hat);
        }
    }
}

TEST_CASE("intrinsic gauge preset keeps a_n at most 1") {
    Problem p = build_problem(registry_entry("symdf"));
    GrowthSampler raw(plain_fields(p), {1, 2, 4}, small_plan(2000));
    GrowthSampler capped(with_intrinsic_gauge(plain_fields(p)), {1, 2, 4}, small_plan(2000));
    GrowthTable tr = build_growth_table(raw, PhiFamily::log_power(1.0, 1.0));
    GrowthTable tc = build_growth_table(capped, PhiFamily::log_power(1.0, 1.0));
    for (std::size_t k = 0; k < tc.rows.size(); ++k) {
        CHECK(tr.rows[k].a.value > 1.0);
        CHECK(tc.rows[k].a.value <= 1.0);
    }
}

TEST_CASE("c_n is nondecreasing in n on every registry entry") {
    for (const auto& e : registry()) {
        GrowthSampler s = registry_sampler(e.name, {1, 2, 4, 8, 16}, 1000);
        GrowthTable t = build_growth_table(s, PhiFamily::log_power(1.0, 1.0));
        for (std::size_t k = 1; k < t.rows.size(); ++k) CHECK_MESSAGE(t.rows[k].c.value >= t.rows[k - 1].c.value, e.name);
    }
}

TEST_CASE("c_n is nonincreasing in k0") {
    const std::vector<int> sched = {2, 4, 8, 16};
    for (const auto& e : registry()) {
        std::vector<GrowthTable> tables;
        for (double k0 : {1.0, 2.0, 4.0}) {
            Problem p = build_problem(registry_entry(e.name));
            p.domain.k0 = k0;
            GrowthSampler s(plain_fields(p), sched, small_plan(1000));
            tables.push_back(build_growth_table(s, PhiFamily::log_power(1.0, 1.0)));
        }
        for (std::size_t i = 1; i < tables.size(); ++i)
            for (std::size_t k = 0; k < sched.size(); ++k)
                CHECK_MESSAGE(tables[i].rows[k].c.value <= tables[i - 1].rows[k].c.value, e.name);
    }
}

TEST_CASE("decay surrogate on synthetic tables") {
    GrowthTable t;
    t.phi = PhiFamily::quadratic(1.0);
    for (int n : {1, 2, 4, 8, 16}) {
        GrowthRow r;
        r.n = n;
        r.a_hat = n;
        t.rows.push_back(r);
    }
    DecayResult d = theorem6_decay(t, 0.5);
    REQUIRE(d.log_q.size() == t.rows.size());
    for (std::size_t k = 0; k < d.n.size(); ++k)
        CHECK(d.log_q[k] == doctest::Approx(-t.phi.phi(2.0 * d.n[k])).epsilon(1e-12));
    CHECK(d.verdict == Verdict::satisfied);

    // c_n = phi(2n)/T cancels the decay; the bound then grows with A_hat / n.
    const double T = 0.25;
    for (auto& r : t.rows) {
        r.c.value = t.phi.phi(2.0 * r.n) / T;
        r.a_hat = std::pow(r.n, 3.0);
    }
    DecayResult g = theorem6_decay(t, T);
    for (std::size_t k = 0; k < g.n.size(); ++k) CHECK(g.log_q[k] == doctest::Approx(2.0 * std::log(g.n[k])));
    CHECK(g.verdict == Verdict::violated);
}

TEST_CASE("decay surrogate for Brownian motion with a short horizon") {
    GrowthSampler s = registry_sampler("brownian", {1, 2, 4, 8, 16}, 2000);
    CriterionVerdict v = theorem6_verdict(build_growth_table(s, PhiFamily::quadratic(1.0)), 0.1);
    CHECK(v.verdict == Verdict::satisfied);
}

TEST_CASE("Brownian motion satisfies the quadratic criterion") {
    GrowthSampler s = registry_sampler("brownian");
    Constants k;
    k.M = 1.0;
    k.C = 1.0;
    k.alpha = 1.0;
    CriterionVerdict v = corollary_g1_check(Variant::iii, s, k);
    CHECK(v.verdict == Verdict::satisfied);
}

TEST_CASE("verdicts are invariant under scaling A, B by lambda and M by lambda") {
    for (double lambda : {0.5, 2.0}) {
        {
            Problem p = build_problem(registry_entry("brownian"));
            p.A = scaled(p.A, lambda);
            p.B = scaled(p.B, lambda);
            GrowthSampler s(plain_fields(p), kSchedule, small_plan());
            Constants k;
            k.M = lambda;
            k.C = 1.0;
            k.alpha = 1.0;
            CHECK(corollary_g1_check(Variant::iii, s, k).verdict == Verdict::satisfied);
        }
        {
            Problem p = build_problem(registry_entry("gim-trutnau-2d"));
            Problem base = p;
            p.A = scaled(p.A, lambda);
            p.B = scaled(p.B, lambda);
            Constants k;
            k.C = 5.0;
            k.beta = 1.0;
            k.alpha = 0.8;
            GrowthSampler s0(plain_fields(base), kSchedule, small_plan());
            CriterionVerdict v0 = corollary_g1_check(Variant::i, s0, k);
            REQUIRE(v0.constant("M"));
            k.M = *v0.constant("M") * lambda;
            GrowthSampler s(plain_fields(p), kSchedule, small_plan());
            CHECK(corollary_g1_check(Variant::i, s, k).verdict == v0.verdict);

            GrowthSampler z0(plain_fields(with_zero_drift(base)), kSchedule, small_plan());
            GrowthSampler z(plain_fields(with_zero_drift(p)), kSchedule, small_plan());
            Constants kz;
            kz.C = 5.0;
            kz.beta = 1.0;
            kz.alpha = 0.8;
            CHECK(corollary_g1_check(Variant::i, z0, kz).verdict == Verdict::violated);
            CHECK(corollary_g1_check(Variant::i, z, kz).verdict == Verdict::violated);
        }
    }
}

TEST_CASE("g1 and cor13 agree when the drift vanishes") {
    for (const char* name : {"brownian", "symdf"}) {
        GrowthSampler s = registry_sampler(name, kSchedule, 2000);
        for (Variant v : {Variant::i, Variant::ii, Variant::iii}) {
            Constants k;
            k.C = 2.0;
            if (v == Variant::i) k.beta = 1.0;
            CheckOptions g1, c13;
            g1.id = "g1";
            c13.id = "cor13";
            CriterionVerdict a = corollary_g1_check(v, s, k, g1);
            CriterionVerdict b = corollary_g1_check(v, s, k, c13);
            CHECK(a.verdict == b.verdict);
            CHECK(a.constant("M") == b.constant("M"));
            const double aa = a.constant("alpha").value_or(-1.0), ba = b.constant("alpha").value_or(-1.0);
            CHECK((aa == ba || (std::isnan(aa) && std::isnan(ba))));
        }
    }
}

TEST_CASE("time-dependent example satisfies variant i with C=5, beta=1") {
    GrowthSampler s = registry_sampler("gim-trutnau-2d");
    Constants k;
    k.C = 5.0;
    k.beta = 1.0;
    k.alpha = 0.8;
    CriterionVerdict v = corollary_g1_check(Variant::i, s, k);
    CHECK(v.verdict == Verdict::satisfied);
    CHECK(fitted_growth_exponent(v.table) == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("time-dependent example without drift is violated with a witness") {
    Problem p = with_zero_drift(build_problem(registry_entry("gim-trutnau-2d")));
    GrowthSampler s(plain_fields(p), kSchedule, small_plan());
    AutoResult r = auto_constants("g1i", s);
    CHECK_FALSE(r.found);
    CHECK(r.verdict.verdict == Verdict::violated);
    CHECK((r.verdict.witness_point.has_value() || r.verdict.witness_index.has_value()));
}

TEST_CASE("automatic constants") {
    SUBCASE("Brownian quadratic") {
        GrowthSampler s = registry_sampler("brownian");
        AutoResult r = auto_constants("g1iii", s);
        CHECK(r.found);
        CHECK(r.verdict.verdict == Verdict::satisfied);
        REQUIRE(r.constants.M);
        CHECK(*r.constants.M == doctest::Approx(1.0).epsilon(1e-9));
        REQUIRE(r.constants.alpha);
        CHECK(*r.constants.alpha <= 1.0);
    }
    SUBCASE("one-dimensional example needs C = 3") {
        GrowthSampler s = registry_sampler("gim-trutnau-1d");
        AutoResult r = auto_constants("cor13i", s);
        CHECK(r.found);
        CHECK(r.verdict.verdict == Verdict::satisfied);
        REQUIRE(r.constants.C);
        CHECK(*r.constants.C == doctest::Approx(3.0).epsilon(0.01));
        REQUIRE(r.constants.beta);
        CHECK(*r.constants.beta == 1.0);
        REQUIRE(r.constants.alpha);
        CHECK(*r.constants.alpha == doctest::Approx(5.0 / 6.0).epsilon(0.05));
    }
}

TEST_CASE("symmetric criterion with exponential volume growth is violated") {
    // phi(r) = 1/2 sum_k exp(r/2^(k+2)) / 2^(k+2), a weight whose shell volumes grow like exp(n).
    auto w = make_field(
        1,
        [](const double* x) {
            const double r = std::abs(x[0]);
            double s = 0.0;
            for (int k = 0; k < 40; ++k) {
                const double h = std::ldexp(1.0, -(k + 2));
                s += std::exp(r * h) * h;
            }
            return 0.5 * s;
        },
        "telescoping exponential weight");
    CriterionFields f = make_criterion_fields(identity_matrix(1), zero_vector(1), w, 1, whole_space(1));
    GrowthSampler s(f, kSchedule, small_plan());
    Constants k;
    k.beta = 0.0;
    k.N = 1.0;
    CriterionVerdict v = prop_symexam_check(Variant::i, s, k);
    CHECK(v.verdict == Verdict::violated);
    CHECK(v.witness_index.has_value());
    INFO(v.witness_reason);
}

TEST_CASE("sectorial criterion") {
    SUBCASE("identity with mu = phi^2") {
        Problem p = build_problem(registry_entry("brownian"));
        p.mu_power = 2;
        GrowthSampler s(sectorial_fields(p), kSchedule, small_plan());
        Constants k;
        k.M = 1.0;
        CHECK(sectorial_check(s, k).verdict == Verdict::satisfied);
    }
    SUBCASE("non-symmetric example") {
        GrowthSampler s(sectorial_fields(build_problem(registry_entry("tatr"))), kSchedule, small_plan());
        Constants k;
        k.C = 4.0;
        k.alpha = 0.75;
        CriterionVerdict fitted = sectorial_check(s, k);
        CHECK(fitted.verdict == Verdict::satisfied);
        REQUIRE(fitted.constant("M"));
        k.M = *fitted.constant("M");
        CHECK(sectorial_check(s, k).verdict == Verdict::satisfied);
        k.M = 0.5 * *fitted.constant("M");
        CriterionVerdict tight = sectorial_check(s, k);
        CHECK(tight.verdict == Verdict::violated);
        CHECK(tight.witness_point.has_value());
    }
    SUBCASE("rejects mu = phi") {
        GrowthSampler s = registry_sampler("brownian", {1, 2, 4});
        CHECK_THROWS(sectorial_check(s, {}));
    }
}

TEST_CASE("growth exponent of the non-symmetric example") {
    GrowthSampler s(sectorial_fields(build_problem(registry_entry("tatr"))), kSchedule, small_plan());
    CriterionVerdict v = sectorial_check(s, {});
    // Expected n^(d/2+2) growth of A_hat.
    CHECK(fitted_growth_exponent(v.table) == doctest::Approx(3.0).epsilon(0.5 / 3.0));
}
