#include <cmath>

#include "conservd/app.hpp"
#include "conservd/report.hpp"
#include "doctest.h"

using namespace conservd;

TEST_CASE("config sections, comments and quotes") {
    auto s = parse_config_text(R"(
# leading comment
[problem]
registry = "brownian"   # trailing comment
phi = "1 # not a comment"
[sampling]
seed = 42
)");
    CHECK(s.at("problem.registry") == "\"brownian\"");
    CHECK(s.at("problem.phi") == "\"1 # not a comment\"");
    CHECK(s.at("sampling.seed") == "42");
    CHECK(s.size() == 3);
}

TEST_CASE("config syntax errors") {
    CHECK_THROWS_AS(parse_config_text("[problem\nx = 1"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[]"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("novalue"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(" = 3"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[a]\nx = 1\nx = 2"), ConfigError);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/conservd.toml"), ConfigError);
}

TEST_CASE("list and number parsing") {
    auto items = split_list("\"x1 + 1\", pow(x1, 2), 3");
    REQUIRE(items.size() == 3);
    CHECK(items[0] == "x1 + 1");
    CHECK(items[1] == "pow(x1, 2)");
    CHECK(items[2] == "3");
    CHECK(parse_double_list("1, 2.5, 1e-3") == std::vector<double>{1.0, 2.5, 1e-3});
    CHECK(parse_int_list("1,2,4") == std::vector<int>{1, 2, 4});
    CHECK(parse_double("5/6", "alpha") == doctest::Approx(5.0 / 6.0));
    CHECK(parse_double(" 0.25 ", "x") == 0.25);
    CHECK_THROWS_AS(parse_double("abc", "x"), ConfigError);
    CHECK_THROWS_AS(parse_double("1/0", "x"), ConfigError);
    CHECK_THROWS_AS(parse_double("", "x"), ConfigError);
}

TEST_CASE("non-finite numbers in JSON") {
    CHECK(number(1.5) == Json(1.5));
    CHECK(number(std::nan("")) == Json("nan"));
    CHECK(number(INFINITY) == Json("inf"));
    CHECK(number(-INFINITY) == Json("-inf"));
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(M_PI)) == M_PI);
}

TEST_CASE("CSV headers") {
    CriterionVerdict v;
    GrowthRow r;
    r.n = 2;
    r.a.value = 1.0;
    v.table.rows.push_back(r);
    v.decay_n = {2};
    v.log_q = {-3.0};
    std::string csv = growth_csv(v);
    CHECK(csv.rfind("n,a_n,b_n,c_n,vol_n,bnorm_n,A_hat_n,log_q_n\n", 0) == 0);
    CHECK(csv.find("\n2,1,0,0,0,0,0,-3\n") != std::string::npos);
    CHECK(explosion_csv({}).rfind("radius,escaped,p,lo,hi\n", 0) == 0);
    CHECK(feller_csv({}).rfind("side,L,h,Phi,Phi_alt\n", 0) == 0);
}

TEST_CASE("settings merge order") {
    Settings file = {{"sampling.seed", "1"}, {"problem.registry", "brownian"}};
    Settings cli = {{"criteria.C", "2"}};
    Settings s = merge_settings(file, cli, "9");
    CHECK(s.at("sampling.seed") == "9");
    cli["sampling.seed"] = "5";
    CHECK(merge_settings(file, cli, "9").at("sampling.seed") == "5");
    CHECK(merge_settings(file, {}, nullptr).at("sampling.seed") == "1");
    CHECK_NOTHROW(validate_keys(s));
    s["problem.colour"] = "blue";
    CHECK_THROWS_AS(validate_keys(s), ConfigError);
}

TEST_CASE("problems from settings") {
    Problem p = problem_from_settings({{"problem.dim", "2"},
                                       {"problem.A", "1, 0, 0, 1"},
                                       {"problem.phi", "exp(-x1^2)"},
                                       {"problem.mu_power", "2"}});
    CHECK(p.dim == 2);
    CHECK(p.mu_power == 2);
    CHECK(p.b_text == std::vector<std::string>{"0", "0"});
    CHECK_THROWS(problem_from_settings({}));
    CHECK_THROWS(problem_from_settings({{"problem.registry", "brownian"}, {"problem.A", "1"}}));
    CHECK_THROWS(problem_from_settings({{"problem.registry", "brownian"}, {"problem.phi", "2"}}));
    CHECK_THROWS(problem_from_settings({{"problem.registry", "nonesuch"}}));
    CHECK_THROWS(problem_from_settings({{"problem.dim", "2"}, {"problem.A", "1, 0, 0"}}));
    CHECK(problem_from_settings({{"problem.registry", "brownian"}, {"problem.intrinsic_gauge", "true"}})
              .intrinsic_gauge);
    CHECK(problem_json(p)["mu_power"] == 2);
}

TEST_CASE("analyze report layout") {
    Settings s = {{"problem.registry", "brownian"}, {"criteria.criterion", "g1iii"}, {"criteria.M", "1"},
                  {"criteria.C", "1"},           {"criteria.alpha", "1"},         {"sampling.samples", "500"}};
    const AnalyzeOutput out = run_analyze(s);
    CHECK(out.exit_code == kExitOk);
    CHECK(out.report["report_version"] == kReportVersion);
    REQUIRE(out.verdicts.size() == 1);
    const Json& v = out.report.at("criteria").at(0);
    CHECK(v["verdict"] == "satisfied");
    CHECK(v.contains("growth_table"));
    CHECK(v.contains("growth_exponent"));
    CHECK(v.contains("policy"));
    CHECK(out.report.at("sampling").at("seed") == 1);
    CHECK(run_analyze(s).report.dump() == out.report.dump());
}

TEST_CASE("exit codes from verdicts") {
    CriterionVerdict ok, bad, unsure;
    ok.verdict = Verdict::satisfied;
    bad.verdict = Verdict::violated;
    unsure.verdict = Verdict::inconclusive;
    CHECK(exit_code_for({ok}) == kExitOk);
    CHECK(exit_code_for({ok, unsure}) == kExitInconclusive);
    CHECK(exit_code_for({unsure, bad}) == kExitViolated);
    CHECK(exit_code_for({}) == kExitOk);
}
