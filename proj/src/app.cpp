#include "conservd/app.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include "conservd/oracles.hpp"

namespace conservd {

namespace {

const std::set<std::string> kKnownKeys = {
    "problem.registry", "problem.dim", "problem.A", "problem.B", "problem.phi", "problem.rho",
    "problem.mu_power", "problem.k0", "problem.zero_drift", "problem.domain", "problem.closed", "problem.intrinsic_gauge",
    "problem.bound_scale", "sampling.seed", "sampling.samples", "sampling.schedule", "sampling.method",
    "sampling.refinement_rounds", "criteria.criterion", "criteria.C", "criteria.beta", "criteria.alpha",
    "criteria.M", "criteria.N", "criteria.T", "criteria.auto", "criteria.n_min", "criteria.strict_envelope",
    "criteria.family", "feller.ladder", "feller.delta", "feller.cauchy_tol", "feller.quad_tol",
    "simulate.paths", "simulate.T", "simulate.dt", "simulate.radii", "simulate.x0", "output.out_dir",
    "output.json", "output.csv"};

std::optional<std::string> get(const Settings& s, const std::string& key) {
    auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    return it->second;
}

std::string unquoted(const Settings& s, const std::string& key, const std::string& def) {
    auto v = get(s, key);
    if (!v) return def;
    auto items = split_list(*v);
    if (items.size() != 1) throw ConfigError(key + ": expected a single value");
    return items[0];
}

std::optional<double> get_double(const Settings& s, const std::string& key) {
    auto v = get(s, key);
    if (!v) return std::nullopt;
    return parse_double(*v, key);
}

double get_double(const Settings& s, const std::string& key, double def) { return get_double(s, key).value_or(def); }

long long get_int(const Settings& s, const std::string& key, long long def) {
    auto v = get_double(s, key);
    if (!v) return def;
    if (*v != std::floor(*v) || std::fabs(*v) > 9e15) throw ConfigError(key + ": expected an integer");
    return static_cast<long long>(*v);
}

bool get_bool(const Settings& s, const std::string& key) {
    auto v = get(s, key);
    if (!v) return false;
    std::string t = split_list(*v).at(0);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key + ": expected a boolean");
}

std::uint64_t get_seed(const Settings& s) {
    auto v = get(s, "sampling.seed");
    if (!v) return 1;
    std::string t = split_list(*v).at(0);
    char* end = nullptr;
    unsigned long long x = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || t[0] == '-') throw ConfigError("seed must be a non-negative integer");
    return x;
}

std::string fmtd(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Constants constants_from_settings(const Settings& s) {
    Constants k;
    k.M = get_double(s, "criteria.M");
    k.C = get_double(s, "criteria.C");
    k.alpha = get_double(s, "criteria.alpha");
    k.beta = get_double(s, "criteria.beta");
    k.N = get_double(s, "criteria.N");
    k.T = get_double(s, "criteria.T");
    return k;
}

CheckOptions check_options(const Settings& s, const std::string& id) {
    CheckOptions o;
    o.n_min = static_cast<int>(get_int(s, "criteria.n_min", kDefaultNMin));
    o.strict_envelope = get_bool(s, "criteria.strict_envelope");
    o.id = id;
    return o;
}

// Samplers for the two field layouts: Gamma/N from (A, B) and from (sym A, beta field).
struct Samplers {
    const Problem& p;
    SamplePlan plan;
    std::vector<int> schedule;
    std::optional<GrowthSampler> plain, sectorial;

    CriterionFields fields(CriterionFields f) const { return p.intrinsic_gauge ? with_intrinsic_gauge(std::move(f)) : f; }

    GrowthSampler& get_plain() {
        if (!plain) plain.emplace(fields(make_criterion_fields(p.A, p.B, p.phi, p.mu_power, p.domain)), schedule, plan);
        return *plain;
    }
    GrowthSampler& get_sectorial() {
        if (!sectorial) {
            auto [sym, anti] = split_matrix(p.A);
            VectorField beta = beta_field(anti, p.B, p.phi);
            sectorial.emplace(fields(make_criterion_fields(sym, beta, p.phi, p.mu_power, p.domain)), schedule, plan);
        }
        return *sectorial;
    }
};

PhiFamily family_from_settings(const Settings& s) {
    std::string fam = unquoted(s, "criteria.family", "log-power");
    double C = get_double(s, "criteria.C", 1.0);
    if (fam == "log-power") return PhiFamily::log_power(C, get_double(s, "criteria.beta", 1.0));
    if (fam == "loglog") return PhiFamily::loglog(C);
    if (fam == "quadratic") return PhiFamily::quadratic(C);
    throw ConfigError("unknown phi family '" + fam + "' (log-power, loglog, quadratic)");
}

CriterionVerdict evaluate_criterion(const std::string& id, Samplers& smp, const Settings& s) {
    const bool automatic = get_bool(s, "criteria.auto");
    const Constants k = constants_from_settings(s);
    CheckOptions o = check_options(s, id);
    if (id == "thm6") {
        auto T = get_double(s, "criteria.T");
        if (!T) throw ConfigError("criterion thm6 needs --T");
        GrowthTable t = build_growth_table(smp.get_plain(), family_from_settings(s));
        CriterionVerdict v = theorem6_verdict(t, *T);
        v.constants.emplace_back("T", *T);
        return v;
    }
    if (id == "sectorial") {
        if (automatic) return auto_constants(id, smp.get_sectorial(), o).verdict;
        return sectorial_check(smp.get_sectorial(), k, o);
    }
    if (id == "symexam-i" || id == "symexam-ii") {
        if (automatic) return auto_constants(id, smp.get_plain(), o).verdict;
        return prop_symexam_check(id == "symexam-i" ? Variant::i : Variant::ii, smp.get_plain(), k, o);
    }
    Variant v;
    if (id == "g1i" || id == "cor13i") v = Variant::i;
    else if (id == "g1ii" || id == "cor13ii") v = Variant::ii;
    else if (id == "g1iii" || id == "cor13iii") v = Variant::iii;
    else throw ConfigError("unknown criterion '" + id + "'");
    if (automatic) return auto_constants(id, smp.get_plain(), o).verdict;
    return corollary_g1_check(v, smp.get_plain(), k, o);
}

void print_verdict(const CriterionVerdict& v) {
    std::printf("%s: %s (horizon n = %d)\n", v.criterion.c_str(), verdict_name(v.verdict), v.horizon);
    std::printf("  constants:");
    for (const auto& [key, val] : v.constants) std::printf(" %s=%s", key.c_str(), fmtd(val).c_str());
    std::printf("\n");
    if (v.witness_point || v.witness_index) {
        std::printf("  witness:");
        if (v.witness_point) {
            std::printf(" x = (");
            for (std::size_t i = 0; i < v.witness_point->size(); ++i)
                std::printf("%s%s", i ? ", " : "", fmtd((*v.witness_point)[i]).c_str());
            std::printf(")");
        }
        if (v.witness_index) std::printf(" n = %d", *v.witness_index);
        std::printf("  %s\n", v.witness_reason.c_str());
    }
    if (!v.table.rows.empty())
        std::printf("  fitted growth exponent of A_hat: %s\n", fmtd(fitted_growth_exponent(v.table)).c_str());
    if (!v.decay_verdict.empty()) std::printf("  decay surrogate: %s\n", v.decay_verdict.c_str());
    std::printf("  policy: %s\n", v.policy.c_str());
    for (const auto& n : v.notes) std::printf("  note: %s\n", n.c_str());
}

std::string out_path(const Settings& s, const std::string& key, const std::string& def_name) {
    if (auto v = get(s, key)) return split_list(*v).at(0);
    std::string dir = unquoted(s, "output.out_dir", ".");
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / def_name).string();
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + "_" + suffix + p.extension().string())).string();
}

void ensure_parent(const std::string& path) {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

Json sampling_json(const Settings& s) {
    SamplePlan plan = plan_from_settings(s);
    Json j;
    j["seed"] = plan.seed;
    j["samples"] = plan.samples;
    j["method"] = sample_method_name(plan.method);
    j["refinement_rounds"] = plan.refinement_rounds;
    j["refine_samples"] = plan.refine_samples;
    j["shrink"] = number(plan.shrink);
    j["schedule"] = schedule_from_settings(s);
    return j;
}

FellerOptions feller_options(const Settings& s) {
    FellerOptions o;
    if (auto v = get(s, "feller.ladder")) o.ladder = parse_double_list(*v);
    o.delta = get_double(s, "feller.delta", o.delta);
    o.cauchy_tol = get_double(s, "feller.cauchy_tol", o.cauchy_tol);
    o.quad_tol = get_double(s, "feller.quad_tol", o.quad_tol);
    return o;
}

int feller_exit(const FellerResult& r) {
    if (r.plus.verdict == SideVerdict::bounded || r.minus.verdict == SideVerdict::bounded) return kExitViolated;
    if (r.plus.verdict == SideVerdict::diverges && r.minus.verdict == SideVerdict::diverges) return kExitOk;
    return kExitInconclusive;
}

EmOptions em_options(const Settings& s, const Problem& p, const Vec& default_x0) {
    EmOptions o;
    o.paths = static_cast<std::size_t>(get_int(s, "simulate.paths", 10000));
    o.T = get_double(s, "simulate.T", 1.0);
    o.dt = get_double(s, "simulate.dt", 1e-3);
    if (auto v = get(s, "simulate.radii")) o.radii = parse_double_list(*v);
    if (auto v = get(s, "simulate.x0")) o.x0 = parse_double_list(*v);
    else o.x0 = default_x0.empty() ? Vec(static_cast<std::size_t>(p.dim), 0.0) : default_x0;
    o.seed = get_seed(s);
    if (static_cast<int>(o.x0.size()) != p.dim) throw ConfigError("x0 must have " + std::to_string(p.dim) + " entries");
    return o;
}

Vec registry_x0(const Settings& s) {
    if (auto r = get(s, "problem.registry")) return registry_entry(split_list(*r).at(0)).x0;
    return {};
}

}  // namespace

Settings merge_settings(const Settings& file, const Settings& cli, const char* env_seed) {
    Settings s = file;
    if (env_seed && *env_seed) s["sampling.seed"] = env_seed;
    for (const auto& [k, v] : cli) s[k] = v;
    return s;
}

void validate_keys(const Settings& s) {
    for (const auto& [k, v] : s)
        if (!kKnownKeys.count(k)) throw ConfigError("unknown configuration key '" + k + "'");
}

Problem problem_from_settings(const Settings& s) {
    auto reg = get(s, "problem.registry");
    auto a = get(s, "problem.A");
    if (reg && a) throw ConfigError("give either a registry name or coefficient expressions, not both");
    if (!reg && !a) throw ConfigError("no problem given: use a registry name or coefficient expressions");
    ProblemText t;
    std::string source;
    if (reg) {
        std::string name = split_list(*reg).at(0);
        for (const char* key : {"problem.B", "problem.phi", "problem.dim", "problem.mu_power"})
            if (get(s, key)) throw ConfigError(std::string(key) + " cannot be combined with a registry entry");
        t = registry_text(registry_entry(name));
        source = "registry:" + name;
    } else {
        t.a_text = split_list(*a);
        if (auto d = get(s, "problem.dim")) t.dim = static_cast<int>(get_int(s, "problem.dim", 1));
        else {
            int d0 = static_cast<int>(std::lround(std::sqrt(static_cast<double>(t.a_text.size()))));
            if (d0 * d0 != static_cast<int>(t.a_text.size())) throw ConfigError("A must have d*d entries");
            t.dim = d0;
        }
        if (auto b = get(s, "problem.B")) t.b_text = split_list(*b);
        t.phi_text = unquoted(s, "problem.phi", "1");
        t.mu_power = static_cast<int>(get_int(s, "problem.mu_power", 1));
        source = "expressions";
    }
    if (get(s, "problem.rho")) t.rho_text = unquoted(s, "problem.rho", "");
    if (get(s, "problem.domain")) t.domain_text = unquoted(s, "problem.domain", "");
    t.closed = get_bool(s, "problem.closed");
    t.k0 = get_double(s, "problem.k0", 1.0);
    t.bound_scale = get_double(s, "problem.bound_scale", 1.0);
    if (get_bool(s, "problem.zero_drift")) {
        t.b_text.clear();
        source += " (drift set to zero)";
    }
    Problem p = build_problem(t, source);
    p.intrinsic_gauge = get_bool(s, "problem.intrinsic_gauge");
    return p;
}

SamplePlan plan_from_settings(const Settings& s) {
    SamplePlan p;
    long long n = get_int(s, "sampling.samples", static_cast<long long>(p.samples));
    if (n < 1) throw ConfigError("samples must be positive");
    p.samples = static_cast<std::size_t>(n);
    p.seed = get_seed(s);
    if (get(s, "sampling.method")) p.method = parse_sample_method(unquoted(s, "sampling.method", ""));
    long long r = get_int(s, "sampling.refinement_rounds", p.refinement_rounds);
    if (r < 0) throw ConfigError("refinement_rounds must be non-negative");
    p.refinement_rounds = static_cast<int>(r);
    return p;
}

std::vector<int> schedule_from_settings(const Settings& s) {
    if (auto v = get(s, "sampling.schedule")) return parse_int_list(*v);
    return {1, 2, 4, 8, 16, 32, 64};
}

int exit_code_for(const std::vector<CriterionVerdict>& verdicts) {
    bool inconclusive = false;
    for (const auto& v : verdicts) {
        if (v.verdict == Verdict::violated) return kExitViolated;
        if (v.verdict == Verdict::inconclusive) inconclusive = true;
    }
    return inconclusive ? kExitInconclusive : kExitOk;
}

AnalyzeOutput run_analyze(const Settings& s) {
    Problem p = problem_from_settings(s);
    auto ids_text = get(s, "criteria.criterion");
    if (!ids_text) throw ConfigError("no criterion selected");
    std::vector<std::string> ids = split_list(*ids_text);
    Samplers smp{p, plan_from_settings(s), schedule_from_settings(s), std::nullopt, std::nullopt};
    AnalyzeOutput out;
    for (const auto& id : ids) out.verdicts.push_back(evaluate_criterion(id, smp, s));
    out.exit_code = exit_code_for(out.verdicts);
    Json r;
    r["report_version"] = kReportVersion;
    r["command"] = "analyze";
    r["problem"] = problem_json(p);
    if (p.domain.closed) r["problem"]["boundary_note"] = "closed domain: reflected dynamics are not simulated";
    r["sampling"] = sampling_json(s);
    Json cs = Json::array();
    for (const auto& v : out.verdicts) cs.push_back(verdict_json(v));
    r["criteria"] = cs;
    r["exit_code"] = out.exit_code;
    out.report = std::move(r);
    return out;
}

std::vector<ExampleCheck> run_example(const std::string& name, const Settings& base) {
    const RegistryEntry& e = registry_entry(name);
    Settings s = base;
    s["problem.registry"] = name;
    std::vector<ExampleCheck> out;
    auto add = [&](const std::string& check, const std::string& observed, const std::string& detail) {
        std::string expected = "?";
        for (const auto& x : expected_outcomes())
            if (x.example == name && x.check == check) expected = x.expected;
        out.push_back({name, check, expected, observed, detail});
    };
    auto analyze_one = [&](const std::string& check, Settings extra) {
        Settings t = s;
        for (const auto& [k, v] : extra) t[k] = v;
        AnalyzeOutput a = run_analyze(t);
        const auto& v = a.verdicts.front();
        std::string detail;
        for (const auto& [k, val] : v.constants) detail += k + "=" + fmtd(val) + " ";
        detail += "growth_exponent=" + fmtd(fitted_growth_exponent(v.table)) + " ";
        if (v.witness_reason.size()) detail += "| " + v.witness_reason;
        add(check, verdict_name(v.verdict), detail);
    };
    auto divergence = [&]() {
        Problem p = problem_from_settings(s);
        DivergenceReport rep = check_divergence_free(p.B, p.phi, p.mu_power, 4, get_seed(s));
        double worst = 0.0;
        for (const auto& t : rep.tests)
            worst = std::max(worst, t.std_error > 0 ? std::fabs(t.estimate) / t.std_error : 0.0);
        add("divergence-free", rep.pass ? "pass" : "fail", "max |estimate|/SE = " + fmtd(worst));
    };

    if (name == "brownian") {
        analyze_one("symexam-ii M=1 N=1", {{"criteria.criterion", "symexam-ii"}, {"criteria.M", "1"}, {"criteria.N", "1"}});
        EmOptions o;
        o.x0 = {0.0, 0.0};
        o.T = 1.0;
        o.dt = 1e-3;
        o.radii = {2.0, 4.0, 8.0};
        o.paths = static_cast<std::size_t>(get_int(s, "simulate.paths", 100000));
        o.seed = get_seed(s);
        ExplosionEstimate est =
            em_explosion_mc(identity_matrix(2, 0.5), zero_vector(2), constant_field(1.0, 2), 1, o);
        const auto& top = est.rungs.back();
        add("escape R=8 T=1 below 1e-3", top.p < 1e-3 ? "pass" : "fail",
            "p = " + fmtd(top.p) + " [" + fmtd(top.lo) + ", " + fmtd(top.hi) + "] over " + std::to_string(o.paths) +
                " paths");
    } else if (name == "symdf") {
        analyze_one("symexam-i beta=1", {{"criteria.criterion", "symexam-i"}, {"criteria.beta", "1"}});
    } else if (name == "rst-muckenhoupt") {
        analyze_one("g1iii M=2 C=1 alpha=1",
                    {{"criteria.criterion", "g1iii"}, {"criteria.M", "2"}, {"criteria.C", "1"}, {"criteria.alpha", "1"}});
        divergence();
    } else if (name == "tatr") {
        analyze_one("sectorial C=d/2+3 alpha=(C-1)/C", {{"criteria.criterion", "sectorial"}});
    } else if (name == "gim-trutnau-2d") {
        analyze_one("g1i C=5 beta=1 alpha=0.8",
                    {{"criteria.criterion", "g1i"}, {"criteria.C", "5"}, {"criteria.beta", "1"}, {"criteria.alpha", "0.8"}});
        analyze_one("g1i zero-drift auto",
                    {{"criteria.criterion", "g1i"}, {"criteria.auto", "true"}, {"problem.zero_drift", "true"}});
        divergence();
    } else if (name == "gim-trutnau-1d") {
        analyze_one("cor13i C=3 beta=1 alpha=5/6", {{"criteria.criterion", "cor13i"},
                                                    {"criteria.C", "3"},
                                                    {"criteria.beta", "1"},
                                                    {"criteria.alpha", "5/6"}});
        Problem p = problem_from_settings(s);
        FellerResult r = feller_test(p.A.at(0, 0), p.phi, feller_options(s));
        add("feller plus", side_verdict_name(r.plus.verdict), "slope " + fmtd(r.plus.slope));
        add("feller minus", side_verdict_name(r.minus.verdict), "slope " + fmtd(r.minus.slope));
    }
    (void)e;
    return out;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"conservd: conservativeness criteria for diffusion semigroups"};
    app.require_subcommand(1);
    Settings cli;
    std::string config_path;

    auto set = [&cli](const std::string& key) {
        return [&cli, key](const std::string& v) { cli[key] = v; };
    };
    auto set_list = [&cli](const std::string& key) {
        return [&cli, key](const std::vector<std::string>& v) {
            std::string joined;
            for (const auto& item : v)
                for (const auto& piece : split_list(item)) joined += (joined.empty() ? "\"" : ", \"") + piece + "\"";
            cli[key] = joined;
        };
    };
    auto flag = [&cli](const std::string& key) {
        return [&cli, key](std::int64_t) { cli[key] = "true"; };
    };

    auto add_problem = [&](CLI::App* c) {
        c->add_option("--config", config_path, "key/value configuration file");
        c->add_option_function<std::string>("--registry", set("problem.registry"), "built-in example name");
        c->add_option_function<std::string>("--dim", set("problem.dim"), "dimension d");
        c->add_option_function<std::vector<std::string>>("--A", set_list("problem.A"), "A entries, row-major");
        c->add_option_function<std::vector<std::string>>("--B", set_list("problem.B"), "drift entries");
        c->add_option_function<std::string>("--phi", set("problem.phi"), "density of mu");
        c->add_option_function<std::string>("--rho", set("problem.rho"), "gauge (default |x|)");
        c->add_option_function<std::string>("--mu-power", set("problem.mu_power"), "mu = phi^p dx, p in {1,2}");
        c->add_option_function<std::string>("--k0", set("problem.k0"), "compact-core gauge radius");
        c->add_option_function<std::string>("--domain", set("problem.domain"), "indicator, inside where > 0");
        c->add_option_function<std::string>("--bound-scale", set("problem.bound_scale"),
                                            "gauge sublevel {rho<r} lies in [-s r, s r]^d");
        c->add_flag_function("--closed", flag("problem.closed"), "domain is closed");
        c->add_flag_function("--zero-drift", flag("problem.zero_drift"), "replace B by 0");
        c->add_flag_function("--intrinsic-gauge", flag("problem.intrinsic_gauge"),
                             "gauge is an intrinsic metric: Gamma(rho, rho) capped at 1");
        c->add_option_function<std::string>("--seed", set("sampling.seed"), "global 64-bit seed");
        c->add_option_function<std::string>("--out-dir", set("output.out_dir"), "directory for reports");
        c->add_option_function<std::string>("--json", set("output.json"), "JSON report path");
        c->add_option_function<std::string>("--csv", set("output.csv"), "CSV path");
    };
    auto add_sampling = [&](CLI::App* c) {
        c->add_option_function<std::string>("--samples", set("sampling.samples"), "samples per annulus");
        c->add_option_function<std::string>("--schedule", set("sampling.schedule"), "annulus indices, e.g. 1,2,4");
        c->add_option_function<std::string>("--method", set("sampling.method"), "radial-shell, box or halton");
        c->add_option_function<std::string>("--refine-rounds", set("sampling.refinement_rounds"),
                                            "sup refinement rounds");
    };
    auto add_criteria = [&](CLI::App* c) {
        c->add_option_function<std::vector<std::string>>("--criterion", set_list("criteria.criterion"),
                                                         "g1i g1ii g1iii cor13i cor13ii cor13iii symexam-i "
                                                         "symexam-ii sectorial thm6");
        for (const char* k : {"C", "beta", "alpha", "M", "N", "T"})
            c->add_option_function<std::string>(std::string("--") + k, set(std::string("criteria.") + k),
                                                std::string("constant ") + k);
        c->add_flag_function("--auto", flag("criteria.auto"), "search constants automatically");
        c->add_option_function<std::string>("--n-min", set("criteria.n_min"), "smallest n in growth checks");
        c->add_flag_function("--strict-envelope", flag("criteria.strict_envelope"),
                             "growth bound without a multiplicative constant");
        c->add_option_function<std::string>("--family", set("criteria.family"), "phi family for thm6");
    };

    auto* analyze = app.add_subcommand("analyze", "growth table and criterion verdicts");
    add_problem(analyze);
    add_sampling(analyze);
    add_criteria(analyze);

    auto* plot = app.add_subcommand("plot-data", "growth and decay CSV files only");
    add_problem(plot);
    add_sampling(plot);
    add_criteria(plot);

    auto* feller = app.add_subcommand("feller", "one-dimensional Feller test");
    add_problem(feller);
    feller->add_option_function<std::string>("--ladder", set("feller.ladder"), "rungs L");
    feller->add_option_function<std::string>("--delta", set("feller.delta"), "minimum log-log slope");
    feller->add_option_function<std::string>("--cauchy-tol", set("feller.cauchy_tol"), "boundedness tolerance");
    feller->add_option_function<std::string>("--quad-tol", set("feller.quad_tol"), "quadrature tolerance");

    auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama escape probabilities");
    add_problem(simulate);
    simulate->add_option_function<std::string>("--paths", set("simulate.paths"), "number of paths");
    simulate->add_option_function<std::string>("--T", set("simulate.T"), "horizon");
    simulate->add_option_function<std::string>("--dt", set("simulate.dt"), "step");
    simulate->add_option_function<std::string>("--radii", set("simulate.radii"), "escape radii, e.g. 2,4,8");
    simulate->add_option_function<std::string>("--x0", set("simulate.x0"), "start point");

    auto* examples = app.add_subcommand("examples", "run built-in example pipelines");
    std::string example_name = "all";
    examples->add_option("name", example_name, "registry name or all");
    examples->add_option_function<std::string>("--seed", set("sampling.seed"), "global 64-bit seed");
    examples->add_option_function<std::string>("--samples", set("sampling.samples"), "samples per annulus");
    examples->add_option_function<std::string>("--paths", set("simulate.paths"), "paths for simulations");
    examples->add_option_function<std::string>("--json", set("output.json"), "JSON summary path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        Settings file;
        if (!config_path.empty()) file = parse_config_file(config_path);
        Settings s = merge_settings(file, cli, std::getenv("CONSERVD_SEED"));
        validate_keys(s);

        if (analyze->parsed() || plot->parsed()) {
            AnalyzeOutput a = run_analyze(s);
            const bool csv_only = plot->parsed();
            if (!csv_only) {
                for (const auto& v : a.verdicts) print_verdict(v);
                std::string jp = out_path(s, "output.json", "analyze.json");
                ensure_parent(jp);
                write_text_file(jp, a.report.dump(2) + "\n");
            }
            std::string cp = out_path(s, "output.csv", csv_only ? "plot.csv" : "analyze.csv");
            ensure_parent(cp);
            for (const auto& v : a.verdicts)
                write_text_file(a.verdicts.size() > 1 ? with_suffix(cp, v.criterion) : cp, growth_csv(v));
            return csv_only ? kExitOk : a.exit_code;
        }
        if (feller->parsed()) {
            Problem p = problem_from_settings(s);
            if (p.dim != 1) {
                std::fprintf(stderr, "feller: the Feller test needs d = 1 (got d = %d)\n", p.dim);
                return kExitConfig;
            }
            FellerResult r = feller_test(p.A.at(0, 0), p.phi, feller_options(s));
            for (const FellerSide* side : {&r.plus, &r.minus})
                std::printf("%s side: %s (slope %s, spread %s, Phi(L_max) = %s)\n", side->sign > 0 ? "+" : "-",
                            side_verdict_name(side->verdict), fmtd(side->slope).c_str(), fmtd(side->spread).c_str(),
                            fmtd(side->phi.back()).c_str());
            std::printf("policy: %s\n", r.policy.c_str());
            if (!p.B.is_zero()) std::printf("note: the drift B does not enter the Feller test\n");
            int code = feller_exit(r);
            Json j;
            j["report_version"] = kReportVersion;
            j["command"] = "feller";
            j["problem"] = problem_json(p);
            j["feller"] = feller_json(r);
            j["exit_code"] = code;
            std::string jp = out_path(s, "output.json", "feller.json");
            ensure_parent(jp);
            write_text_file(jp, j.dump(2) + "\n");
            std::string cp = out_path(s, "output.csv", "feller.csv");
            ensure_parent(cp);
            write_text_file(cp, feller_csv(r));
            return code;
        }
        if (simulate->parsed()) {
            Problem p = problem_from_settings(s);
            EmOptions o = em_options(s, p, registry_x0(s));
            ExplosionEstimate est = em_explosion_mc(p.A, p.B, p.phi, p.mu_power, o);
            for (const auto& r : est.rungs)
                std::printf("R = %s: escaped %zu / %zu, p = %s [%s, %s]\n", fmtd(r.radius).c_str(), r.escaped,
                            est.paths, fmtd(r.p).c_str(), fmtd(r.lo).c_str(), fmtd(r.hi).c_str());
            if (est.invalid_paths) std::printf("invalid paths (counted as escaped): %zu\n", est.invalid_paths);
            if (p.domain.closed) std::printf("note: closed domain, reflection is not simulated\n");
            Json j;
            j["report_version"] = kReportVersion;
            j["command"] = "simulate";
            j["problem"] = problem_json(p);
            j["x0"] = vec_json(o.x0);
            j["estimate"] = explosion_json(est);
            std::string jp = out_path(s, "output.json", "simulate.json");
            ensure_parent(jp);
            write_text_file(jp, j.dump(2) + "\n");
            std::string cp = out_path(s, "output.csv", "simulate.csv");
            ensure_parent(cp);
            write_text_file(cp, explosion_csv(est));
            return kExitOk;
        }
        if (examples->parsed()) {
            std::vector<std::string> names;
            if (example_name == "all")
                for (const auto& e : registry()) names.push_back(e.name);
            else names.push_back(registry_entry(example_name).name);
            bool all_match = true;
            Json checks = Json::array();
            for (const auto& n : names) {
                for (const auto& c : run_example(n, s)) {
                    std::printf("%-16s %-34s expected %-10s observed %-10s %s  %s\n", c.example.c_str(),
                                c.check.c_str(), c.expected.c_str(), c.observed.c_str(), c.match() ? "ok" : "MISMATCH",
                                c.detail.c_str());
                    all_match = all_match && c.match();
                    Json x;
                    x["example"] = c.example;
                    x["check"] = c.check;
                    x["expected"] = c.expected;
                    x["observed"] = c.observed;
                    x["detail"] = c.detail;
                    checks.push_back(x);
                }
            }
            if (auto jp = get(s, "output.json")) {
                Json j;
                j["report_version"] = kReportVersion;
                j["command"] = "examples";
                j["checks"] = checks;
                std::string path = split_list(*jp).at(0);
                ensure_parent(path);
                write_text_file(path, j.dump(2) + "\n");
            }
            return all_match ? kExitOk : kExitViolated;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "expression error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace conservd
