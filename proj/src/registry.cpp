#include "conservd/registry.hpp"

#include <stdexcept>

namespace conservd {

namespace {

const char* kNorm2 = "sqrt(x1^2 + x2^2)";

std::vector<RegistryEntry> make_registry() {
    std::vector<RegistryEntry> r;
    r.push_back({"brownian", "A = I, B = 0, phi = 1 in d = 2", false, 2, 1, {"1", "0", "0", "1"}, {"0", "0"}, "1", {}});

    const std::string s = std::string("1 + (x1^2 + x2^2) * log(1 + ") + kNorm2 + ")";
    r.push_back({"symdf", "symmetric A = (1 + |x|^2 log(1+|x|)) I with Lebesgue measure, d = 2", false, 2, 2,
                 {s, "0", "0", s}, {"0", "0"}, "1", {}});

    const std::string rr = kNorm2;
    r.push_back({"rst-muckenhoupt",
                 "synthetic A_2 weight phi = (1+|x|)^(-1), A = I, bounded divergence-free B = (1/phi)(d2 h, -d1 h) "
                 "with h = x1/(1+|x|), d = 2",
                 true,
                 2,
                 1,
                 {"1", "0", "0", "1"},
                 {"-x1 * x2 / (" + rr + " * (1 + " + rr + "))", "-1 + x1^2 / (" + rr + " * (1 + " + rr + "))"},
                 "1 / (1 + " + rr + ")",
                 {}});

    const std::string g = std::string("x1 * x2 * log(1 + ") + kNorm2 + ") / 2";
    r.push_back({"tatr",
                 "synthetic non-symmetric A = s I + g J with s = 1 + |x|^2 log(1+|x|)/2, g = x1 x2 log(1+|x|)/2, "
                 "Lebesgue measure, d = 2",
                 true,
                 2,
                 2,
                 {std::string("1 + (x1^2 + x2^2) * log(1 + ") + kNorm2 + ") / 2", g, "-(" + g + ")",
                  std::string("1 + (x1^2 + x2^2) * log(1 + ") + kNorm2 + ") / 2"},
                 {"0", "0"},
                 "1",
                 {}});

    const std::string w = std::string("(") + kNorm2 + " * (" + kNorm2 + " + 1) / 5)";
    r.push_back({"gim-trutnau-2d",
                 "a11 = 1 + |x|^2, a12 = 0, a22 = x1^4/x2, phi = |x|(|x|+1)/5, B = (x2^2, -x1^4)/phi, d = 2",
                 false,
                 2,
                 1,
                 {"1 + x1^2 + x2^2", "0", "0", "x1^4 / x2"},
                 {"x2^2 / " + w, "-x1^4 / " + w},
                 w,
                 {1.0, 1.0}});

    r.push_back({"gim-trutnau-1d",
                 "piecewise A and phi on the line with B = 1/phi",
                 false,
                 1,
                 1,
                 {"piecewise(x1 >= 0 ? (x1 + sqrt(2))^2 : (x1^4 - x1^3 + 6) / 3)"},
                 {"piecewise(x1 > -1 ? 1 : abs(x1)^3)"},
                 "piecewise(x1 > -1 ? 1 : abs(x1)^(-3))",
                 {}});
    return r;
}

}  // namespace

const std::vector<RegistryEntry>& registry() {
    static const std::vector<RegistryEntry> r = make_registry();
    return r;
}

const RegistryEntry& registry_entry(const std::string& name) {
    for (const auto& e : registry())
        if (e.name == name) return e;
    throw std::invalid_argument("unknown registry entry '" + name + "'");
}

ProblemText registry_text(const RegistryEntry& e) {
    ProblemText t;
    t.dim = e.dim;
    t.a_text = e.a_text;
    t.b_text = e.b_text;
    t.phi_text = e.phi_text;
    t.mu_power = e.mu_power;
    return t;
}

Problem build_problem(const ProblemText& t, const std::string& source) {
    const int d = t.dim;
    if (d < 1 || d > 16) throw std::invalid_argument("dimension must lie in 1..16");
    if (static_cast<int>(t.a_text.size()) != d * d)
        throw std::invalid_argument("A needs " + std::to_string(d * d) + " entries, got " +
                                    std::to_string(t.a_text.size()));
    if (!t.b_text.empty() && static_cast<int>(t.b_text.size()) != d)
        throw std::invalid_argument("B needs " + std::to_string(d) + " entries, got " + std::to_string(t.b_text.size()));
    if (t.mu_power != 1 && t.mu_power != 2) throw std::invalid_argument("mu_power must be 1 or 2");
    if (!(t.k0 > 0.0)) throw std::invalid_argument("k0 must be positive");
    if (!(t.bound_scale > 0.0)) throw std::invalid_argument("bound_scale must be positive");
    Problem p;
    p.dim = d;
    p.source = source;
    p.A = matrix_from_expressions(t.a_text, d);
    p.B = t.b_text.empty() ? zero_vector(d) : vector_from_expressions(t.b_text, d);
    p.phi = expression_field(t.phi_text, d);
    p.mu_power = t.mu_power;
    p.domain = whole_space(d);
    p.domain.k0 = t.k0;
    if (!t.rho_text.empty()) {
        p.domain.gauge = expression_field(t.rho_text, d);
        p.domain.euclidean_gauge = false;
        p.domain.bound_scale = t.bound_scale;
    }
    if (!t.domain_text.empty()) p.domain.indicator = expression_field(t.domain_text, d);
    p.domain.closed = t.closed;
    p.a_text = t.a_text;
    p.b_text = t.b_text.empty() ? std::vector<std::string>(static_cast<std::size_t>(d), "0") : t.b_text;
    p.phi_text = t.phi_text;
    p.rho_text = t.rho_text.empty() ? "|x|" : t.rho_text;
    return p;
}

Problem build_problem(const RegistryEntry& e) { return build_problem(registry_text(e), "registry:" + e.name); }

const std::vector<ExpectedOutcome>& expected_outcomes() {
    static const std::vector<ExpectedOutcome> t = {
        {"brownian", "symexam-ii M=1 N=1", "satisfied"},
        {"brownian", "escape R=8 T=1 below 1e-3", "pass"},
        {"symdf", "symexam-i beta=1", "satisfied"},
        {"rst-muckenhoupt", "g1iii M=2 C=1 alpha=1", "satisfied"},
        {"rst-muckenhoupt", "divergence-free", "pass"},
        {"tatr", "sectorial C=d/2+3 alpha=(C-1)/C", "satisfied"},
        {"gim-trutnau-2d", "g1i C=5 beta=1 alpha=0.8", "satisfied"},
        {"gim-trutnau-2d", "g1i zero-drift auto", "violated"},
        {"gim-trutnau-2d", "divergence-free", "pass"},
        {"gim-trutnau-1d", "cor13i C=3 beta=1 alpha=5/6", "satisfied"},
        {"gim-trutnau-1d", "feller plus", "diverges"},
        {"gim-trutnau-1d", "feller minus", "diverges"},
    };
    return t;
}

}  // namespace conservd
