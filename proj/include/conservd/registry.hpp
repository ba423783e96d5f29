#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conservd/field.hpp"

namespace conservd {

struct RegistryEntry {
    std::string name;
    std::string summary;
    bool synthetic = false;
    int dim = 1;
    int mu_power = 1;
    std::vector<std::string> a_text;  // row-major d*d
    std::vector<std::string> b_text;
    std::string phi_text;
    std::vector<double> x0;  // default start for simulations; empty means the origin
};

const std::vector<RegistryEntry>& registry();
const RegistryEntry& registry_entry(const std::string& name);

// Coefficients plus domain, ready for the criteria and oracles.
struct Problem {
    int dim = 1;
    MatrixField A;
    VectorField B;
    ScalarField phi;
    int mu_power = 1;
    DomainSpec domain;
    bool intrinsic_gauge = false;  // gauge is an intrinsic metric of A
    std::string source;
    std::vector<std::string> a_text, b_text;
    std::string phi_text, rho_text;
};

struct ProblemText {
    int dim = 1;
    std::vector<std::string> a_text;
    std::vector<std::string> b_text;  // empty means B = 0
    std::string phi_text = "1";
    std::string rho_text;             // empty means |x|
    std::string domain_text;          // indicator, inside where > 0; empty means all of R^d
    bool closed = false;
    int mu_power = 1;
    double k0 = 1.0;
    double bound_scale = 1.0;
};

Problem build_problem(const ProblemText& t, const std::string& source);
Problem build_problem(const RegistryEntry& e);
ProblemText registry_text(const RegistryEntry& e);

// One line of the expected-verdict table for the example pipelines.
struct ExpectedOutcome {
    std::string example;
    std::string check;
    std::string expected;
};

const std::vector<ExpectedOutcome>& expected_outcomes();

}  // namespace conservd
