#pragma once

#include <map>
#include <string>
#include <vector>

#include "conservd/criteria.hpp"
#include "conservd/registry.hpp"
#include "conservd/report.hpp"

namespace conservd {

constexpr int kExitOk = 0;
constexpr int kExitViolated = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitConfig = 64;
constexpr int kExitNumerical = 70;

// Merged settings keyed "section.key": config file, then CONSERVD_SEED, then command-line flags.
using Settings = std::map<std::string, std::string>;

Settings merge_settings(const Settings& file, const Settings& cli, const char* env_seed);
void validate_keys(const Settings& s);

Problem problem_from_settings(const Settings& s);
SamplePlan plan_from_settings(const Settings& s);
std::vector<int> schedule_from_settings(const Settings& s);

struct AnalyzeOutput {
    Json report;
    std::vector<CriterionVerdict> verdicts;
    int exit_code = kExitOk;
};

AnalyzeOutput run_analyze(const Settings& s);
int exit_code_for(const std::vector<CriterionVerdict>& verdicts);

struct ExampleCheck {
    std::string example;
    std::string check;
    std::string expected;
    std::string observed;
    std::string detail;
    bool match() const { return expected == observed; }
};

// Runs the canonical pipeline of one registry example; samples/paths/seed come from s when present.
std::vector<ExampleCheck> run_example(const std::string& name, const Settings& s);

int run_cli(int argc, char** argv);

}  // namespace conservd
