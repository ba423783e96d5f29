#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conservd/annulus.hpp"
#include "conservd/field.hpp"

namespace conservd {

enum class PhiKind { log_power, loglog, quadratic };

struct PhiFamily {
    PhiKind kind = PhiKind::quadratic;
    double C = 1.0;
    double beta = 0.0;  // log_power only

    static PhiFamily log_power(double C, double beta);
    static PhiFamily loglog(double C);
    static PhiFamily quadratic(double C);

    double phi(double r) const;
    double dphi(double r) const;
    std::string describe() const;
};

// Inputs shared by every criterion: carre du champ of the gauge, drift along the gauge,
// reference weight and domain.
struct CriterionFields {
    ScalarField gamma;
    ScalarField nrho;
    ScalarField weight;
    int mu_power = 1;
    DomainSpec domain;
};

CriterionFields make_criterion_fields(const MatrixField& a, const VectorField& b, const ScalarField& weight,
                                      int mu_power, const DomainSpec& domain);
// For a gauge that is an intrinsic metric: gamma capped at 1, so a_n <= 1.
CriterionFields with_intrinsic_gauge(CriterionFields f);

struct WitnessedValue {
    double value = 0.0;
    Vec point;
};

struct GrowthRow {
    int n = 0;
    WitnessedValue a, b, c;
    Estimate vol;
    Estimate bnorm;
    double a_hat = 0.0;
};

struct GrowthTable {
    std::vector<GrowthRow> rows;
    double k0 = 1.0;
    PhiFamily phi;

    const GrowthRow* find(int n) const;
};

double recompose_a_hat(const GrowthRow& r);

// Caches sample sets and pointwise values of gamma, N(rho), rho and the weight on every
// gauge shell the analysis touches, so tables for many phi can be built cheaply.
class GrowthSampler {
public:
    GrowthSampler(CriterionFields fields, std::vector<int> schedule, SamplePlan plan);

    struct ShellData {
        SampleSet set;
        std::vector<double> rho, gamma, nrho, weight_p;
    };

    const ShellData& shell(const Shell& s);
    const CriterionFields& fields() const { return fields_; }
    const std::vector<int>& schedule() const { return schedule_; }
    const SamplePlan& plan() const { return plan_; }
    // Consecutive shells partitioning {k0 <= rho < 4 n_max}.
    std::vector<Shell> cover_shells() const;

private:
    CriterionFields fields_;
    std::vector<int> schedule_;
    SamplePlan plan_;
    std::map<std::pair<double, double>, ShellData> cache_;
};

GrowthTable build_growth_table(GrowthSampler& sampler, const PhiFamily& phi);

enum class Verdict { satisfied, violated, inconclusive };
const char* verdict_name(Verdict v);

struct CriterionVerdict {
    std::string criterion;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::pair<std::string, double>> constants;
    std::optional<Vec> witness_point;
    std::optional<int> witness_index;
    std::string witness_reason;
    int horizon = 0;
    double tolerance = 0.0;
    std::string policy;
    std::vector<int> decay_n;
    std::vector<double> log_q;
    std::string decay_verdict;
    std::vector<std::string> notes;
    GrowthTable table;

    std::optional<double> constant(const std::string& key) const;
};

// Policy constants, reported verbatim with every verdict.
constexpr double kDecayEpsilon = 1e-6;
constexpr double kRelativeSlack = 1e-9;
constexpr double kBoundedSlopeTolerance = 0.15;
constexpr int kDefaultNMin = 2;

struct DecayResult {
    Verdict verdict = Verdict::inconclusive;
    std::vector<int> n;
    std::vector<double> log_q;
};

DecayResult theorem6_decay(const GrowthTable& table, double T, double epsilon = kDecayEpsilon);
CriterionVerdict theorem6_verdict(const GrowthTable& table, double T, double epsilon = kDecayEpsilon);

enum class Variant { i, ii, iii };

struct Constants {
    std::optional<double> M, C, alpha, beta, N, T;
};

struct CheckOptions {
    int n_min = kDefaultNMin;
    bool strict_envelope = false;
    std::string id;  // overrides the criterion id in the verdict
};

CriterionVerdict corollary_g1_check(Variant v, GrowthSampler& sampler, const Constants& k,
                                    const CheckOptions& opt = {});
CriterionVerdict prop_symexam_check(Variant v, GrowthSampler& sampler, const Constants& k,
                                    const CheckOptions& opt = {});
// Expects the sampler to carry gamma from the symmetric part, N from the beta field, mu_power 2.
CriterionVerdict sectorial_check(GrowthSampler& sampler, const Constants& k, const CheckOptions& opt = {});

struct AutoResult {
    bool found = false;
    Constants constants;
    CriterionVerdict verdict;
    std::vector<std::string> log;
};

// criterion ids: g1i g1ii g1iii cor13i cor13ii cor13iii symexam-i symexam-ii sectorial
AutoResult auto_constants(const std::string& criterion, GrowthSampler& sampler, const CheckOptions& opt = {});

// Least-squares slope of ys against xs.
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys);
// Fitted exponent p in a_hat ~ n^p over rows with n >= n_min.
double fitted_growth_exponent(const GrowthTable& t, int n_min = kDefaultNMin);

}  // namespace conservd
