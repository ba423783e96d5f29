#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conservd/field.hpp"

namespace conservd {

// Gauge shell {r_in <= rho < r_out}; the annulus of index n is Shell{2n, 4n}.
struct Shell {
    double r_in = 0.0;
    double r_out = 0.0;
};

struct AnnulusSpec {
    int n = 1;
    double inner() const { return 2.0 * n; }
    double outer() const { return 4.0 * n; }
    Shell shell() const { return {inner(), outer()}; }
};

enum class SampleMethod { box_rejection, radial_shell, low_discrepancy };

SampleMethod parse_sample_method(const std::string& s);
const char* sample_method_name(SampleMethod m);

struct SamplePlan {
    SampleMethod method = SampleMethod::radial_shell;
    std::size_t samples = 200000;
    std::uint64_t seed = 1;
    int refinement_rounds = 4;
    std::size_t refine_samples = 2000;
    double shrink = 4.0;
};

constexpr double kMinAcceptance = 1e-4;

struct SampleSet {
    Shell shell;
    int dim = 1;
    std::vector<double> points;  // row-major, count() x dim
    std::size_t draws = 0;       // proposals including rejected ones
    double region_volume = 0.0;  // Lebesgue volume of the proposal region
    SampleMethod method = SampleMethod::radial_shell;

    std::size_t count() const { return points.size() / static_cast<std::size_t>(dim); }
    const double* point(std::size_t k) const { return points.data() + k * static_cast<std::size_t>(dim); }
    double acceptance() const { return draws ? static_cast<double>(count()) / static_cast<double>(draws) : 0.0; }
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct SupEstimate {
    double value = 0.0;
    Vec argmax;
};

// Radial-shell sampling is only valid for the Euclidean gauge; other gauges fall back to
// box rejection inside the configured bounding cube.
SampleSet sample_annulus(const Shell& shell, const DomainSpec& dom, const SamplePlan& plan);
SampleSet sample_annulus(const AnnulusSpec& spec, const DomainSpec& dom, const SamplePlan& plan);

// Integral over the sampled region of g(x), where `values` holds g at the accepted points.
Estimate integrate_values(const SampleSet& set, const std::vector<double>& values);

Estimate annulus_measure(const SampleSet& set, const ScalarField& weight, int mu_power);
Estimate annulus_measure(const AnnulusSpec& spec, const DomainSpec& dom, const ScalarField& weight, int mu_power,
                         const SamplePlan& plan);

Estimate l2_norm_from_integral(const Estimate& integral);
Estimate l2_norm_annulus(const SampleSet& set, const ScalarField& field, const ScalarField& weight, int mu_power);
Estimate l2_norm_annulus(const AnnulusSpec& spec, const DomainSpec& dom, const ScalarField& field,
                         const ScalarField& weight, int mu_power, const SamplePlan& plan);

// Sampled maximum followed by local resampling in shrinking balls around the argmax.
// `values` may carry precomputed field values at the set's points.
SupEstimate ess_sup_estimate(const ScalarField& field, const SampleSet& set, const DomainSpec& dom,
                             const SamplePlan& plan, const std::vector<double>* values = nullptr);
SupEstimate ess_sup_estimate(const ScalarField& field, const AnnulusSpec& spec, const DomainSpec& dom,
                             const SamplePlan& plan);

std::vector<double> evaluate_on(const ScalarField& field, const SampleSet& set);

}  // namespace conservd
