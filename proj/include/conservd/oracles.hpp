#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "conservd/field.hpp"

namespace conservd {

enum class SideVerdict { diverges, bounded, inconclusive };
const char* side_verdict_name(SideVerdict v);

struct FellerOptions {
    std::vector<double> ladder{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
    double delta = 0.05;       // minimum log-log slope for divergence
    double cauchy_tol = 1e-6;  // relative spread of the top three rungs for boundedness
    double quad_tol = 1e-12;
};

struct FellerSide {
    int sign = 1;
    std::vector<double> L;
    std::vector<double> phi;      // nested quadrature
    std::vector<double> phi_alt;  // h(x) * int phi - int h phi
    std::vector<double> h;        // h(sign * L)
    SideVerdict verdict = SideVerdict::inconclusive;
    double slope = 0.0;           // log-log slope between the top two rungs
    double spread = 0.0;          // relative spread over the top three rungs
};

struct FellerResult {
    std::vector<double> grid_x, grid_h;
    FellerSide plus, minus;
    bool h_monotone = true;
    double max_dual_rel_diff = 0.0;
    std::string policy;
};

// h(x) = int_0^x 1/(A phi), Phi(x) = int_0^x (h(x) - h(y)) phi(y) dy on both half-lines.
FellerResult feller_test(const ScalarField& A, const ScalarField& phi, const FellerOptions& opt = {});

struct SdeModel {
    int dim = 1;
    bool constant_coefficients = false;
    // drift b and diffusion factor sigma (row-major, sigma sigma^T = 2 * sym(A)) at x
    std::function<void(const double* x, double* b, double* sigma)> coefficients;
};

SdeModel make_sde(const MatrixField& A, const VectorField& B, const ScalarField& phi, int mu_power);

struct EmOptions {
    Vec x0;
    double T = 1.0;
    double dt = 1e-3;
    std::vector<double> radii{2.0, 4.0, 8.0};
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    double drift_fraction = 0.1;  // halve dt while |b| dt exceeds this fraction of the first radius
    int max_halvings = 20;
};

struct RungEstimate {
    double radius = 0.0;
    std::size_t escaped = 0;
    double p = 0.0, lo = 0.0, hi = 0.0;
};

struct ExplosionEstimate {
    double T = 0.0, dt = 0.0;
    std::vector<RungEstimate> rungs;
    std::size_t paths = 0;
    std::size_t invalid_paths = 0;
    std::uint64_t seed = 0;
};

void wilson_interval(std::size_t k, std::size_t n, double& lo, double& hi, double z = 1.96);

ExplosionEstimate em_explosion_mc(const SdeModel& sde, const EmOptions& opt);
ExplosionEstimate em_explosion_mc(const MatrixField& A, const VectorField& B, const ScalarField& phi, int mu_power,
                                  const EmOptions& opt);

// E f(x0 + b dt + sigma sqrt(dt) Z) for one Euler-Maruyama step, by tensor Gauss-Hermite quadrature.
double em_step_expectation(const SdeModel& sde, const std::function<double(const double*)>& f, const Vec& x0,
                           double dt, int order = 12);

}  // namespace conservd
