#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conservd/expr.hpp"

namespace conservd {

using Vec = std::vector<double>;

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScalarField {
    int dim = 1;
    std::function<double(const double*)> value;
    std::function<void(const double*, double*)> gradient;  // optional analytic gradient
    std::function<std::uint64_t(const double*)> branch;    // optional piecewise branch signature
    std::optional<double> constant;                        // set when the field is a known constant
    std::string provenance;

    double operator()(const double* x) const { return value(x); }
    double operator()(const Vec& x) const { return value(x.data()); }
    bool has_gradient() const { return static_cast<bool>(gradient); }
    bool is_zero() const { return constant && *constant == 0.0; }
};

struct VectorField {
    int dim = 1;
    std::vector<ScalarField> comp;
    std::string provenance;

    void eval(const double* x, double* out) const {
        for (int i = 0; i < dim; ++i) out[i] = comp[i](x);
    }
    bool is_zero() const;
};

struct MatrixField {
    int dim = 1;
    std::vector<ScalarField> entry;  // row-major d*d
    std::string provenance;

    const ScalarField& at(int i, int j) const { return entry[static_cast<std::size_t>(i * dim + j)]; }
    void eval(const double* x, double* out) const {
        for (int k = 0; k < dim * dim; ++k) out[k] = entry[k](x);
    }
    bool is_zero() const;
};

ScalarField constant_field(double c, int d);
ScalarField expression_field(const std::string& text, int d);
ScalarField expression_field(NodePtr ast, int d, std::string provenance);
ScalarField euclidean_norm(int d);
ScalarField make_field(int d, std::function<double(const double*)> f, std::string provenance,
                       std::function<void(const double*, double*)> grad = {});

VectorField zero_vector(int d);
VectorField vector_from_expressions(const std::vector<std::string>& texts, int d);
MatrixField identity_matrix(int d, double scale = 1.0);
MatrixField matrix_from_expressions(const std::vector<std::string>& texts, int d);
MatrixField scaled(const MatrixField& a, double lambda);
VectorField scaled(const VectorField& b, double lambda);

constexpr double kDefaultGradientStep = 1e-5;

// Central differences with h = h_rel*(1+|x|); falls back to one-sided differences when a
// stencil point lands on a different piecewise branch than x.
Vec numeric_gradient(const ScalarField& f, const double* x, double h_rel = kDefaultGradientStep);
Vec numeric_gradient(const ScalarField& f, const Vec& x, double h_rel = kDefaultGradientStep);
// Analytic gradient when available, numeric otherwise.
void gradient_at(const ScalarField& f, const double* x, double* out);

std::pair<MatrixField, MatrixField> split_matrix(const MatrixField& a);

// beta_i = sum_j (d_j c_ij + c_ij * 2 d_j w / w) + b_i for antisymmetric c and weight w.
VectorField beta_field(const MatrixField& antisym, const VectorField& b, const ScalarField& weight);

ScalarField gamma_rho(const MatrixField& a, const ScalarField& rho);
ScalarField n_rho(const VectorField& b, const ScalarField& rho);

struct DomainSpec {
    int dim = 1;
    std::optional<ScalarField> indicator;  // inside where indicator > 0
    bool closed = false;
    ScalarField gauge;
    double k0 = 1.0;
    double bound_scale = 1.0;  // gauge sublevel {rho < r} lies in the cube [-bound_scale*r, bound_scale*r]^d
    bool euclidean_gauge = true;

    bool inside(const double* x) const { return !indicator || (*indicator)(x) > 0.0; }
    double box_half_width(double r) const { return bound_scale * r; }
};

DomainSpec whole_space(int d);

struct DivergenceTest {
    Vec center;
    double radius = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    bool within = false;
};

struct DivergenceReport {
    std::vector<DivergenceTest> tests;
    bool pass = false;
};

struct DivergenceOptions {
    double center_box = 4.0;  // centres uniform in [-center_box, center_box]^d
    double min_radius = 0.5;
    double max_radius = 2.0;
    std::size_t samples = 20000;
    double z_threshold = 3.0;
};

double bump_value(const double* x, const double* c, double r, int d);
void bump_gradient(const double* x, const double* c, double r, int d, double* out);

DivergenceReport check_divergence_free(const VectorField& b, const ScalarField& weight, int mu_power, int tests,
                                       std::uint64_t seed, const DivergenceOptions& opt = {});

}  // namespace conservd
