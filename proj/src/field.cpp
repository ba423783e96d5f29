#include "conservd/field.hpp"

#include <cmath>
#include <random>

#include "conservd/util.hpp"

namespace conservd {

namespace {

double norm(const double* x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + what);
    return v;
}

}  // namespace

bool VectorField::is_zero() const {
    for (const auto& c : comp)
        if (!c.is_zero()) return false;
    return true;
}

bool MatrixField::is_zero() const {
    for (const auto& e : entry)
        if (!e.is_zero()) return false;
    return true;
}

ScalarField make_field(int d, std::function<double(const double*)> f, std::string provenance,
                       std::function<void(const double*, double*)> grad) {
    ScalarField s;
    s.dim = d;
    s.value = std::move(f);
    s.gradient = std::move(grad);
    s.provenance = std::move(provenance);
    return s;
}

ScalarField constant_field(double c, int d) {
    ScalarField s = make_field(
        d, [c](const double*) { return c; }, "",
        [d](const double*, double* g) {
            for (int i = 0; i < d; ++i) g[i] = 0.0;
        });
    s.constant = c;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", c);
    s.provenance = buf;
    return s;
}

ScalarField expression_field(NodePtr ast, int d, std::string provenance) {
    if (ast->kind == NodeKind::constant) {
        ScalarField s = constant_field(ast->value, d);
        s.provenance = std::move(provenance);
        return s;
    }
    ScalarField s;
    s.dim = d;
    s.provenance = std::move(provenance);
    s.value = [ast](const double* x) { return evaluate(*ast, x); };
    if (has_piecewise(*ast))
        s.branch = [ast](const double* x) {
            std::uint64_t b = 0;
            evaluate(*ast, x, b);
            return b;
        };
    return s;
}

ScalarField expression_field(const std::string& text, int d) {
    return expression_field(parse_expression(text, d), d, text);
}

ScalarField euclidean_norm(int d) {
    return make_field(
        d, [d](const double* x) { return norm(x, d); }, "|x|",
        [d](const double* x, double* g) {
            double r = norm(x, d);
            for (int i = 0; i < d; ++i) g[i] = r > 0.0 ? x[i] / r : 0.0;
        });
}

VectorField zero_vector(int d) {
    VectorField v;
    v.dim = d;
    v.comp.assign(static_cast<std::size_t>(d), constant_field(0.0, d));
    v.provenance = "0";
    return v;
}

VectorField vector_from_expressions(const std::vector<std::string>& texts, int d) {
    if (static_cast<int>(texts.size()) != d)
        throw std::invalid_argument("vector field needs " + std::to_string(d) + " components");
    VectorField v;
    v.dim = d;
    for (const auto& t : texts) v.comp.push_back(expression_field(t, d));
    v.provenance = "expressions";
    return v;
}

MatrixField identity_matrix(int d, double scale) {
    MatrixField m;
    m.dim = d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m.entry.push_back(constant_field(i == j ? scale : 0.0, d));
    m.provenance = "identity";
    return m;
}

MatrixField matrix_from_expressions(const std::vector<std::string>& texts, int d) {
    if (static_cast<int>(texts.size()) != d * d)
        throw std::invalid_argument("matrix field needs " + std::to_string(d * d) + " entries");
    MatrixField m;
    m.dim = d;
    for (const auto& t : texts) m.entry.push_back(expression_field(t, d));
    m.provenance = "expressions";
    return m;
}

namespace {

ScalarField scale_field(const ScalarField& f, double lambda) {
    if (f.constant) return constant_field(*f.constant * lambda, f.dim);
    ScalarField s = f;
    s.value = [f, lambda](const double* x) { return lambda * f(x); };
    if (f.gradient)
        s.gradient = [f, lambda](const double* x, double* g) {
            f.gradient(x, g);
            for (int i = 0; i < f.dim; ++i) g[i] *= lambda;
        };
    return s;
}

}  // namespace

MatrixField scaled(const MatrixField& a, double lambda) {
    MatrixField m = a;
    for (auto& e : m.entry) e = scale_field(e, lambda);
    return m;
}

VectorField scaled(const VectorField& b, double lambda) {
    VectorField v = b;
    for (auto& c : v.comp) c = scale_field(c, lambda);
    return v;
}

Vec numeric_gradient(const ScalarField& f, const double* x, double h_rel) {
    const int d = f.dim;
    Vec g(static_cast<std::size_t>(d));
    Vec p(x, x + d);
    const double f0 = checked(f(x), "gradient stencil");
    const std::uint64_t s0 = f.branch ? f.branch(x) : 0;
    auto at = [&](int i, double offset, std::uint64_t* sig) {
        p[i] = x[i] + offset;
        double v = checked(f(p.data()), "gradient stencil");
        if (sig) *sig = f.branch ? f.branch(p.data()) : 0;
        p[i] = x[i];
        return v;
    };
    for (int i = 0; i < d; ++i) {
        double h = h_rel * (1.0 + norm(x, d));
        double result = 0.0;
        bool done = false;
        for (int attempt = 0; attempt < 4 && !done; ++attempt, h /= 16.0) {
            std::uint64_t sp = 0, sm = 0;
            double fp = at(i, h, &sp);
            double fm = at(i, -h, &sm);
            bool plus_ok = sp == s0, minus_ok = sm == s0;
            if (plus_ok && minus_ok) {
                result = (fp - fm) / (2.0 * h);
                done = true;
            } else if (plus_ok || minus_ok) {
                double s = plus_ok ? 1.0 : -1.0;
                std::uint64_t s2 = 0;
                double f1 = plus_ok ? fp : fm;
                double f2 = at(i, 2.0 * s * h, &s2);
                if (s2 == s0) result = s * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
                else result = s * (f1 - f0) / h;
                done = true;
            } else if (attempt == 3) {
                result = (fp - fm) / (2.0 * h);
                done = true;
            }
        }
        g[static_cast<std::size_t>(i)] = result;
    }
    return g;
}

Vec numeric_gradient(const ScalarField& f, const Vec& x, double h_rel) { return numeric_gradient(f, x.data(), h_rel); }

void gradient_at(const ScalarField& f, const double* x, double* out) {
    if (f.constant) {
        for (int i = 0; i < f.dim; ++i) out[i] = 0.0;
        return;
    }
    if (f.gradient) {
        f.gradient(x, out);
        return;
    }
    Vec g = numeric_gradient(f, x);
    for (int i = 0; i < f.dim; ++i) out[i] = g[static_cast<std::size_t>(i)];
}

std::pair<MatrixField, MatrixField> split_matrix(const MatrixField& a) {
    const int d = a.dim;
    MatrixField sym, anti;
    sym.dim = anti.dim = d;
    sym.provenance = "sym(" + a.provenance + ")";
    anti.provenance = "anti(" + a.provenance + ")";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const ScalarField& u = a.at(i, j);
            const ScalarField& v = a.at(j, i);
            if (u.constant && v.constant) {
                sym.entry.push_back(constant_field((*u.constant + *v.constant) / 2.0, d));
                anti.entry.push_back(constant_field((*u.constant - *v.constant) / 2.0, d));
                continue;
            }
            auto combine = [&](double sign) {
                ScalarField s;
                s.dim = d;
                s.provenance = sign > 0 ? "sym" : "anti";
                s.value = [u, v, sign](const double* x) { return (u(x) + sign * v(x)) / 2.0; };
                if (u.has_gradient() && v.has_gradient())
                    s.gradient = [u, v, sign, d](const double* x, double* g) {
                        Vec gu(static_cast<std::size_t>(d)), gv(static_cast<std::size_t>(d));
                        u.gradient(x, gu.data());
                        v.gradient(x, gv.data());
                        for (int k = 0; k < d; ++k) g[k] = (gu[k] + sign * gv[k]) / 2.0;
                    };
                if (u.branch || v.branch)
                    s.branch = [u, v](const double* x) {
                        std::uint64_t bu = u.branch ? u.branch(x) : 0, bv = v.branch ? v.branch(x) : 0;
                        return splitmix64(bu) ^ bv;
                    };
                return s;
            };
            if (i == j) {
                sym.entry.push_back(u);
                anti.entry.push_back(constant_field(0.0, d));
            } else {
                sym.entry.push_back(combine(1.0));
                anti.entry.push_back(combine(-1.0));
            }
        }
    return {sym, anti};
}

VectorField beta_field(const MatrixField& antisym, const VectorField& b, const ScalarField& weight) {
    const int d = antisym.dim;
    VectorField out;
    out.dim = d;
    out.provenance = "beta";
    for (int i = 0; i < d; ++i) {
        ScalarField bi = b.comp[static_cast<std::size_t>(i)];
        std::vector<ScalarField> row;
        bool row_zero = true;
        for (int j = 0; j < d; ++j) {
            row.push_back(antisym.at(i, j));
            row_zero = row_zero && antisym.at(i, j).is_zero();
        }
        if (row_zero) {
            out.comp.push_back(bi);
            continue;
        }
        ScalarField s;
        s.dim = d;
        s.provenance = "beta_" + std::to_string(i + 1);
        s.value = [row, bi, weight, d, i](const double* x) {
            double w = weight(x);
            if (!(w > 0.0)) throw NumericalError("weight not positive in beta field");
            Vec gw(static_cast<std::size_t>(d)), gc(static_cast<std::size_t>(d));
            gradient_at(weight, x, gw.data());
            double sum = bi(x);
            for (int j = 0; j < d; ++j) {
                const ScalarField& c = row[static_cast<std::size_t>(j)];
                if (c.is_zero()) continue;
                gradient_at(c, x, gc.data());
                sum += gc[static_cast<std::size_t>(j)] + c(x) * 2.0 * gw[static_cast<std::size_t>(j)] / w;
            }
            (void)i;
            return checked(sum, "beta field");
        };
        out.comp.push_back(s);
    }
    return out;
}

ScalarField gamma_rho(const MatrixField& a, const ScalarField& rho) {
    const int d = a.dim;
    ScalarField s;
    s.dim = d;
    s.provenance = "<A grad rho, grad rho>";
    s.value = [a, rho, d](const double* x) {
        double g[16], m[256];
        gradient_at(rho, x, g);
        a.eval(x, m);
        double sum = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) sum += m[i * d + j] * g[j] * g[i];
        return sum;
    };
    return s;
}

ScalarField n_rho(const VectorField& b, const ScalarField& rho) {
    const int d = b.dim;
    if (b.is_zero()) return constant_field(0.0, d);
    ScalarField s;
    s.dim = d;
    s.provenance = "<B, grad rho>";
    s.value = [b, rho, d](const double* x) {
        double g[16], v[16];
        gradient_at(rho, x, g);
        b.eval(x, v);
        double sum = 0.0;
        for (int i = 0; i < d; ++i) sum += v[i] * g[i];
        return sum;
    };
    return s;
}

DomainSpec whole_space(int d) {
    DomainSpec dom;
    dom.dim = d;
    dom.gauge = euclidean_norm(d);
    return dom;
}

double bump_value(const double* x, const double* c, double r, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    s /= r * r;
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s));
}

void bump_gradient(const double* x, const double* c, double r, int d, double* out) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    s /= r * r;
    if (s >= 1.0) {
        for (int i = 0; i < d; ++i) out[i] = 0.0;
        return;
    }
    double f = std::exp(1.0 - 1.0 / (1.0 - s));
    double k = -f * 2.0 / (r * r * (1.0 - s) * (1.0 - s));
    for (int i = 0; i < d; ++i) out[i] = k * (x[i] - c[i]);
}

DivergenceReport check_divergence_free(const VectorField& b, const ScalarField& weight, int mu_power, int tests,
                                       std::uint64_t seed, const DivergenceOptions& opt) {
    const int d = b.dim;
    if (mu_power != 1 && mu_power != 2) throw std::invalid_argument("mu_power must be 1 or 2");
    DivergenceReport rep;
    rep.pass = true;
    const double unit_ball = std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    for (int t = 0; t < tests; ++t) {
        std::mt19937_64 rng(derive_seed(seed, 0xd1f, static_cast<std::uint64_t>(t)));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        DivergenceTest dt;
        dt.center.resize(static_cast<std::size_t>(d));
        for (auto& c : dt.center) c = opt.center_box * (2.0 * uni(rng) - 1.0);
        dt.radius = opt.min_radius + (opt.max_radius - opt.min_radius) * uni(rng);
        CompensatedSum sum, sq;
        Vec x(static_cast<std::size_t>(d)), dir(static_cast<std::size_t>(d)), gf(static_cast<std::size_t>(d)),
            bv(static_cast<std::size_t>(d));
        for (std::size_t k = 0; k < opt.samples; ++k) {
            double nn = 0.0;
            for (auto& v : dir) {
                v = gauss(rng);
                nn += v * v;
            }
            nn = std::sqrt(nn);
            double rad = dt.radius * std::pow(uni(rng), 1.0 / d);
            for (int i = 0; i < d; ++i) x[i] = dt.center[i] + rad * dir[i] / nn;
            if (b.is_zero()) continue;
            bump_gradient(x.data(), dt.center.data(), dt.radius, d, gf.data());
            b.eval(x.data(), bv.data());
            double w = weight(x.data());
            double wp = mu_power == 1 ? w : w * w;
            double dot = 0.0;
            for (int i = 0; i < d; ++i) dot += bv[i] * gf[i];
            double g = checked(dot * wp, "divergence integrand");
            sum.add(g);
            sq.add(g * g);
        }
        const double n = static_cast<double>(opt.samples);
        const double vol = unit_ball * std::pow(dt.radius, d);
        double mean = sum.value() / n;
        double var = std::max(0.0, sq.value() / n - mean * mean) * n / (n - 1.0);
        dt.estimate = vol * mean;
        dt.std_error = vol * std::sqrt(var / n);
        dt.within = std::fabs(dt.estimate) <= opt.z_threshold * dt.std_error;
        rep.pass = rep.pass && dt.within;
        rep.tests.push_back(std::move(dt));
    }
    return rep;
}

}  // namespace conservd
