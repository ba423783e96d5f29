#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "conservd/oracles.hpp"
#include "conservd/util.hpp"

namespace conservd {

namespace {

std::string point_text(const double* x, int d) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (int i = 0; i < d; ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

// sigma = sqrt(m) for symmetric m (row-major), throws when m is not positive semidefinite.
void symmetric_sqrt(const double* m, int d, double* out, const double* x) {
    const double scale = [&] {
        double s = 0.0;
        for (int k = 0; k < d * d; ++k) s = std::max(s, std::fabs(m[k]));
        return s;
    }();
    const double floor = -1e-12 * std::max(scale, 1.0);
    auto fail = [&] {
        throw NumericalError("diffusion matrix not positive semidefinite at x = " + point_text(x, d));
    };
    if (d == 1) {
        if (m[0] < floor) fail();
        out[0] = std::sqrt(std::max(m[0], 0.0));
        return;
    }
    if (d == 2) {
        double a = m[0], b = 0.5 * (m[1] + m[2]), c = m[3];
        double det = a * c - b * b, tr = a + c;
        if (a < floor || c < floor || det < floor * scale) fail();
        double s = std::sqrt(std::max(det, 0.0));
        double t = std::sqrt(std::max(tr + 2.0 * s, 0.0));
        if (t == 0.0) {
            out[0] = out[1] = out[2] = out[3] = 0.0;
            return;
        }
        out[0] = (a + s) / t;
        out[1] = out[2] = b / t;
        out[3] = (c + s) / t;
        return;
    }
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = 0.5 * (m[i * d + j] + m[j * d + i]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed at x = " + point_text(x, d));
    Eigen::VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() < floor) fail();
    Eigen::MatrixXd S = es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i * d + j] = S(i, j);
}

class PositivityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace

void wilson_interval(std::size_t k, std::size_t n, double& lo, double& hi, double z) {
    if (n == 0) {
        lo = 0.0;
        hi = 1.0;
        return;
    }
    const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn, z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    lo = std::max(0.0, centre - half);
    hi = std::min(1.0, centre + half);
}

SdeModel make_sde(const MatrixField& A, const VectorField& B, const ScalarField& phi, int mu_power) {
    const int d = A.dim;
    if (B.dim != d || phi.dim != d) throw std::invalid_argument("coefficient dimensions disagree");
    if (d > 16) throw std::invalid_argument("dimension above 16 not supported");
    if (mu_power != 1 && mu_power != 2) throw std::invalid_argument("mu_power must be 1 or 2");
    SdeModel m;
    m.dim = d;
    bool all_const = static_cast<bool>(phi.constant);
    for (const auto& e : A.entry) all_const = all_const && e.constant;
    for (const auto& c : B.comp) all_const = all_const && c.constant;
    m.constant_coefficients = all_const;

    if (all_const) {
        std::vector<double> b(d), sigma(static_cast<std::size_t>(d * d)), two(static_cast<std::size_t>(d * d));
        for (int i = 0; i < d; ++i) b[i] = *B.comp[i].constant;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) two[i * d + j] = *A.at(i, j).constant + *A.at(j, i).constant;
        std::vector<double> origin(d, 0.0);
        symmetric_sqrt(two.data(), d, sigma.data(), origin.data());
        m.coefficients = [b, sigma, d](const double*, double* bo, double* so) {
            std::copy(b.begin(), b.end(), bo);
            std::copy(sigma.begin(), sigma.end(), so);
        };
        return m;
    }

    m.coefficients = [A, B, phi, mu_power, d](const double* x, double* b, double* sigma) {
        double w = phi(x);
        if (!(w > 0.0)) throw NumericalError("weight not positive at x = " + point_text(x, d));
        double gw[16], ga[16], a[256], two[256];
        gradient_at(phi, x, gw);
        A.eval(x, a);
        B.eval(x, b);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const ScalarField& aji = A.at(j, i);
                double dj = 0.0;
                if (!aji.constant) {
                    gradient_at(aji, x, ga);
                    dj = ga[j];
                }
                b[i] += dj + a[j * d + i] * mu_power * gw[j] / w;
            }
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) two[i * d + j] = a[i * d + j] + a[j * d + i];
        try {
            symmetric_sqrt(two, d, sigma, x);
        } catch (const NumericalError& e) {
            throw PositivityError(e.what());
        }
    };
    return m;
}

ExplosionEstimate em_explosion_mc(const SdeModel& sde, const EmOptions& opt) {
    const int d = sde.dim;
    if (static_cast<int>(opt.x0.size()) != d) throw std::invalid_argument("x0 dimension does not match the model");
    if (opt.radii.empty()) throw std::invalid_argument("escape radius ladder is empty");
    for (std::size_t k = 1; k < opt.radii.size(); ++k)
        if (!(opt.radii[k] > opt.radii[k - 1])) throw std::invalid_argument("escape radii must be increasing");
    if (!(opt.T > 0.0) || !(opt.dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
    const std::size_t nr = opt.radii.size();
    const double R1 = opt.radii.front(), Rmax = opt.radii.back();

    constexpr std::size_t kPathChunk = 256;
    const std::size_t nchunks = (opt.paths + kPathChunk - 1) / kPathChunk;
    std::vector<std::vector<std::size_t>> esc(nchunks, std::vector<std::size_t>(nr, 0));
    std::vector<std::size_t> invalid(nchunks, 0);

    parallel_chunks(nchunks, [&](std::size_t c) {
        std::vector<double> x(d), b(d), sigma(static_cast<std::size_t>(d * d)), z(d);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const std::size_t end = std::min(opt.paths, (c + 1) * kPathChunk);
        for (std::size_t p = c * kPathChunk; p < end; ++p) {
            std::mt19937_64 rng(derive_seed(opt.seed, 0xe3, p));
            std::copy(opt.x0.begin(), opt.x0.end(), x.begin());
            double t = 0.0, maxr = 0.0;
            for (int i = 0; i < d; ++i) maxr += x[i] * x[i];
            maxr = std::sqrt(maxr);
            bool bad = false;
            while (t < opt.T && maxr < Rmax) {
                try {
                    sde.coefficients(x.data(), b.data(), sigma.data());
                } catch (const PositivityError&) {
                    throw;
                } catch (const NumericalError&) {
                    bad = true;
                    break;
                }
                double bn = 0.0;
                bool finite = true;
                for (int i = 0; i < d; ++i) {
                    bn += b[i] * b[i];
                    finite = finite && std::isfinite(b[i]);
                }
                for (double s : sigma) finite = finite && std::isfinite(s);
                if (!finite) {
                    bad = true;
                    break;
                }
                bn = std::sqrt(bn);
                double h = std::min(opt.dt, opt.T - t);
                for (int k = 0; k < opt.max_halvings && bn * h > opt.drift_fraction * R1; ++k) h *= 0.5;
                const double sq = std::sqrt(h);
                for (int i = 0; i < d; ++i) z[i] = gauss(rng);
                double r2 = 0.0;
                for (int i = 0; i < d; ++i) {
                    double inc = b[i] * h;
                    for (int j = 0; j < d; ++j) inc += sigma[static_cast<std::size_t>(i * d + j)] * sq * z[j];
                    x[i] += inc;
                    r2 += x[i] * x[i];
                }
                if (!std::isfinite(r2)) {
                    bad = true;
                    break;
                }
                maxr = std::max(maxr, std::sqrt(r2));
                t += h;
            }
            if (bad) {
                ++invalid[c];
                for (std::size_t k = 0; k < nr; ++k) ++esc[c][k];
                continue;
            }
            for (std::size_t k = 0; k < nr; ++k)
                if (maxr >= opt.radii[k]) ++esc[c][k];
        }
    });

    ExplosionEstimate est;
    est.T = opt.T;
    est.dt = opt.dt;
    est.paths = opt.paths;
    est.seed = opt.seed;
    for (std::size_t c = 0; c < nchunks; ++c) est.invalid_paths += invalid[c];
    for (std::size_t k = 0; k < nr; ++k) {
        RungEstimate r;
        r.radius = opt.radii[k];
        for (std::size_t c = 0; c < nchunks; ++c) r.escaped += esc[c][k];
        r.p = opt.paths ? static_cast<double>(r.escaped) / static_cast<double>(opt.paths) : 0.0;
        wilson_interval(r.escaped, opt.paths, r.lo, r.hi);
        est.rungs.push_back(r);
    }
    return est;
}

ExplosionEstimate em_explosion_mc(const MatrixField& A, const VectorField& B, const ScalarField& phi, int mu_power,
                                  const EmOptions& opt) {
    return em_explosion_mc(make_sde(A, B, phi, mu_power), opt);
}

double em_step_expectation(const SdeModel& sde, const std::function<double(const double*)>& f, const Vec& x0,
                           double dt, int order) {
    const int d = sde.dim;
    if (order < 1) throw std::invalid_argument("quadrature order must be positive");
    // Golub-Welsch for the standard normal weight
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Eigen::VectorXd nodes = es.eigenvalues();
    Eigen::VectorXd weights = es.eigenvectors().row(0).transpose().array().square();

    std::vector<double> b(d), sigma(static_cast<std::size_t>(d * d)), y(d);
    sde.coefficients(x0.data(), b.data(), sigma.data());
    std::vector<int> idx(d, 0);
    CompensatedSum acc;
    const double sq = std::sqrt(dt);
    while (true) {
        double w = 1.0;
        for (int i = 0; i < d; ++i) w *= weights[idx[i]];
        for (int i = 0; i < d; ++i) {
            y[i] = x0[i] + b[i] * dt;
            for (int j = 0; j < d; ++j) y[i] += sigma[static_cast<std::size_t>(i * d + j)] * sq * nodes[idx[j]];
        }
        acc.add(w * f(y.data()));
        int k = 0;
        while (k < d && ++idx[k] == order) idx[k++] = 0;
        if (k == d) break;
    }
    return acc.value();
}

}  // namespace conservd
