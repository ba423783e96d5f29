#include "conservd/annulus.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "conservd/util.hpp"

namespace conservd {

namespace {

constexpr std::size_t kChunk = 8192;

std::uint64_t shell_stream(const Shell& s, std::uint64_t salt) {
    std::uint64_t a, b;
    std::memcpy(&a, &s.r_in, sizeof a);
    std::memcpy(&b, &s.r_out, sizeof b);
    return splitmix64(a ^ splitmix64(b ^ salt));
}

double unit_ball_volume(int d) { return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0); }

double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

bool in_shell(const Shell& s, const DomainSpec& dom, const double* x) {
    double r = dom.gauge(x);
    return r >= s.r_in && r < s.r_out && dom.inside(x);
}

struct ChunkOut {
    std::vector<double> pts;
    std::size_t draws = 0;
};

}  // namespace

SampleMethod parse_sample_method(const std::string& s) {
    if (s == "box" || s == "uniform-box-rejection") return SampleMethod::box_rejection;
    if (s == "radial" || s == "radial-shell") return SampleMethod::radial_shell;
    if (s == "halton" || s == "low-discrepancy") return SampleMethod::low_discrepancy;
    throw std::invalid_argument("unknown sample method '" + s + "'");
}

const char* sample_method_name(SampleMethod m) {
    switch (m) {
    case SampleMethod::box_rejection: return "uniform-box-rejection";
    case SampleMethod::radial_shell: return "radial-shell";
    case SampleMethod::low_discrepancy: return "low-discrepancy";
    }
    return "?";
}

SampleSet sample_annulus(const Shell& shell, const DomainSpec& dom, const SamplePlan& plan) {
    const int d = dom.dim;
    if (!(shell.r_in < shell.r_out)) throw std::invalid_argument("shell requires r_in < r_out");
    if (d > 16) throw std::invalid_argument("dimension above 16 not supported");
    SampleMethod method = plan.method;
    if (method == SampleMethod::radial_shell && !dom.euclidean_gauge) method = SampleMethod::box_rejection;

    SampleSet set;
    set.shell = shell;
    set.dim = d;
    set.method = method;
    const double half = dom.box_half_width(shell.r_out);
    if (method == SampleMethod::radial_shell)
        set.region_volume =
            unit_ball_volume(d) * (std::pow(shell.r_out, d) - std::pow(shell.r_in, d));
    else
        set.region_volume = std::pow(2.0 * half, d);

    const std::size_t nchunks = (plan.samples + kChunk - 1) / kChunk;
    const std::uint64_t stream = shell_stream(shell, static_cast<std::uint64_t>(method));
    std::vector<ChunkOut> out(nchunks);
    parallel_chunks(nchunks, [&](std::size_t c) {
        const std::size_t quota = std::min(kChunk, plan.samples - c * kChunk);
        const std::size_t max_draws = static_cast<std::size_t>(static_cast<double>(quota) / kMinAcceptance) + 100000;
        std::mt19937_64 rng(derive_seed(plan.seed, stream, c));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        ChunkOut& co = out[c];
        co.pts.reserve(quota * static_cast<std::size_t>(d));
        double x[16];
        double shift[16];
        for (int i = 0; i < d; ++i) shift[i] = uni(rng);
        std::uint64_t halton_index = static_cast<std::uint64_t>(c) * (max_draws + 1) + 1;
        while (co.pts.size() < quota * static_cast<std::size_t>(d)) {
            if (co.draws >= max_draws)
                throw NumericalError("annulus acceptance rate below 1e-4; bounding box too loose for the gauge");
            ++co.draws;
            if (method == SampleMethod::radial_shell) {
                double nn = 0.0;
                for (int i = 0; i < d; ++i) {
                    x[i] = gauss(rng);
                    nn += x[i] * x[i];
                }
                nn = std::sqrt(nn);
                double lo = std::pow(shell.r_in, d), hi = std::pow(shell.r_out, d);
                double r = std::pow(lo + uni(rng) * (hi - lo), 1.0 / d);
                if (r >= shell.r_out) r = std::nextafter(shell.r_out, 0.0);
                for (int i = 0; i < d; ++i) x[i] *= r / nn;
                if (!dom.inside(x)) continue;
            } else {
                for (int i = 0; i < d; ++i) {
                    double u = method == SampleMethod::box_rejection
                                   ? uni(rng)
                                   : std::fmod(radical_inverse(halton_index, kPrimes[i]) + shift[i], 1.0);
                    x[i] = half * (2.0 * u - 1.0);
                }
                ++halton_index;
                if (!in_shell(shell, dom, x)) continue;
            }
            co.pts.insert(co.pts.end(), x, x + d);
        }
    });
    for (auto& co : out) {
        set.points.insert(set.points.end(), co.pts.begin(), co.pts.end());
        set.draws += co.draws;
    }
    if (set.count() > 0 && set.acceptance() < kMinAcceptance)
        throw NumericalError("annulus acceptance rate below 1e-4; bounding box too loose for the gauge");
    return set;
}

SampleSet sample_annulus(const AnnulusSpec& spec, const DomainSpec& dom, const SamplePlan& plan) {
    return sample_annulus(spec.shell(), dom, plan);
}

std::vector<double> evaluate_on(const ScalarField& field, const SampleSet& set) {
    const std::size_t n = set.count();
    std::vector<double> v(n);
    if (field.constant) {
        std::fill(v.begin(), v.end(), *field.constant);
        return v;
    }
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    parallel_chunks(nchunks, [&](std::size_t c) {
        std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t k = c * kChunk; k < end; ++k) {
            double y = field(set.point(k));
            if (!std::isfinite(y)) throw NumericalError("non-finite field value at a sample point");
            v[k] = y;
        }
    });
    return v;
}

Estimate integrate_values(const SampleSet& set, const std::vector<double>& values) {
    Estimate e;
    if (set.draws == 0) return e;
    const std::size_t n = values.size();
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<CompensatedSum> s(nchunks), q(nchunks);
    parallel_chunks(nchunks, [&](std::size_t c) {
        std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t k = c * kChunk; k < end; ++k) {
            s[c].add(values[k]);
            q[c].add(values[k] * values[k]);
        }
    });
    CompensatedSum sum, sq;
    for (std::size_t c = 0; c < nchunks; ++c) {
        sum.merge(s[c]);
        sq.merge(q[c]);
    }
    const double m = static_cast<double>(set.draws);
    double mean = sum.value() / m;
    double var = std::max(0.0, sq.value() / m - mean * mean);
    if (m > 1) var *= m / (m - 1.0);
    e.value = set.region_volume * mean;
    e.std_error = set.region_volume * std::sqrt(var / m);
    return e;
}

Estimate annulus_measure(const SampleSet& set, const ScalarField& weight, int mu_power) {
    if (mu_power != 1 && mu_power != 2) throw std::invalid_argument("mu_power must be 1 or 2");
    std::vector<double> w = evaluate_on(weight, set);
    if (mu_power == 2)
        for (auto& v : w) v *= v;
    return integrate_values(set, w);
}

Estimate annulus_measure(const AnnulusSpec& spec, const DomainSpec& dom, const ScalarField& weight, int mu_power,
                         const SamplePlan& plan) {
    return annulus_measure(sample_annulus(spec, dom, plan), weight, mu_power);
}

Estimate l2_norm_from_integral(const Estimate& integral) {
    Estimate e;
    if (integral.value <= 0.0) return e;
    e.value = std::sqrt(integral.value);
    e.std_error = integral.std_error / (2.0 * e.value);
    return e;
}

Estimate l2_norm_annulus(const SampleSet& set, const ScalarField& field, const ScalarField& weight, int mu_power) {
    if (field.is_zero()) return {};
    if (mu_power != 1 && mu_power != 2) throw std::invalid_argument("mu_power must be 1 or 2");
    std::vector<double> f = evaluate_on(field, set);
    std::vector<double> w = evaluate_on(weight, set);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = f[k] * f[k] * (mu_power == 1 ? w[k] : w[k] * w[k]);
    return l2_norm_from_integral(integrate_values(set, f));
}

Estimate l2_norm_annulus(const AnnulusSpec& spec, const DomainSpec& dom, const ScalarField& field,
                         const ScalarField& weight, int mu_power, const SamplePlan& plan) {
    return l2_norm_annulus(sample_annulus(spec, dom, plan), field, weight, mu_power);
}

SupEstimate ess_sup_estimate(const ScalarField& field, const SampleSet& set, const DomainSpec& dom,
                             const SamplePlan& plan, const std::vector<double>* values) {
    const int d = set.dim;
    SupEstimate best;
    if (set.count() == 0) throw NumericalError("empty sample set");
    std::vector<double> own;
    if (!values) {
        own = evaluate_on(field, set);
        values = &own;
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k < values->size(); ++k)
        if ((*values)[k] > (*values)[arg]) arg = k;
    best.value = (*values)[arg];
    best.argmax.assign(set.point(arg), set.point(arg) + d);
    if (field.constant) return best;

    double radius = (set.shell.r_out - set.shell.r_in) / 4.0;
    const std::uint64_t stream = shell_stream(set.shell, 0x5e4c);
    double x[16];
    for (int round = 0; round < plan.refinement_rounds; ++round) {
        std::mt19937_64 rng(derive_seed(plan.seed, stream, static_cast<std::uint64_t>(round)));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec center = best.argmax;
        for (std::size_t k = 0; k < plan.refine_samples; ++k) {
            double nn = 0.0;
            for (int i = 0; i < d; ++i) {
                x[i] = gauss(rng);
                nn += x[i] * x[i];
            }
            nn = std::sqrt(nn);
            double r = radius * std::pow(uni(rng), 1.0 / d);
            for (int i = 0; i < d; ++i) x[i] = center[i] + r * x[i] / nn;
            if (!in_shell(set.shell, dom, x)) continue;
            double y = field(x);
            if (!std::isfinite(y)) throw NumericalError("non-finite field value during sup refinement");
            if (y > best.value) {
                best.value = y;
                best.argmax.assign(x, x + d);
            }
        }
        radius /= plan.shrink;
    }
    return best;
}

SupEstimate ess_sup_estimate(const ScalarField& field, const AnnulusSpec& spec, const DomainSpec& dom,
                             const SamplePlan& plan) {
    return ess_sup_estimate(field, sample_annulus(spec, dom, plan), dom, plan);
}

}  // namespace conservd
