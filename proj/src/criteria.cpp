#include "conservd/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

namespace conservd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

// Pointwise function of (rho, gamma, N(rho)).
using PointFn = std::function<double(double, double, double)>;

ScalarField point_field(const CriterionFields& f, PointFn fn) {
    ScalarField s;
    s.dim = f.domain.dim;
    s.provenance = "pointwise";
    s.value = [f, fn](const double* x) { return fn(f.domain.gauge(x), f.gamma(x), f.nrho(x)); };
    return s;
}

WitnessedValue sup_on(GrowthSampler& sampler, const Shell& sh, const PointFn& fn) {
    const auto& data = sampler.shell(sh);
    std::vector<double> vals(data.rho.size());
    for (std::size_t k = 0; k < vals.size(); ++k) {
        vals[k] = fn(data.rho[k], data.gamma[k], data.nrho[k]);
        if (!std::isfinite(vals[k])) throw NumericalError("non-finite pointwise criterion field");
    }
    SupEstimate s = ess_sup_estimate(point_field(sampler.fields(), fn), data.set, sampler.fields().domain,
                                     sampler.plan(), &vals);
    return {s.value, s.argmax};
}

// Indices of the final half of a sequence of length m.
std::size_t final_half_start(std::size_t m) { return m / 2; }

struct SubCheck {
    Verdict verdict = Verdict::inconclusive;
    double fitted = 0.0;
    std::optional<Vec> witness_point;
    std::optional<int> witness_index;
    std::string reason;
    double slope = 0.0;
};

// Boundedness of a positive sequence indexed by log-abscissae: bounded when the least-squares
// log-log slope over the final half stays below the tolerance.
bool bounded_trend(const std::vector<double>& log_x, const std::vector<double>& values, double& slope) {
    std::size_t start = final_half_start(values.size());
    std::vector<double> xs, ys;
    for (std::size_t k = start; k < values.size(); ++k) {
        if (!(values[k] > 0.0)) continue;
        xs.push_back(log_x[k]);
        ys.push_back(std::log(values[k]));
    }
    if (xs.size() < 2) {
        slope = 0.0;
        return true;
    }
    slope = ls_slope(xs, ys);
    return slope <= kBoundedSlopeTolerance;
}

// Pointwise bound lhs <= M * unit on every cover shell outside the compact core.
SubCheck pointwise_check(GrowthSampler& sampler, const PointFn& ratio, std::optional<double> M) {
    SubCheck out;
    auto shells = sampler.cover_shells();
    std::vector<WitnessedValue> sups;
    std::vector<double> log_r, vals;
    for (const auto& sh : shells) {
        sups.push_back(sup_on(sampler, sh, ratio));
        log_r.push_back(std::log(sh.r_out));
        vals.push_back(sups.back().value);
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k < sups.size(); ++k)
        if (sups[k].value > sups[arg].value) arg = k;
    out.fitted = std::max(0.0, sups[arg].value);
    if (M) {
        if (sups[arg].value > *M * (1.0 + kRelativeSlack)) {
            out.verdict = Verdict::violated;
            out.witness_point = sups[arg].point;
            out.reason = "pointwise bound exceeded: ratio " + fmt(sups[arg].value) + " > M = " + fmt(*M);
        } else {
            out.verdict = Verdict::satisfied;
        }
        return out;
    }
    if (shells.size() < 4) {
        out.reason = "too few shells to judge boundedness of the pointwise ratio";
        return out;
    }
    if (bounded_trend(log_r, vals, out.slope)) {
        out.verdict = Verdict::satisfied;
    } else {
        out.verdict = Verdict::violated;
        out.witness_point = sups.back().point;
        out.reason = "pointwise ratio unbounded: log-log slope " + fmt(out.slope) + " over outer shells exceeds " +
                     fmt(kBoundedSlopeTolerance);
    }
    return out;
}

// Sequence check value_n <= N * envelope_n for n >= n_min, with log_value and log_env given.
SubCheck envelope_check(const std::vector<int>& ns, const std::vector<double>& log_value,
                        const std::vector<double>& log_env, bool strict, const char* what) {
    SubCheck out;
    std::vector<double> ell, log_n, ratio;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        ell.push_back(log_value[k] - log_env[k]);
        log_n.push_back(std::log(static_cast<double>(ns[k])));
    }
    if (ns.size() < 2) {
        out.reason = std::string("too few indices for the ") + what + " check";
        return out;
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k < ell.size(); ++k)
        if (ell[k] > ell[arg]) arg = k;
    if (strict) {
        out.fitted = std::exp(ell[arg]);
        for (std::size_t k = 0; k < ell.size(); ++k)
            if (ell[k] > std::log1p(kRelativeSlack)) {
                out.verdict = Verdict::violated;
                out.witness_index = ns[k];
                out.reason = std::string(what) + " envelope exceeded at n = " + std::to_string(ns[k]);
                return out;
            }
        out.verdict = Verdict::satisfied;
        return out;
    }
    std::size_t start = final_half_start(ell.size());
    double mx = kNegInf;
    std::size_t amx = start;
    for (std::size_t k = start; k < ell.size(); ++k)
        if (ell[k] > mx) mx = ell[k], amx = k;
    out.fitted = std::exp(mx);
    for (double e : ell) ratio.push_back(std::exp(e));
    std::vector<double> xs(log_n.begin() + static_cast<long>(start), log_n.end());
    std::vector<double> ys(ell.begin() + static_cast<long>(start), ell.end());
    bool finite = std::all_of(ys.begin(), ys.end(), [](double v) { return std::isfinite(v); });
    out.slope = finite ? ls_slope(xs, ys) : 0.0;
    if (xs.size() < 2 || !finite || out.slope <= kBoundedSlopeTolerance) {
        out.verdict = Verdict::satisfied;
    } else {
        out.verdict = Verdict::violated;
        out.witness_index = ns[amx];
        out.reason = std::string(what) + " ratio to envelope grows: log-log slope " + fmt(out.slope) + " exceeds " +
                     fmt(kBoundedSlopeTolerance);
    }
    return out;
}

double envelope_log(Variant v, double C, double beta, double alpha, int n) {
    double dn = static_cast<double>(n);
    switch (v) {
    case Variant::i: return std::log(dn) + alpha * C * std::pow(std::log(dn + 1.0), 2.0 - beta);
    case Variant::ii: return std::log(dn) + C * alpha * std::log(std::log(dn + 1.0));
    case Variant::iii: return std::log(dn) + alpha * C * dn * dn;
    }
    return 0.0;
}

SubCheck growth_check(Variant v, const GrowthTable& t, double C, double beta, double alpha, const CheckOptions& opt) {
    std::vector<int> ns;
    std::vector<double> lv, le;
    for (const auto& r : t.rows) {
        if (r.n < opt.n_min) continue;
        ns.push_back(r.n);
        lv.push_back(safe_log(r.a_hat));
        le.push_back(envelope_log(v, C, beta, alpha, r.n));
    }
    return envelope_check(ns, lv, le, opt.strict_envelope, "growth");
}

double admissible_alpha_max(Variant v) { return v == Variant::iii ? 2.0 : 1.0; }

void check_alpha(Variant v, double alpha) {
    double hi = admissible_alpha_max(v);
    if (!(alpha > 0.0 && alpha < hi))
        throw std::invalid_argument("alpha = " + fmt(alpha) + " outside admissible range (0, " + fmt(hi) + ")");
}

// Least admissible alpha passing the growth check; the table does not depend on alpha.
std::optional<double> least_alpha(Variant v, const GrowthTable& t, double C, double beta, const CheckOptions& opt) {
    double hi = admissible_alpha_max(v) * (1.0 - 1e-9);
    double lo = 1e-6;
    auto pass = [&](double a) { return growth_check(v, t, C, beta, a, opt).verdict == Verdict::satisfied; };
    if (!pass(hi)) return std::nullopt;
    if (pass(lo)) return lo;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (pass(mid) ? hi : lo) = mid;
    }
    return hi;
}

PhiFamily variant_phi(Variant v, double C, double beta) {
    switch (v) {
    case Variant::i: return PhiFamily::log_power(C, beta);
    case Variant::ii: return PhiFamily::loglog(C);
    case Variant::iii: return PhiFamily::quadratic(C);
    }
    return PhiFamily::quadratic(C);
}

PointFn g1_ratio(Variant v, double C, double beta) {
    switch (v) {
    case Variant::i:
        return [C, beta](double rho, double g, double n) {
            double L = std::log(rho + 1.0);
            double lhs = std::fabs(g + (rho + 1.0) * n / (C * (2.0 - beta) * std::pow(L, 1.0 - beta)));
            return lhs / ((rho + 1.0) * (rho + 1.0) * std::pow(L, beta));
        };
    case Variant::ii:
        return [C](double rho, double g, double n) {
            double L = std::log(rho + 1.0);
            double lhs = std::fabs(g + (rho + 1.0) * L * n / C);
            return lhs / ((rho + 1.0) * (rho + 1.0) * L * L);
        };
    case Variant::iii:
        return [C](double rho, double g, double n) { return std::fabs(g + n / (C * rho)); };
    }
    return {};
}

// M' in c_n <= M' * h(n), used by the default time constant of variants (i)/(ii).
double fit_c_constant(const GrowthTable& t, Variant v, double beta, int n_min) {
    double m = 0.0;
    for (const auto& r : t.rows) {
        if (r.n < n_min) continue;
        double h = v == Variant::i ? std::pow(std::log(4.0 * r.n + 1.0), 2.0 - beta) : 1.0;
        m = std::max(m, r.c.value / h);
    }
    return m;
}

std::string variant_suffix(Variant v) { return v == Variant::i ? "i" : v == Variant::ii ? "ii" : "iii"; }

void attach_decay(CriterionVerdict& out, const GrowthTable& t, double T) {
    DecayResult d = theorem6_decay(t, T);
    out.decay_n = d.n;
    out.log_q = d.log_q;
    out.decay_verdict = verdict_name(d.verdict);
    out.constants.emplace_back("T", T);
}

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::violated || b == Verdict::violated) return Verdict::violated;
    if (a == Verdict::satisfied && b == Verdict::satisfied) return Verdict::satisfied;
    return Verdict::inconclusive;
}

void take_witness(CriterionVerdict& out, const SubCheck& s) {
    if (s.verdict != Verdict::violated || out.witness_point || out.witness_index) return;
    out.witness_point = s.witness_point;
    out.witness_index = s.witness_index;
    out.witness_reason = s.reason;
}

std::string policy_text(const CheckOptions& opt, bool fitted_m) {
    std::string s = "pointwise: no sampled violation with relative slack " + fmt(kRelativeSlack);
    if (fitted_m) s += " (M fitted; ratio bounded if outer-shell log-log slope <= " + fmt(kBoundedSlopeTolerance) + ")";
    s += "; growth: ";
    if (opt.strict_envelope) s += "A_hat_n <= envelope_n for every n >= " + std::to_string(opt.n_min);
    else
        s += "A_hat_n <= N_g * envelope_n for n >= " + std::to_string(opt.n_min) +
             ", ratio bounded if final-half log-log slope <= " + fmt(kBoundedSlopeTolerance);
    s += "; estimates are sampled lower bounds of essential suprema";
    return s;
}

}  // namespace

PhiFamily PhiFamily::log_power(double C, double beta) {
    if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
    if (!(beta >= 0.0 && beta < 2.0)) throw std::invalid_argument("log-power family requires 0 <= beta < 2");
    return {PhiKind::log_power, C, beta};
}

PhiFamily PhiFamily::loglog(double C) {
    if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
    return {PhiKind::loglog, C, 2.0};
}

PhiFamily PhiFamily::quadratic(double C) {
    if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
    return {PhiKind::quadratic, C, 0.0};
}

double PhiFamily::phi(double r) const {
    switch (kind) {
    case PhiKind::log_power: return C * std::pow(std::log1p(r), 2.0 - beta);
    case PhiKind::loglog: return C * std::log(std::log1p(r) + 1.0);
    case PhiKind::quadratic: return C * r * r / 2.0;
    }
    return 0.0;
}

double PhiFamily::dphi(double r) const {
    switch (kind) {
    case PhiKind::log_power: return C * (2.0 - beta) * std::pow(std::log1p(r), 1.0 - beta) / (r + 1.0);
    case PhiKind::loglog: return C / ((std::log1p(r) + 1.0) * (r + 1.0));
    case PhiKind::quadratic: return C * r;
    }
    return 0.0;
}

std::string PhiFamily::describe() const {
    switch (kind) {
    case PhiKind::log_power: return "C*log(r+1)^(2-beta), C=" + fmt(C) + ", beta=" + fmt(beta);
    case PhiKind::loglog: return "C*log(log(r+1)+1), C=" + fmt(C);
    case PhiKind::quadratic: return "C*r^2/2, C=" + fmt(C);
    }
    return "";
}

CriterionFields make_criterion_fields(const MatrixField& a, const VectorField& b, const ScalarField& weight,
                                      int mu_power, const DomainSpec& domain) {
    CriterionFields f;
    f.gamma = gamma_rho(a, domain.gauge);
    f.nrho = n_rho(b, domain.gauge);
    f.weight = weight;
    f.mu_power = mu_power;
    f.domain = domain;
    return f;
}

CriterionFields with_intrinsic_gauge(CriterionFields f) {
    ScalarField g = f.gamma;
    f.gamma.value = [g](const double* x) { return std::min(g(x), 1.0); };
    f.gamma.gradient = {};
    f.gamma.constant.reset();
    if (g.constant) f.gamma = constant_field(std::min(*g.constant, 1.0), g.dim);
    f.gamma.provenance = "min(" + g.provenance + ", 1)";
    return f;
}

const GrowthRow* GrowthTable::find(int n) const {
    for (const auto& r : rows)
        if (r.n == n) return &r;
    return nullptr;
}

double recompose_a_hat(const GrowthRow& r) {
    return (std::sqrt(std::max(0.0, r.a.value)) + std::max(0.0, r.b.value)) * std::sqrt(std::max(0.0, r.vol.value)) +
           r.bnorm.value;
}

GrowthSampler::GrowthSampler(CriterionFields fields, std::vector<int> schedule, SamplePlan plan)
    : fields_(std::move(fields)), schedule_(std::move(schedule)), plan_(plan) {
    if (schedule_.empty()) throw std::invalid_argument("empty schedule");
    for (std::size_t k = 0; k < schedule_.size(); ++k) {
        if (schedule_[k] < 1) throw std::invalid_argument("schedule entries must be positive");
        if (k && schedule_[k] <= schedule_[k - 1]) throw std::invalid_argument("schedule must be strictly increasing");
    }
    if (!(fields_.domain.k0 > 0.0) || fields_.domain.k0 > 2.0 * schedule_.front())
        throw std::invalid_argument("compact-core index k0 must lie in (0, 2*min(schedule)]");
    if (fields_.mu_power != 1 && fields_.mu_power != 2) throw std::invalid_argument("mu_power must be 1 or 2");
}

const GrowthSampler::ShellData& GrowthSampler::shell(const Shell& s) {
    auto key = std::make_pair(s.r_in, s.r_out);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ShellData d;
    d.set = sample_annulus(s, fields_.domain, plan_);
    d.rho = evaluate_on(fields_.domain.gauge, d.set);
    d.gamma = evaluate_on(fields_.gamma, d.set);
    d.nrho = evaluate_on(fields_.nrho, d.set);
    d.weight_p = evaluate_on(fields_.weight, d.set);
    if (fields_.mu_power == 2)
        for (auto& w : d.weight_p) w *= w;
    return cache_.emplace(key, std::move(d)).first->second;
}

std::vector<Shell> GrowthSampler::cover_shells() const {
    std::set<double> b{fields_.domain.k0};
    for (int n : schedule_) {
        if (2.0 * n >= fields_.domain.k0) b.insert(2.0 * n);
        b.insert(4.0 * n);
    }
    std::vector<double> v(b.begin(), b.end());
    std::vector<Shell> out;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) out.push_back({v[k], v[k + 1]});
    return out;
}

GrowthTable build_growth_table(GrowthSampler& sampler, const PhiFamily& phi) {
    GrowthTable t;
    t.k0 = sampler.fields().domain.k0;
    t.phi = phi;
    PointFn gamma_fn = [](double, double g, double) { return g; };
    PointFn b_fn = [phi](double rho, double g, double) { return phi.dphi(rho) * g; };
    PointFn c_fn = [phi](double rho, double g, double n) {
        double p = phi.dphi(rho);
        return std::fabs(p * p * g + p * n);
    };
    auto shells = sampler.cover_shells();
    std::vector<WitnessedValue> c_sups;
    for (const auto& sh : shells) c_sups.push_back(sup_on(sampler, sh, c_fn));

    for (int n : sampler.schedule()) {
        GrowthRow row;
        row.n = n;
        Shell an = AnnulusSpec{n}.shell();
        row.a = sup_on(sampler, an, gamma_fn);
        row.b = sup_on(sampler, an, b_fn);
        const auto& data = sampler.shell(an);
        row.vol = integrate_values(data.set, data.weight_p);
        if (!sampler.fields().nrho.is_zero()) {
            std::vector<double> sq(data.nrho.size());
            for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = data.nrho[k] * data.nrho[k] * data.weight_p[k];
            row.bnorm = l2_norm_from_integral(integrate_values(data.set, sq));
        }
        row.c.value = 0.0;
        for (std::size_t k = 0; k < shells.size(); ++k) {
            if (shells[k].r_out > 4.0 * n) break;
            if (k == 0 || c_sups[k].value > row.c.value) {
                row.c = c_sups[k];
            }
        }
        row.a_hat = recompose_a_hat(row);
        t.rows.push_back(std::move(row));
    }
    return t;
}

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::optional<double> CriterionVerdict::constant(const std::string& key) const {
    for (const auto& kv : constants)
        if (kv.first == key) return kv.second;
    return std::nullopt;
}

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) sx += xs[k], sy += ys[k];
    double mx = sx / m, my = sy / m, num = 0, den = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        num += (xs[k] - mx) * (ys[k] - my);
        den += (xs[k] - mx) * (xs[k] - mx);
    }
    return den > 0 ? num / den : 0.0;
}

double fitted_growth_exponent(const GrowthTable& t, int n_min) {
    std::vector<double> xs, ys;
    for (const auto& r : t.rows)
        if (r.n >= n_min && r.a_hat > 0) {
            xs.push_back(std::log(static_cast<double>(r.n)));
            ys.push_back(std::log(r.a_hat));
        }
    return ls_slope(xs, ys);
}

DecayResult theorem6_decay(const GrowthTable& table, double T, double epsilon) {
    DecayResult d;
    for (const auto& r : table.rows) {
        d.n.push_back(r.n);
        d.log_q.push_back(-table.phi.phi(2.0 * r.n) + r.c.value * T + safe_log(r.a_hat) -
                          std::log(static_cast<double>(r.n)));
    }
    const std::size_t m = d.log_q.size();
    if (m < 2) return d;
    std::size_t start = final_half_start(m);
    if (start + 1 >= m) start = m - 2;
    bool dec = true, inc = true;
    for (std::size_t k = start + 1; k < m; ++k) {
        if (!(d.log_q[k] < d.log_q[k - 1])) dec = false;
        if (!(d.log_q[k] > d.log_q[k - 1])) inc = false;
    }
    double last = d.log_q.back();
    if (dec && last < std::log(epsilon)) d.verdict = Verdict::satisfied;
    else if (inc && last > 0.0) d.verdict = Verdict::violated;
    return d;
}

CriterionVerdict theorem6_verdict(const GrowthTable& table, double T, double epsilon) {
    CriterionVerdict out;
    out.criterion = "thm6";
    DecayResult d = theorem6_decay(table, T, epsilon);
    out.verdict = d.verdict;
    out.decay_n = d.n;
    out.log_q = d.log_q;
    out.decay_verdict = verdict_name(d.verdict);
    out.constants = {{"C", table.phi.C}, {"beta", table.phi.beta}, {"T", T}, {"epsilon", epsilon}};
    out.horizon = table.rows.empty() ? 0 : table.rows.back().n;
    out.tolerance = epsilon;
    out.policy = "q_n = exp(-phi(2n) + c_n T) A_hat_n / n; satisfied if log q_n decreases over the final half and "
                 "q_nmax < " + fmt(epsilon) + "; violated if it increases there and q_nmax > 1";
    out.table = table;
    if (d.verdict == Verdict::violated) {
        out.witness_index = out.horizon;
        out.witness_reason = "decay sequence increasing with q_nmax > 1";
    }
    return out;
}

CriterionVerdict corollary_g1_check(Variant v, GrowthSampler& sampler, const Constants& k, const CheckOptions& opt) {
    CriterionVerdict out;
    out.criterion = opt.id.empty() ? "g1" + variant_suffix(v) : opt.id;
    double C = k.C.value_or(1.0);
    double beta = v == Variant::i ? k.beta.value_or(1.0) : (v == Variant::ii ? 2.0 : 0.0);
    if (k.alpha) check_alpha(v, *k.alpha);
    if (k.M && !(*k.M > 0.0)) throw std::invalid_argument("M must be positive");
    PhiFamily phi = variant_phi(v, C, beta);
    GrowthTable t = build_growth_table(sampler, phi);

    SubCheck pw = pointwise_check(sampler, g1_ratio(v, C, beta), k.M);
    std::optional<double> alpha = k.alpha;
    if (!alpha) {
        alpha = least_alpha(v, t, C, beta, opt);
        if (!alpha) out.notes.push_back("no admissible alpha passes the growth check");
    }
    SubCheck gr;
    if (alpha) gr = growth_check(v, t, C, beta, *alpha, opt);
    else {
        gr = growth_check(v, t, C, beta, admissible_alpha_max(v) * (1.0 - 1e-9), opt);
    }

    double M = k.M.value_or(pw.fitted);
    out.constants.emplace_back("M", M);
    out.constants.emplace_back("C", C);
    if (v == Variant::i) out.constants.emplace_back("beta", beta);
    out.constants.emplace_back("alpha", alpha.value_or(std::nan("")));
    out.constants.emplace_back("N_growth", gr.fitted);
    double T;
    if (k.T) T = *k.T;
    else if (v == Variant::iii) T = (2.0 - alpha.value_or(1.0)) / (32.0 * std::max(M, 1e-300) * C);
    else {
        double mp = fit_c_constant(t, v, beta, opt.n_min);
        out.constants.emplace_back("M_prime", mp);
        T = mp > 0 ? C * (1.0 - alpha.value_or(0.5)) / (2.0 * mp) : 1.0;
    }
    attach_decay(out, t, T);

    out.verdict = combine(pw.verdict, gr.verdict);
    take_witness(out, pw);
    take_witness(out, gr);
    if (pw.verdict == Verdict::inconclusive) out.notes.push_back(pw.reason);
    if (gr.verdict == Verdict::inconclusive) out.notes.push_back(gr.reason);
    out.notes.push_back("pointwise ratio slope " + fmt(pw.slope) + ", growth ratio slope " + fmt(gr.slope));
    out.notes.push_back("phi = " + phi.describe());
    out.horizon = t.rows.back().n;
    out.tolerance = kRelativeSlack;
    out.policy = policy_text(opt, !k.M);
    out.table = std::move(t);
    return out;
}

CriterionVerdict prop_symexam_check(Variant v, GrowthSampler& sampler, const Constants& k, const CheckOptions& opt) {
    if (v == Variant::iii) throw std::invalid_argument("symmetric criterion has variants i and ii only");
    if (!sampler.fields().nrho.is_zero())
        throw std::invalid_argument("symmetric criterion requires B = 0; use a g1/cor13 criterion for drifts");
    CriterionVerdict out;
    out.criterion = opt.id.empty() ? "symexam-" + variant_suffix(v) : opt.id;
    double beta = v == Variant::i ? k.beta.value_or(1.0) : 0.0;
    if (v == Variant::i && !(beta >= 0.0 && beta <= 2.0)) throw std::invalid_argument("beta must lie in [0, 2]");
    if (k.M && !(*k.M > 0.0)) throw std::invalid_argument("M must be positive");
    if (k.N && !(*k.N > 0.0)) throw std::invalid_argument("N must be positive");

    PointFn ratio;
    if (v == Variant::i)
        ratio = [beta](double rho, double g, double) {
            return g / ((rho + 1.0) * (rho + 1.0) * std::pow(std::log(rho + 1.0), beta));
        };
    else ratio = [](double, double g, double) { return g; };
    SubCheck pw = pointwise_check(sampler, ratio, k.M);

    // volume bound: log vol_n <= 2 N h(n)
    auto h = [&](int n) {
        double dn = static_cast<double>(n);
        if (v == Variant::ii) return dn * dn;
        if (beta < 2.0) return std::pow(std::log(dn + 1.0), 2.0 - beta);
        return std::log(std::log(dn + 1.0));
    };
    std::vector<int> ns;
    std::vector<double> lv;
    for (int n : sampler.schedule()) {
        if (n < opt.n_min) continue;
        const auto& d = sampler.shell(AnnulusSpec{n}.shell());
        ns.push_back(n);
        lv.push_back(safe_log(integrate_values(d.set, d.weight_p).value));
    }
    SubCheck vol;
    double N = 0.0;
    if (k.N) {
        N = *k.N;
        vol.verdict = Verdict::satisfied;
        for (std::size_t i = 0; i < ns.size(); ++i)
            if (lv[i] > 2.0 * N * h(ns[i]) + std::log1p(kRelativeSlack)) {
                vol.verdict = Verdict::violated;
                vol.witness_index = ns[i];
                vol.reason = "volume bound exceeded at n = " + std::to_string(ns[i]);
                break;
            }
    } else {
        std::vector<double> fitted, log_n;
        for (std::size_t i = 0; i < ns.size(); ++i) {
            fitted.push_back(lv[i] / (2.0 * h(ns[i])));
            log_n.push_back(std::log(static_cast<double>(ns[i])));
            N = std::max(N, fitted.back());
        }
        if (N <= 0.0) N = 1e-6;
        if (ns.size() < 2) vol.reason = "too few indices for the volume check";
        else if (bounded_trend(log_n, fitted, vol.slope)) vol.verdict = Verdict::satisfied;
        else {
            vol.verdict = Verdict::violated;
            vol.witness_index = ns.back();
            vol.reason = "volume growth exceeds every N: fitted N_n log-log slope " + fmt(vol.slope);
        }
    }

    double M = k.M.value_or(std::max(pw.fitted, 1e-12));
    PhiFamily phi;
    double T;
    if (v == Variant::ii) {
        phi = PhiFamily::quadratic(6.0 * N);
        T = 1.0 / (576.0 * M * N);
    } else if (beta < 2.0) {
        phi = PhiFamily::log_power(3.0 * N, beta);
        T = 1.0 / (9.0 * M * N * (2.0 - beta) * (2.0 - beta));
    } else {
        phi = PhiFamily::loglog(3.0 * N);
        T = 1.0 / (9.0 * M * N);
        out.notes.push_back("beta = 2 routed to the loglog family phi = 3N log(log(r+1)+1)");
    }
    if (k.T) T = *k.T;
    GrowthTable t = build_growth_table(sampler, phi);
    out.constants.emplace_back("M", M);
    out.constants.emplace_back("N", N);
    if (v == Variant::i) out.constants.emplace_back("beta", beta);
    out.constants.emplace_back("C", phi.C);
    attach_decay(out, t, T);

    out.verdict = combine(pw.verdict, vol.verdict);
    take_witness(out, pw);
    take_witness(out, vol);
    if (pw.verdict == Verdict::inconclusive) out.notes.push_back(pw.reason);
    if (vol.verdict == Verdict::inconclusive) out.notes.push_back(vol.reason);
    out.notes.push_back("phi = " + phi.describe());
    out.horizon = t.rows.back().n;
    out.tolerance = kRelativeSlack;
    out.policy = "pointwise: Gamma bound with relative slack " + fmt(kRelativeSlack) + "; volume: " +
                 (k.N ? "literal bound for n >= " + std::to_string(opt.n_min)
                      : "N fitted, bounded if final-half log-log slope of fitted N_n <= " +
                            fmt(kBoundedSlopeTolerance));
    out.table = std::move(t);
    return out;
}

CriterionVerdict sectorial_check(GrowthSampler& sampler, const Constants& k, const CheckOptions& opt) {
    if (!sampler.fields().domain.euclidean_gauge) throw std::invalid_argument("sectorial criterion needs rho = |x|");
    if (sampler.fields().mu_power != 2) throw std::invalid_argument("sectorial criterion uses mu = phi^2 dx");
    Constants kk = k;
    double d = sampler.fields().domain.dim;
    if (!kk.C) kk.C = d / 2.0 + 3.0;
    if (!kk.alpha) kk.alpha = (*kk.C - 1.0) / *kk.C;
    kk.beta = 1.0;
    CheckOptions o = opt;
    if (o.id.empty()) o.id = "sectorial";
    return corollary_g1_check(Variant::i, sampler, kk, o);
}

namespace {

struct GridPoint {
    double C = 0.0;
    double beta = 0.0;
    double m_fit = 0.0;
    bool pointwise_ok = false;
    std::optional<double> alpha;
};

GridPoint evaluate_grid_point(Variant v, GrowthSampler& sampler, double C, double beta, const CheckOptions& opt) {
    GridPoint g;
    g.C = C;
    g.beta = beta;
    SubCheck pw = pointwise_check(sampler, g1_ratio(v, C, beta), std::nullopt);
    g.m_fit = pw.fitted;
    g.pointwise_ok = pw.verdict == Verdict::satisfied;
    if (g.pointwise_ok) {
        GrowthTable t = build_growth_table(sampler, variant_phi(v, C, beta));
        g.alpha = least_alpha(v, t, C, beta, opt);
    }
    return g;
}

}  // namespace

AutoResult auto_constants(const std::string& criterion, GrowthSampler& sampler, const CheckOptions& opt) {
    AutoResult res;
    CheckOptions o = opt;
    o.id = criterion;
    if (criterion == "symexam-i" || criterion == "symexam-ii") {
        Variant v = criterion == "symexam-i" ? Variant::i : Variant::ii;
        std::vector<double> betas = v == Variant::i ? std::vector<double>{0.0, 0.5, 1.0, 1.5} : std::vector<double>{0.0};
        for (double b : betas) {
            Constants k;
            if (v == Variant::i) k.beta = b;
            CriterionVerdict cv = prop_symexam_check(v, sampler, k, o);
            res.log.push_back("beta=" + fmt(b) + ": " + verdict_name(cv.verdict));
            if (cv.verdict == Verdict::satisfied) {
                res.found = true;
                res.constants.M = cv.constant("M");
                res.constants.N = cv.constant("N");
                if (v == Variant::i) res.constants.beta = b;
                res.verdict = std::move(cv);
                return res;
            }
            if (b == betas.back()) res.verdict = std::move(cv);
        }
        return res;
    }

    Variant v;
    bool sectorial = criterion == "sectorial";
    if (criterion == "g1i" || criterion == "cor13i" || sectorial) v = Variant::i;
    else if (criterion == "g1ii" || criterion == "cor13ii") v = Variant::ii;
    else if (criterion == "g1iii" || criterion == "cor13iii") v = Variant::iii;
    else throw std::invalid_argument("unknown criterion '" + criterion + "'");

    std::vector<double> betas = v == Variant::i && !sectorial ? std::vector<double>{0.0, 0.5, 1.0, 1.5}
                                                              : std::vector<double>{v == Variant::i ? 1.0 : 0.0};
    std::vector<double> Cs;
    for (int e = -3; e <= 6; ++e) Cs.push_back(std::ldexp(1.0, e));

    std::optional<GridPoint> chosen;
    std::vector<std::vector<GridPoint>> grid(betas.size());
    for (double C : Cs) {
        for (std::size_t bi = 0; bi < betas.size(); ++bi) {
            GridPoint g = evaluate_grid_point(v, sampler, C, betas[bi], o);
            res.log.push_back("C=" + fmt(C) + " beta=" + fmt(betas[bi]) + " M_fit=" + fmt(g.m_fit) +
                              (g.pointwise_ok ? " pointwise ok" : " pointwise fails") +
                              (g.alpha ? " alpha=" + fmt(*g.alpha) : ""));
            grid[bi].push_back(g);
            if (!chosen && g.pointwise_ok && g.alpha) chosen = g;
        }
        if (chosen) break;
    }
    if (!chosen) {
        // Local refinement in log C around the grid point with the smallest fitted M.
        for (std::size_t bi = 0; bi < betas.size() && !chosen; ++bi) {
            if (grid[bi].size() < Cs.size()) break;
            std::size_t best = 0;
            for (std::size_t c = 1; c < grid[bi].size(); ++c)
                if (grid[bi][c].m_fit < grid[bi][best].m_fit) best = c;
            double lo = std::log(grid[bi][best].C / 2.0), hi = std::log(grid[bi][best].C * 2.0);
            const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
            const Shell outer = sampler.cover_shells().back();
            auto mfit = [&](double lc) { return sup_on(sampler, outer, g1_ratio(v, std::exp(lc), betas[bi])).value; };
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = mfit(x1), f2 = mfit(x2);
            for (int it = 0; it < 40; ++it) {
                if (f1 < f2) {
                    hi = x2, x2 = x1, f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = mfit(x1);
                } else {
                    lo = x1, x1 = x2, f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = mfit(x2);
                }
            }
            const double c_opt = std::exp(0.5 * (lo + hi));
            const double mag = std::pow(10.0, std::floor(std::log10(c_opt)) - 1.0);
            std::vector<double> candidates = {std::round(c_opt), std::round(2.0 * c_opt) / 2.0,
                                              std::round(c_opt / mag) * mag, c_opt};
            for (std::size_t ci = 0; ci < candidates.size() && !chosen; ++ci) {
                const double cand = candidates[ci];
                if (!(cand > 0.0) || std::abs(std::log(cand / c_opt)) > 0.05) continue;
                if (ci > 0 && cand == candidates[ci - 1]) continue;
                GridPoint g = evaluate_grid_point(v, sampler, cand, betas[bi], o);
                res.log.push_back("refined C=" + fmt(g.C) + " beta=" + fmt(g.beta) + " M_fit=" + fmt(g.m_fit) +
                                  (g.pointwise_ok ? " pointwise ok" : " pointwise fails") +
                                  (g.alpha ? " alpha=" + fmt(*g.alpha) : ""));
                if (g.pointwise_ok && g.alpha) chosen = g;
            }
        }
    }

    Constants k;
    if (chosen) {
        k.C = chosen->C;
        k.beta = chosen->beta;
        k.alpha = chosen->alpha;
    } else {
        // Report the failure with the verdict of the smallest-M grid point.
        const GridPoint* best = nullptr;
        for (const auto& row : grid)
            for (const auto& g : row)
                if (!best || g.m_fit < best->m_fit) best = &g;
        k.C = best->C;
        k.beta = best->beta;
    }
    CriterionVerdict cv = sectorial ? sectorial_check(sampler, k, o) : corollary_g1_check(v, sampler, k, o);
    if (!chosen) {
        if (cv.verdict == Verdict::satisfied) cv.verdict = Verdict::inconclusive;
        cv.notes.push_back("automatic constant search failed on the grid");
    }
    cv.notes.push_back("constants chosen by grid search over C = 2^k (k = -3..6)" +
                       std::string(v == Variant::i && !sectorial ? " and beta in {0, 0.5, 1, 1.5}" : ""));
    res.found = chosen.has_value();
    res.constants = k;
    res.constants.M = cv.constant("M");
    res.verdict = std::move(cv);
    return res;
}

}  // namespace conservd
