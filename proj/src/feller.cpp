#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "conservd/oracles.hpp"

namespace conservd {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr unsigned kMaxDepth = 18;

template <class F>
double integrate(F f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    // mapped to [0, 1]: the error estimate has an absolute floor that short intervals never meet
    const double len = b - a;
    return len * gauss_kronrod<double, 15>::integrate([&](double t) { return f(a + len * t); }, 0.0, 1.0, kMaxDepth,
                                                      tol, &err);
}

struct SideData {
    std::vector<double> t;                  // panel endpoints
    std::vector<double> P, S, I, J_inner;   // per panel
};

struct SideOut {
    FellerSide side;
    std::vector<double> grid_x, grid_h;
    bool monotone = true;
    double max_rel = 0.0;
    std::exception_ptr error;
};

}  // namespace

const char* side_verdict_name(SideVerdict v) {
    switch (v) {
    case SideVerdict::diverges: return "diverges";
    case SideVerdict::bounded: return "bounded";
    case SideVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

FellerResult feller_test(const ScalarField& A, const ScalarField& phi, const FellerOptions& opt) {
    if (A.dim != 1 || phi.dim != 1) throw std::invalid_argument("Feller test needs one-dimensional coefficients");
    if (opt.ladder.size() < 3) throw std::invalid_argument("Feller ladder needs at least three rungs");
    for (std::size_t k = 1; k < opt.ladder.size(); ++k)
        if (!(opt.ladder[k] > opt.ladder[k - 1]) || !(opt.ladder[0] > 0))
            throw std::invalid_argument("Feller ladder must be positive and increasing");
    const double Lmax = opt.ladder.back();
    const double tol = opt.quad_tol;

    FellerResult res;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "diverges if the log-log slope of Phi over the top two rungs exceeds %g (and the top three are "
                  "not Cauchy); bounded if the top three rungs agree within relative %g; quadrature tolerance %g",
                  opt.delta, opt.cauchy_tol, tol);
    res.policy = buf;

    std::set<double> ends{0.0};
    for (int k = -6; std::ldexp(1.0, k) < Lmax; ++k) ends.insert(std::ldexp(1.0, k));
    for (double L : opt.ladder) ends.insert(L);

    auto run_side = [&](int sign, SideOut& so) {
      try {
        auto hprime = [&](double u) {
            double x = sign * u;
            double a = A(&x), w = phi(&x);
            if (!(a > 0.0) || !(w > 0.0) || !std::isfinite(a) || !std::isfinite(w))
                throw NumericalError("A or phi not strictly positive at x = " + std::to_string(x));
            return 1.0 / (a * w);
        };
        auto weight = [&](double u) {
            double x = sign * u;
            double w = phi(&x);
            if (!(w > 0.0) || !std::isfinite(w)) throw NumericalError("phi not strictly positive at x = " + std::to_string(x));
            return w;
        };
        SideData sd;
        sd.t.assign(ends.begin(), ends.end());
        const std::size_t np = sd.t.size() - 1;
        sd.P.resize(np);
        sd.S.resize(np);
        sd.I.resize(np);
        sd.J_inner.resize(np);
        for (std::size_t k = 0; k < np; ++k) {
            double a = sd.t[k], b = sd.t[k + 1];
            sd.P[k] = integrate(hprime, a, b, tol);
            sd.S[k] = integrate(weight, a, b, tol);
            sd.I[k] = integrate([&](double u) { return integrate(hprime, u, b, tol) * weight(u); }, a, b, tol);
            sd.J_inner[k] = integrate([&](double u) { return integrate(hprime, a, u, tol) * weight(u); }, a, b, tol);
            if (!(sd.P[k] > 0.0)) so.monotone = false;
        }

        FellerSide side;
        side.sign = sign;
        std::vector<double> H(np + 1, 0.0);
        for (std::size_t k = 0; k < np; ++k) H[k + 1] = H[k] + sd.P[k];
        for (std::size_t k = 0; k <= np; ++k) {
            so.grid_x.push_back(sign * sd.t[k]);
            so.grid_h.push_back(sign * H[k]);
        }
        for (double L : opt.ladder) {
            std::size_t K = static_cast<std::size_t>(std::find(sd.t.begin(), sd.t.end(), L) - sd.t.begin());
            double phi_nested = 0.0, tail = 0.0;
            for (std::size_t k = K; k-- > 0;) {
                phi_nested += sd.I[k] + sd.S[k] * tail;
                tail += sd.P[k];
            }
            double hL = H[K], SL = 0.0, hphi = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                SL += sd.S[k];
                hphi += H[k] * sd.S[k] + sd.J_inner[k];
            }
            side.L.push_back(L);
            side.phi.push_back(phi_nested);
            side.phi_alt.push_back(hL * SL - hphi);
            side.h.push_back(sign * hL);
            double rel = std::fabs(phi_nested - side.phi_alt.back()) / std::max(std::fabs(phi_nested), 1e-300);
            so.max_rel = std::max(so.max_rel, rel);
        }
        const std::size_t m = side.phi.size();
        double top = side.phi[m - 1];
        double lo = std::min({side.phi[m - 1], side.phi[m - 2], side.phi[m - 3]});
        double hi = std::max({side.phi[m - 1], side.phi[m - 2], side.phi[m - 3]});
        side.spread = (hi - lo) / std::max(std::fabs(top), 1e-300);
        side.slope = std::log(side.phi[m - 1] / side.phi[m - 2]) / std::log(side.L[m - 1] / side.L[m - 2]);
        if (side.spread <= opt.cauchy_tol) side.verdict = SideVerdict::bounded;
        else if (side.slope > opt.delta) side.verdict = SideVerdict::diverges;
        else side.verdict = SideVerdict::inconclusive;
        so.side = std::move(side);
      } catch (...) {
        so.error = std::current_exception();
      }
    };

    SideOut plus, minus;
    std::thread worker([&] { run_side(-1, minus); });
    run_side(1, plus);
    worker.join();
    for (SideOut* so : {&plus, &minus}) {
        if (so->error) std::rethrow_exception(so->error);
        res.grid_x.insert(res.grid_x.end(), so->grid_x.begin(), so->grid_x.end());
        res.grid_h.insert(res.grid_h.end(), so->grid_h.begin(), so->grid_h.end());
        res.h_monotone = res.h_monotone && so->monotone;
        res.max_dual_rel_diff = std::max(res.max_dual_rel_diff, so->max_rel);
    }
    res.plus = std::move(plus.side);
    res.minus = std::move(minus.side);
    // grid sorted by x for the monotonicity record
    std::vector<std::size_t> idx(res.grid_x.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return res.grid_x[a] < res.grid_x[b]; });
    std::vector<double> gx, gh;
    for (std::size_t k : idx) {
        if (!gx.empty() && gx.back() == res.grid_x[k]) continue;
        gx.push_back(res.grid_x[k]);
        gh.push_back(res.grid_h[k]);
    }
    for (std::size_t k = 1; k < gh.size(); ++k)
        if (!(gh[k] >= gh[k - 1])) res.h_monotone = false;
    res.grid_x = std::move(gx);
    res.grid_h = std::move(gh);
    return res;
}

}  // namespace conservd
