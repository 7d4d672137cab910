#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kdvg/error.hpp"
#include "kdvg/gevrey.hpp"
#include "kdvg/power_law.hpp"
#include "kdvg/scheduler.hpp"
#include "kdvg/solver.hpp"
#include "kdvg/spectral_core.hpp"

namespace kdvg {

/// f(w) = ½ ∂ₓ[w·w - e^{σ|D|}(e^{-σ|D|}w · e^{-σ|D|}w)], products dealiased.
///
/// No shortcut at σ = 0: both terms are computed and cancel exactly.
inline SpectralField commutator_term(const SpectralField& w, double sigma,
                                     double dealias = 2.0 / 3.0) {
    if (!(sigma >= 0.0)) throw InvalidArgument("commutator_term: sigma must be >= 0");
    const auto v = smooth(w, -sigma);
    const auto ww = dealiased_product(w, w, dealias);
    const auto vv = smooth(dealiased_product(v, v, dealias), sigma);
    SpectralField out = ww - vv;
    auto c = out.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j] = w.grid().is_nyquist(j) ? cplx{} : cplx(0.0, 0.5 * w.xi(j)) * c[j];
    }
    return out;
}

/// ∫ a b dx for real fields, by Parseval.
inline double inner_product(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("grid mismatch in inner product");
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (std::conj(a.coeffs()[j]) * b.coeffs()[j]).real();
    return s / a.grid().length();
}

/// max over interior snapshots of ‖w_t + w_xxx + w w_x - f(w)‖ for w = e^{σ|D|}u,
/// with w_t from centered differences of the recorded snapshots.
inline double modified_residual(const Trajectory& u, double sigma, bool linear = false) {
    if (u.size() < 3) throw InvalidArgument("modified_residual needs at least 3 snapshots");
    std::vector<SpectralField> w;
    w.reserve(u.size());
    for (const auto& s : u.snapshots) w.push_back(smooth(s, sigma));
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < w.size(); ++i) {
        const double h = u.times[i + 1] - u.times[i - 1];
        const auto wt = (1.0 / h) * (w[i + 1] - w[i - 1]);
        SpectralField r = wt + derivative(w[i], 3);
        if (!linear) {
            r = r + 0.5 * derivative(dealiased_product(w[i], w[i]), 1);
            r = r - commutator_term(w[i], sigma);
        }
        worst = std::max(worst, l2_norm(r));
    }
    return worst;
}

/// 𝓡 over a recorded interval and the energy identity behind it.
struct RIntegral {
    /// 2 ∫∫ w f(w) dx dt by the trapezoid rule; 𝓡 = |signed|.
    double signed_value = 0.0;
    double r = 0.0;
    /// ‖w(t_end)‖² - ‖w(t_0)‖².
    double energy_change = 0.0;
    /// max over interior snapshots of |d/dt ‖w‖² (centered) - 2∫w f(w)|.
    double identity_defect = 0.0;
    /// Scale for identity_defect: max |2∫w f(w)| over the snapshots.
    double rate_scale = 0.0;
};

inline RIntegral error_R(const Trajectory& u, double sigma) {
    if (u.size() < 3) throw InvalidArgument("error_R needs at least 3 snapshots");
    std::vector<double> rate(u.size());
    std::vector<double> energy(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto w = smooth(u.snapshots[i], sigma);
        rate[i] = 2.0 * inner_product(w, commutator_term(w, sigma));
        const double nw = l2_norm(w);
        energy[i] = nw * nw;
    }
    RIntegral out;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        out.signed_value += 0.5 * (u.times[i + 1] - u.times[i]) * (rate[i] + rate[i + 1]);
    }
    out.r = std::abs(out.signed_value);
    out.energy_change = energy.back() - energy.front();
    for (std::size_t i = 0; i < u.size(); ++i) out.rate_scale = std::max(out.rate_scale, std::abs(rate[i]));
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double d = (energy[i + 1] - energy[i - 1]) / (u.times[i + 1] - u.times[i - 1]);
        out.identity_defect = std::max(out.identity_defect, std::abs(d - rate[i]));
    }
    return out;
}

/// Pointwise chain 1 - e^{-r} <= r^θ <= σ^θ (2 min(|ξ₁|,|ξ₂|))^θ,
/// r = σ(|ξ₁| + |ξ₂| - |ξ₁ + ξ₂|).
struct MultiplierBound {
    double lhs = 0.0;
    double rhs1 = 0.0;
    double rhs2 = 0.0;

    bool holds(double tol = 1e-14) const { return lhs <= rhs1 + tol && rhs1 <= rhs2 + tol; }
};

inline MultiplierBound multiplier_bound_check(double xi1, double xi2, double sigma, double theta) {
    if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
    const double r = sigma * (std::abs(xi1) + std::abs(xi2) - std::abs(xi1 + xi2));
    MultiplierBound b;
    b.lhs = -std::expm1(-r);
    b.rhs1 = r == 0.0 ? (theta == 0.0 ? 1.0 : 0.0) : std::pow(r, theta);
    const double m = 2.0 * std::min(std::abs(xi1), std::abs(xi2));
    b.rhs2 = std::pow(sigma, theta) * std::pow(m, theta);
    return b;
}

/// One σ of an almost-conservation sweep.
struct ACLReport {
    double sigma = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;
    /// sup over recorded t of ‖u(t)‖²_{G^σ}.
    double lhs = 0.0;
    /// ‖u(0)‖²_{G^σ}.
    double rhs_base = 0.0;
    /// lhs - rhs_base, clamped at 0.
    double error_measured = 0.0;
    double r_integral = 0.0;
    /// (sup_t ‖u(t)‖_{G^σ})³.
    double bound_cubed = 0.0;
    RIntegral identity;

    /// |energy change - 2∫∫ w f(w)| relative to 𝓡, floored at 1e-10 rhs_base so that
    /// data without growth (both sides at roundoff) are not judged by a ratio of roundoffs.
    double identity_mismatch() const {
        const double d = std::abs(identity.energy_change - identity.signed_value);
        const double scale = std::max(r_integral, 1e-10 * rhs_base);
        return scale > 0.0 ? d / scale : d;
    }
};

inline ACLReport acl_report(const Trajectory& u, double sigma) {
    ACLReport rep;
    rep.sigma = sigma;
    rep.t_begin = u.times.front();
    rep.t_end = u.times.back();
    double sup = 0.0;
    for (const auto& s : u.snapshots) sup = std::max(sup, gevrey_norm(s, {sigma, 0.0}));
    const double base = gevrey_norm(u.snapshots.front(), {sigma, 0.0});
    rep.lhs = sup * sup;
    rep.rhs_base = base * base;
    rep.error_measured = std::max(0.0, rep.lhs - rep.rhs_base);
    rep.identity = error_R(u, sigma);
    rep.r_integral = rep.identity.r;
    rep.bound_cubed = sup * sup * sup;
    return rep;
}

/// Smallest C with error_measured <= C σ^{3/4} bound_cubed on every report.
inline double fitted_acl_constant(const std::vector<ACLReport>& reps) {
    double c = 0.0;
    for (const auto& r : reps) {
        if (r.sigma <= 0.0 || r.bound_cubed <= 0.0) continue;
        c = std::max(c, r.error_measured / (std::pow(r.sigma, 0.75) * r.bound_cubed));
    }
    return c;
}

/// 2∫ w f(w) dx at one time, w = e^{σ|D|}f: the instantaneous d/dt ‖u‖²_{G^σ}.
inline double energy_rate(const SpectralField& f, double sigma) {
    const auto w = smooth(f, sigma);
    return 2.0 * inner_product(w, commutator_term(w, sigma));
}

/// f or its reflection, whichever has nonnegative energy_rate at σ.
/// The reflected run is the original run backwards in time.
inline SpectralField orient_for_growth(const SpectralField& f, double sigma) {
    return energy_rate(f, sigma) < 0.0 ? reflect(f) : f;
}

struct AclSweepConfig {
    std::vector<double> sigmas{0.4, 0.2, 0.1, 0.05, 0.025};
    double C_lwp = 0.01;
    /// Recorded intervals across [0, t₀].
    std::size_t intervals = 200;
    std::size_t steps_per_record = 4;
    Scheme scheme = Scheme::if_rk4;
};

struct AclSweep {
    /// t₀ from the local time at the largest σ.
    double t0 = 0.0;
    std::vector<ACLReport> reports;
    /// Exponent of error_measured against σ; NaN when some error is not positive.
    double fitted_exponent = std::nan("");
    double r_exponent = std::nan("");
    double fitted_constant = 0.0;
};

inline AclSweep acl_sweep(const SpectralField& f, const AclSweepConfig& cfg = {}) {
    if (cfg.sigmas.empty()) throw InvalidArgument("acl_sweep: empty sigma list");
    if (cfg.intervals < 2 || cfg.steps_per_record < 1) throw InvalidArgument("acl_sweep: bad sampling");
    double smax = 0.0;
    for (double s : cfg.sigmas) {
        if (!(s > 0.0)) throw InvalidArgument("acl_sweep: sigma must be positive");
        smax = std::max(smax, s);
    }
    AclSweep out;
    out.t0 = local_time(gevrey_norm(f, {smax, 0.0}), 0.0, cfg.C_lwp);
    SolverConfig sc;
    sc.scheme = cfg.scheme;
    sc.dt = out.t0 / static_cast<double>(cfg.intervals * cfg.steps_per_record);
    sc.record_every = cfg.steps_per_record;
    const auto traj = evolve(f, out.t0, sc);
    std::vector<std::pair<double, double>> err, rr;
    for (double s : cfg.sigmas) {
        out.reports.push_back(acl_report(traj, s));
        const auto& r = out.reports.back();
        err.emplace_back(s, r.error_measured);
        rr.emplace_back(s, r.r_integral);
    }
    out.fitted_constant = fitted_acl_constant(out.reports);
    const auto positive = [](const auto& v) {
        return std::all_of(v.begin(), v.end(), [](const auto& p) { return p.second > 0.0; });
    };
    if (cfg.sigmas.size() >= 3) {
        if (positive(err)) out.fitted_exponent = fit_power_law(err).exponent;
        if (positive(rr)) out.r_exponent = fit_power_law(rr).exponent;
    }
    return out;
}

}  // namespace kdvg
