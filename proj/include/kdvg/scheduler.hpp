#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kdvg/error.hpp"
#include "kdvg/gevrey.hpp"
#include "kdvg/solver.hpp"

namespace kdvg {

/// t₀ = c · gamma^{-6/(3+2s)}.
inline double local_time(double gamma, double s, double c) {
    if (!(gamma > 0.0)) throw InvalidArgument("local_time: gamma must be positive");
    if (!(c > 0.0)) throw InvalidArgument("local_time: c must be positive");
    if (!(3.0 + 2.0 * s > 0.0)) {
        throw InvalidArgument("local_time: requires 3 + 2s > 0, got s = " + std::to_string(s));
    }
    return c * std::pow(gamma, -6.0 / (3.0 + 2.0 * s));
}

struct ScheduleParams {
    double sigma0 = 1.0;
    /// ‖f‖_{G^{σ₀}}.
    double gamma0 = 1.0;
    double C_lwp = 0.01;
    double C_acl = 1.0;
    double s = 0.0;

    void validate() const {
        if (!(sigma0 > 0.0) || !(gamma0 > 0.0) || !(C_lwp > 0.0) || !(C_acl > 0.0)) {
            throw InvalidArgument("schedule constants must be strictly positive");
        }
        if (!(3.0 + 2.0 * s > 0.0)) throw InvalidArgument("schedule requires 3 + 2s > 0");
    }

    double t0() const { return local_time(gamma0, s, C_lwp); }

    /// c₀ = [t₀ / (2^{5/2} C Γ)]^{4/3}.
    double c0() const { return std::pow(t0() / (std::pow(2.0, 2.5) * C_acl * gamma0), 4.0 / 3.0); }
};

inline ScheduleParams make_schedule_params(const SpectralField& f, double sigma0, double C_lwp,
                                           double C_acl, double s = 0.0) {
    ScheduleParams p{sigma0, gevrey_norm(f, {sigma0, s}), C_lwp, C_acl, s};
    p.validate();
    return p;
}

/// min(σ₀, c₀ T^{-4/3}); σ₀ when T < t₀, where the local theory alone covers [0, T].
inline double sigma_for_horizon(const ScheduleParams& p, double T) {
    p.validate();
    if (!(T > 0.0)) throw InvalidArgument("horizon must be positive");
    if (T < p.t0()) return p.sigma0;
    return std::min(p.sigma0, p.c0() * std::pow(T, -4.0 / 3.0));
}

/// (2T/t₀) 2^{3/2} C σ^{3/4} Γ; equals 1 at the unclamped σ.
inline double sigma_condition(const ScheduleParams& p, double T, double sigma) {
    return 2.0 * T / p.t0() * std::pow(2.0, 1.5) * p.C_acl * std::pow(sigma, 0.75) * p.gamma0;
}

struct ScheduleState {
    int k = 0;
    double time = 0.0;
    double gamma_sq_bound = 0.0;
    bool within_doubling = true;
};

struct HorizonPoint {
    double T = 0.0;
    double sigma = 0.0;
};

struct InductionResult {
    double t0 = 0.0;
    double sigma = 0.0;
    std::vector<ScheduleState> states;
    /// σ(T) at dyadic multiples of t₀ up to T, and at T itself.
    std::vector<HorizonPoint> schedule;
};

/// Γ_σ(0)² + k 2^{3/2} C σ^{3/4} Γ_{σ₀}(0)³. Γ_σ(0) defaults to Γ_{σ₀}(0).
inline double gamma_sq_bound(const ScheduleParams& p, double sigma, int k, double gamma_sigma0 = -1.0) {
    const double g0 = gamma_sigma0 > 0.0 ? gamma_sigma0 : p.gamma0;
    return g0 * g0 + k * std::pow(2.0, 1.5) * p.C_acl * std::pow(sigma, 0.75) * std::pow(p.gamma0, 3.0);
}

/// States k = 0 .. n+1 with n = floor(T/t₀).
inline InductionResult run_induction(const ScheduleParams& p, double T, double gamma_sigma0 = -1.0) {
    InductionResult r;
    r.t0 = p.t0();
    r.sigma = sigma_for_horizon(p, T);
    const auto n = static_cast<int>(std::floor(T / r.t0));
    const double cap = 2.0 * p.gamma0 * p.gamma0;
    bool ok = true;
    for (int k = 0; k <= n + 1; ++k) {
        ScheduleState st;
        st.k = k;
        st.time = k * r.t0;
        st.gamma_sq_bound = gamma_sq_bound(p, r.sigma, k, gamma_sigma0);
        ok = ok && st.gamma_sq_bound <= cap * (1.0 + 1e-12);
        st.within_doubling = ok;
        r.states.push_back(st);
    }
    for (double h = r.t0; h < T; h *= 2.0) r.schedule.push_back({h, sigma_for_horizon(p, h)});
    r.schedule.push_back({T, r.sigma});
    return r;
}

struct ScheduleRow {
    double t = 0.0;
    double sigma_certified = 0.0;
    double sigma_hat = 0.0;
    bool superexponential = false;
    double gamma_measured = 0.0;
    double gamma_sq_bound = 0.0;
    bool within_doubling = true;
};

/// Measured radius against the certified schedule along a solver run.
///
/// gamma_measured is ‖u(t)‖_{G^σ} at the horizon σ = σ(T); within_doubling
/// compares its square with 2Γ_{σ₀}(0)².
inline std::vector<ScheduleRow> empirical_schedule(const Trajectory& traj, const ScheduleParams& p,
                                                   const RadiusFitPolicy& policy = {}) {
    p.validate();
    const double T = traj.times.back();
    const double sig = sigma_for_horizon(p, T);
    const double t0 = p.t0();
    const double g_sigma0 = gevrey_norm(traj.snapshots.front(), {sig, p.s});
    std::vector<ScheduleRow> rows;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        ScheduleRow r;
        r.t = traj.times[i];
        r.sigma_certified = r.t > 0.0 ? sigma_for_horizon(p, r.t) : p.sigma0;
        const auto est = estimate_radius(traj.snapshots[i], policy);
        r.sigma_hat = est.sigma_hat;
        r.superexponential = est.superexponential;
        r.gamma_measured = gevrey_norm(traj.snapshots[i], {sig, p.s});
        const int k = static_cast<int>(std::ceil(r.t / t0 - 1e-12));
        r.gamma_sq_bound = gamma_sq_bound(p, sig, k, g_sigma0);
        r.within_doubling = r.gamma_measured * r.gamma_measured <= 2.0 * p.gamma0 * p.gamma0;
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<ScheduleRow> empirical_schedule(const SpectralField& f, const ScheduleParams& p,
                                                   double T, const SolverConfig& cfg,
                                                   const RadiusFitPolicy& policy = {}) {
    return empirical_schedule(evolve(f, T, cfg), p, policy);
}

}  // namespace kdvg
