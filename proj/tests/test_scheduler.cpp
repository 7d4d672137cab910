#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kdvg/initial_data.hpp"
#include "kdvg/power_law.hpp"
#include "kdvg/scheduler.hpp"

using namespace kdvg;
using std::numbers::pi;

TEST(LocalTime, Formula) {
    EXPECT_DOUBLE_EQ(local_time(1.0, 0.0, 0.01), 0.01);
    EXPECT_DOUBLE_EQ(local_time(2.0, 0.0, 0.01), 0.0025);
    EXPECT_NEAR(local_time(4.0, -0.75, 0.01), 0.01 * std::pow(4.0, -4.0), 1e-18);
    EXPECT_THROW(local_time(1.0, -1.5, 0.01), InvalidArgument);
    EXPECT_THROW(local_time(0.0, 0.0, 0.01), InvalidArgument);
}

TEST(SigmaForHorizon, ConditionHoldsWithEquality) {
    const ScheduleParams p{1.0, 3.0, 0.01, 0.5, 0.0};
    for (double T : {10.0, 100.0, 1e3, 1e4}) {
        const double s = sigma_for_horizon(p, T);
        ASSERT_LT(s, p.sigma0);
        EXPECT_NEAR(sigma_condition(p, T, s), 1.0, 1e-12);
        EXPECT_NEAR(sigma_for_horizon(p, 2.0 * T) / s, std::pow(2.0, -4.0 / 3.0), 1e-14);
    }
}

TEST(SigmaForHorizon, ClampsAtSigma0) {
    const ScheduleParams p{0.2, 0.5, 0.01, 1e-6, 0.0};
    EXPECT_DOUBLE_EQ(sigma_for_horizon(p, 1.0), 0.2);
    EXPECT_DOUBLE_EQ(sigma_for_horizon(p, 0.5 * p.t0()), 0.2);
    EXPECT_THROW(sigma_for_horizon(p, 0.0), InvalidArgument);
    EXPECT_THROW(sigma_for_horizon(ScheduleParams{0.2, 0.5, -1.0, 1.0, 0.0}, 1.0), InvalidArgument);
}

TEST(SigmaForHorizon, PowerLawSlope) {
    const ScheduleParams p{1.0, 2.0, 0.01, 1.0, 0.0};
    std::vector<std::pair<double, double>> pts;
    double prev = INFINITY;
    for (double T : {10.0, 100.0, 1e3, 1e4}) {
        const double s = sigma_for_horizon(p, T);
        EXPECT_LE(s, prev);
        prev = s;
        pts.emplace_back(T, s);
    }
    const auto fit = fit_power_law(pts);
    EXPECT_NEAR(fit.exponent, -4.0 / 3.0, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(p.c0()), 1e-10);
}

TEST(RunInduction, StatesStayWithinDoubling) {
    const ScheduleParams p{1.0, 2.5, 0.01, 0.3, 0.0};
    for (double T : {0.5, 10.0, 1000.0}) {
        const auto r = run_induction(p, T);
        const auto n = static_cast<std::size_t>(std::floor(T / r.t0));
        ASSERT_EQ(r.states.size(), n + 2);
        EXPECT_EQ(r.states.front().k, 0);
        EXPECT_DOUBLE_EQ(r.states.front().gamma_sq_bound, p.gamma0 * p.gamma0);
        for (std::size_t i = 1; i < r.states.size(); ++i) {
            EXPECT_GE(r.states[i].gamma_sq_bound, r.states[i - 1].gamma_sq_bound);
            EXPECT_DOUBLE_EQ(r.states[i].time, r.states[i].k * r.t0);
        }
        for (const auto& st : r.states) EXPECT_TRUE(st.within_doubling) << "k " << st.k;
        EXPECT_DOUBLE_EQ(r.schedule.back().T, T);
        for (std::size_t i = 1; i < r.schedule.size(); ++i) EXPECT_LE(r.schedule[i].sigma, r.schedule[i - 1].sigma);
    }
}

TEST(RunInduction, SmallerInitialGevreyNorm) {
    const ScheduleParams p{1.0, 2.0, 0.01, 1.0, 0.0};
    const auto r = run_induction(p, 50.0, 1.5);
    EXPECT_DOUBLE_EQ(r.states.front().gamma_sq_bound, 2.25);
    EXPECT_TRUE(r.states.back().within_doubling);
}

TEST(EmpiricalSchedule, SolitonStaysAboveCertifiedCurve) {
    GridSpec g(1024, 40.0);
    const auto f = soliton_field(g, 1.0, -5.0);
    const auto p = make_schedule_params(f, 1.0, 0.01, 1e-4);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.record_every = 500;
    const auto traj = evolve(f, 10.0, cfg);
    const auto rows = empirical_schedule(traj, p);
    ASSERT_EQ(rows.size(), traj.size());
    for (const auto& r : rows) {
        EXPECT_NEAR(r.sigma_hat, pi, 0.05 * pi) << "t " << r.t;
        EXPECT_GE(r.sigma_hat, r.sigma_certified);
        EXPECT_TRUE(r.within_doubling);
        EXPECT_NEAR(r.gamma_measured, rows.front().gamma_measured, 1e-8 * rows.front().gamma_measured);
    }
    // σ = 0: the measured norm is the conserved L² norm.
    const double l0 = gevrey_norm(traj.snapshots.front(), {0.0, 0.0});
    for (const auto& s : traj.snapshots) EXPECT_NEAR(gevrey_norm(s, {0.0, 0.0}), l0, 1e-8 * l0);
}

TEST(EmpiricalSchedule, PerturbedSolitonStaysAboveCertifiedCurve) {
    // The perturbation radiates at all frequencies; the domain must hold the tail.
    GridSpec g(8192, 400.0);
    const auto f = perturbed_soliton_field(g, 1.0, 0.0);
    const auto p = make_schedule_params(f, 1.0, 0.01, 1e-3);
    SolverConfig cfg;
    cfg.dt = 5e-3;
    cfg.record_every = 50;
    const auto rows = empirical_schedule(f, p, 2.0, cfg);
    for (const auto& r : rows) EXPECT_GE(r.sigma_hat, r.sigma_certified) << "t " << r.t;
}
