#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "kdvg/initial_data.hpp"
#include "kdvg/solver.hpp"

using namespace kdvg;
using std::numbers::pi;

namespace {

double soliton_error(const SpectralField& u, double t, double x0) {
    const auto exact = soliton_field(u.grid(), 1.0, x0 + t);
    return l2_norm(u - exact);
}

double peak_location(const SpectralField& u) {
    const auto v = inverse_transform(u);
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j) {
        if (v[j] > v[best]) best = j;
    }
    return u.grid().x(best);
}

double line_integral(double (*f)(double)) {
    boost::math::quadrature::exp_sinh<double> q;
    return 2.0 * q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST(AiryPropagate, IdentityGroupAndUnitarity) {
    GridSpec g(512, 20.0);
    const auto f = random_band_limited(g, 200, 1);
    const auto same = airy_propagate(f, 0.0);
    for (std::size_t j = 0; j < g.num_points(); ++j) EXPECT_EQ(same.coeffs()[j], f.coeffs()[j]);
    const auto back = airy_propagate(airy_propagate(f, 3.7), -3.7);
    double peak = 0.0;
    for (const auto& c : f.coeffs()) peak = std::max(peak, std::abs(c));
    for (std::size_t j = 0; j < g.num_points(); ++j) {
        EXPECT_LT(std::abs(back.coeffs()[j] - f.coeffs()[j]), 1e-13 * peak);
    }
    const auto u = airy_propagate(f, 12.3);
    EXPECT_NEAR(l2_norm(u), l2_norm(f), 1e-13 * l2_norm(f));
}

TEST(ClassicalInvariants, SolitonClosedForms) {
    // Oracles: quadrature of 3 sech²(x/2), 9 sech⁴(x/2) and the energy density.
    const double mass = line_integral([](double x) { return soliton(x); });
    const double momentum = line_integral([](double x) { return soliton(x) * soliton(x); });
    const double ham = line_integral([](double x) {
        const double s = 1.0 / std::cosh(0.5 * x);
        const double ux = -3.0 * s * s * std::tanh(0.5 * x);
        const double u = 3.0 * s * s;
        return 0.5 * ux * ux - u * u * u / 6.0;
    });
    EXPECT_NEAR(mass, 12.0, 1e-12);
    EXPECT_NEAR(momentum, 24.0, 1e-12);
    EXPECT_NEAR(ham, -7.2, 1e-12);

    GridSpec g(1024, 40.0);
    const auto inv = classical_invariants(soliton_field(g, 1.0, -5.0));
    EXPECT_NEAR(inv.mass, 12.0, 1e-10);
    EXPECT_NEAR(inv.momentum, 24.0, 1e-10);
    EXPECT_NEAR(inv.hamiltonian, -7.2, 1e-10);

    const auto zero = classical_invariants(SpectralField(g));
    EXPECT_EQ(zero.mass, 0.0);
    EXPECT_EQ(zero.momentum, 0.0);
    EXPECT_EQ(zero.hamiltonian, 0.0);
}

TEST(Evolve, ZeroStaysZero) {
    GridSpec g(128, 20.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.record_every = 100;
    const auto tr = evolve(SpectralField(g), 1.0, cfg);
    for (const auto& s : tr.snapshots) {
        for (const auto& c : s.coeffs()) EXPECT_EQ(c, cplx(0.0));
    }
}

TEST(Evolve, RecordsRequestedTimes) {
    GridSpec g(256, 40.0);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.record_every = 25;
    cfg.check_boundary = false;
    const auto tr = evolve(soliton_field(g, 1.0, -5.0), 1.0, cfg);
    ASSERT_EQ(tr.size(), 5u);
    for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_NEAR(tr.times[i], 0.25 * i, 1e-14);
    EXPECT_EQ(tr.times.back(), 1.0);
}

TEST(Evolve, SolitonTranslatesAtUnitSpeed) {
    GridSpec g(1024, 40.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.record_every = 500;
    const double x0 = -5.0;
    const auto tr = evolve(soliton_field(g, 1.0, x0), 4.0, cfg);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.times[i];
        EXPECT_NEAR(peak_location(tr.snapshots[i]), x0 + t, 2.0 * g.dx());
        EXPECT_LT(soliton_error(tr.snapshots[i], t, x0), 1e-6) << "t=" << t;
    }
}

TEST(Evolve, EtdMatchesIntegratingFactor) {
    GridSpec g(512, 40.0);
    SolverConfig a;
    a.dt = 2e-3;
    a.record_every = 1000;
    SolverConfig b = a;
    b.scheme = Scheme::etd_rk4;
    const auto f = soliton_field(g, 1.0, -5.0);
    const auto ua = evolve(f, 2.0, a).snapshots.back();
    const auto ub = evolve(f, 2.0, b).snapshots.back();
    EXPECT_LT(l2_norm(ua - ub), 1e-7);
    EXPECT_LT(soliton_error(ub, 2.0, -5.0), 1e-6);
}

TEST(Evolve, FourthOrderSelfConvergence) {
    GridSpec g(512, 40.0);
    const auto f = soliton_field(g, 1.0, -5.0);
    double prev = 0.0;
    for (double dt : {0.02, 0.01, 0.005}) {
        SolverConfig cfg;
        cfg.dt = dt;
        cfg.record_every = 1000000;
        cfg.check_boundary = false;  // coarse steps shed fast radiation around the circle
        const double err = soliton_error(evolve(f, 2.0, cfg).snapshots.back(), 2.0, -5.0);
        if (prev > 0.0) {
            EXPECT_GE(prev / err, 8.0) << "dt=" << dt;
        }
        prev = err;
    }
}

TEST(Evolve, SmallAmplitudeFollowsAiry) {
    const double hl = 8.0 * pi;
    GridSpec g(128, hl);
    const double eps = 1e-6;
    const double xi0 = 0.5;
    const auto f = transform_of(g, [&](double x) { return eps * std::cos(xi0 * x); });
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.check_boundary = false;
    cfg.record_every = 1000000;
    const double T = 2.0;
    const auto u = evolve(f, T, cfg).snapshots.back();
    const auto lin = airy_propagate(f, T);
    // Quadratic interaction is O(ε² ξ T) in amplitude; the L² norm picks up sqrt(2 hl).
    EXPECT_LT(l2_norm(u - lin), eps * eps * xi0 * T * std::sqrt(g.length()));
    EXPECT_GT(l2_norm(u - lin), 0.0);
}

TEST(Evolve, MassMomentumRealityAndReversal) {
    GridSpec g(1024, 40.0);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.record_every = 200;
    cfg.check_boundary = false;  // non-soliton data radiates; invariants are periodic ones
    const auto f = sech_bumps_field(g, {{1.5, -3.0, 1.5}, {0.7, 4.0, 2.0}});
    const double T = 2.0;
    const auto tr = evolve(f, T, cfg);
    const auto m0 = tr.diagnostics.front();
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto& d = tr.diagnostics[i];
        EXPECT_NEAR(d.mass, m0.mass, 1e-12 * std::abs(m0.mass));
        EXPECT_NEAR(d.momentum, m0.momentum, 1e-8 * m0.momentum);
        EXPECT_NEAR(d.hamiltonian, m0.hamiltonian, 1e-6 * std::abs(m0.hamiltonian));
        const auto z = inverse_transform_complex(tr.snapshots[i]);
        double im = 0.0;
        for (const auto& c : z) im = std::max(im, std::abs(c.imag()));
        EXPECT_LT(im, 1e-12 * l2_norm(tr.snapshots[i]));
    }
    // (t, x) -> (-t, -x): evolving the reflected end state forward returns
    // the reflected start. Compare with the one-way discretization error at
    // a halved step.
    const auto back = evolve(reflect(tr.snapshots.back()), T, cfg).snapshots.back();
    const double rev_err = l2_norm(reflect(back) - f);
    SolverConfig fine = cfg;
    fine.dt = 0.5 * cfg.dt;
    const double one_way = l2_norm(evolve(f, T, fine).snapshots.back() - tr.snapshots.back());
    EXPECT_LT(rev_err, 2.0 * 16.0 / 15.0 * one_way + 1e-13);
}

TEST(Evolve, DetectsDomainTooSmall) {
    GridSpec g(512, 40.0);
    SolverConfig cfg;
    cfg.dt = 2e-3;
    cfg.record_every = 250;
    try {
        evolve(soliton_field(g, 1.0, 0.0), 30.0, cfg);
        FAIL() << "expected DomainTooSmall";
    } catch (const DomainTooSmall& e) {
        EXPECT_GT(e.time(), 10.0);
        EXPECT_LT(e.time(), 30.0);
    }
    EXPECT_THROW(evolve(soliton_field(g, 1.0, 35.0), 1.0, cfg), DomainTooSmall);
}

TEST(Evolve, DetectsDivergence) {
    GridSpec g(256, 20.0);
    SolverConfig cfg;
    cfg.dt = 0.2;
    cfg.check_boundary = false;
    cfg.record_every = 1000;
    try {
        evolve(soliton_field(g, 16.0, 0.0), 200.0, cfg);
        FAIL() << "expected SolverDiverged";
    } catch (const SolverDiverged& e) {
        EXPECT_LT(e.last_valid_time(), 200.0);
    }
}

TEST(Evolve, RejectsBadArguments) {
    GridSpec g(64, 20.0);
    SolverConfig cfg;
    EXPECT_THROW(evolve(SpectralField(g), -1.0, cfg), InvalidArgument);
    cfg.dt = 0.0;
    EXPECT_THROW(evolve(SpectralField(g), 1.0, cfg), InvalidArgument);
    SpectralField z(g);
    z.coeff(3) = cplx(1.0, 0.0);
    EXPECT_THROW(evolve(z, 1.0, SolverConfig{}), InvalidArgument);
}
