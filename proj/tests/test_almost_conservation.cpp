#include <gtest/gtest.h>

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "kdvg/almost_conservation.hpp"
#include "kdvg/initial_data.hpp"
#include "kdvg/power_law.hpp"

using namespace kdvg;
using std::numbers::pi;

namespace {

/// Brute-force discrete convolution with the exact commutator symbol.
std::vector<cplx> commutator_oracle(const SpectralField& w, double sigma) {
    const auto& g = w.grid();
    const long n = static_cast<long>(g.num_points());
    std::vector<cplx> out(g.num_points());
    for (long k1 = -n / 2 + 1; k1 < n / 2; ++k1) {
        const cplx a = w.coeff(k1);
        if (std::abs(a) < 1e-300) continue;
        for (long k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
            const cplx b = w.coeff(k2);
            if (std::abs(b) < 1e-300) continue;
            const long k = k1 + k2;
            if (k <= -n / 2 || k >= n / 2) continue;
            const double x1 = g.dxi() * k1, x2 = g.dxi() * k2, x = g.dxi() * k;
            const double sym = -std::expm1(-sigma * (std::abs(x1) + std::abs(x2) - std::abs(x)));
            out[g.index_of(k)] += cplx(0.0, 0.5 * x) * sym * a * b / g.length();
        }
    }
    return out;
}

/// Σ cos(ξ_k x) with exact coefficients: c = hl at ±k.
SpectralField cosines(const GridSpec& g, std::initializer_list<long> ks) {
    SpectralField f(g);
    for (long k : ks) {
        f.coeffs()[g.index_of(k)] += g.half_length();
        f.coeffs()[g.index_of(-k)] += g.half_length();
    }
    return f;
}

Trajectory run(const SpectralField& f, double T, double dt, std::size_t every, bool linear = false) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.record_every = every;
    cfg.linear_only = linear;
    // Periodic band-limited data fills the domain by construction.
    cfg.check_boundary = !linear;
    return evolve(f, T, cfg);
}

}  // namespace

TEST(CommutatorTerm, VanishesAtSigmaZero) {
    GridSpec g(512, 40.0);
    const auto f = sech_bumps_field(g, random_sech_bumps(7));
    const auto c = commutator_term(f, 0.0);
    for (const auto& v : c.coeffs()) EXPECT_LT(std::abs(v), 1e-13);
    EXPECT_THROW(commutator_term(f, -0.1), InvalidArgument);
}

// e^{σ|D|} amplifies product roundoff by up to e^{σ max|ξ|}; the grids
// below keep that factor under 1e3.
TEST(CommutatorTerm, SingleModeHasZeroSymbol) {
    GridSpec g(32, 2.0 * pi);
    const auto c = commutator_term(cosines(g, {6}), 0.7);
    for (const auto& v : c.coeffs()) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(CommutatorTerm, TwoModesMatchConvolutionOracle) {
    GridSpec g(32, 2.0 * pi);
    const long k0 = 2;
    const double xi0 = g.dxi() * k0;
    const auto w = cosines(g, {k0, 3 * k0});
    for (double sigma : {0.05, 0.3, 1.0}) {
        const auto c = commutator_term(w, sigma);
        const auto ref = commutator_oracle(w, sigma);
        for (std::size_t j = 0; j < g.num_points(); ++j) EXPECT_NEAR(std::abs(c.coeffs()[j] - ref[j]), 0.0, 1e-10);
        // Output at 2ξ₀ from ξ₁ = -ξ₀, ξ₂ = 3ξ₀: ½ i 2ξ₀ (1 - e^{-2σξ₀}) · 2 · (½)(½) · 2hl.
        const cplx expect = cplx(0.0, xi0) * (-std::expm1(-2.0 * sigma * xi0)) * 0.5 * g.length();
        EXPECT_NEAR(std::abs(c.coeff(2 * k0) - expect), 0.0, 1e-10);
    }
}

TEST(CommutatorTerm, RandomFieldMatchesConvolutionOracle) {
    GridSpec g(64, 10.0);
    const auto w = random_band_limited(g, 12, 5);
    for (double sigma : {0.1, 0.5}) {
        const auto c = commutator_term(w, sigma);
        const auto ref = commutator_oracle(w, sigma);
        for (std::size_t j = 0; j < g.num_points(); ++j) EXPECT_LT(std::abs(c.coeffs()[j] - ref[j]), 1e-10);
    }
}

TEST(ModifiedResidual, SigmaZeroIsSolverResidual) {
    GridSpec g(1024, 40.0);
    const auto tr = run(soliton_field(g, 1.0, -5.0), 0.01, 1e-4, 1);
    EXPECT_LT(modified_residual(tr, 0.0), 1e-6);
}

TEST(ModifiedResidual, LinearSolution) {
    GridSpec g(256, 40.0);
    const auto f = random_band_limited(g, 10, 3);
    const auto tr = run(f, 0.01, 1e-4, 1, true);
    EXPECT_LT(modified_residual(tr, 0.2, true), 1e-8);
}

TEST(ModifiedResidual, SecondOrderInSnapshotSpacing) {
    GridSpec g(512, 40.0);
    const auto f = sech_bumps_field(g, random_sech_bumps(2));
    const auto coarse = run(f, 0.02, 1e-4, 10);
    const auto fine = run(f, 0.02, 1e-4, 5);
    for (double sigma : {0.0, 0.2}) {
        const double rc = modified_residual(coarse, sigma);
        const double rf = modified_residual(fine, sigma);
        // The ratio tends to 4 from below; 3% covers the next order.
        EXPECT_GE(rc / rf, 4.0 * 0.97) << "sigma " << sigma;
    }
    EXPECT_THROW(modified_residual(Trajectory{}, 0.1), InvalidArgument);
}

TEST(ErrorR, VanishesAtSigmaZero) {
    GridSpec g(512, 40.0);
    const auto tr = run(sech_bumps_field(g, random_sech_bumps(2)), 0.01, 1e-4, 10);
    const auto r = error_R(tr, 0.0);
    EXPECT_LT(r.r, 1e-10);
    EXPECT_LT(std::abs(r.energy_change), 1e-10);
}

TEST(ErrorR, EnergyIdentityOnRandomData) {
    GridSpec g(1024, 40.0);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto f = sech_bumps_field(g, random_sech_bumps(seed));
        const auto tr = run(f, 4e-4, 1e-6, 2);
        for (double sigma : {0.4, 0.1}) {
            const auto rep = acl_report(tr, sigma);
            EXPECT_GT(rep.r_integral, 0.0);
            EXPECT_LT(rep.identity_mismatch(), 0.05);
            EXPECT_LT(rep.identity.identity_defect, 0.05 * rep.identity.rate_scale);
        }
    }
}

TEST(ErrorR, SlopeInSigmaAndMonotoneRecovery) {
    GridSpec g(1024, 40.0);
    const auto tr = run(sech_bumps_field(g, random_sech_bumps(2)), 4e-4, 1e-6, 2);
    std::vector<std::pair<double, double>> pts;
    double prev = INFINITY;
    for (double sigma : {0.4, 0.2, 0.1, 0.05, 0.025}) {
        const double r = error_R(tr, sigma).r;
        EXPECT_LT(r, prev);
        prev = r;
        pts.emplace_back(sigma, r);
    }
    EXPECT_GE(fit_power_law(pts).exponent, 0.65);
}

TEST(MultiplierBound, SameSignGivesZero) {
    const auto b = multiplier_bound_check(2.0, 5.0, 0.3, 0.75);
    EXPECT_EQ(b.lhs, 0.0);
    EXPECT_EQ(b.rhs1, 0.0);
    EXPECT_TRUE(b.holds());
}

TEST(MultiplierBound, WorkedExample) {
    const auto b = multiplier_bound_check(-1.0, 10.0, 0.5, 0.75);
    EXPECT_NEAR(b.lhs, 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(b.rhs1, 1.0, 1e-15);
    EXPECT_NEAR(b.rhs2, 1.0, 1e-15);
    EXPECT_TRUE(b.holds());
    EXPECT_THROW(multiplier_bound_check(1.0, 1.0, -1.0, 0.75), InvalidArgument);
    EXPECT_THROW(multiplier_bound_check(1.0, 1.0, 1.0, 1.5), InvalidArgument);
}

TEST(MultiplierBound, ExhaustiveGrid) {
    for (double sigma : {0.01, 0.1, 1.0}) {
        std::size_t bad = 0;
        for (int i = -200; i <= 200; ++i) {
            for (int j = -200; j <= 200; ++j) {
                if (!multiplier_bound_check(0.25 * i, 0.25 * j, sigma, 0.75).holds()) ++bad;
            }
        }
        EXPECT_EQ(bad, 0u) << "sigma " << sigma;
    }
}

TEST(AclReport, InvariantsAndSoliton) {
    GridSpec g(1024, 40.0);
    const auto f = soliton_field(g, 1.0, -5.0);
    AclSweepConfig cfg;
    const auto sw = acl_sweep(f, cfg);
    ASSERT_EQ(sw.reports.size(), 5u);
    for (const auto& r : sw.reports) {
        EXPECT_GE(r.lhs, r.rhs_base);
        EXPECT_GE(r.error_measured, 0.0);
        // |û| is constant in time for a travelling wave: no Gevrey growth.
        EXPECT_LT(r.error_measured, 1e-10 * r.rhs_base);
        EXPECT_LT(std::abs(r.identity.energy_change - r.identity.signed_value), 1e-10 * r.rhs_base);
    }
}

TEST(AclSweep, RandomDataScaling) {
    GridSpec g(1024, 40.0);
    for (std::uint64_t seed : {1, 2}) {
        const auto f = orient_for_growth(sech_bumps_field(g, random_sech_bumps(seed)), 0.4);
        EXPECT_GE(energy_rate(f, 0.4), 0.0);
        const auto sw = acl_sweep(f);
        EXPECT_NEAR(sw.t0, 0.01 / std::pow(gevrey_norm(f, {0.4, 0.0}), 2.0), 1e-15);
        ASSERT_FALSE(std::isnan(sw.fitted_exponent)) << "seed " << seed;
        EXPECT_GE(sw.fitted_exponent, 0.70) << "seed " << seed;
        for (const auto& r : sw.reports) {
            EXPECT_LT(r.identity_mismatch(), 0.05);
            EXPECT_LE(r.error_measured, sw.fitted_constant * std::pow(r.sigma, 0.75) * r.bound_cubed * (1 + 1e-12));
        }
    }
}

TEST(AclSweep, SolitonHasNoGrowth) {
    GridSpec g(1024, 40.0);
    const auto sw = acl_sweep(soliton_field(g, 1.0, -5.0));
    for (const auto& r : sw.reports) {
        EXPECT_LT(r.error_measured, 1e-10 * r.rhs_base) << "sigma " << r.sigma;
        EXPECT_LT(r.identity_mismatch(), 0.05) << "sigma " << r.sigma;
    }
}

TEST(AclSweep, ReflectionReversesRate) {
    GridSpec g(512, 40.0);
    const auto f = sech_bumps_field(g, random_sech_bumps(1));
    EXPECT_NEAR(energy_rate(reflect(f), 0.2), -energy_rate(f, 0.2), 1e-12);
    EXPECT_THROW(acl_sweep(f, AclSweepConfig{{}}), InvalidArgument);
}
