#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kdvg/dyadic.hpp"
#include "kdvg/initial_data.hpp"

using namespace kdvg;
using std::numbers::pi;

namespace {

DyadicIndex dy(double v) { return DyadicIndex::from_value(v); }

}  // namespace

TEST(Cutoff, ChiProfile) {
    EXPECT_EQ(chi(0.0), 1.0);
    EXPECT_EQ(chi(1.0), 1.0);
    EXPECT_EQ(chi(-1.0), 1.0);
    EXPECT_EQ(chi(2.0), 0.0);
    EXPECT_NEAR(chi(std::sqrt(2.0)), 0.5, 1e-15);
    double prev = 1.0;
    for (double s = 1.0; s <= 2.0; s += 0.01) {
        EXPECT_LE(chi(s), prev);
        prev = chi(s);
    }
}

TEST(DyadicIndexTest, PowersOfTwoOnly) {
    EXPECT_EQ(dy(8).exponent(), 3);
    EXPECT_EQ(dy(0.25).exponent(), -2);
    EXPECT_FALSE(dy(0.25).inhomogeneous());
    EXPECT_THROW(dy(3.0), InvalidArgument);
    EXPECT_THROW(dy(0.0), InvalidArgument);
    EXPECT_LT(dy(2), dy(4));
    EXPECT_EQ(dy(2).doubled(), dy(4));
}

TEST(Bump, ValuesAndSupport) {
    EXPECT_EQ(bump(dy(1), 0.5), 1.0);
    EXPECT_EQ(bump(dy(4), 100.0), 0.0);
    EXPECT_EQ(bump(dy(1), 2.0), 0.0);
    for (double n : {2.0, 4.0, 64.0}) {
        EXPECT_EQ(bump(dy(n), n / 2.0), 0.0);
        EXPECT_EQ(bump(dy(n), 2.0 * n), 0.0);
        EXPECT_EQ(bump(dy(n), n), 1.0);
        EXPECT_GE(bump(dy(n), n / std::sqrt(2.0)), 0.5 - 1e-15);
        EXPECT_GE(bump(dy(n), n * std::sqrt(2.0)), 0.5 - 1e-15);
    }
}

TEST(Bump, PartitionOfUnityOnGrid) {
    GridSpec g(4096, 40.0);
    for (std::size_t j = 0; j < g.num_points(); ++j) {
        const double xi = g.xi(j);
        if (xi == 0.0 || std::abs(xi) > 512.0) continue;
        double sum = 0.0;
        for (int e = 0; e <= 10; ++e) sum += bump(DyadicIndex::from_exponent(e), xi);
        EXPECT_NEAR(sum, 1.0, 1e-14) << xi;
    }
}

TEST(ProjectPN, SingleModeSplitsAcrossNeighbours) {
    GridSpec g(64, pi);  // integer frequencies
    const auto f = transform_of(g, [](double x) { return std::cos(3.0 * x); });
    const auto sum = project_PN(f, dy(2)) + project_PN(f, dy(4));
    EXPECT_LT(l2_norm(sum - f), 1e-14 * l2_norm(f));
    EXPECT_NEAR(bump(dy(2), 3.0) + bump(dy(4), 3.0), 1.0, 1e-15);
    EXPECT_LT(l2_norm(project_PN(f, dy(8))), 1e-14 * l2_norm(f));
}

TEST(ProjectPN, ConstantLivesInFirstBlock) {
    GridSpec g(64, 5.0);
    const auto f = transform_of(g, [](double) { return 2.0; });
    EXPECT_LT(l2_norm(project_PN(f, dy(1)) - f), 1e-14);
    for (double n : {2.0, 4.0, 8.0}) EXPECT_EQ(l2_norm(project_PN(f, dy(n))), 0.0);
}

TEST(ProjectPN, ReconstructionAndContraction) {
    GridSpec g(512, 10.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto f = random_band_limited(g, 255, seed);
        f.coeff(0) = 1.5;
        const auto blocks = littlewood_paley(f);
        SpectralField sum(g);
        for (const auto& [n, b] : blocks) {
            EXPECT_LE(l2_norm(b), l2_norm(f));
            sum = sum + b;
        }
        EXPECT_LT(l2_norm(sum - f), 1e-12 * l2_norm(f));
    }
}

TEST(ProjectPN, NearIdempotentInsideStrictBand) {
    GridSpec g(1024, 16.0 * pi);  // dxi = 1/16
    for (double n : {2.0, 8.0, 32.0}) {
        SpectralField f(g);
        for (std::size_t j = 0; j < g.num_points(); ++j) {
            const double a = std::abs(g.xi(j));
            if (a >= n / std::sqrt(2.0) && a <= n * std::sqrt(2.0)) f.coeffs()[j] = 1.0;
        }
        const auto p = project_PN(f, dy(n));
        EXPECT_GE(l2_norm(project_PN(p, dy(n))), 0.5 * l2_norm(p));
    }
}

TEST(ProjectPN, ProductSupportVanishesUnlessMaxMatchesMed) {
    GridSpec g(1024, 8.0 * pi);
    const auto u = random_band_limited(g, 400, 1);
    const auto v = random_band_limited(g, 400, 2);
    // Frequencies of P_2 u · P_2 v stay below 8, so P_32 of the product is zero.
    const auto prod = dealiased_product(project_PN(u, dy(2)), project_PN(v, dy(2)));
    const double rel = l2_norm(project_PN(prod, dy(32))) /
                       (l2_norm(project_PN(u, dy(2))) * l2_norm(project_PN(v, dy(2))));
    EXPECT_LT(rel, 1e-12);
    // A permitted triple (2, 16, 16) is not small.
    const auto ok = dealiased_product(project_PN(u, dy(2)), project_PN(v, dy(16)));
    EXPECT_GT(l2_norm(project_PN(ok, dy(16))), 1e-3 * l2_norm(ok));
}

namespace {

SpacetimeField plane_wave(const GridSpec& g, double xi0, double tau0, double ta, double tb,
                          std::size_t nt) {
    SpacetimeField u(g, ta, tb, nt);
    for (std::size_t j = 0; j < nt; ++j) {
        for (std::size_t k = 0; k < g.num_points(); ++k) {
            u.at(j, k) = std::polar(1.0, xi0 * g.x(k) + tau0 * u.time(j));
        }
    }
    return u;
}

}  // namespace

TEST(ProjectQL, FreeWaveHasLowModulation) {
    GridSpec g(32, 4.0 * pi);
    const double xi0 = 1.5;
    const auto u = plane_wave(g, xi0, xi0 * xi0 * xi0, -4.0, 4.0, 128);
    const auto prof = modulation_profile(u);
    double total = 0.0;
    double low = 0.0;
    for (const auto& [l, v] : prof.block_norms) {
        total += v * v;
        if (l.value() <= 4.0) low += v * v;
    }
    EXPECT_GE(low / total, 0.95);
    const double x = prof.x_norm();
    const double n = prepare(u).l2_norm();
    EXPECT_LE(x, 4.0 * n);
    EXPECT_GE(x, n * (1.0 - 1e-12));
}

TEST(ProjectQL, ModulatedWaveLandsInShiftedBand) {
    GridSpec g(32, 4.0 * pi);
    const double xi0 = 1.0;
    for (double shift : {16.0, 64.0}) {
        const auto u = plane_wave(g, xi0, xi0 * xi0 * xi0 + shift, -4.0, 4.0, 512);
        const auto prof = modulation_profile(u);
        DyadicIndex best;
        double bv = -1.0;
        for (const auto& [l, v] : prof.block_norms) {
            if (v > bv) {
                bv = v;
                best = l;
            }
        }
        EXPECT_EQ(best.value(), shift);
        // Whole mass in one band: x_norm = L^{1/2}‖u‖ up to taper leakage.
        const double n = prepare(u).l2_norm();
        EXPECT_NEAR(prof.x_norm(), std::sqrt(shift) * n, 0.05 * std::sqrt(shift) * n);
    }
}

TEST(ProjectQL, BlocksSumToTaperedField) {
    GridSpec g(32, 4.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d;
    SpacetimeField u(g, 0.0, 6.0, 64);
    for (auto& v : u.values()) v = d(rng);
    const auto target = prepare(u);
    const auto prof = modulation_profile(u);
    SpacetimeField sum = project_QL(u, DyadicIndex{});
    for (auto l = dy(2); l <= prof.max_resolved; l = l.doubled()) {
        const auto q = project_QL(u, l);
        EXPECT_LE(q.l2_norm(), target.l2_norm() * (1.0 + 1e-12));
        for (std::size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] += q.values()[i];
    }
    double err = 0.0;
    for (std::size_t i = 0; i < sum.values().size(); ++i) {
        err = std::max(err, std::abs(sum.values()[i] - target.values()[i]));
    }
    EXPECT_LT(err, 1e-10);
}

TEST(ProjectQL, ZeroFieldAndShortWindow) {
    GridSpec g(16, pi);
    SpacetimeField z(g, 0.0, 4.0, 16);
    EXPECT_EQ(x_norm(z), 0.0);
    EXPECT_EQ(project_QL(z, dy(4)).l2_norm(), 0.0);
    SpacetimeField shortw(g, 0.0, 0.5, 8);
    try {
        project_QL(shortw, dy(1));
        FAIL() << "expected ResolutionError";
    } catch (const ResolutionError& e) {
        EXPECT_NE(std::string(e.what()).find("time window too short"), std::string::npos);
    }
}

TEST(XbarNorm, ZeroAndLowFrequencyOnly) {
    GridSpec g(64, 8.0 * pi);
    SpacetimeField z(g, -2.0, 2.0, 64);
    const auto r0 = xbar_s_norm(z, -0.75);
    EXPECT_EQ(r0.xbar_s, 0.0);
    EXPECT_EQ(r0.low_freq_maximal, 0.0);

    const auto f = transform_of(g, [](double x) { return std::cos(0.5 * x); });
    const auto u = free_evolution(f, {-2.0, 2.0, 64});
    const auto a = xbar_s_norm(u, -0.75);
    const auto b = xbar_s_norm(u, 1.0);
    EXPECT_GT(a.low_freq_maximal, 0.0);
    EXPECT_NEAR(a.xbar_s, a.low_freq_maximal, 1e-14 * a.xbar_s);
    EXPECT_NEAR(b.xbar_s, a.xbar_s, 1e-14 * a.xbar_s);
    EXPECT_LT(a.reconstruction_defect(), 1e-14);
}

TEST(XbarNorm, SingleBlockAtEight) {
    GridSpec g(64, 4.0 * pi);  // ξ = 8 on grid
    const auto f = transform_of(g, [](double x) { return std::cos(8.0 * x); });
    const auto u = free_evolution(f, {-4.0, 4.0, 512});
    const auto r = xbar_s_norm(u, -0.75);
    const double block = x_norm(u);
    EXPECT_NEAR(r.xbar_s, std::pow(8.0, -0.75) * block, 0.05 * std::pow(8.0, -0.75) * block);
    EXPECT_LT(r.reconstruction_defect(), 1e-12);
    EXPECT_LT(r.low_freq_maximal, 1e-12);
}

TEST(FreeEnergyCheck, ZeroModeHomogeneityAndBoundedness) {
    GridSpec g(64, 8.0);
    const auto c = transform_of(g, [](double) { return 1.0; });
    const double r0 = free_energy_check(c, 0.0);
    EXPECT_TRUE(std::isfinite(r0));
    EXPECT_GT(r0, 0.0);

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = random_band_limited(g, 20, 500 + seed);
        const double r = free_energy_check(f, 0.0);
        worst = std::max(worst, r);
        if (seed < 3) {
            EXPECT_NEAR(free_energy_check(2.0 * f, 0.0), r, 1e-12 * r);
        }
    }
    RecordProperty("max_ratio", std::to_string(worst));
    EXPECT_LE(worst, 10.0);
    EXPECT_THROW(free_energy_check(SpectralField(g), 0.0), InvalidArgument);
}
