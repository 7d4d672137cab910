#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kdvg/bilinear.hpp"
#include "kdvg/dyadic.hpp"

using namespace kdvg;

namespace {

const DyadicIndex one = DyadicIndex::from_exponent(0);

DyadicIndex dy(double v) { return DyadicIndex::from_value(v); }

}  // namespace

TEST(PredictedConstant, RegimeA) {
    const auto t = DyadicTriple::of(8, 8, 8, 1, 4, 512);
    EXPECT_EQ(t.regime, Regime::prop_a);
    EXPECT_NEAR(predicted_constant(t), std::pow(8.0, -0.25) * std::sqrt(2.0), 1e-15);
}

TEST(PredictedConstant, RegimeB) {
    const auto t = DyadicTriple::of(1, 16, 16, 256, 4, 1);
    EXPECT_EQ(t.regime, Regime::prop_b);
    // 16⁻¹ · 1 · min(256, 16 · 4)^{1/2}
    EXPECT_NEAR(predicted_constant(t), 0.5, 1e-15);
}

TEST(PredictedConstant, RegimeC) {
    const auto t = DyadicTriple::of(2, 16, 16, 1, 1, 512);
    EXPECT_EQ(t.regime, Regime::prop_c);
    EXPECT_NEAR(predicted_constant(t), 1.0 / 16.0, 1e-15);
    const auto u = DyadicTriple::of(2, 16, 16, 4, 64, 512);
    EXPECT_NEAR(predicted_constant(u), 2.0 / 16.0 * std::sqrt(64.0), 1e-15);
}

TEST(PredictedConstant, VanishingConfigurations) {
    // N_max = 8 N_med.
    EXPECT_THROW(predicted_constant(DyadicTriple::of(1, 1, 8, 1, 1, 8)), VanishingConfiguration);
    EXPECT_THROW(predicted_constant(DyadicTriple::of(2, 32, 4, 1, 1, 64)), VanishingConfiguration);
    // L_max far below the resonance N_min N_max².
    EXPECT_THROW(predicted_constant(DyadicTriple::of(8, 8, 8, 1, 1, 1)), VanishingConfiguration);
    EXPECT_THROW(DyadicTriple::of(3, 4, 4, 1, 1, 1), InvalidArgument);
}

TEST(MeasureRatio, VanishingConfigurationHasZeroLhs) {
    for (const auto& t : {DyadicTriple::of(1, 2, 16, 1, 1, 16), DyadicTriple::of(16, 1, 1, 1, 1, 1)}) {
        const auto r = measure_ratio(t, 10, 3, 0);
        EXPECT_FALSE(r.predicted_C.has_value());
        EXPECT_GT(r.rhs_product, 0.0);
        EXPECT_LT(r.measured_lhs, 1e-10 * r.rhs_product);
    }
}

TEST(MeasureRatio, MoreTrialsNeverLowerTheMax) {
    const auto t = DyadicTriple::of(2, 4, 4, 1, 1, 32);
    const auto a = measure_ratio(t, 10, 5);
    const auto b = measure_ratio(t, 20, 5);
    EXPECT_EQ(a.trials, 10);
    EXPECT_EQ(b.trials, 20);
    EXPECT_GT(a.ratio, 0.0);
    EXPECT_GE(b.ratio, a.ratio);
    EXPECT_NEAR(a.ratio, a.measured_lhs / (a.predicted_C.value() * a.rhs_product), 1e-15);
}

TEST(MeasureRatio, RegimeCSweepExponent) {
    const std::vector<double> ns{8, 16, 32, 64};
    const auto sw = ratio_sweep(regime_c_triples(ns), ns, 32, 1);
    ASSERT_FALSE(std::isnan(sw.fitted_exponent));
    EXPECT_NEAR(sw.fitted_exponent, -1.0, 0.15);
    for (const auto& r : sw.records) EXPECT_GT(r.ratio, 0.0);
}

TEST(Lemma34, EqualFrequenciesExponent) {
    std::vector<std::array<double, 3>> ns;
    const std::vector<double> x{8, 16, 32, 64};
    for (double n : x) ns.push_back({n, n, n});
    const auto sw = lemma34_sweep(ns, x, 32, 1);
    ASSERT_FALSE(std::isnan(sw.fitted_exponent));
    EXPECT_NEAR(sw.fitted_exponent, -0.75, 0.2);
}

TEST(Lemma34, HighHighToLowExponent) {
    std::vector<std::array<double, 3>> ns;
    const std::vector<double> x{16, 32, 64, 128};
    for (double n : x) ns.push_back({n, n, 1});
    const auto sw = lemma34_sweep(ns, x, 32, 1);
    ASSERT_FALSE(std::isnan(sw.fitted_exponent));
    EXPECT_LE(sw.fitted_exponent, -1.5 + 0.2);
}

TEST(Lemma34, ZeroInputs) {
    auto p = default_packet(dy(4), one, 1);
    auto q = p;
    q.amplitude = 0.0;
    EXPECT_EQ(lemma34_ratio(q, p, dy(4)), 0.0);
    EXPECT_EQ(lemma34_ratio(p, q, dy(8)), 0.0);
    EXPECT_EQ(localized_product_norm(q, q, dy(8), one), 0.0);
}

TEST(MakeLocalized, SupportAndDeterminism) {
    const auto u = make_localized(dy(4), one, 7);
    EXPECT_GE(support_fraction(u, dy(4), one), 0.99);
    const auto v = make_localized(dy(4), one, 7);
    ASSERT_EQ(u.values().size(), v.values().size());
    for (std::size_t i = 0; i < u.values().size(); ++i) ASSERT_EQ(u.values()[i], v.values()[i]);
    const auto w = make_localized(dy(4), one, 8);
    EXPECT_NE(u.values()[u.values().size() / 2], w.values()[w.values().size() / 2]);
}

TEST(MakeLocalized, UnresolvableBands) {
    LocalizedGrid g;
    try {
        make_localized(dy(64), one, 1, g);
        FAIL() << "expected ResolutionError";
    } catch (const ResolutionError& e) {
        EXPECT_NE(std::string(e.what()).find("Nyquist"), std::string::npos);
    }
    g.dt = 1.0;
    try {
        make_localized(dy(4), one, 1, g);
        FAIL() << "expected ResolutionError";
    } catch (const ResolutionError& e) {
        EXPECT_NE(std::string(e.what()).find("time step"), std::string::npos);
    }
    g = LocalizedGrid{};
    g.t_begin = -1.0;
    g.t_end = 1.0;
    EXPECT_THROW(make_localized(dy(4), one, 1, g), ResolutionError);
}

/// Quadrature against the sampled space-time transform.
TEST(DualRoute, UnitFrequencies) {
    const auto p1 = default_packet(one, one, 1);
    const auto p2 = default_packet(one, one, 2);
    LocalizedGrid g;
    g.dt = 0.05;
    const auto u1 = make_localized(p1, g);
    const auto u2 = make_localized(p2, g);
    EXPECT_NEAR(u1.l2_norm(), packet_l2_norm(p1), 0.01 * packet_l2_norm(p1));
    const double quad = localized_product_norm(p1, p2, one, one);
    const double sampled = sampled_product_norm(u1, u2, one, one);
    EXPECT_GT(quad, 0.0);
    EXPECT_NEAR(sampled, quad, 0.05 * quad);
    EXPECT_NEAR(x_norm(u1), packet_x_norm(p1), 0.05 * packet_x_norm(p1));
}
