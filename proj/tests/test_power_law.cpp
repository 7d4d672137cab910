#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kdvg/power_law.hpp"

using namespace kdvg;

TEST(FitPowerLaw, ExactSquare) {
    const auto f = fit_power_law({{1.0, 1.0}, {2.0, 4.0}, {3.0, 9.0}, {10.0, 100.0}});
    EXPECT_NEAR(f.exponent, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 0.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
}

TEST(FitPowerLaw, NegativeExponent) {
    std::vector<std::pair<double, double>> pts;
    for (double x : {10.0, 100.0, 1000.0, 10000.0}) pts.emplace_back(x, 5.0 * std::pow(x, -4.0 / 3.0));
    const auto f = fit_power_law(pts);
    EXPECT_NEAR(f.exponent, -4.0 / 3.0, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 5.0, 1e-10);
}

TEST(FitPowerLaw, NoisyThreeQuarters) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 20; ++i) {
        const double x = std::pow(2.0, -i / 2.0);
        pts.emplace_back(x, std::pow(x, 0.75) * (1.0 + 0.01 * noise(rng)));
    }
    const auto f = fit_power_law(pts);
    EXPECT_NEAR(f.exponent, 0.75, 0.02);
    EXPECT_GT(f.r_squared, 0.99);
}

TEST(FitPowerLaw, RejectsBadInput) {
    EXPECT_THROW(fit_power_law({{1.0, 1.0}, {2.0, 2.0}}), InvalidArgument);
    EXPECT_THROW(fit_power_law({{1.0, 1.0}, {2.0, 0.0}, {3.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(fit_power_law({{-1.0, 1.0}, {2.0, 2.0}, {3.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(fit_power_law({{2.0, 1.0}, {2.0, 2.0}, {2.0, 3.0}}), InvalidArgument);
}
