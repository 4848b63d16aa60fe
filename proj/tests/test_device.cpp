#include <gtest/gtest.h>

#include <cmath>

#include "fnbo/device.hpp"

using namespace fnbo::device;

namespace {

// Published values carry four digits; agreement means within one unit of the last one.
bool fourDigits(double value, double quoted) {
    const double unit = std::pow(10.0, std::floor(std::log10(std::abs(quoted))) - 3.0);
    return std::abs(value - quoted) <= unit;
}

}  // namespace

TEST(Tweezers, ShotNoiseFloor) {
    const auto b = tweezersD(0.5, 1.55e-6);
    EXPECT_TRUE(fourDigits(b.Dmin, 1.282e-19)) << b.Dmin;
    EXPECT_DOUBLE_EQ(b.D, b.Dmin);
    EXPECT_EQ(b.enhancement, 0.0);
}

TEST(Tweezers, FloorInverseInPowerAndWavelength) {
    const double a = tweezersD(0.5, 1.55e-6).Dmin;
    EXPECT_NEAR(tweezersD(1.0, 1.55e-6).Dmin / a, 0.5, 1e-14);
    EXPECT_NEAR(tweezersD(0.5, 3.1e-6).Dmin / a, 0.5, 1e-14);
}

TEST(Tweezers, LevelScalesNoiseAboveFloor) {
    for (double L : {0.0, 3.0, 10.0, 27.5}) {
        const auto b = tweezersD(0.5, 1.55e-6, L);
        EXPECT_NEAR(b.D / b.Dmin, std::pow(10.0, L / 10.0), 1e-12 * b.D / b.Dmin);
        EXPECT_GE(b.D, b.Dmin);
    }
    EXPECT_THROW(tweezersD(0.5, 1.55e-6, -1.0), fnbo::ConfigError);
    EXPECT_THROW(tweezersD(0.0, 1.55e-6), fnbo::ConfigError);
    EXPECT_THROW(tweezersD(0.5, -1.0), fnbo::ConfigError);
}

TEST(PaulTrap, VoltageNoiseFloor) {
    const auto b = paulTrapD(10e-12, -0.1, 0.01, 0.3, PaulComponent::Ac);
    EXPECT_TRUE(fourDigits(b.Smin, 1.054e-21)) << b.Smin;
}

TEST(PaulTrap, SixtyDecibelEnhancementFloor) {
    // Published figure for a 60 dB enhancement at C = 10 pF, V = 0.1 V.
    const auto b = paulTrapFromEnhancement(10e-12, 0.1, 60.0);
    EXPECT_NEAR(b.Dmin / 2.5e-18, 1.0, 0.1) << b.Dmin;
}

TEST(PaulTrap, FortyDecibelEnhancementFloor) {
    const auto b = paulTrapFromEnhancement(10e-12, 0.1, 40.0);
    EXPECT_NEAR(b.Dmin, 1e4 * fnbo::device::kHbar / (10e-12 * 0.01) / 4.0, 1e-30);
    EXPECT_TRUE(fourDigits(b.Dmin, 2.636e-18)) << b.Dmin;
}

TEST(PaulTrap, DcNoiseVanishesWithoutDcVoltage) {
    const auto b = paulTrapD(10e-12, 0.1, 0.0, 0.3, PaulComponent::Dc);
    EXPECT_EQ(b.D, 0.0);
    EXPECT_EQ(b.Dmin, 0.0);
    EXPECT_TRUE(std::isinf(b.enhancement) && b.enhancement < 0.0);
}

TEST(PaulTrap, DcAndAcEnhancementsMergeNearResonance) {
    const double q = 0.4;
    double prev = INFINITY;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double a = -q * q / (2.0 * (1.0 - eps));  // q^2/(2a) = -1 + eps
        const double gap = std::abs(paulEnhancementDc(a, q) - paulEnhancementAc(a, q));
        EXPECT_LT(gap, prev);
        EXPECT_NEAR(gap, -20.0 * std::log10(1.0 - eps), 1e-9);
        prev = gap;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(PaulTrap, EnhancementFormulas) {
    EXPECT_NEAR(paulEnhancementDc(0.01, 0.3), -20.0 * std::log10(1.0 + 0.09 / 0.02), 1e-12);
    EXPECT_NEAR(paulEnhancementAc(0.01, 0.3), -20.0 * std::log10(1.0 + 0.02 / 0.09), 1e-12);
    EXPECT_THROW(paulEnhancementAc(0.01, 0.0), fnbo::ConfigError);
    EXPECT_THROW(paulTrapD(0.0, 0.1, 0.01, 0.3, PaulComponent::Dc), fnbo::ConfigError);
    EXPECT_THROW(paulTrapD(1e-11, 0.0, 0.01, 0.3, PaulComponent::Dc), fnbo::ConfigError);
}

TEST(Budget, InvariantsHoldOverGrid) {
    for (double phi : {-30.0, 0.0, 12.0, 60.0})
        for (double L : {0.0, 0.5, 20.0}) {
            const auto b = makeBudget(1e-21, L, phi);
            EXPECT_NEAR(b.D, std::pow(10.0, (phi + L) / 10.0) * 1e-21 / 4.0, 1e-12 * b.D);
            EXPECT_GE(b.D, b.Dmin);
        }
    EXPECT_THROW(makeBudget(1e-21, -0.1, 0.0), fnbo::ConfigError);
    EXPECT_THROW(makeBudget(0.0, 0.0, 0.0), fnbo::ConfigError);
}

TEST(Budget, DecibelRoundTrip) {
    const double Smin = 1.054e-21;
    for (double S : {Smin, 3.7e-21, 1e-18, 2.2e-12}) {
        const double back = spectrumFromLevel(levelFromSpectrum(S, Smin), Smin);
        EXPECT_NEAR(back / S, 1.0, 1e-12);
    }
    EXPECT_THROW(levelFromSpectrum(-1.0, Smin), fnbo::ConfigError);
}

TEST(Cavity, BoundIsProductOfSmallFactors) {
    const double g = 2.0 * kPi * 10.0, w0 = 2.0 * kPi * 1e6, W = 2.0 * kPi * 1e5, T = 300.0, m = 1e-12;
    const auto c = cavityWallBound(g, w0, W, T, m);
    const double expect = (kBoltzmann * T / (m * kLightSpeed * kLightSpeed)) * (2.0 * g / w0) * (W / w0) / (kPi * kPi);
    EXPECT_NEAR(c.bound / expect, 1.0, 1e-14);
    EXPECT_LT(c.bound, 1e-6);
    EXPECT_FALSE(c.suitable);
    EXPECT_FALSE(c.note.empty());
}

TEST(Cavity, RequiresFastWall) {
    EXPECT_THROW(cavityWallBound(1.0, 1e5, 1e5, 300.0, 1e-12), fnbo::ConfigError);
    EXPECT_THROW(cavityWallBound(1.0, 5e5, 1e5, 300.0, 1e-12), fnbo::ConfigError);
    EXPECT_THROW(cavityWallBound(1.0, 1e6, 1e5, -1.0, 1e-12), fnbo::ConfigError);
}
