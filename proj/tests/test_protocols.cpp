#include <gtest/gtest.h>

#include "fnbo/core.hpp"
#include "fnbo/protocols.hpp"

using namespace fnbo;

namespace {

std::vector<SlopePoint> energyPoints(const ReducedParams& base, const std::vector<double>& W) {
    std::vector<SlopePoint> pts;
    for (double w : W) {
        auto rp = base;
        rp.qdw = qdwForMagnification(w);
        pts.push_back({rp.qdw, drivenMoments(rp).energy, 0.0});
    }
    return pts;
}

}  // namespace

TEST(Ringdown, NoiselessRecoveryToPointOnePercent) {
    for (double Q : {5.0, 10.0, 50.0}) {
        const double G = 1.0 / (4.0 * Q);
        const auto fit = ringdown(simulateRingdown(G, 1.0, std::max(3.0 / G, 150.0), 0.005));
        EXPECT_NEAR(fit.omega, 1.0, 1e-3) << Q;
        EXPECT_NEAR(fit.damping / G, 1.0, 1e-3) << Q;
        EXPECT_NEAR(fit.qualityFactor() / Q, 1.0, 2e-3) << Q;
    }
}

TEST(Ringdown, ThermalTraceWithinFitUncertainty) {
    const double G = 0.025;
    const ReducedBath bath{1.0, 0.25, 50.0, BathStatistics::Quantum};
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto fit = ringdown(simulateRingdown(G, 50.0, 80.0, 0.005, 10, bath, seed));
        if (std::abs(fit.damping - G) <= 3.0 * fit.dampingError &&
            std::abs(fit.omegaDamped - std::sqrt(1.0 - 4.0 * G * G)) <= 3.0 * fit.omegaDampedError)
            ++hits;
        EXPECT_NEAR(fit.damping / G, 1.0, 0.05);
    }
    EXPECT_GE(hits, 8);
}

TEST(Ringdown, RejectsUnusableTraces) {
    Trajectory flat;
    for (int i = 0; i < 100; ++i) {
        flat.t.push_back(0.1 * i);
        flat.x.push_back(0.0);
    }
    EXPECT_THROW(ringdown(flat), NumericalError);
    EXPECT_THROW(ringdown(simulateRingdown(1.0, 1.0, 50.0, 0.005)), ConfigError);  // Q = 1/4
    EXPECT_THROW(ringdown(simulateRingdown(0.01, 1.0, 20.0, 0.005)), ConfigError);  // three periods
    Trajectory few{{0, 1, 2}, {1, 0, -1}};
    EXPECT_THROW(ringdown(few), ConfigError);
}

TEST(Slope, RecoversAnalyticFactorExactly) {
    for (double T : {0.1, 0.5, 3.0}) {
        const auto rp = singleBath(10.0, T);
        const auto eb = meanKineticPotential(rp);
        const auto est = slopeF(energyPoints(rp, {0.1, 0.5, 1.0}), {SlopeRoute::Energy, eb.E0, 0.0, 0.0, 0.0, 0.0});
        EXPECT_NEAR(est.F, eb.factorF, 1e-6) << T;
        EXPECT_NEAR(est.intercept, 1.0, 1e-9);  // E/E0 at W = 0
    }
}

TEST(Slope, ClassicalVirialGivesUnitSlope) {
    // Synthetic data with R = 1 exactly.
    const double E0 = 0.7;
    std::vector<SlopePoint> pts;
    for (double w : {0.2, 1.0, 3.0, 7.0}) pts.push_back({qdwForMagnification(w), E0 * (1.0 + w), 0.0});
    EXPECT_NEAR(slopeF(pts, {SlopeRoute::Energy, E0, 0.0, 0.0, 0.0, 0.0}).F, 1.0, 1e-12);
}

TEST(Slope, CurrentRouteMatchesEnergyRoute) {
    const auto rp = twoBath(10.0, 0.3, 0.25, 1.0);
    const auto h0 = heatCurrents(rp);
    const auto eb = meanKineticPotential(rp);
    std::vector<SlopePoint> cur;
    for (double w : {0.2, 0.5, 1.0, 2.0}) {
        auto r = rp;
        r.qdw = qdwForMagnification(w);
        cur.push_back({r.qdw, heatCurrents(r).J[0], 0.0});
    }
    const auto c = slopeF(cur, {SlopeRoute::Current, eb.E0, 0.0, h0.J0[0], 0.0, rp.damping(0)});
    const auto e = slopeF(energyPoints(rp, {0.2, 0.5, 1.0, 2.0}), {SlopeRoute::Energy, eb.E0, 0.0, 0.0, 0.0, 0.0});
    EXPECT_NEAR(c.F, e.F, 1e-8);
    EXPECT_NEAR(c.F, eb.factorF, 1e-8);
}

TEST(Slope, WeightedFitCarriesUncertainty) {
    const double E0 = 1.0, F = 0.8;
    std::vector<SlopePoint> pts;
    const double noise[] = {0.003, -0.002, 0.001, -0.004, 0.002};
    int i = 0;
    for (double w : {0.2, 0.5, 1.0, 2.0, 5.0}) pts.push_back({qdwForMagnification(w), E0 * (1.0 + F * w) + noise[i++], 0.003});
    const auto est = slopeF(pts, {SlopeRoute::Energy, E0, 0.0, 0.0, 0.0, 0.0});
    EXPECT_GT(est.FError, 0.0);
    EXPECT_LE(est.ciLow, F);
    EXPECT_GE(est.ciHigh, F);
}

TEST(Slope, RejectsBadInputs) {
    const SlopeContext ctx{SlopeRoute::Energy, 1.0, 0.0, 0.0, 0.0, 0.0};
    EXPECT_THROW(slopeF({{0.1, 1.1, 0.0}, {0.2, 1.2, 0.0}, {1.2, 5.0, 0.0}}, ctx), UnstableError);
    EXPECT_THROW(slopeF({{0.1, 1.1, 0.0}, {0.1, 1.1, 0.0}, {0.2, 1.2, 0.0}}, ctx), ConfigError);
    EXPECT_THROW(slopeF({{0.1, 1.1, 0.0}, {0.2, 1.2, 0.0}, {0.3, 1.3, 0.0}}, {SlopeRoute::Energy, 0.0, 0.0, 0.0, 0.0, 0.0}),
                 ConfigError);
}

TEST(Slope, SimulatedEnergiesMatchAnalyticSlope) {
    ProtocolConfig cfg;
    cfg.Q = 1.0;
    cfg.gamma = 1.0;
    cfg.t1 = 0.5;
    cfg.cutoff = 50.0;
    cfg.magnifications = {0.2, 0.5, 1.0};
    cfg.repetitions = 1;
    cfg.source = MeasurementSource::MonteCarlo;
    cfg.mc.ensembleSize = 400;
    cfg.mc.threads = 1;
    const auto rep = twoBathProtocol(cfg);
    const double F = meanKineticPotential(singleBath(1.0, 0.5, 50.0)).factorF;
    EXPECT_LT(std::abs(rep.energySlope.F - F), 3.0 * rep.energySlope.FError);
}

TEST(Protocol, QuantumTargetIdentified) {
    ProtocolConfig cfg;
    cfg.gamma = 0.05;
    cfg.t2 = 0.25;
    const auto rep = twoBathProtocol(cfg);
    EXPECT_EQ(rep.classification, "quantum");
    EXPECT_GT(rep.logLikelihoodMargin, 0.0);
    EXPECT_NEAR(rep.Q, 10.0, 0.02);
    EXPECT_NEAR(rep.gamma, 0.05, 1e-3);
}

TEST(Protocol, ClassicalTargetIdentified) {
    ProtocolConfig cfg;
    cfg.gamma = 0.05;
    cfg.t2 = 0.25;
    cfg.target = BathStatistics::ClassicalHighT;
    const auto rep = twoBathProtocol(cfg);
    EXPECT_EQ(rep.classification, "classical");
    EXPECT_LT(rep.logLikelihoodMargin, 0.0);
}

TEST(Protocol, HotClassicalTargetIndistinguishable) {
    ProtocolConfig cfg;
    cfg.gamma = 0.05;
    cfg.t2 = 100.0;
    cfg.target = BathStatistics::ClassicalHighT;
    const auto rep = twoBathProtocol(cfg);
    EXPECT_EQ(rep.classification, "indistinguishable");
}

TEST(Protocol, DecoupledTargetIndistinguishable) {
    ProtocolConfig cfg;
    cfg.gamma = 1.0;
    const auto rep = twoBathProtocol(cfg);
    EXPECT_EQ(rep.classification, "indistinguishable");
    EXPECT_EQ(rep.FQuantum, rep.FClassical);
}

TEST(Thermometry, RecoversTemperatureStep) {
    const auto cal = calibrateThermometry(10.0, 0.3, 1.5);
    const double dT = 0.075;
    const auto r = thermometry(thermometryForward(cal, dT, 10.0), cal);
    EXPECT_NEAR(r.dTEnergy / dT, 1.0, 0.1);
    EXPECT_NEAR(r.dTCurrent / dT, 1.0, 0.1);
    EXPECT_TRUE(r.routesAgree);
    EXPECT_TRUE(r.valid);
    EXPECT_TRUE(std::isfinite(r.dTEnergyLeadingOrder));
    EXPECT_TRUE(std::isfinite(r.dTCurrentLeadingOrder));
}

TEST(Thermometry, ZeroStepGivesZero) {
    const auto cal = calibrateThermometry(10.0, 0.3, 1.5);
    const auto r = thermometry(thermometryForward(cal, 0.0, 10.0), cal);
    EXPECT_NEAR(r.dTEnergy, 0.0, 1e-8);
    EXPECT_NEAR(r.dTCurrent, 0.0, 1e-8);
}

TEST(Thermometry, LinearizationBiasShrinksWithStep) {
    const auto cal = calibrateThermometry(10.0, 0.3, 1.5);
    auto relErr = [&](double dT) { return std::abs(thermometry(thermometryForward(cal, dT, 10.0), cal).dTEnergy / dT - 1.0); };
    const double a = relErr(0.15), b = relErr(0.075), c = relErr(0.02);
    EXPECT_LT(b, a);
    EXPECT_LT(c, b);
}

TEST(Thermometry, LargeStepFlaggedInvalid) {
    const auto cal = calibrateThermometry(10.0, 0.3, 1.5);
    const auto r = thermometry(thermometryForward(cal, 0.6, 10.0), cal);
    EXPECT_FALSE(r.valid);
    ThermometryMeasurement none;
    EXPECT_THROW(thermometry(none, cal), ConfigError);
}
