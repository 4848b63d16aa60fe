#pragma once

// Closed-form steady-state quantities of the frequency-noise-driven oscillator.
//
// Everything is in reduced units hbar = k_B = M = Omega = 1. With u = omega/Omega,
// L(u) = (1 - u^2)^2 + u^2/Q^2 and f(x) = 1/(1 + x^2), bath k contributes
//
//   <K>_k = gamma_k/(2Q) * int du/pi  u^3 f(u/u_C) theta_k(u) / L(u)
//   <V>_k = gamma_k/(2Q) * int du/pi  u   theta_k(u) / L(u)
//
// with theta = coth(u/T) for quantum baths and T/u for classical ones.

#include <cmath>
#include <limits>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace fnbo {

inline constexpr double kPi = 3.14159265358979323846;

/// Default relative tolerance for the steady-state integrals.
inline constexpr double kCoreRelTol = 1e-11;

namespace detail {

inline double lorentz(double u, double Q) {
    const double a = 1.0 - u * u;
    return a * a + u * u / (Q * Q);
}

inline double cutoffFactor(double u, double uc) {
    const double x = u / uc;
    return 1.0 / (1.0 + x * x);
}

/// coth(x) for x > 0 without overflow.
inline double cothPos(double x) {
    if (x > 20.0) return 1.0 + 2.0 * std::exp(-2.0 * x);
    return 1.0 + 2.0 / std::expm1(2.0 * x);
}

/// x csch^2(x) for x > 0.
inline double xcsch2(double x) {
    if (x < 1e-4) return 1.0 / x - x / 3.0;
    if (x > 350.0) return 0.0;
    const double s = std::sinh(x);
    return x / (s * s);
}

}  // namespace detail

/// u * theta(u): the thermal factor times u, finite at u -> 0.
inline double uThermal(double u, const ReducedBath& b) {
    if (b.statistics == BathStatistics::ClassicalHighT) return b.temperature;
    if (b.temperature <= 0.0) return u;
    const double x = u / b.temperature;
    if (x < 1e-6) return b.temperature * (1.0 + x * x / 3.0);
    return u * detail::cothPos(x);
}

/// u * T d(theta)/dT: temperature-logarithmic derivative of the thermal factor.
inline double uThermalDerivative(double u, const ReducedBath& b) {
    if (b.statistics == BathStatistics::ClassicalHighT) return b.temperature;
    if (b.temperature <= 0.0) return 0.0;
    const double x = u / b.temperature;
    if (x < 1e-6) return b.temperature * (1.0 - x * x / 3.0);
    return u * detail::xcsch2(x);
}

enum class Moment { Kinetic, Potential };

/// The integrand of the per-bath kinetic or potential integral (including 1/pi).
/// With derivative = true the thermal factor is replaced by T d(theta)/dT.
inline IntegrandSpec momentIntegrand(double Q, const ReducedBath& b, Moment m,
                                     bool derivative = false) {
    IntegrandSpec s;
    s.Q = Q;
    s.cutoff = b.cutoff;
    if (b.statistics == BathStatistics::Quantum && b.temperature > 0.0) {
        s.extraBreaks = {b.temperature, 10.0 * b.temperature};
    }
    const double uc = b.cutoff;
    if (m == Moment::Kinetic) {
        s.f = [Q, b, uc, derivative](double u) {
            const double th = derivative ? uThermalDerivative(u, b) : uThermal(u, b);
            return u * u * detail::cutoffFactor(u, uc) * th / (kPi * detail::lorentz(u, Q));
        };
    } else {
        s.f = [Q, b, derivative](double u) {
            const double th = derivative ? uThermalDerivative(u, b) : uThermal(u, b);
            return th / (kPi * detail::lorentz(u, Q));
        };
    }
    return s;
}

struct BathIntegrals {
    QuadResult kinetic;
    QuadResult potential;
};

inline BathIntegrals bathIntegrals(double Q, const ReducedBath& b, double relTol = kCoreRelTol,
                                   bool derivative = false) {
    validate(b);
    require(!(b.statistics == BathStatistics::ClassicalHighT && b.temperature <= 0.0),
            "classical bath at zero temperature");
    return {integrateSemiInfinite(momentIntegrand(Q, b, Moment::Kinetic, derivative), relTol),
            integrateSemiInfinite(momentIntegrand(Q, b, Moment::Potential, derivative), relTol)};
}

struct EnergyBreakdown {
    double meanK = 0.0;
    double meanV = 0.0;
    double E0 = 0.0;
    double ratioR = 0.0;
    double factorF = 0.0;
    double heisenbergRH = 0.0;
    double errK = 0.0, errV = 0.0, errE0 = 0.0, errR = 0.0, errF = 0.0, errRH = 0.0;
    std::vector<double> bathK;  ///< per-bath contributions, already weighted
    std::vector<double> bathV;
};

inline double heisenbergBound(double meanV, double frequency = 1.0) {
    require(meanV > 0.0, "mean potential energy must be > 0");
    return frequency * frequency / (16.0 * meanV * meanV);
}

inline double virialRatio(const EnergyBreakdown& eb) { return eb.meanK / eb.meanV; }
inline double virialFactor(const EnergyBreakdown& eb) { return 2.0 / (1.0 + virialRatio(eb)); }

inline EnergyBreakdown meanKineticPotential(const ReducedParams& rp, double relTol = kCoreRelTol) {
    validate(rp);
    EnergyBreakdown eb;
    for (const auto& b : rp.baths) {
        const auto bi = bathIntegrals(rp.Q, b, relTol);
        const double pre = b.weight / (2.0 * rp.Q);
        eb.bathK.push_back(pre * bi.kinetic.value);
        eb.bathV.push_back(pre * bi.potential.value);
        eb.meanK += pre * bi.kinetic.value;
        eb.meanV += pre * bi.potential.value;
        eb.errK += pre * bi.kinetic.absError;
        eb.errV += pre * bi.potential.absError;
    }
    eb.E0 = eb.meanK + eb.meanV;
    eb.errE0 = eb.errK + eb.errV;
    eb.ratioR = eb.meanK / eb.meanV;
    eb.factorF = 2.0 / (1.0 + eb.ratioR);
    eb.heisenbergRH = heisenbergBound(eb.meanV);
    const double relK = eb.errK / eb.meanK, relV = eb.errV / eb.meanV;
    eb.errR = eb.ratioR * (relK + relV);
    eb.errF = eb.factorF * eb.errR / (1.0 + eb.ratioR);
    eb.errRH = 2.0 * eb.heisenbergRH * relV;
    return eb;
}

struct Magnification {
    double value = 0.0;  ///< qdw / (1 - qdw), NaN when unstable
    bool stable = true;
};

inline Magnification magnification(double qdw) {
    require(std::isfinite(qdw) && qdw >= 0.0, "QDOmega must be >= 0");
    if (qdw >= 1.0) return {std::numeric_limits<double>::quiet_NaN(), false};
    return {qdw / (1.0 - qdw), true};
}

/// Inverse of magnification(): the QDOmega giving amplification w.
inline double qdwForMagnification(double w) {
    require(w >= 0.0, "magnification must be >= 0");
    return w / (1.0 + w);
}

struct DrivenSteadyState {
    double magnification = 0.0;
    double energy = 0.0;
    double x2 = 0.0, p2 = 0.0, xp = 0.0;
    double Dc = 0.0, Ds = 0.0;
    std::vector<double> bathDc, bathDs;
    bool stable = true;
    EnergyBreakdown energies;
};

/// Driven second moments. D~_c = <K> + <V>, D~_s = <V> - <K> per bath.
inline DrivenSteadyState drivenMoments(const ReducedParams& rp, double relTol = kCoreRelTol) {
    const auto w = magnification(rp.qdw);
    if (!w.stable) throw UnstableError("driven oscillator unstable: QDOmega >= 1");
    DrivenSteadyState s;
    s.energies = meanKineticPotential(rp, relTol);
    s.magnification = w.value;
    for (std::size_t k = 0; k < rp.baths.size(); ++k) {
        s.bathDc.push_back(s.energies.bathK[k] + s.energies.bathV[k]);
        s.bathDs.push_back(s.energies.bathV[k] - s.energies.bathK[k]);
        s.Dc += s.bathDc.back();
        s.Ds += s.bathDs.back();
    }
    const double q = rp.qdw;
    s.x2 = (s.Dc + s.Ds) / (1.0 - q);
    s.p2 = (s.Dc + (2.0 * q - 1.0) * s.Ds) / (1.0 - q);
    s.xp = 0.0;
    s.energy = 0.5 * (s.x2 + s.p2);
    return s;
}

struct HeatCurrentReport {
    std::vector<double> J0;         ///< currents without frequency noise
    std::vector<double> J;          ///< J0_k - 4 Gamma_k E0 W F
    std::vector<double> JMoments;   ///< -4 Gamma_k <p^2> + <xi_k p> from the driven moments
    double workPower = 0.0;         ///< Omega^2 <phi x p> (negative: power into the noise source)
    double sumRuleResidual = 0.0;   ///< sum_k J0_k
    double amplificationResidual = 0.0;  ///< -(J_1 + J_2)/(4 Gamma E0) - W F
    double balanceResidual = 0.0;   ///< sum_k J_k - workPower
    double balanceResidualAlt = 0.0;  ///< sum_k J_k + workPower
    double routeResidual = 0.0;     ///< max_k |J_k - JMoments_k|
};

inline HeatCurrentReport heatCurrents(const ReducedParams& rp, double relTol = kCoreRelTol) {
    const auto s = drivenMoments(rp, relTol);
    const auto& eb = s.energies;
    const double gammaTot = rp.totalDamping();
    const double D = rp.noiseStrength();
    HeatCurrentReport r;
    for (std::size_t k = 0; k < rp.baths.size(); ++k) {
        const double gk = rp.damping(k);
        const double xip = 8.0 * gammaTot * eb.bathK[k];  // <xi_k p>, unaffected by phi
        const double j0 = xip - 4.0 * gk * 2.0 * eb.meanK;
        r.J0.push_back(j0);
        r.J.push_back(j0 - 4.0 * gk * eb.E0 * s.magnification * eb.factorF);
        r.JMoments.push_back(-4.0 * gk * s.p2 + xip);
        r.routeResidual = std::max(r.routeResidual, std::abs(r.J.back() - r.JMoments.back()));
    }
    r.workPower = -D * s.x2;
    double sumJ0 = 0.0, sumJ = 0.0;
    for (std::size_t k = 0; k < r.J.size(); ++k) {
        sumJ0 += r.J0[k];
        sumJ += r.J[k];
    }
    r.sumRuleResidual = sumJ0;
    r.amplificationResidual = -sumJ / (4.0 * gammaTot * eb.E0) - s.magnification * eb.factorF;
    r.balanceResidual = sumJ - r.workPower;
    r.balanceResidualAlt = sumJ + r.workPower;
    return r;
}

struct RatioDerivative {
    double separable = 0.0;         ///< d R / d T~ from four one-dimensional integrals
    double finiteDifference = 0.0;  ///< Richardson-extrapolated central difference
    double separableError = 0.0;
    double finiteDifferenceError = 0.0;
};

namespace detail {

inline double singleBathRatio(double Q, const ReducedBath& b, double relTol) {
    const auto bi = bathIntegrals(Q, b, relTol);
    return bi.kinetic.value / bi.potential.value;
}

}  // namespace detail

/// Separable evaluation of dR/dT~ for a single bath (weight ignored).
inline double ratioDerivativeSeparable(double Q, const ReducedBath& b, double relTol = kCoreRelTol,
                                       double* errOut = nullptr) {
    require(b.temperature > 0.0, "derivative needs T > 0");
    const auto a = bathIntegrals(Q, b, relTol);
    const auto d = bathIntegrals(Q, b, relTol, true);
    const double AK = a.kinetic.value, AV = a.potential.value;
    const double BK = d.kinetic.value, BV = d.potential.value;
    const double val = (BK * AV - AK * BV) / (AV * AV) / b.temperature;
    if (errOut) {
        const double rel = a.kinetic.relError + 2.0 * a.potential.relError + d.kinetic.relError +
                           d.potential.relError;
        *errOut = rel * (std::abs(BK * AV) + std::abs(AK * BV)) / (AV * AV) / b.temperature;
    }
    return val;
}

inline RatioDerivative virialRatioDerivative(double Q, const ReducedBath& bath,
                                             double relTol = 1e-12) {
    validate(bath);
    require(Q > 0.0, "Q must be > 0");
    RatioDerivative r;
    r.separable = ratioDerivativeSeparable(Q, bath, relTol, &r.separableError);

    // Four-point stencil: (8[R(T+h)-R(T-h)] - [R(T+2h)-R(T-2h)]) / 12h.
    const double T = bath.temperature;
    const double h = 0.02 * T;
    if (h < 1e-8) throw NumericalError("finite-difference step underflow at low temperature");
    auto R = [&](double t) {
        ReducedBath b = bath;
        b.temperature = t;
        return detail::singleBathRatio(Q, b, relTol);
    };
    const double d1 = R(T + h) - R(T - h);
    const double d2 = R(T + 2 * h) - R(T - 2 * h);
    r.finiteDifference = (8.0 * d1 - d2) / (12.0 * h);
    const double coarse = d1 / (2.0 * h);
    r.finiteDifferenceError = std::abs(r.finiteDifference - coarse) * (h * h) + 20.0 * relTol / h;
    return r;
}

/// dR/dT~_2 of the two-bath ratio at the given temperatures, from per-bath
/// integrals: target derivative weighted by its damping share.
inline double twoBathRatioDerivative(const ReducedParams& rp, double relTol = 1e-12) {
    validate(rp);
    require(rp.baths.size() == 2, "two-bath configuration required");
    double K = 0.0, V = 0.0;
    for (const auto& b : rp.baths) {
        const auto bi = bathIntegrals(rp.Q, b, relTol);
        K += b.weight * bi.kinetic.value;
        V += b.weight * bi.potential.value;
    }
    const auto& t = rp.baths[1];
    require(t.temperature > 0.0, "derivative needs T > 0");
    const auto d = bathIntegrals(rp.Q, t, relTol, true);
    const double dK = t.weight * d.kinetic.value / t.temperature;
    const double dV = t.weight * d.potential.value / t.temperature;
    return (dK * V - K * dV) / (V * V);
}

}  // namespace fnbo
