#pragma once

// Platform calculators for the frequency-noise strength D, in SI units.
//
// A platform has an intrinsic white-noise floor S_min (seconds). A noise level
// L (dB above the floor) and an enhancement Phi (dB, set by how the frequency
// depends on the fluctuating parameter) combine as
//
//   D = 10^((Phi + L)/10) * S_min / 4,   D_min = 10^(Phi/10) * S_min / 4.

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace fnbo::device {

// CODATA 2018 exact values.
inline constexpr double kPlanck = 6.62607015e-34;  // J s
inline constexpr double kHbar = kPlanck / (2.0 * 3.14159265358979323846);
inline constexpr double kLightSpeed = 299792458.0;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kPi = 3.14159265358979323846;

struct NoiseBudget {
    double Smin = 0.0;         ///< s
    double level = 0.0;        ///< L_A, dB over Smin
    double enhancement = 0.0;  ///< Phi_A, dB; -inf when the platform decouples
    double D = 0.0;            ///< s
    double Dmin = 0.0;         ///< s
};

/// L = 10 log10(S / Smin).
inline double levelFromSpectrum(double S, double Smin) {
    require(S > 0.0 && Smin > 0.0, "spectral densities must be > 0");
    return 10.0 * std::log10(S / Smin);
}

/// S = 10^(L/10) Smin.
inline double spectrumFromLevel(double L, double Smin) {
    require(Smin > 0.0, "Smin must be > 0");
    return std::pow(10.0, L / 10.0) * Smin;
}

inline NoiseBudget makeBudget(double Smin, double level, double enhancement) {
    require(Smin > 0.0 && std::isfinite(Smin), "Smin must be > 0");
    require(level >= 0.0 && std::isfinite(level), "noise level must be >= 0 dB");
    NoiseBudget b;
    b.Smin = Smin;
    b.level = level;
    b.enhancement = enhancement;
    if (std::isinf(enhancement) && enhancement < 0.0) return b;  // D = Dmin = 0
    require(std::isfinite(enhancement), "enhancement must be finite or -inf");
    b.Dmin = std::pow(10.0, enhancement / 10.0) * Smin / 4.0;
    b.D = std::pow(10.0, (enhancement + level) / 10.0) * Smin / 4.0;
    return b;
}

/// Optical tweezers with shot-noise-limited power P0 (W) at wavelength lambda (m).
/// The trap stiffness is linear in power, so Phi = 0 and D_min = hc/(2 lambda P0).
inline NoiseBudget tweezersD(double P0, double lambda, double level = 0.0) {
    require(P0 > 0.0 && std::isfinite(P0), "beam power must be > 0");
    require(lambda > 0.0 && std::isfinite(lambda), "wavelength must be > 0");
    const double Smin = 2.0 * kPlanck * kLightSpeed / (lambda * P0);
    return makeBudget(Smin, level, 0.0);
}

enum class PaulComponent { Dc, Ac };

/// Phi for dc voltage noise: -20 log10|1 + q^2/(2a)|; -inf at a = 0.
inline double paulEnhancementDc(double a, double q) {
    if (a == 0.0) return -std::numeric_limits<double>::infinity();
    return -20.0 * std::log10(std::abs(1.0 + q * q / (2.0 * a)));
}

/// Phi for ac voltage noise: -20 log10|1 + 2a/q^2|.
inline double paulEnhancementAc(double a, double q) {
    require(q != 0.0, "ac component needs q != 0");
    return -20.0 * std::log10(std::abs(1.0 + 2.0 * a / (q * q)));
}

/// Ion in a Paul trap with Mathieu parameters (a, q). Voltage noise on the
/// electrodes of capacitance C (F) at voltage V (V) has floor hbar/(C V^2).
/// With a = 0 the secular frequency does not depend on the dc voltage and the
/// dc budget is zero.
inline NoiseBudget paulTrapD(double C, double V, double a, double q, PaulComponent component,
                             double level = 0.0) {
    require(C > 0.0 && std::isfinite(C), "capacitance must be > 0");
    require(V != 0.0 && std::isfinite(V), "voltage must be nonzero");
    require(std::isfinite(a) && std::isfinite(q), "Mathieu parameters must be finite");
    const double Smin = kHbar / (C * V * V);
    const double phi = component == PaulComponent::Dc ? paulEnhancementDc(a, q) : paulEnhancementAc(a, q);
    if (std::isinf(phi) && phi > 0.0) throw ConfigError("enhancement diverges at q^2/(2a) = -1");
    return makeBudget(Smin, level, phi);
}

/// Paul-trap budget from a prescribed enhancement Phi (dB).
inline NoiseBudget paulTrapFromEnhancement(double C, double V, double phiDb, double level = 0.0) {
    require(C > 0.0 && V != 0.0, "capacitance must be > 0 and voltage nonzero");
    return makeBudget(kHbar / (C * V * V), level, phiDb);
}

struct CavityBound {
    double bound = 0.0;  ///< upper bound on D * Omega (dimensionless)
    double thermalFactor = 0.0;    ///< k_B T / (m c^2)
    double dampingFactor = 0.0;    ///< 2 gamma / omega0
    double frequencyFactor = 0.0;  ///< Omega / omega0
    bool suitable = false;
    std::string note;
};

/// A cavity mode whose end mirror is a damped oscillator (mass m, frequency
/// omega0, damping gamma, temperature T). The white-noise limit needs
/// omega0 >> Omega; the bound is tiny for any realistic mirror, so the
/// implementation is flagged unsuitable.
inline CavityBound cavityWallBound(double gamma, double omega0, double Omega, double T, double m) {
    require(gamma > 0.0 && omega0 > 0.0 && Omega > 0.0 && T > 0.0 && m > 0.0,
            "cavity parameters must be > 0");
    require(omega0 >= 10.0 * Omega, "white-noise limit needs omega0 >> Omega (omega0 >= 10 Omega)");
    CavityBound c;
    c.thermalFactor = kBoltzmann * T / (m * kLightSpeed * kLightSpeed);
    c.dampingFactor = 2.0 * gamma / omega0;
    c.frequencyFactor = Omega / omega0;
    c.bound = c.thermalFactor * c.dampingFactor * c.frequencyFactor / (kPi * kPi);
    c.suitable = false;
    c.note = "wall-induced frequency noise is bounded far below any measurable level";
    return c;
}

}  // namespace fnbo::device
