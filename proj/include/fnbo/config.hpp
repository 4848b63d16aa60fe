#pragma once

// Oscillator and bath parameters, and their reduction to dimensionless form.
//
// Physical inputs use natural units with hbar = k_B = 1: temperatures and
// frequencies share a unit, energies are measured in that unit too. Device
// calculators in device.hpp handle SI values.

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace fnbo {

enum class BathStatistics { Quantum, ClassicalHighT };

inline const char* toString(BathStatistics s) {
    return s == BathStatistics::Quantum ? "quantum" : "classical";
}

inline BathStatistics parseStatistics(const std::string& s) {
    if (s == "quantum" || s == "q") return BathStatistics::Quantum;
    if (s == "classical" || s == "c" || s == "classical-high-t") return BathStatistics::ClassicalHighT;
    throw ConfigError("unknown bath statistics '" + s + "'");
}

struct BathConfig {
    double damping = 0.0;      ///< Gamma_k
    double temperature = 0.0;  ///< T_k
    double cutoff = 0.0;       ///< Omega_C
    BathStatistics statistics = BathStatistics::Quantum;
};

struct SystemConfig {
    double mass = 1.0;
    double frequency = 1.0;      ///< Omega
    double noiseStrength = 0.0;  ///< D
    std::vector<BathConfig> baths;
};

/// One bath in reduced units: weight = Gamma_k / Gamma, temperature = 2T/Omega,
/// cutoff = Omega_C / Omega.
struct ReducedBath {
    double weight = 1.0;
    double temperature = 0.0;
    double cutoff = 1e3;
    BathStatistics statistics = BathStatistics::Quantum;
};

/// Dimensionless parameters: hbar = k_B = M = Omega = 1.
struct ReducedParams {
    double Q = 10.0;    ///< Omega / (4 Gamma)
    double qdw = 0.0;   ///< Q * D * Omega
    std::vector<ReducedBath> baths;
    double tempScale = 0.5;  ///< T_0 = Omega / 2, converts reduced temperature back

    double gamma() const { return baths.empty() ? 1.0 : baths.front().weight; }
    double totalDamping() const { return 1.0 / (4.0 * Q); }
    double damping(std::size_t k) const { return baths.at(k).weight / (4.0 * Q); }
    double noiseStrength() const { return qdw / Q; }
};

inline void validate(const ReducedBath& b) {
    require(std::isfinite(b.weight) && b.weight > 0.0 && b.weight <= 1.0 + 1e-12,
            "bath weight must lie in (0,1]");
    require(std::isfinite(b.temperature) && b.temperature >= 0.0, "temperature must be >= 0");
    require(b.statistics == BathStatistics::Quantum || b.temperature > 0.0,
            "classical high-temperature bath needs T > 0");
    require(std::isfinite(b.cutoff) && b.cutoff > 10.0,
            "cutoff must exceed 10 Omega (large-cutoff regime)");
}

inline void validate(const ReducedParams& rp) {
    require(std::isfinite(rp.Q) && rp.Q > 0.0, "Q must be > 0");
    require(std::isfinite(rp.qdw) && rp.qdw >= 0.0, "QDOmega must be >= 0");
    require(!rp.baths.empty() && rp.baths.size() <= 2, "need one or two baths");
    double sum = 0.0;
    for (const auto& b : rp.baths) {
        validate(b);
        sum += b.weight;
    }
    require(std::abs(sum - 1.0) < 1e-12, "bath weights must sum to 1");
}

inline void validate(const SystemConfig& cfg) {
    require(std::isfinite(cfg.mass) && cfg.mass > 0.0, "mass must be > 0");
    require(std::isfinite(cfg.frequency) && cfg.frequency > 0.0, "frequency must be > 0");
    require(std::isfinite(cfg.noiseStrength) && cfg.noiseStrength >= 0.0, "D must be >= 0");
    require(!cfg.baths.empty() && cfg.baths.size() <= 2, "need one or two baths");
    for (const auto& b : cfg.baths) {
        require(std::isfinite(b.damping) && b.damping > 0.0, "bath damping must be > 0");
        require(std::isfinite(b.temperature) && b.temperature >= 0.0, "temperature must be >= 0");
        require(b.statistics == BathStatistics::Quantum || b.temperature > 0.0,
                "classical high-temperature bath needs T > 0");
        require(std::isfinite(b.cutoff) && b.cutoff > 10.0 * cfg.frequency,
                "cutoff must exceed 10 Omega (large-cutoff regime)");
    }
}

inline ReducedParams reduce(const SystemConfig& cfg) {
    validate(cfg);
    double gammaTotal = 0.0;
    for (const auto& b : cfg.baths) gammaTotal += b.damping;
    ReducedParams rp;
    rp.Q = cfg.frequency / (4.0 * gammaTotal);
    rp.qdw = rp.Q * cfg.noiseStrength * cfg.frequency;
    rp.tempScale = cfg.frequency / 2.0;
    for (const auto& b : cfg.baths) {
        rp.baths.push_back({b.damping / gammaTotal, 2.0 * b.temperature / cfg.frequency,
                            b.cutoff / cfg.frequency, b.statistics});
    }
    return rp;
}

inline ReducedParams singleBath(double Q, double temperature, double cutoff = 1e3,
                                BathStatistics stats = BathStatistics::Quantum, double qdw = 0.0) {
    ReducedParams rp;
    rp.Q = Q;
    rp.qdw = qdw;
    rp.baths = {{1.0, temperature, cutoff, stats}};
    validate(rp);
    return rp;
}

/// Ancilla (bath 1, weight gamma) plus target (bath 2).
inline ReducedParams twoBath(double Q, double gamma, double t1, double t2, double cutoff = 1e3,
                             BathStatistics s1 = BathStatistics::Quantum,
                             BathStatistics s2 = BathStatistics::Quantum, double qdw = 0.0) {
    require(gamma > 0.0 && gamma < 1.0, "two-bath weight gamma must lie in (0,1)");
    ReducedParams rp;
    rp.Q = Q;
    rp.qdw = qdw;
    rp.baths = {{gamma, t1, cutoff, s1}, {1.0 - gamma, t2, cutoff, s2}};
    validate(rp);
    return rp;
}

}  // namespace fnbo
