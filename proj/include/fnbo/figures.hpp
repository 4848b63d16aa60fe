#pragma once

// Figure data tables: virial ratio curves, the net energy deviation map and
// the quantum-classical differences in the virial factor.
//
// Per-bath integrals depend only on (Q, T, u_C, statistics); the bath weight
// is an overall factor, so grids reuse them.

#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "parallel.hpp"

namespace fnbo {

/// A named-column table; NaN marks grid points that were not computed.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> notes;  ///< emitted as comment lines

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ConfigError("no column '" + name + "'");
    }
};

inline std::vector<double> logspace(double a, double b, std::size_t n) {
    require(a > 0.0 && b > a && n >= 2, "logspace needs 0 < a < b and n >= 2");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1));
    return v;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    require(n >= 2, "linspace needs n >= 2");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

/// Unweighted K and V integrals of one bath, in the prefactor convention of core.hpp.
struct UnitBath {
    double K = 0.0, V = 0.0;
};

inline UnitBath unitBath(double Q, double T, double cutoff, BathStatistics s) {
    const auto bi = bathIntegrals(Q, {1.0, T, cutoff, s});
    return {bi.kinetic.value / (2.0 * Q), bi.potential.value / (2.0 * Q)};
}

struct Fig2Options {
    std::vector<double> Q = {10.0, 20.0, 40.0};
    double cutoff = 1e3;
    double tMin = 0.05, tMax = 100.0;
    std::size_t points = 40;
    unsigned threads = 0;
};

/// Virial ratio versus temperature: quantum ratio, Heisenberg bound, classical ratio.
inline Table fig2(const Fig2Options& o = {}) {
    const auto T = logspace(o.tMin, o.tMax, o.points);
    Table t;
    t.columns = {"Q", "T", "R", "R_H", "R_classical", "F"};
    t.notes = {"R: virial ratio <K>/<V> with a quantum bath",
               "R_H: Heisenberg lower bound 1/(16 <V>^2)",
               "R_classical: virial ratio with a classical high-temperature bath"};
    t.rows.resize(o.Q.size() * T.size());
    parallelFor(
        t.rows.size(),
        [&](std::size_t i) {
            const double Q = o.Q[i / T.size()], Tt = T[i % T.size()];
            const auto q = unitBath(Q, Tt, o.cutoff, BathStatistics::Quantum);
            const auto c = unitBath(Q, Tt, o.cutoff, BathStatistics::ClassicalHighT);
            const double R = q.K / q.V;
            t.rows[i] = {Q, Tt, R, heisenbergBound(q.V), c.K / c.V, 2.0 / (1.0 + R)};
        },
        o.threads);
    return t;
}

struct Fig3aOptions {
    double T = 0.25;
    double cutoff = 1e3;
    double qMin = 1.0, qMax = 10.0;
    double dMin = 0.0, dMax = 0.2;  ///< D Omega range
    std::size_t nQ = 50, nD = 50;
    unsigned threads = 0;
};

/// Net energy deviation W(1 - F) over (D Omega, Q); unstable points are NaN
/// with stable = 0.
inline Table fig3a(const Fig3aOptions& o = {}) {
    const auto Qs = linspace(o.qMin, o.qMax, o.nQ);
    const auto Ds = linspace(o.dMin, o.dMax, o.nD);
    std::vector<double> F(Qs.size());
    parallelFor(
        Qs.size(),
        [&](std::size_t i) {
            const auto b = unitBath(Qs[i], o.T, o.cutoff, BathStatistics::Quantum);
            F[i] = 2.0 / (1.0 + b.K / b.V);
        },
        o.threads);
    Table t;
    t.columns = {"Q", "DOmega", "sqrt_2DOmega", "QDOmega", "W", "F", "Delta", "stable"};
    t.notes = {"Delta = W (1 - F), quantum bath", "stable = 0 marks QDOmega >= 1 (not computed)"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < Qs.size(); ++i) {
        for (double D : Ds) {
            const double qdw = Qs[i] * D;
            const auto m = magnification(qdw);
            if (!m.stable) {
                t.rows.push_back({Qs[i], D, std::sqrt(2.0 * D), qdw, nan, F[i], nan, 0.0});
            } else {
                t.rows.push_back({Qs[i], D, std::sqrt(2.0 * D), qdw, m.value, F[i], m.value * (1.0 - F[i]), 1.0});
            }
        }
    }
    return t;
}

struct Fig3bOptions {
    double Q = 10.0;
    double cutoff = 1e3;
    double tMin = 0.05, tMax = 100.0;
    std::size_t points = 60;
    unsigned threads = 0;
};

/// |F_quantum - F_classical| for a single bath versus temperature.
inline Table fig3b(const Fig3bOptions& o = {}) {
    const auto T = logspace(o.tMin, o.tMax, o.points);
    Table t;
    t.columns = {"T", "F_quantum", "F_classical", "DeltaF1"};
    t.notes = {"DeltaF1 = |F_quantum - F_classical|, single bath"};
    t.rows.resize(T.size());
    parallelFor(
        T.size(),
        [&](std::size_t i) {
            const auto q = unitBath(o.Q, T[i], o.cutoff, BathStatistics::Quantum);
            const auto c = unitBath(o.Q, T[i], o.cutoff, BathStatistics::ClassicalHighT);
            const double fq = 2.0 / (1.0 + q.K / q.V), fc = 2.0 / (1.0 + c.K / c.V);
            t.rows[i] = {T[i], fq, fc, std::abs(fq - fc)};
        },
        o.threads);
    return t;
}

struct Fig3cOptions {
    double Q = 10.0;
    double t1 = 0.25;
    double cutoff = 1e3;
    double gMin = 0.02, gMax = 0.98;
    double rMin = 0.1, rMax = 10.0;  ///< T2/T1, log spaced
    std::size_t nGamma = 49, nRatio = 41;
    unsigned threads = 0;
};

/// |F_2,quantum - F_2,classical| with a quantum ancilla, over (gamma, T2/T1).
inline Table fig3c(const Fig3cOptions& o = {}) {
    const auto G = linspace(o.gMin, o.gMax, o.nGamma);
    auto R = logspace(o.rMin, o.rMax, o.nRatio);
    const auto anc = unitBath(o.Q, o.t1, o.cutoff, BathStatistics::Quantum);
    std::vector<UnitBath> tq(R.size()), tc(R.size());
    parallelFor(
        R.size(),
        [&](std::size_t j) {
            tq[j] = unitBath(o.Q, o.t1 * R[j], o.cutoff, BathStatistics::Quantum);
            tc[j] = unitBath(o.Q, o.t1 * R[j], o.cutoff, BathStatistics::ClassicalHighT);
        },
        o.threads);
    Table t;
    t.columns = {"gamma", "T2_over_T1", "F2_quantum", "F2_classical", "DeltaF2", "equilibrium"};
    t.notes = {"DeltaF2 = |F(quantum target) - F(classical target)|, quantum ancilla",
               "equilibrium = 1 on the T2 = T1 column"};
    // The column nearest T2/T1 = 1 is the equilibrium line.
    std::size_t eq = 0;
    for (std::size_t j = 1; j < R.size(); ++j)
        if (std::abs(std::log(R[j])) < std::abs(std::log(R[eq]))) eq = j;
    for (double g : G) {
        for (std::size_t j = 0; j < R.size(); ++j) {
            auto F = [&](const UnitBath& b) {
                const double K = g * anc.K + (1.0 - g) * b.K, V = g * anc.V + (1.0 - g) * b.V;
                return 2.0 / (1.0 + K / V);
            };
            const double fq = F(tq[j]), fc = F(tc[j]);
            t.rows.push_back({g, R[j], fq, fc, std::abs(fq - fc), j == eq ? 1.0 : 0.0});
        }
    }
    return t;
}

}  // namespace fnbo
