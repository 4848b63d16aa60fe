#pragma once

// Langevin integrator for the frequency-noise-driven oscillator, in reduced
// units (M = Omega = 1):
//
//   dx/dt = p,   dp/dt = -(1 + phi) x - 4 Gamma p + xi_1 + xi_2
//
// The multiplicative noise phi multiplies x, which itself carries no noise, so
// the Ito and Stratonovich readings of the equation coincide and an explicit
// Heun step converges to the same process as Euler-Maruyama.

#include <gsl/gsl_eigen.h>
#include <gsl/gsl_matrix.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fnbo {

enum class Scheme { EulerMaruyama, StochasticHeun };

inline const char* toString(Scheme s) {
    return s == Scheme::StochasticHeun ? "heun" : "euler-maruyama";
}

inline Scheme parseScheme(const std::string& s) {
    if (s == "heun") return Scheme::StochasticHeun;
    if (s == "euler" || s == "euler-maruyama" || s == "em") return Scheme::EulerMaruyama;
    throw ConfigError("unknown scheme '" + s + "'");
}

struct State {
    double x = 0.0;
    double p = 0.0;
    double t = 0.0;
};

struct IntegratorConfig {
    double dt = 1e-3;
    double tEnd = 0.0;    ///< total simulated time per trajectory
    double burnIn = 0.0;  ///< averages cover [burnIn, tEnd)
    Scheme scheme = Scheme::StochasticHeun;
    std::size_t ensembleSize = 10000;
    std::uint64_t baseSeed = 1;
    bool allowUnstable = false;
    double overflowGuard = 1e12;  ///< trip when x^2 + p^2 exceeds this
    unsigned threads = 0;         ///< 0 selects defaultThreadCount()
    State initial{};
};

/// Burn-in 20/Gamma and a 100/Gamma averaging window at dt = 1e-3.
inline IntegratorConfig defaultIntegratorConfig(const ReducedParams& rp) {
    IntegratorConfig c;
    const double g = rp.totalDamping();
    c.burnIn = 20.0 / g;
    c.tEnd = c.burnIn + 100.0 / g;
    return c;
}

inline void validate(const IntegratorConfig& c, const ReducedParams& rp) {
    validate(rp);
    require(c.dt > 0.0 && c.dt <= 0.01 + 1e-15, "dt must lie in (0, 0.01/Omega]");
    for (const auto& b : rp.baths) require(c.dt * b.cutoff <= 0.5 + 1e-12, "dt * Omega_C must be <= 0.5");
    require(c.burnIn >= 10.0 / rp.totalDamping() - 1e-9, "burn-in must be at least 10/Gamma");
    require(c.tEnd > c.burnIn + c.dt, "tEnd must exceed burn-in");
    require(c.ensembleSize >= 100, "ensemble size must be at least 100");
    require(c.overflowGuard > 0.0, "overflow guard must be > 0");
    require(std::isfinite(c.initial.x) && std::isfinite(c.initial.p), "initial state must be finite");
}

struct StepInput {
    double xiNow = 0.0;   ///< total bath force at the start of the step
    double xiNext = 0.0;  ///< total bath force at the end of the step
    double phi = 0.0;     ///< frequency noise sample, variance 2D/dt
};

/// A step together with the momentum and position at which the scheme
/// evaluated the damping and frequency-noise forces. Products of these with
/// the forces split the discrete energy change into bath, damping and work
/// terms without an O(dt) bias from the rough part of the bath force.
struct StepTrace {
    State next;
    double pForce = 0.0;
    double xForce = 0.0;
};

/// One explicit step. damping4 is 4 Gamma.
inline StepTrace stepTraced(const State& s, const StepInput& in, double dt, double damping4, Scheme scheme) {
    const double fx = s.p;
    const double fp = -s.x - damping4 * s.p + in.xiNow;
    if (scheme == Scheme::EulerMaruyama) {
        return {{s.x + dt * fx, s.p + dt * fp - dt * in.phi * s.x, s.t + dt}, s.p, s.x};
    }
    const double xt = s.x + dt * fx;
    const double pt = s.p + dt * fp - dt * in.phi * s.x;
    const double fx2 = pt;
    const double fp2 = -xt - damping4 * pt + in.xiNext;
    const double xm = 0.5 * (s.x + xt);
    return {{s.x + 0.5 * dt * (fx + fx2), s.p + 0.5 * dt * (fp + fp2) - dt * in.phi * xm, s.t + dt},
            0.5 * (s.p + pt), xm};
}

inline State stepUnchecked(const State& s, const StepInput& in, double dt, double damping4, Scheme scheme) {
    return stepTraced(s, in, dt, damping4, scheme).next;
}

/// Checked step: rejects non-finite input and signals instability when the
/// state leaves the overflow guard.
inline State step(const State& s, const StepInput& in, double dt, double damping4,
                  Scheme scheme = Scheme::StochasticHeun,
                  double overflowGuard = std::numeric_limits<double>::max()) {
    if (!std::isfinite(s.x) || !std::isfinite(s.p) || !std::isfinite(in.xiNow) ||
        !std::isfinite(in.xiNext) || !std::isfinite(in.phi))
        throw NumericalError("non-finite state or force");
    require(dt > 0.0, "dt must be > 0");
    const State n = stepUnchecked(s, in, dt, damping4, scheme);
    if (!(n.x * n.x + n.p * n.p <= overflowGuard)) throw UnstableError("overflow guard tripped");
    return n;
}

struct Estimate {
    double mean = 0.0;
    double stdError = 0.0;
};

struct MomentEstimates {
    Estimate x2, p2, xp, xi1p, xi2p, phixp, energy;
    std::size_t effectiveSamples = 0;  ///< trajectories contributing
    std::size_t stepsPerTrajectory = 0;
};

struct SimHeatCurrents {
    Estimate J1, J2;
    Estimate workPower;         ///< <phi x p>, midpoint sampled
    Estimate currentSum;        ///< J1 + J2
    Estimate balanceResidual;   ///< J1 + J2 - workPower
    Estimate balanceResidualAlt;  ///< J1 + J2 + workPower
};

struct EnsembleResult {
    MomentEstimates moments;
    SimHeatCurrents currents;
    std::size_t tripped = 0;
    std::size_t trajectories = 0;
};

namespace detail {

enum Rec : int { kX2, kP2, kXP, kXi1P, kXi2P, kPhiXP, kE, kJ1, kJ2, kSum, kRes, kResAlt, kNumRec };
using Record = std::array<double, kNumRec>;

inline Estimate summarize(const std::vector<Record>& recs, const std::vector<char>& ok, int field) {
    std::vector<double> v;
    v.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
        if (ok[i]) v.push_back(recs[i][field]);
    Estimate e;
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const double n = static_cast<double>(v.size());
    e.mean = pairwiseSum(v) / n;
    for (auto& x : v) x = (x - e.mean) * (x - e.mean);
    e.stdError = v.size() > 1 ? std::sqrt(pairwiseSum(v) / (n - 1.0) / n) : 0.0;
    return e;
}

}  // namespace detail

/// Independent trajectories with pre-synthesized bath noise; per-trajectory
/// time averages over [burnIn, tEnd) are combined across the ensemble with a
/// fixed reduction tree, so results do not depend on the thread count.
inline EnsembleResult runEnsemble(const IntegratorConfig& cfg, const ReducedParams& rp) {
    validate(cfg, rp);
    if (rp.qdw >= 1.0 && !cfg.allowUnstable)
        throw UnstableError("QDOmega >= 1: no steady state (pass allowUnstable to simulate anyway)");

    const std::size_t nSteps = static_cast<std::size_t>(std::llround(cfg.tEnd / cfg.dt));
    const std::size_t burn = static_cast<std::size_t>(std::llround(cfg.burnIn / cfg.dt));
    const std::size_t nAvg = nSteps - burn;
    const std::size_t nb = rp.baths.size();
    const double D = rp.noiseStrength();
    const double phiSd = std::sqrt(2.0 * D / cfg.dt);
    const double damping4 = 4.0 * rp.totalDamping();
    std::array<double, 2> gk{0.0, 0.0};
    std::vector<BathNoiseSpec> specs;
    for (std::size_t k = 0; k < nb; ++k) {
        gk[k] = rp.damping(k);
        BathNoiseSpec s;
        s.bath = rp.baths[k];
        s.damping = gk[k];
        s.totalDamping = rp.totalDamping();
        s.dt = cfg.dt;
        s.nSamples = nSteps + 1;
        validate(s);
        specs.push_back(s);
    }

    const std::size_t n = cfg.ensembleSize;
    std::vector<detail::Record> recs(n);
    std::vector<char> ok(n, 1);

    // Generators are stateful; give each worker slot its own set.
    const unsigned threads = cfg.threads ? cfg.threads : defaultThreadCount();
    const std::size_t slots = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    std::vector<std::vector<BathNoiseGenerator>> gens(slots);
    std::vector<std::array<std::vector<double>, 2>> bufs(slots);
    for (std::size_t s = 0; s < slots; ++s) {
        for (const auto& sp : specs) gens[s].emplace_back(sp, false);
        for (std::size_t k = 0; k < nb; ++k) bufs[s][k].assign(nSteps + 1, 0.0);
    }

    auto body = [&](std::size_t traj, unsigned slot) {
        auto& xi = bufs[slot];
        for (std::size_t k = 0; k < nb; ++k) gens[slot][k].generate(deriveSeed(cfg.baseSeed, traj, k), xi[k].data());
        const double* xi1 = xi[0].data();
        const double* xi2 = nb > 1 ? xi[1].data() : nullptr;
        GaussianRng phiRng(deriveSeed(cfg.baseSeed, traj, 7));

        State s = cfg.initial;
        double ax2 = 0, ap2 = 0, adiss = 0, axp = 0, a1 = 0, a2 = 0, aphi = 0;
        const bool heun = cfg.scheme == Scheme::StochasticHeun;
        bool tripped = false;
        for (std::size_t i = 0; i < nSteps; ++i) {
            const double f0 = xi1[i] + (xi2 ? xi2[i] : 0.0);
            const double f1 = xi1[i + 1] + (xi2 ? xi2[i + 1] : 0.0);
            const double phi = D > 0.0 ? phiSd * phiRng.normal() : 0.0;
            const StepTrace tr = stepTraced(s, {f0, f1, phi}, cfg.dt, damping4, cfg.scheme);
            const State& nx = tr.next;
            if (i >= burn) {
                ax2 += s.x * s.x;
                ap2 += s.p * s.p;
                axp += s.x * s.p;
                // Powers are products of the midpoint momentum with the forces
                // exactly as the scheme applied them.
                const double pm = 0.5 * (s.p + nx.p);
                adiss += pm * tr.pForce;
                a1 += (heun ? 0.5 * (xi1[i] + xi1[i + 1]) : xi1[i]) * pm;
                if (xi2) a2 += (heun ? 0.5 * (xi2[i] + xi2[i + 1]) : xi2[i]) * pm;
                aphi += phi * tr.xForce * pm;
            }
            s = nx;
            if (!(s.x * s.x + s.p * s.p <= cfg.overflowGuard)) {
                tripped = true;
                break;
            }
        }
        if (tripped) {
            ok[traj] = 0;
            return;
        }
        const double inv = 1.0 / static_cast<double>(nAvg);
        detail::Record r{};
        r[detail::kX2] = ax2 * inv;
        r[detail::kP2] = ap2 * inv;
        r[detail::kXP] = axp * inv;
        r[detail::kXi1P] = a1 * inv;
        r[detail::kXi2P] = a2 * inv;
        r[detail::kPhiXP] = aphi * inv;
        r[detail::kE] = 0.5 * (r[detail::kX2] + r[detail::kP2]);
        const double pm2 = adiss * inv;
        r[detail::kJ1] = -4.0 * gk[0] * pm2 + r[detail::kXi1P];
        r[detail::kJ2] = nb > 1 ? -4.0 * gk[1] * pm2 + r[detail::kXi2P] : 0.0;
        r[detail::kSum] = r[detail::kJ1] + r[detail::kJ2];
        r[detail::kRes] = r[detail::kSum] - r[detail::kPhiXP];
        r[detail::kResAlt] = r[detail::kSum] + r[detail::kPhiXP];
        recs[traj] = r;
    };
    parallelForWorkers(n, body, static_cast<unsigned>(slots));

    EnsembleResult out;
    out.trajectories = n;
    for (char c : ok) out.tripped += c ? 0 : 1;
    if (!cfg.allowUnstable && out.tripped * 100 > n) {
        std::ostringstream os;
        os << out.tripped << " of " << n << " trajectories tripped the overflow guard in a nominally stable run";
        throw NumericalError(os.str());
    }
    auto& m = out.moments;
    m.x2 = detail::summarize(recs, ok, detail::kX2);
    m.p2 = detail::summarize(recs, ok, detail::kP2);
    m.xp = detail::summarize(recs, ok, detail::kXP);
    m.xi1p = detail::summarize(recs, ok, detail::kXi1P);
    m.xi2p = detail::summarize(recs, ok, detail::kXi2P);
    m.phixp = detail::summarize(recs, ok, detail::kPhiXP);
    m.energy = detail::summarize(recs, ok, detail::kE);
    m.effectiveSamples = n - out.tripped;
    m.stepsPerTrajectory = nAvg;
    auto& c = out.currents;
    c.J1 = detail::summarize(recs, ok, detail::kJ1);
    c.J2 = detail::summarize(recs, ok, detail::kJ2);
    c.workPower = m.phixp;
    c.currentSum = detail::summarize(recs, ok, detail::kSum);
    c.balanceResidual = detail::summarize(recs, ok, detail::kRes);
    c.balanceResidualAlt = detail::summarize(recs, ok, detail::kResAlt);
    return out;
}

inline SimHeatCurrents estimateHeatCurrents(const IntegratorConfig& cfg, const ReducedParams& rp) {
    const double window = cfg.tEnd - cfg.burnIn;
    require(window >= 20.0 / rp.totalDamping(), "steady-state window shorter than 20/Gamma");
    return runEnsemble(cfg, rp).currents;
}

struct InstabilityReport {
    bool divergent = false;
    double rate = 0.0;           ///< fitted growth rate of the ensemble-mean energy
    double rateStdError = 0.0;   ///< spread across independent batches
    double referenceRate = 0.0;  ///< leading eigenvalue of the second-moment equations
    std::size_t batches = 0;
};

/// Leading real eigenvalue of the closed equations for (<x^2>, <xp>, <p^2>).
inline double momentGrowthRate(double Q, double qdw) {
    const double g = 1.0 / (4.0 * Q);
    const double D = qdw / Q;
    const double a[9] = {0, 2, 0, -1, -4 * g, 1, 2 * D, -2, -8 * g};
    gsl_matrix_const_view mv = gsl_matrix_const_view_array(a, 3, 3);
    gsl_matrix* m = gsl_matrix_alloc(3, 3);
    gsl_matrix_memcpy(m, &mv.matrix);
    gsl_vector_complex* ev = gsl_vector_complex_alloc(3);
    gsl_eigen_nonsymm_workspace* w = gsl_eigen_nonsymm_alloc(3);
    gsl_eigen_nonsymm(m, ev, w);
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) best = std::max(best, GSL_REAL(gsl_vector_complex_get(ev, i)));
    gsl_eigen_nonsymm_free(w);
    gsl_vector_complex_free(ev);
    gsl_matrix_free(m);
    return best;
}

/// Classifies stability by an exponential fit of the ensemble-mean energy
/// started far above the thermal level. The additive bath forces do not enter
/// the growth rate and are left out; only damping and frequency noise act.
/// The ensemble is split into batches whose fitted rates give the error bar;
/// the run is divergent when the mean rate exceeds three standard errors.
inline InstabilityReport detectInstability(const IntegratorConfig& cfg, const ReducedParams& rp,
                                           double horizon, std::size_t batches = 16) {
    validate(rp);
    require(horizon > 0.0, "horizon must be > 0");
    require(cfg.dt > 0.0 && cfg.dt <= 0.01 + 1e-15, "dt must lie in (0, 0.01/Omega]");
    require(batches >= 4 && cfg.ensembleSize >= batches * 4, "need at least 4 batches of 4 trajectories");
    const std::size_t nSteps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));
    const std::size_t every = std::max<std::size_t>(1, nSteps / 200);
    const std::size_t nPts = nSteps / every + 1;
    const double D = rp.noiseStrength();
    const double phiSd = std::sqrt(2.0 * D / cfg.dt);
    const double damping4 = 4.0 * rp.totalDamping();
    const std::size_t n = cfg.ensembleSize;

    // energy[traj][k] at t = k * every * dt
    std::vector<std::vector<double>> energy(n);
    parallelFor(
        n,
        [&](std::size_t traj) {
            GaussianRng rng(deriveSeed(cfg.baseSeed, traj, 11));
            State s{1.0, 0.0, 0.0};
            auto& e = energy[traj];
            e.assign(nPts, 0.0);
            e[0] = 0.5;
            for (std::size_t i = 1; i <= nSteps; ++i) {
                const double phi = D > 0.0 ? phiSd * rng.normal() : 0.0;
                s = stepUnchecked(s, {0.0, 0.0, phi}, cfg.dt, damping4, cfg.scheme);
                if (i % every == 0 && i / every < nPts) e[i / every] = 0.5 * (s.x * s.x + s.p * s.p);
            }
        },
        cfg.threads);

    const std::size_t per = n / batches;
    std::vector<double> rates(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = 0; k < nPts; ++k) {
            std::vector<double> col(per);
            for (std::size_t j = 0; j < per; ++j) col[j] = energy[b * per + j][k];
            const double mean = pairwiseSum(col) / static_cast<double>(per);
            const double t = static_cast<double>(k * every) * cfg.dt;
            const double y = std::log(mean);
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
        }
        const double m = static_cast<double>(nPts);
        rates[b] = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    InstabilityReport r;
    r.batches = batches;
    r.rate = pairwiseSum(rates) / static_cast<double>(batches);
    double v = 0;
    for (double x : rates) v += (x - r.rate) * (x - r.rate);
    r.rateStdError = std::sqrt(v / static_cast<double>(batches - 1) / static_cast<double>(batches));
    r.referenceRate = momentGrowthRate(rp.Q, rp.qdw);
    r.divergent = !std::isfinite(r.rate) || (r.rate > 0.0 && r.rate > 3.0 * r.rateStdError);
    return r;
}

}  // namespace fnbo
