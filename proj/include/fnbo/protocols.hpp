#pragma once

// Measurement protocols: ring-down characterization, slope regression for the
// virial factor, the two-bath quantum/classical test and linearized
// thermometry of a target bath. Everything is in reduced units.

#include <gsl/gsl_blas.h>
#include <gsl/gsl_cdf.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "noise.hpp"
#include "rng.hpp"
#include "sde.hpp"

namespace fnbo {

// ---------------------------------------------------------------------------
// Ring-down

struct Trajectory {
    std::vector<double> t;
    std::vector<double> x;
};

struct RingdownFit {
    double omegaDamped = 0.0;  ///< Omega~
    double damping = 0.0;      ///< Gamma; the amplitude decays as exp(-2 Gamma t)
    double amplitude = 0.0;
    double phase = 0.0;
    double omega = 0.0;  ///< sqrt(Omega~^2 + 4 Gamma^2)
    double omegaDampedError = 0.0;
    double dampingError = 0.0;
    double residualNorm = 0.0;
    std::size_t iterations = 0;
    double qualityFactor() const { return omega / (4.0 * damping); }
};

/// Free decay from (x, p) = (amplitude, 0) with damping Gamma and, optionally,
/// the thermal force of a bath with that damping. Samples every `every` steps.
inline Trajectory simulateRingdown(double damping, double amplitude, double duration, double dt,
                                   std::size_t every = 10,
                                   const std::optional<ReducedBath>& thermal = std::nullopt,
                                   std::uint64_t seed = 1) {
    require(damping >= 0.0 && amplitude != 0.0 && duration > 0.0 && dt > 0.0 && every >= 1,
            "invalid ring-down parameters");
    const std::size_t n = static_cast<std::size_t>(std::llround(duration / dt));
    std::vector<double> xi;
    if (thermal) {
        BathNoiseSpec s;
        s.bath = *thermal;
        s.damping = damping;
        s.dt = dt;
        s.nSamples = n + 1;
        require(dt * thermal->cutoff <= 0.5 + 1e-12, "dt * Omega_C must be <= 0.5");
        BathNoiseGenerator gen(s, false);
        xi.resize(n + 1);
        gen.generate(seed, xi.data());
    }
    Trajectory tr;
    State s{amplitude, 0.0, 0.0};
    tr.t.push_back(0.0);
    tr.x.push_back(amplitude);
    for (std::size_t i = 0; i < n; ++i) {
        const StepInput in{thermal ? xi[i] : 0.0, thermal ? xi[i + 1] : 0.0, 0.0};
        s = stepUnchecked(s, in, dt, 4.0 * damping, Scheme::StochasticHeun);
        if ((i + 1) % every == 0) {
            tr.t.push_back(dt * static_cast<double>(i + 1));
            tr.x.push_back(s.x);
        }
    }
    return tr;
}

namespace detail {

struct RingdownData {
    const std::vector<double>* t;
    const std::vector<double>* x;
};

// Parameters: A, Gamma, Omega~, theta.
inline int ringdownResidual(const gsl_vector* p, void* data, gsl_vector* f) {
    const auto* d = static_cast<const RingdownData*>(data);
    const double A = gsl_vector_get(p, 0), G = gsl_vector_get(p, 1), W = gsl_vector_get(p, 2),
                 th = gsl_vector_get(p, 3);
    for (std::size_t i = 0; i < d->t->size(); ++i) {
        const double t = (*d->t)[i];
        gsl_vector_set(f, i, A * std::exp(-2.0 * G * t) * std::cos(W * t + th) - (*d->x)[i]);
    }
    return GSL_SUCCESS;
}

inline int ringdownJacobian(const gsl_vector* p, void* data, gsl_matrix* J) {
    const auto* d = static_cast<const RingdownData*>(data);
    const double A = gsl_vector_get(p, 0), G = gsl_vector_get(p, 1), W = gsl_vector_get(p, 2),
                 th = gsl_vector_get(p, 3);
    for (std::size_t i = 0; i < d->t->size(); ++i) {
        const double t = (*d->t)[i];
        const double e = std::exp(-2.0 * G * t);
        const double c = std::cos(W * t + th), s = std::sin(W * t + th);
        gsl_matrix_set(J, i, 0, e * c);
        gsl_matrix_set(J, i, 1, -2.0 * t * A * e * c);
        gsl_matrix_set(J, i, 2, -t * A * e * s);
        gsl_matrix_set(J, i, 3, -A * e * s);
    }
    return GSL_SUCCESS;
}

}  // namespace detail

/// Nonlinear least squares of A exp(-2 Gamma t) cos(Omega~ t + theta).
/// Starting values: Omega~ from zero-crossing spacing, Gamma from a linear fit
/// of the log envelope, A and theta from a linear fit at those values.
inline RingdownFit ringdown(const Trajectory& tr) {
    const auto& t = tr.t;
    const auto& x = tr.x;
    require(t.size() == x.size() && t.size() >= 20, "ring-down needs at least 20 samples");
    for (std::size_t i = 0; i < t.size(); ++i)
        require(std::isfinite(t[i]) && std::isfinite(x[i]), "ring-down samples must be finite");
    double xmax = 0.0;
    for (double v : x) xmax = std::max(xmax, std::abs(v));
    if (!(xmax > 0.0)) throw NumericalError("flat ring-down trace: nothing to fit");
    double mean = 0.0, var = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double v : x) var += (v - mean) * (v - mean);
    if (var <= 1e-24 * xmax * xmax * static_cast<double>(x.size()))
        throw NumericalError("flat ring-down trace: nothing to fit");

    std::vector<double> crossings;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if ((x[i - 1] < 0.0) != (x[i] < 0.0)) {
            const double f = x[i - 1] / (x[i - 1] - x[i]);
            crossings.push_back(t[i - 1] + f * (t[i] - t[i - 1]));
        }
    }
    if (crossings.size() < 2) throw ConfigError("no oscillation visible: overdamped or flat input");
    if (crossings.size() < 20) throw ConfigError("fewer than 10 visible oscillations");
    const double w0 = kPi * static_cast<double>(crossings.size() - 1) / (crossings.back() - crossings.front());

    // Envelope peaks between successive crossings while above 10% of the maximum.
    std::vector<double> pt, pl;
    std::size_t j = 0;
    for (std::size_t c = 0; c + 1 < crossings.size(); ++c) {
        double best = 0.0, bt = 0.0;
        while (j < t.size() && t[j] < crossings[c]) ++j;
        std::size_t k = j;
        while (k < t.size() && t[k] < crossings[c + 1]) {
            if (std::abs(x[k]) > best) {
                best = std::abs(x[k]);
                bt = t[k];
            }
            ++k;
        }
        if (best < 0.1 * xmax) break;
        pt.push_back(bt);
        pl.push_back(std::log(best));
    }
    double g0 = 1e-6;
    if (pt.size() >= 3) {
        double c0, c1, c00, c01, c11, ss;
        gsl_fit_linear(pt.data(), 1, pl.data(), 1, pt.size(), &c0, &c1, &c00, &c01, &c11, &ss);
        if (c1 < 0.0) g0 = -0.5 * c1;
    }
    // Linear fit for A cos(theta), -A sin(theta).
    double scc = 0, sss = 0, scs = 0, syc = 0, sys = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = std::exp(-2.0 * g0 * t[i]);
        const double c = e * std::cos(w0 * t[i]), s = e * std::sin(w0 * t[i]);
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += x[i] * c;
        sys += x[i] * s;
    }
    const double det = scc * sss - scs * scs;
    double ac = x.front(), as = 0.0;
    if (det > 0.0) {
        ac = (syc * sss - sys * scs) / det;
        as = (sys * scc - syc * scs) / det;
    }
    const double A0 = std::hypot(ac, as);
    const double th0 = std::atan2(-as, ac);

    detail::GslHandlerGuard guard;
    detail::RingdownData data{&t, &x};
    gsl_multifit_nlinear_fdf fdf;
    fdf.f = detail::ringdownResidual;
    fdf.df = detail::ringdownJacobian;
    fdf.fvv = nullptr;
    fdf.n = t.size();
    fdf.p = 4;
    fdf.params = &data;
    gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
    params.trs = gsl_multifit_nlinear_trs_lm;
    gsl_multifit_nlinear_workspace* w =
        gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, t.size(), 4);
    double p0[4] = {A0, g0, w0, th0};
    gsl_vector_view pv = gsl_vector_view_array(p0, 4);
    gsl_multifit_nlinear_init(&pv.vector, &fdf, w);
    int info = 0;
    const int status = gsl_multifit_nlinear_driver(500, 1e-12, 1e-12, 1e-12, nullptr, nullptr, &info, w);
    RingdownFit fit;
    const gsl_vector* p = gsl_multifit_nlinear_position(w);
    fit.amplitude = gsl_vector_get(p, 0);
    fit.damping = gsl_vector_get(p, 1);
    fit.omegaDamped = std::abs(gsl_vector_get(p, 2));
    fit.phase = gsl_vector_get(p, 3);
    fit.residualNorm = gsl_blas_dnrm2(gsl_multifit_nlinear_residual(w));
    fit.iterations = gsl_multifit_nlinear_niter(w);
    // Thermal motion is itself a damped oscillation, so residuals share the
    // model's correlation shape: Cov(t, t') = s2 v(min) e^(-2 Gamma d)
    // (cos W d + (2 Gamma / W) sin W d), d = |t - t'|, with the variance
    // v(t) = 1 - e^(-4 Gamma t) building up from the deterministic start. The
    // covariance is the sandwich A^-1 J^T Sigma J A^-1, with J^T Sigma J
    // accumulated by forward and backward recurrences in O(n).
    gsl_matrix* cov = gsl_matrix_alloc(4, 4);
    const gsl_matrix* jac = gsl_multifit_nlinear_jac(w);
    const gsl_vector* res = gsl_multifit_nlinear_residual(w);
    gsl_multifit_nlinear_covar(jac, 0.0, cov);
    {
        using cplx = std::complex<double>;
        const std::size_t n = t.size();
        const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
        const double g = std::abs(gsl_vector_get(p, 1));
        const double wd = std::abs(gsl_vector_get(p, 2));
        const cplx a = std::exp(cplx(-2.0 * g * h, wd * h));
        const cplx c(1.0, -2.0 * g / wd);
        std::vector<double> v(n);
        double sv = 0.0, sr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = -std::expm1(-4.0 * g * (t[i] - t.front()));
            sv += v[i];
            sr += gsl_vector_get(res, i) * gsl_vector_get(res, i);
        }
        const double s2 = sv > 0.0 ? sr / sv : 0.0;
        double M[4][4] = {};
        std::vector<cplx> back(n);
        for (int l = 0; l < 4; ++l) {
            // back[i] = sum_{j >= i} a^(j-i) J_jl; fwd = sum_{j < i} a^(i-j) v_j J_jl
            cplx acc = 0.0;
            for (std::size_t i = n; i-- > 0;) back[i] = acc = gsl_matrix_get(jac, i, l) + a * acc;
            cplx fwd = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double jl = gsl_matrix_get(jac, i, l);
                const double row = v[i] * (c * back[i]).real() - v[i] * (c.real() - 1.0) * jl + (c * fwd).real();
                for (int k = 0; k < 4; ++k) M[k][l] += gsl_matrix_get(jac, i, k) * row;
                fwd = a * (fwd + v[i] * jl);
            }
        }
        double C[4][4];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) C[i][j] = gsl_matrix_get(cov, i, j);
        auto sandwich = [&](int k) {
            double r = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) r += C[k][i] * 0.5 * (M[i][j] + M[j][i]) * C[j][k];
            return s2 * r;
        };
        fit.dampingError = std::sqrt(std::max(0.0, sandwich(1)));
        fit.omegaDampedError = std::sqrt(std::max(0.0, sandwich(2)));
    }
    gsl_matrix_free(cov);
    gsl_multifit_nlinear_free(w);

    if (status != GSL_SUCCESS || !std::isfinite(fit.damping) || !std::isfinite(fit.omegaDamped))
        throw NumericalError(std::string("ring-down fit did not converge: ") + gsl_strerror(status));
    if (fit.amplitude < 0.0) {
        fit.amplitude = -fit.amplitude;
        fit.phase += kPi;
    }
    fit.phase = std::remainder(fit.phase, 2.0 * kPi);
    if (!(fit.damping > 0.0)) throw NumericalError("ring-down fit gave non-positive damping");
    fit.omega = std::sqrt(fit.omegaDamped * fit.omegaDamped + 4.0 * fit.damping * fit.damping);
    if (fit.qualityFactor() < 0.5) throw ConfigError("overdamped input (Q < 1/2)");
    return fit;
}

// ---------------------------------------------------------------------------
// Slope regression

struct SlopePoint {
    double qdw = 0.0;       ///< Q D Omega of the measurement
    double value = 0.0;     ///< measured E, or J_1 for the current route
    double stdError = 0.0;  ///< 0 for exact data
};

enum class SlopeRoute { Energy, Current };

struct SlopeContext {
    SlopeRoute route = SlopeRoute::Energy;
    double E0 = 0.0;
    double E0Error = 0.0;
    double J10 = 0.0;       ///< current route: J_1 at D = 0
    double J10Error = 0.0;
    double damping1 = 0.0;  ///< current route: Gamma_1
};

struct SlopeEstimate {
    double F = 0.0;  ///< fitted slope
    double FError = 0.0;
    double ciLow = 0.0, ciHigh = 0.0;  ///< 95%
    double intercept = 0.0;
    double interceptError = 0.0;
    double chi2 = 0.0;
    std::vector<double> W;
    std::vector<double> y;
};

/// Weighted straight-line fit of y = E/E0 (or 1 - (J1 - J1_0)/(4 Gamma_1 E0))
/// against W = qdw/(1 - qdw). The slope estimates F, the intercept should be 1.
inline SlopeEstimate slopeF(const std::vector<SlopePoint>& pts, const SlopeContext& ctx) {
    require(ctx.E0 > 0.0, "E0 must be > 0");
    if (ctx.route == SlopeRoute::Current) require(ctx.damping1 > 0.0, "current route needs Gamma_1 > 0");
    std::vector<double> W, y, w;
    bool weighted = true;
    for (const auto& p : pts) {
        const auto m = magnification(p.qdw);
        if (!m.stable) throw UnstableError("slope point with QDOmega >= 1");
        if (!(p.stdError > 0.0)) weighted = false;
    }
    std::vector<double> distinct;
    for (const auto& p : pts) distinct.push_back(p.qdw);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    require(distinct.size() >= 3, "slope regression needs at least 3 distinct D values");

    SlopeEstimate est;
    for (const auto& p : pts) {
        const double Wp = magnification(p.qdw).value;
        double yp, sp;
        if (ctx.route == SlopeRoute::Energy) {
            yp = p.value / ctx.E0;
            sp = p.stdError / ctx.E0;
        } else {
            const double s = 4.0 * ctx.damping1 * ctx.E0;
            yp = 1.0 - (p.value - ctx.J10) / s;
            sp = p.stdError / s;
        }
        W.push_back(Wp);
        y.push_back(yp);
        w.push_back(weighted ? 1.0 / (sp * sp) : 1.0);
    }
    double c0, c1, c00, c01, c11, chi2;
    int st;
    if (weighted)
        st = gsl_fit_wlinear(W.data(), 1, w.data(), 1, y.data(), 1, W.size(), &c0, &c1, &c00, &c01, &c11, &chi2);
    else
        st = gsl_fit_linear(W.data(), 1, y.data(), 1, W.size(), &c0, &c1, &c00, &c01, &c11, &chi2);
    if (st != GSL_SUCCESS || !std::isfinite(c1)) throw NumericalError("degenerate slope regression");
    est.F = c1;
    est.intercept = c0;
    est.chi2 = chi2;
    // E0 enters every point as a common scale; its error moves the slope in
    // proportion. J1_0 only shifts the intercept.
    const double relE0 = ctx.E0Error / ctx.E0;
    est.FError = std::sqrt(c11 + (est.F * relE0) * (est.F * relE0));
    double interceptVar = c00 + (c0 * relE0) * (c0 * relE0);
    if (ctx.route == SlopeRoute::Current) {
        const double s = ctx.J10Error / (4.0 * ctx.damping1 * ctx.E0);
        interceptVar += s * s;
    }
    est.interceptError = std::sqrt(interceptVar);
    const double dof = static_cast<double>(W.size()) - 2.0;
    const double z = weighted ? 1.959963984540054 : (dof > 0 ? gsl_cdf_tdist_Pinv(0.975, dof) : 1.959963984540054);
    est.ciLow = est.F - z * est.FError;
    est.ciHigh = est.F + z * est.FError;
    est.W = std::move(W);
    est.y = std::move(y);
    return est;
}

// ---------------------------------------------------------------------------
// Two-bath protocol

enum class MeasurementSource { Analytic, MonteCarlo };

struct MonteCarloSettings {
    double dt = 1e-3;
    double burnIn = 0.0;  ///< 0 selects 10/Gamma
    double window = 0.0;  ///< 0 selects 40/Gamma
    std::size_t ensembleSize = 2000;
    unsigned threads = 0;
};

struct ProtocolConfig {
    double Q = 10.0;
    double gamma = 0.1;  ///< ancilla share; >= 1 decouples the target
    double t1 = 0.25;    ///< ancilla temperature (reduced); the ancilla is quantum
    double t2 = 0.25;    ///< target temperature (reduced), assumed known approximately
    double cutoff = 1e3;
    BathStatistics target = BathStatistics::Quantum;  ///< truth used to generate data
    std::vector<double> magnifications = {0.2, 0.5, 1.0, 2.0, 5.0};
    std::size_t repetitions = 10;
    MeasurementSource source = MeasurementSource::Analytic;
    double relativeNoise = 1e-2;  ///< analytic source: per-measurement relative noise
    MonteCarloSettings mc;
    std::uint64_t seed = 1;
    double zThreshold = 3.0;
    double ringdownDt = 0.005;
};

struct ProtocolReport {
    RingdownFit ancillaFit;  ///< step (i): ancilla only
    RingdownFit fullFit;     ///< step (ii): both baths
    double omega = 0.0, damping1 = 0.0, damping2 = 0.0, Q = 0.0, gamma = 0.0;
    double E0 = 0.0, E0Error = 0.0, J10 = 0.0, J10Error = 0.0;
    std::vector<SlopePoint> energyPoints, currentPoints;
    SlopeEstimate energySlope, currentSlope;
    double FQuantum = 0.0, FClassical = 0.0;
    double zQuantum = 0.0, zClassical = 0.0;
    double logLikelihoodMargin = 0.0;  ///< (zC^2 - zQ^2)/2, > 0 favours quantum
    std::string classification;        ///< quantum | classical | indistinguishable
};

namespace detail {

inline ReducedParams protocolParams(double Q, double gamma, double t1, double t2, double cutoff,
                                    BathStatistics target, double qdw) {
    if (gamma >= 1.0 - 1e-9) return singleBath(Q, t1, cutoff, BathStatistics::Quantum, qdw);
    return twoBath(Q, gamma, t1, t2, cutoff, BathStatistics::Quantum, target, qdw);
}

struct Measured {
    double E = 0.0, EError = 0.0, J1 = 0.0, J1Error = 0.0;
};

inline Measured measure(const ProtocolConfig& cfg, const ReducedParams& rp, std::uint64_t stream) {
    Measured m;
    const std::size_t reps = std::max<std::size_t>(1, cfg.repetitions);
    if (cfg.source == MeasurementSource::Analytic) {
        const auto hc = heatCurrents(rp);
        const auto s = drivenMoments(rp);
        GaussianRng rng(deriveSeed(cfg.seed, stream, 101));
        double se = 0, sj = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            se += s.energy * (1.0 + cfg.relativeNoise * rng.normal());
            sj += hc.J[0] + std::abs(hc.J[0]) * cfg.relativeNoise * rng.normal();
        }
        m.E = se / static_cast<double>(reps);
        m.J1 = sj / static_cast<double>(reps);
        m.EError = cfg.relativeNoise * s.energy / std::sqrt(static_cast<double>(reps));
        m.J1Error = cfg.relativeNoise * std::abs(hc.J[0]) / std::sqrt(static_cast<double>(reps));
        return m;
    }
    IntegratorConfig ic;
    ic.dt = cfg.mc.dt;
    const double g = rp.totalDamping();
    ic.burnIn = cfg.mc.burnIn > 0.0 ? cfg.mc.burnIn : 10.0 / g;
    ic.tEnd = ic.burnIn + (cfg.mc.window > 0.0 ? cfg.mc.window : 40.0 / g);
    ic.ensembleSize = cfg.mc.ensembleSize;
    ic.threads = cfg.mc.threads;
    double se = 0, ve = 0, sj = 0, vj = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        ic.baseSeed = deriveSeed(cfg.seed, stream, r);
        const auto res = runEnsemble(ic, rp);
        se += res.moments.energy.mean;
        ve += res.moments.energy.stdError * res.moments.energy.stdError;
        sj += res.currents.J1.mean;
        vj += res.currents.J1.stdError * res.currents.J1.stdError;
    }
    const double n = static_cast<double>(reps);
    m.E = se / n;
    m.EError = std::sqrt(ve) / n;
    m.J1 = sj / n;
    m.J1Error = std::sqrt(vj) / n;
    return m;
}

}  // namespace detail

/// Steps (i)-(iv): ring-downs for Omega, Gamma_1 and Gamma_2, a D = 0
/// measurement of E0 and J1_0, and a sweep in D whose slope is compared with
/// the quantum and classical predictions for the target bath.
inline ProtocolReport twoBathProtocol(const ProtocolConfig& cfg) {
    require(cfg.Q > 0.5, "protocol needs an underdamped oscillator (Q > 1/2)");
    require(cfg.gamma > 0.0, "ancilla share gamma must be > 0");
    require(cfg.magnifications.size() >= 3, "need at least 3 magnification values");
    require(cfg.zThreshold > 0.0, "z threshold must be > 0");
    const double gamma = std::min(cfg.gamma, 1.0);
    const double G = 1.0 / (4.0 * cfg.Q);
    const double G1 = gamma * G;

    ProtocolReport rep;
    auto ringTime = [](double g) { return std::min(std::max(1.5 / g, 40.0 * kPi), 2e4); };
    rep.ancillaFit = ringdown(simulateRingdown(G1, 1.0, ringTime(G1), cfg.ringdownDt));
    rep.fullFit = ringdown(simulateRingdown(G, 1.0, ringTime(G), cfg.ringdownDt));
    rep.omega = rep.ancillaFit.omega;
    rep.damping1 = rep.ancillaFit.damping;
    rep.damping2 = std::max(0.0, rep.fullFit.damping - rep.damping1);
    rep.Q = rep.omega / (4.0 * rep.fullFit.damping);
    rep.gamma = std::min(1.0, rep.damping1 / rep.fullFit.damping);

    // Measurements run on the true system.
    const auto truth0 = detail::protocolParams(cfg.Q, gamma, cfg.t1, cfg.t2, cfg.cutoff, cfg.target, 0.0);
    const auto m0 = detail::measure(cfg, truth0, 0);
    rep.E0 = m0.E;
    rep.E0Error = m0.EError;
    rep.J10 = m0.J1;
    rep.J10Error = m0.J1Error;
    for (std::size_t i = 0; i < cfg.magnifications.size(); ++i) {
        const double qdw = qdwForMagnification(cfg.magnifications[i]);
        const auto rp = detail::protocolParams(cfg.Q, gamma, cfg.t1, cfg.t2, cfg.cutoff, cfg.target, qdw);
        const auto m = detail::measure(cfg, rp, i + 1);
        rep.energyPoints.push_back({qdw, m.E, m.EError});
        rep.currentPoints.push_back({qdw, m.J1, m.J1Error});
    }
    SlopeContext ce{SlopeRoute::Energy, rep.E0, rep.E0Error, 0.0, 0.0, 0.0};
    rep.energySlope = slopeF(rep.energyPoints, ce);
    SlopeContext cc{SlopeRoute::Current, rep.E0, rep.E0Error, rep.J10, rep.J10Error, rep.damping1};
    rep.currentSlope = slopeF(rep.currentPoints, cc);

    // Hypotheses use the characterized Q and gamma.
    auto hyp = [&](BathStatistics s) {
        return meanKineticPotential(detail::protocolParams(rep.Q, rep.gamma, cfg.t1, cfg.t2, cfg.cutoff, s, 0.0))
            .factorF;
    };
    rep.FQuantum = hyp(BathStatistics::Quantum);
    rep.FClassical = hyp(BathStatistics::ClassicalHighT);
    const double sigma = std::max(rep.energySlope.FError, 1e-5);
    rep.zQuantum = std::abs(rep.energySlope.F - rep.FQuantum) / sigma;
    rep.zClassical = std::abs(rep.energySlope.F - rep.FClassical) / sigma;
    rep.logLikelihoodMargin = 0.5 * (rep.zClassical * rep.zClassical - rep.zQuantum * rep.zQuantum);
    const double th = cfg.zThreshold;
    if (rep.zClassical > th && rep.zQuantum <= th)
        rep.classification = "quantum";
    else if (rep.zQuantum > th && rep.zClassical <= th)
        rep.classification = "classical";
    else
        rep.classification = "indistinguishable";
    return rep;
}

// ---------------------------------------------------------------------------
// Thermometry

/// Single-bath calibration with the ancilla alone, tuned to the two-bath Q.
struct ThermometryCalibration {
    double Q = 10.0;
    double t1 = 1.5;
    double gamma = 0.3;
    double cutoff = 1e3;
    double E0 = 0.0;    ///< E0 of the single bath at (T1, Q)
    double F = 0.0;     ///< F of the single bath at (T1, Q)
    double dRdT = 0.0;  ///< dR/dT~ of the single bath at (T1, Q)
    double E0Error = 0.0, FError = 0.0, dRdTError = 0.0;
};

inline ThermometryCalibration calibrateThermometry(double Q, double gamma, double t1, double cutoff = 1e3) {
    require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0,1)");
    require(t1 > 0.0, "ancilla temperature must be > 0");
    ThermometryCalibration c;
    c.Q = Q;
    c.t1 = t1;
    c.gamma = gamma;
    c.cutoff = cutoff;
    const auto eb = meanKineticPotential(singleBath(Q, t1, cutoff));
    c.E0 = eb.E0;
    c.E0Error = eb.errE0;
    c.F = eb.factorF;
    c.FError = eb.errF;
    c.dRdT = ratioDerivativeSeparable(Q, singleBath(Q, t1, cutoff).baths[0], kCoreRelTol, &c.dRdTError);
    return c;
}

/// Two-bath readings at a fixed magnification W. E0 and J1_0 are the same
/// configuration with the frequency noise off.
struct ThermometryMeasurement {
    double W = 10.0;
    double damping1 = 0.0;  ///< Gamma_1
    std::optional<double> E, E0, J1, J10;
    double EError = 0.0, E0Error = 0.0, J1Error = 0.0, J10Error = 0.0;
};

struct ThermometryResult {
    double dTEnergy = std::numeric_limits<double>::quiet_NaN();  ///< reduced units
    double dTEnergyError = 0.0;
    double dTCurrent = std::numeric_limits<double>::quiet_NaN();
    double dTCurrentError = 0.0;
    /// Inversions that use only E (J1) and the single-bath E0 with the
    /// W >> 1 approximation; biased at finite W.
    double dTEnergyLeadingOrder = std::numeric_limits<double>::quiet_NaN();
    double dTCurrentLeadingOrder = std::numeric_limits<double>::quiet_NaN();
    double FMeasuredEnergy = std::numeric_limits<double>::quiet_NaN();
    double FMeasuredCurrent = std::numeric_limits<double>::quiet_NaN();
    ThermometryCalibration calibration;
    double W = 0.0;
    bool valid = true;  ///< false when |dT|/T1 > 0.2
    bool routesAgree = true;
};

/// Forward model: the full two-bath quadrature at T2 = T1 + dT.
inline ThermometryMeasurement thermometryForward(const ThermometryCalibration& c, double dT, double W,
                                                 BathStatistics target = BathStatistics::Quantum) {
    const double qdw = qdwForMagnification(W);
    const auto rp = twoBath(c.Q, c.gamma, c.t1, c.t1 + dT, c.cutoff, BathStatistics::Quantum, target, qdw);
    auto rp0 = rp;
    rp0.qdw = 0.0;
    const auto h = heatCurrents(rp);
    const auto h0 = heatCurrents(rp0);
    const auto s = drivenMoments(rp);
    ThermometryMeasurement m;
    m.W = W;
    m.damping1 = rp.damping(0);
    m.E = s.energy;
    m.E0 = s.energies.E0;
    m.J1 = h.J[0];
    m.J10 = h0.J0[0];
    return m;
}

/// Linearized inversion of F(T1, T1 + dT) = F1 [1 - F1 (1 - gamma) R1' dT / 2].
/// The measured F comes from E/E0 - 1 = W F (energy route) or from
/// J1_0 - J1 = 4 Gamma_1 E0 W F (current route).
inline ThermometryResult thermometry(const ThermometryMeasurement& m, const ThermometryCalibration& c) {
    require(m.W > 0.0, "magnification must be > 0");
    require(c.F > 0.0 && c.E0 > 0.0, "calibration incomplete");
    const double k = 0.5 * c.F * (1.0 - c.gamma) * c.dRdT;  // dF/F1 per unit dT, negated
    require(k != 0.0, "zero temperature sensitivity: derivative of R vanishes");
    ThermometryResult r;
    r.calibration = c;
    r.W = m.W;
    auto invert = [&](double Fm, double FmErr, double& dT, double& err) {
        dT = (1.0 - Fm / c.F) / k;
        const double dFm = FmErr / (c.F * k);
        const double dF1 = Fm / (c.F * c.F * k) * c.FError;
        const double dK = std::abs(dT) * (c.dRdTError / std::abs(c.dRdT) + c.FError / c.F);
        err = std::sqrt(dFm * dFm + dF1 * dF1 + dK * dK);
    };
    bool any = false;
    if (m.E && m.E0) {
        r.FMeasuredEnergy = (*m.E / *m.E0 - 1.0) / m.W;
        const double relE = m.EError / *m.E, relE0 = m.E0Error / *m.E0;
        const double err = (*m.E / *m.E0) * std::hypot(relE, relE0) / m.W;
        invert(r.FMeasuredEnergy, err, r.dTEnergy, r.dTEnergyError);
        any = true;
    }
    if (m.E) r.dTEnergyLeadingOrder = (1.0 - *m.E / (c.E0 * m.W * c.F)) / k;
    if (m.J1 && m.J10 && m.E0) {
        require(m.damping1 > 0.0, "current route needs Gamma_1 > 0");
        const double s = 4.0 * m.damping1 * *m.E0 * m.W;
        r.FMeasuredCurrent = (*m.J10 - *m.J1) / s;
        const double err = std::hypot(std::hypot(m.J1Error, m.J10Error) / s,
                                      r.FMeasuredCurrent * m.E0Error / *m.E0);
        invert(r.FMeasuredCurrent, err, r.dTCurrent, r.dTCurrentError);
        any = true;
    }
    if (m.J1) {
        require(m.damping1 > 0.0, "current route needs Gamma_1 > 0");
        r.dTCurrentLeadingOrder = (*m.J1 / (4.0 * m.damping1 * c.E0 * m.W * c.F) + 1.0) / k;
    }
    require(any || m.E || m.J1, "thermometry needs an energy or current reading");
    for (double d : {r.dTEnergy, r.dTCurrent})
        if (std::isfinite(d) && std::abs(d) / c.t1 > 0.2) r.valid = false;
    if (std::isfinite(r.dTEnergy) && std::isfinite(r.dTCurrent)) {
        const double comb = std::hypot(r.dTEnergyError, r.dTCurrentError);
        r.routesAgree = std::abs(r.dTEnergy - r.dTCurrent) <= std::max(3.0 * comb, 1e-9 * std::abs(r.dTEnergy));
    }
    return r;
}

}  // namespace fnbo
