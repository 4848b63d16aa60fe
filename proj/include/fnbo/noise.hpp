#pragma once

// Bath and frequency noise.
//
// Convention: C(tau) = <xi(t) xi(t+tau)> (symmetrized) and
// C(tau) = int d omega/(2 pi) S(omega) exp(i omega tau), so S is two-sided and
// C(0) = int S d omega / (2 pi). In reduced units the bath spectrum is
//
//   S_k(omega) = 4 Gamma_k |omega| f(omega/u_C) coth(|omega|/T)   quantum
//   S_k(omega) = 4 Gamma_k T f(omega/u_C)                          classical
//
// which gives C_k(tau) = int_0^inf d omega (4 Gamma_k omega/pi) f coth cos(omega tau).
// The quantum factor omega coth is the fluctuation-dissipation partner of the
// Ohmic dissipative spectrum 4 Gamma omega f; the classical one is its
// high-temperature limit.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "rng.hpp"

namespace fnbo {

struct SampledProcess {
    double dt = 0.0;
    std::vector<double> samples;
    std::string generatorId;
    std::uint64_t seed = 0;
};

struct BathNoiseSpec {
    ReducedBath bath;
    double damping = 0.025;       ///< Gamma_k
    double totalDamping = 0.0;    ///< Gamma of the whole system; 0 means damping
    double dt = 1e-3;
    std::size_t nSamples = 0;
    std::uint64_t seed = 0;
};

/// Two-sided power spectral density of the bath force at angular frequency omega.
inline double bathSpectrum(double omega, const ReducedBath& b, double damping) {
    const double u = std::abs(omega);
    return 4.0 * damping * detail::cutoffFactor(u, b.cutoff) * uThermal(u, b);
}

/// Exponentially correlated classical autocovariance 4 Gamma T u_C exp(-u_C tau).
inline double classicalAutocovariance(double tau, const ReducedBath& b, double damping) {
    const double T = 0.5 * b.temperature;
    return 4.0 * damping * T * b.cutoff * std::exp(-b.cutoff * std::abs(tau));
}

/// Zero-temperature quantum autocovariance for tau != 0:
/// (4 Gamma/pi) u_C^2 g(u_C tau), g(a) = -[exp(-a) Ei(a) - exp(a) E1(a)]/2.
inline double zeroTemperatureAutocovariance(double tau, double cutoff, double damping) {
    const double a = cutoff * std::abs(tau);
    require(a > 0.0, "zero-temperature autocovariance diverges at tau = 0");
    double g;
    if (a > 40.0) {
        // Asymptotic series; the direct form cancels catastrophically.
        const double ia2 = 1.0 / (a * a);
        g = -ia2 * (1.0 + ia2 * (6.0 + ia2 * (120.0 + ia2 * 5040.0)));
    } else {
        const double e1 = -std::expint(-a);
        g = -0.5 * (std::exp(-a) * std::expint(a) - std::exp(a) * e1);
    }
    return 4.0 * damping / kPi * cutoff * cutoff * g;
}

inline void validate(const BathNoiseSpec& s) {
    validate(s.bath);
    require(s.damping > 0.0, "bath damping must be > 0");
    require(s.dt > 0.0 && std::isfinite(s.dt), "dt must be > 0");
    require(s.dt * s.bath.cutoff <= 0.5 + 1e-12, "dt * Omega_C must be <= 0.5 to resolve the cutoff");
    const double g = s.totalDamping > 0.0 ? s.totalDamping : s.damping;
    require(static_cast<double>(s.nSamples) * s.dt >= 50.0 / g - 1e-9,
            "nSamples * dt must cover at least 50/Gamma");
}

/// Frequency-domain coloring of white Gaussian deviates on a circulant grid.
/// The grid length is padded to an FFT-friendly size and the output truncated,
/// which leaves the stationary covariance unchanged.
class BathNoiseGenerator {
public:
    explicit BathNoiseGenerator(const BathNoiseSpec& spec, bool check = true)
        : spec_(spec), n_(spec.nSamples), len_(fftFriendlySize(spec.nSamples)) {
        if (check) validate(spec);
        if (len_ % 2 == 1) len_ = fftFriendlySize(len_ + 1);
        const std::size_t half = len_ / 2 + 1;
        amp_.resize(half);
        minSpectrum_ = INFINITY;
        const double dOmega = 2.0 * kPi / (static_cast<double>(len_) * spec.dt);
        for (std::size_t j = 0; j < half; ++j) {
            const double s = bathSpectrum(dOmega * static_cast<double>(j), spec.bath, spec.damping);
            minSpectrum_ = std::min(minSpectrum_, s);
            if (!(s >= 0.0) || !std::isfinite(s)) {
                std::ostringstream os;
                os << "circulant embedding not positive semidefinite: eigenvalue " << s / spec.dt
                   << " at bin " << j;
                throw NumericalError(os.str());
            }
            amp_[j] = std::sqrt(s / (static_cast<double>(len_) * spec.dt));
        }
        spectrum_.resize(half);
        buffer_.resize(len_);
    }

    /// Smallest eigenvalue of the circulant covariance (S_min / dt).
    double minEigenvalue() const { return minSpectrum_ / spec_.dt; }
    std::size_t size() const { return n_; }
    std::size_t gridLength() const { return len_; }

    /// Writes size() samples to out.
    void generate(std::uint64_t seed, double* out) {
        GaussianRng rng(seed);
        const std::size_t half = len_ / 2 + 1;
        const double r2 = std::sqrt(0.5);
        for (std::size_t j = 0; j < half; ++j) {
            if (j == 0 || 2 * j == len_) {
                spectrum_[j] = {amp_[j] * rng.normal(), 0.0};
            } else {
                const double a = rng.normal(), b = rng.normal();
                spectrum_[j] = {amp_[j] * r2 * a, amp_[j] * r2 * b};
            }
        }
        inverseRealFft(spectrum_, buffer_);
        std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n_), out);
    }

private:
    BathNoiseSpec spec_;
    std::size_t n_, len_;
    std::vector<double> amp_;
    double minSpectrum_;
    FftwVector<std::complex<double>> spectrum_;
    FftwVector<double> buffer_;
};

inline SampledProcess synthesizeBathNoise(const BathNoiseSpec& spec) {
    BathNoiseGenerator gen(spec);
    SampledProcess p;
    p.dt = spec.dt;
    p.seed = spec.seed;
    p.generatorId = std::string("spectral-") + toString(spec.bath.statistics);
    p.samples.resize(spec.nSamples);
    gen.generate(spec.seed, p.samples.data());
    return p;
}

/// White frequency noise: i.i.d. N(0, 2D/dt) per step.
inline SampledProcess sampleMultiplicativeNoise(double D, double dt, std::size_t n,
                                                std::uint64_t seed) {
    require(D >= 0.0 && std::isfinite(D), "D must be >= 0");
    require(dt > 0.0, "dt must be > 0");
    SampledProcess p;
    p.dt = dt;
    p.seed = seed;
    p.generatorId = "white-multiplicative";
    p.samples.assign(n, 0.0);
    if (D == 0.0) return p;
    const double sd = std::sqrt(2.0 * D / dt);
    GaussianRng rng(seed);
    for (auto& v : p.samples) v = sd * rng.normal();
    return p;
}

struct PsdEstimate {
    std::vector<double> omega;
    std::vector<double> value;     ///< two-sided density, white noise gives sigma^2 dt
    std::vector<double> stdError;  ///< value / sqrt(segments)
    std::size_t segmentLength = 0;
    std::size_t segments = 0;

    double lower(std::size_t j, double z = 3.0) const { return value[j] - z * stdError[j]; }
    double upper(std::size_t j, double z = 3.0) const { return value[j] + z * stdError[j]; }
};

/// Averaged periodogram over non-overlapping Hann-windowed segments.
inline PsdEstimate estimatePSD(const SampledProcess& proc, std::size_t nSegments) {
    require(nSegments >= 8, "need at least 8 segments");
    constexpr std::size_t minLen = 16;
    require(proc.samples.size() >= nSegments * minLen, "sequence too short for requested segments");
    require(proc.dt > 0.0, "dt must be > 0");
    const std::size_t m = proc.samples.size() / nSegments;
    const std::size_t half = m / 2 + 1;
    std::vector<double> w(m);
    double u = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(m));
        u += w[i] * w[i];
    }
    u /= static_cast<double>(m);
    FftwVector<double> seg(m);
    FftwVector<std::complex<double>> spec(half);
    std::vector<double> acc(half, 0.0);
    for (std::size_t s = 0; s < nSegments; ++s) {
        const double* x = proc.samples.data() + s * m;
        for (std::size_t i = 0; i < m; ++i) seg[i] = w[i] * x[i];
        forwardRealFft(seg, spec);
        for (std::size_t j = 0; j < half; ++j) acc[j] += std::norm(spec[j]);
    }
    PsdEstimate e;
    e.segmentLength = m;
    e.segments = nSegments;
    const double norm = proc.dt / (static_cast<double>(m) * u * static_cast<double>(nSegments));
    const double dOmega = 2.0 * kPi / (static_cast<double>(m) * proc.dt);
    for (std::size_t j = 0; j < half; ++j) {
        e.omega.push_back(dOmega * static_cast<double>(j));
        e.value.push_back(acc[j] * norm);
        e.stdError.push_back(e.value.back() / std::sqrt(static_cast<double>(nSegments)));
    }
    return e;
}

enum class InitialStatistics { ClassicalThermal, WignerQuantum };

/// Discrete harmonic bath: unit-mass modes at omega_n = n * dOmega, n = 1..nModes,
/// up to maxFrequencyMultiple * u_C. Couplings carry a Gaussian taper of width
/// taperMultiple * u_C that suppresses ringing from the hard frequency edge.
struct MicroBathSpec {
    ReducedBath bath;
    double damping = 0.025;
    std::size_t nModes = 10000;
    double maxFrequencyMultiple = 80.0;
    double taperMultiple = 20.0;
    InitialStatistics initial = InitialStatistics::WignerQuantum;
};

struct MicroBathModes {
    std::vector<double> omega;
    std::vector<double> coupling2;  ///< lambda_n^2
    std::vector<double> q2;         ///< initial <q_n^2>; <p_n^2> = omega_n^2 <q_n^2>
    double spacing = 0.0;
};

/// Ohmic spectral density 4 Gamma omega f(omega/u_C).
inline double spectralDensity(double omega, const ReducedBath& b, double damping) {
    return 4.0 * damping * omega * detail::cutoffFactor(omega, b.cutoff);
}

inline MicroBathModes microBathModes(const MicroBathSpec& s) {
    validate(s.bath);
    require(s.nModes >= 1, "need at least one mode");
    require(s.maxFrequencyMultiple > 0.0 && s.taperMultiple > 0.0, "mode grid parameters must be > 0");
    require(s.initial == InitialStatistics::WignerQuantum || s.bath.temperature > 0.0,
            "classical thermal modes need T > 0");
    MicroBathModes m;
    const double wmax = s.maxFrequencyMultiple * s.bath.cutoff;
    m.spacing = wmax / static_cast<double>(s.nModes);
    const double w0 = s.taperMultiple * s.bath.cutoff;
    for (std::size_t n = 1; n <= s.nModes; ++n) {
        const double w = m.spacing * static_cast<double>(n);
        const double taper = std::exp(-(w / w0) * (w / w0));
        // pi/2 * lambda^2 / omega per unit frequency equals the spectral density
        m.omega.push_back(w);
        m.coupling2.push_back(2.0 / kPi * w * spectralDensity(w, s.bath, s.damping) * m.spacing * taper);
        double q2;
        if (s.initial == InitialStatistics::WignerQuantum) {
            ReducedBath qb = s.bath;
            qb.statistics = BathStatistics::Quantum;
            q2 = uThermal(w, qb) / (2.0 * w * w);
        } else {
            q2 = 0.5 * s.bath.temperature / (w * w);
        }
        m.q2.push_back(q2);
    }
    return m;
}

/// Exact ensemble autocovariance of the mode-sum force.
inline double microscopicAutocovariance(const MicroBathModes& m, double tau) {
    double c = 0.0;
    for (std::size_t n = 0; n < m.omega.size(); ++n) c += m.coupling2[n] * m.q2[n] * std::cos(m.omega[n] * tau);
    return c;
}

/// Mode-sum estimate of int_a^b J(omega) d omega, for checking the discretization.
inline double discreteSpectralWeight(const MicroBathModes& m, double a, double b) {
    double s = 0.0;
    for (std::size_t n = 0; n < m.omega.size(); ++n)
        if (m.omega[n] > a && m.omega[n] <= b) s += 0.5 * kPi * m.coupling2[n] / m.omega[n];
    return s;
}

/// Draws initial (q_n, p_n) for every mode.
inline void drawModes(const MicroBathModes& m, GaussianRng& rng, std::vector<double>& q,
                      std::vector<double>& p) {
    q.resize(m.omega.size());
    p.resize(m.omega.size());
    for (std::size_t n = 0; n < m.omega.size(); ++n) {
        const double sq = std::sqrt(m.q2[n]);
        q[n] = sq * rng.normal();
        p[n] = m.omega[n] * sq * rng.normal();
    }
}

/// xi(t) = sum_n lambda_n [q_n cos(omega_n t) + p_n/omega_n sin(omega_n t)].
inline SampledProcess microscopicBathForce(const MicroBathSpec& spec, double dt, std::size_t nSamples,
                                           std::uint64_t seed) {
    const auto m = microBathModes(spec);
    require(dt > 0.0, "dt must be > 0");
    const double recurrence = 2.0 * kPi / m.spacing;
    if (recurrence < dt * static_cast<double>(nSamples)) {
        std::ostringstream os;
        os << "too few modes: recurrence time " << recurrence << " shorter than window "
           << dt * static_cast<double>(nSamples);
        throw ConfigError(os.str());
    }
    GaussianRng rng(seed);
    std::vector<double> q, p;
    drawModes(m, rng, q, p);
    SampledProcess out;
    out.dt = dt;
    out.seed = seed;
    out.generatorId = "mode-sum";
    out.samples.assign(nSamples, 0.0);
    for (std::size_t n = 0; n < m.omega.size(); ++n) {
        const double lam = std::sqrt(m.coupling2[n]);
        // Rotate (a, b) = (q, p/omega) by omega*dt per sample; reseed the
        // rotation every 1024 steps to bound drift.
        const double a0 = lam * q[n], b0 = lam * p[n] / m.omega[n];
        const double c = std::cos(m.omega[n] * dt), s = std::sin(m.omega[n] * dt);
        double cr = 1.0, sr = 0.0;
        for (std::size_t i = 0; i < nSamples; ++i) {
            if (i % 1024 == 0) {
                const double ph = m.omega[n] * dt * static_cast<double>(i);
                cr = std::cos(ph);
                sr = std::sin(ph);
            }
            out.samples[i] += a0 * cr + b0 * sr;
            const double nc = cr * c - sr * s;
            sr = sr * c + cr * s;
            cr = nc;
        }
    }
    return out;
}

namespace detail {

template <class T>
void putLE(std::ostream& os, T v) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
}

template <class T>
T getLE(std::istream& is) {
    char buf[8];
    if (!is.read(buf, 8)) throw ConfigError("truncated binary process file");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    T v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

/// Binary layout: dt (f64), n (u64), seed (u64), specHash (u64), then n f64, all little-endian.
inline void writeProcessBinary(std::ostream& os, const SampledProcess& p, std::uint64_t specHash) {
    detail::putLE<double>(os, p.dt);
    detail::putLE<std::uint64_t>(os, p.samples.size());
    detail::putLE<std::uint64_t>(os, p.seed);
    detail::putLE<std::uint64_t>(os, specHash);
    for (double v : p.samples) detail::putLE<double>(os, v);
}

inline SampledProcess readProcessBinary(std::istream& is, std::uint64_t* specHash = nullptr) {
    SampledProcess p;
    p.dt = detail::getLE<double>(is);
    const auto n = detail::getLE<std::uint64_t>(is);
    p.seed = detail::getLE<std::uint64_t>(is);
    const auto h = detail::getLE<std::uint64_t>(is);
    if (specHash) *specHash = h;
    p.samples.resize(n);
    for (auto& v : p.samples) v = detail::getLE<double>(is);
    p.generatorId = "binary";
    return p;
}

/// Canonical text of a bath noise spec, hashed into dump headers.
inline std::string canonical(const BathNoiseSpec& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "bath=%s;T=%.17g;uc=%.17g;gamma=%.17g;dt=%.17g;n=%zu",
                  toString(s.bath.statistics), s.bath.temperature, s.bath.cutoff, s.damping, s.dt,
                  s.nSamples);
    return buf;
}

}  // namespace fnbo
