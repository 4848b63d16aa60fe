#pragma once

// Semi-infinite quadrature for resonance-shaped integrands on [0, inf).
//
// The primary rule is a globally adaptive 7/15-point Gauss-Kronrod scheme on a
// fixed set of starting panels: a window around the resonance at u = 1 whose
// width scales with 1/Q, geometric panels up to a multiple of the cutoff, and
// a tail mapped through u = 1/v. crossCheck() evaluates the same integral
// with GSL's 10/21-point adaptive routines on a different panel layout.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace fnbo {

struct IntegrandSpec {
    std::function<double(double)> f;
    double Q = 10.0;                  ///< resonance sharpness; window half-width max(5/Q, 1e-3)
    double cutoff = 1e3;              ///< u beyond which the integrand decays as a power law
    std::vector<double> extraBreaks;  ///< additional scales, e.g. the thermal scale
};

struct QuadResult {
    double value = 0.0;
    double absError = 0.0;
    double relError = 0.0;
    int panels = 0;
    bool converged = false;
};

struct QuadOptions {
    int maxPanels = 2000;
    double cutoffMultiple = 20.0;  ///< c in c * cutoff, start of the mapped tail
    bool throwOnFailure = true;
};

namespace detail {

// QUADPACK qk15 abscissae and weights.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    double resabs = std::abs(resk);
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        f1[j] = f(c - dx);
        f2[j] = f(c + dx);
        resk += kWgk[j] * (f1[j] + f2[j]);
        resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) resg += kWg[j / 2] * (f1[j] + f2[j]);
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    resk *= h;
    resabs *= std::abs(h);
    resasc *= std::abs(h);
    double err = std::abs((resk - resg * h));
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    if (roundoff > err) err = roundoff;
    if (!std::isfinite(resk)) err = std::numeric_limits<double>::infinity();
    return {a, b, resk, err};
}

inline std::vector<double> primaryBreaks(const IntegrandSpec& s, double upper) {
    const double w = std::max(5.0 / s.Q, 1e-3);
    std::vector<double> pts = {0.0, 1.0, 1.0 + w, upper};
    if (1.0 - w > 0.0) pts.push_back(1.0 - w);
    for (double d = 10.0; d < upper; d *= 10.0) pts.push_back(d);
    if (s.cutoff < upper) pts.push_back(s.cutoff);
    for (double e : s.extraBreaks)
        if (e > 0.0 && e < upper) pts.push_back(e);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, y); }),
              pts.end());
    return pts;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of spec.f over [0, inf).
inline QuadResult integrateSemiInfinite(const IntegrandSpec& spec, double relTol,
                                        const QuadOptions& opt = {}) {
    require(relTol >= 1e-12 && relTol <= 1e-4, "relTol must lie in [1e-12, 1e-4]");
    require(static_cast<bool>(spec.f), "integrand not set");
    require(spec.Q > 0.0 && spec.cutoff > 0.0, "integrand hints must be positive");

    const double upper = opt.cutoffMultiple * spec.cutoff;
    const auto& f = spec.f;
    const auto tail = [&f](double v) { return f(1.0 / v) / (v * v); };

    // Panels on [upper, inf) live in the mapped variable v = 1/u; their lower
    // bound a >= 0 is stored as -(1 + a) so they can share the heap.
    std::priority_queue<detail::Panel> heap;
    double total = 0.0, totalErr = 0.0;
    auto push = [&](const detail::Panel& p) {
        heap.push(p);
        total += p.value;
        totalErr += p.error;
    };
    auto evalMapped = [&](double a, double b) {
        auto p = detail::gk15(tail, a, b);
        p.a = -(1.0 + a);
        return p;
    };
    const auto pts = detail::primaryBreaks(spec, upper);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) push(detail::gk15(f, pts[i], pts[i + 1]));
    push(evalMapped(0.0, 1.0 / upper));

    int panels = static_cast<int>(heap.size());
    bool converged = false;
    while (true) {
        const double tol = relTol * std::abs(total);
        if (totalErr <= tol) {
            converged = true;
            break;
        }
        if (panels >= opt.maxPanels || !std::isfinite(total)) break;
        auto worst = heap.top();
        heap.pop();
        total -= worst.value;
        totalErr -= worst.error;
        if (worst.a < 0.0) {
            const double a = -worst.a - 1.0;
            const double m = 0.5 * (a + worst.b);
            push(evalMapped(a, m));
            push(evalMapped(m, worst.b));
        } else {
            const double m = 0.5 * (worst.a + worst.b);
            if (m <= worst.a || m >= worst.b) {  // interval exhausted
                push(worst);
                break;
            }
            push(detail::gk15(f, worst.a, m));
            push(detail::gk15(f, m, worst.b));
        }
        ++panels;
        if (panels % 64 == 0) {  // resum to shed accumulated cancellation
            auto copy = heap;
            total = totalErr = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                totalErr += copy.top().error;
                copy.pop();
            }
        }
    }
    // Final resummation in a fixed order.
    std::vector<detail::Panel> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
        return std::abs(x.value) < std::abs(y.value);
    });
    total = totalErr = 0.0;
    for (const auto& p : all) {
        total += p.value;
        totalErr += p.error;
    }
    if (!converged && totalErr <= relTol * std::abs(total)) converged = true;

    QuadResult r;
    r.value = total;
    r.absError = totalErr;
    r.relError = total != 0.0 ? totalErr / std::abs(total) : (totalErr == 0.0 ? 0.0 : INFINITY);
    r.panels = static_cast<int>(all.size());
    r.converged = converged;
    if (!converged && opt.throwOnFailure) {
        std::ostringstream os;
        os << "quadrature did not converge: value " << total << ", error estimate " << totalErr
           << " after " << r.panels << " panels";
        throw NumericalError(os.str());
    }
    return r;
}

namespace detail {

struct GslHandlerGuard {
    gsl_error_handler_t* prev;
    GslHandlerGuard() : prev(gsl_set_error_handler_off()) {}
    ~GslHandlerGuard() { gsl_set_error_handler(prev); }
};

struct GslWorkspace {
    gsl_integration_workspace* w;
    explicit GslWorkspace(std::size_t n) : w(gsl_integration_workspace_alloc(n)) {}
    ~GslWorkspace() { gsl_integration_workspace_free(w); }
    GslWorkspace(const GslWorkspace&) = delete;
    GslWorkspace& operator=(const GslWorkspace&) = delete;
};

inline double gslTrampoline(double x, void* p) {
    return (*static_cast<const std::function<double(double)>*>(p))(x);
}

}  // namespace detail

/// Same integral as integrateSemiInfinite, evaluated with GSL qagp/qagiu on a
/// different panel layout. Throws NumericalError if GSL reports failure.
inline QuadResult crossCheck(const IntegrandSpec& spec, double relTol) {
    require(relTol >= 1e-12 && relTol <= 1e-4, "relTol must lie in [1e-12, 1e-4]");
    require(static_cast<bool>(spec.f), "integrand not set");
    detail::GslHandlerGuard guard;
    const std::size_t limit = 4000;
    detail::GslWorkspace ws(limit);

    const double w = std::max(3.0 / spec.Q, 2e-3);
    const double upper = 40.0 * spec.cutoff;
    std::vector<double> pts = {0.0, 1.0 + w, upper};
    if (1.0 - w > 0.0) pts.push_back(1.0 - w);
    for (double d = 3.0; d < upper; d *= 7.0) pts.push_back(d);
    for (double e : spec.extraBreaks)
        if (e > 0.0 && e < upper) pts.push_back(1.3 * e);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    gsl_function F;
    F.function = &detail::gslTrampoline;
    F.params = const_cast<std::function<double(double)>*>(&spec.f);

    double v1 = 0.0, e1 = 0.0, v2 = 0.0, e2 = 0.0;
    int s1 = gsl_integration_qagp(&F, pts.data(), pts.size(), 0.0, relTol, limit, ws.w, &v1, &e1);
    int s2 = gsl_integration_qagiu(&F, upper, 0.0, relTol, limit, ws.w, &v2, &e2);
    QuadResult r;
    r.value = v1 + v2;
    r.absError = e1 + e2;
    r.relError = r.value != 0.0 ? r.absError / std::abs(r.value) : 0.0;
    r.panels = -1;
    r.converged = (s1 == GSL_SUCCESS && s2 == GSL_SUCCESS);
    if (!r.converged) {
        // GSL flags roundoff when the target is already at the noise floor; accept
        // that case if the reported error still meets the tolerance.
        const bool okFloor = (s1 == GSL_SUCCESS || s1 == GSL_EROUND) &&
                             (s2 == GSL_SUCCESS || s2 == GSL_EROUND) &&
                             r.absError <= 10.0 * relTol * std::abs(r.value);
        if (!okFloor)
            throw NumericalError(std::string("cross-check quadrature failed: ") +
                                 gsl_strerror(s1 != GSL_SUCCESS ? s1 : s2));
        r.converged = true;
    }
    return r;
}

}  // namespace fnbo
