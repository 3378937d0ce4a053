#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "uol/integrals.hpp"
#include "uol/sampler.hpp"
#include "uol/weiss.hpp"

namespace uol {

enum class Normalization { quadratic, spherical };
enum class Regime { polynomial, homogeneous_solution, trivial };

inline const char* to_string(Normalization n) { return n == Normalization::quadratic ? "quadratic" : "spherical"; }

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::polynomial: return "polynomial";
        case Regime::homogeneous_solution: return "homogeneous_solution";
        default: return "trivial";
    }
}

/// Samples of Phi(r) used to pick the blow-up regime.
struct PhiTrend {
    std::vector<double> radii;
    std::vector<double> phi;
};

struct RegimeDecision {
    Regime regime = Regime::trivial;
    /// Least-squares slope of Phi against log2(1/r) over the four smallest radii.
    double slope = 0.0;
    /// Phi at the smallest radius.
    double phi_smallest = 0.0;
};

/// Finite-scale surrogate of the trichotomy: slope < -0.1 gives polynomial,
/// otherwise |Phi(smallest r)| < 0.05 gives trivial, else homogeneous_solution.
inline RegimeDecision classify_regime(const PhiTrend& t) {
    if (t.radii.size() != t.phi.size() || t.radii.size() < 2) throw PreconditionError("Phi trend needs at least two samples");
    std::vector<std::size_t> order(t.radii.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t.radii[a] < t.radii[b]; });
    const std::size_t n = std::min<std::size_t>(4, order.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = std::log2(1.0 / t.radii[order[k]]);
        const double y = t.phi[order[k]];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    RegimeDecision d;
    d.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    d.phi_smallest = t.phi[order[0]];
    if (d.slope < -0.1)
        d.regime = Regime::polynomial;
    else if (std::abs(d.phi_smallest) < 0.05)
        d.regime = Regime::trivial;
    else
        d.regime = Regime::homogeneous_solution;
    return d;
}

/// Phi at dyadic radii r_min * 2^k up to r_max, as a trend for classify_regime.
template <FieldLike F>
PhiTrend phi_trend(const F& u, Point x0, double r_min, double r_max) {
    PhiTrend t;
    t.radii = dyadic_radii(r_min, r_max);
    for (double r : t.radii) t.phi.push_back(weiss_phi(u, x0, r));
    return t;
}

/// Shell norm S(x0, r) = (r^-1 int_{dB_r} u^2)^{1/2}.
template <FieldLike F>
double shell_norm(const F& u, Point x0, double r) {
    const double s = circle_integral_of(u, x0, r, [](const F& f, Point p) {
        const double v = f.value(p);
        return v * v;
    });
    return std::sqrt(std::max(s, 0.0) / r);
}

struct BlowupFit {
    Point center;
    double r = 0.0;
    Normalization normalization = Normalization::spherical;
    double S_value = 0.0;
    Regime regime = Regime::trivial;
    double phi_slope = 0.0;
    /// Coefficients of a(x1^2 - x2^2) + b(2 x1 x2) + c(x1^2 + x2^2); c = 0 in the polynomial regime.
    double a = 0.0, b = 0.0, c = 0.0;
    /// Relative L2 error of the fit on the unit circle.
    double fit_residual = 0.0;
    /// Angle theta in [0, pi/2) of the best rotated x1^2 - x2^2 model.
    double rotation_angle = 0.0;
};

namespace detail {

inline std::size_t blowup_nodes(double r, double h) { return std::max<std::size_t>(256, polar_resolution(r, h).angular); }

// Rescaled trace on the unit circle; returns false if the spherical scale vanishes.
template <FieldLike F>
bool rescaled_trace(const F& u, Point x0, double r, Normalization n, double s_value, std::vector<double>& t) {
    const std::size_t m = blowup_nodes(r, u.spacing());
    double scale = r * r;
    if (n == Normalization::spherical) {
        if (s_value <= 1e-12 * r * r) return false;
        scale = s_value;
    }
    t.resize(m);
    for (std::size_t k = 0; k < m; ++k)
        t[k] = u.value(x0 + r * polar(two_pi * static_cast<double>(k) / static_cast<double>(m))) / scale;
    return true;
}

inline double wrap_quarter(double theta) {
    const double q = 0.5 * pi;
    theta = std::fmod(theta, q);
    if (theta < 0.0) theta += q;
    if (theta >= q) theta -= q;
    return theta;
}

}  // namespace detail

/// Blow-up of u at x0 and scale r with a degree-2 fit on the unit circle.
///
/// The regime comes from the supplied Phi trend. In the polynomial regime the
/// fit is restricted to the trace-free (harmonic) part.
template <FieldLike F>
BlowupFit blowup(const F& u, Point x0, double r, Normalization n, const PhiTrend& trend) {
    if (!(r > 0.0)) throw PreconditionError("blow-up radius must be positive");
    if (!u.contains_ball(x0, 2.0 * r)) throw DomainError("blow-up needs B_2r(x0) inside the domain");
    BlowupFit fit;
    fit.center = x0;
    fit.r = r;
    fit.normalization = n;
    fit.S_value = shell_norm(u, x0, r);
    const RegimeDecision dec = classify_regime(trend);
    fit.regime = dec.regime;
    fit.phi_slope = dec.slope;

    std::vector<double> t;
    if (!detail::rescaled_trace(u, x0, r, n, fit.S_value, t)) {
        fit.regime = Regime::trivial;
        return fit;
    }
    const std::size_t m = t.size();
    const double dm = static_cast<double>(m);
    double sc = 0, ss = 0, s1 = 0, norm2 = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double th = two_pi * static_cast<double>(k) / dm;
        sc += t[k] * std::cos(2.0 * th);
        ss += t[k] * std::sin(2.0 * th);
        s1 += t[k];
        norm2 += t[k] * t[k];
    }
    fit.a = 2.0 * sc / dm;
    fit.b = 2.0 * ss / dm;
    fit.c = fit.regime == Regime::polynomial ? 0.0 : s1 / dm;
    double err2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double th = two_pi * static_cast<double>(k) / dm;
        const double e = t[k] - (fit.a * std::cos(2.0 * th) + fit.b * std::sin(2.0 * th) + fit.c);
        err2 += e * e;
    }
    fit.fit_residual = norm2 > 0.0 ? std::sqrt(err2 / norm2) : 0.0;
    fit.rotation_angle = (fit.a == 0.0 && fit.b == 0.0) ? 0.0 : detail::wrap_quarter(0.5 * std::atan2(fit.b, fit.a));
    return fit;
}

inline BlowupFit blowup(const ScalarField& u, Point x0, double r, Normalization n, const PhiTrend& trend) {
    return blowup(SampledField(u), x0, r, n, trend);
}

/// Rescaled field u(x0 + r y) / scale sampled on the reference square [-1, 1]^2.
template <FieldLike F>
ScalarField rescaled_field(const F& u, Point x0, double r, double scale, std::size_t cells = 128) {
    if (!(scale > 0.0)) throw PreconditionError("rescaling factor must be positive");
    const GridSpec ref = GridSpec::centered_square(1.0, 2.0 / static_cast<double>(cells));
    return ScalarField::sample(ref, [&](Point y) { return u.value(x0 + r * y) / scale; });
}

struct RotationSample {
    double r = 0.0;
    double theta = 0.0;
    /// L2(dB_1) distance between the normalized trace and the best signed model.
    double distance = 0.0;
};

/// Best rotation angle of the unit-norm x1^2 - x2^2 model per radius.
///
/// Coarse scan of [0, pi/2) followed by golden-section refinement to 1e-4.
template <FieldLike F>
std::vector<RotationSample> rotation_fit(const F& u, Point x0, std::span<const double> radii) {
    std::vector<RotationSample> out;
    for (double r : radii) {
        if (!u.contains_ball(x0, 2.0 * r)) throw DomainError("rotation fit needs B_2r(x0) inside the domain");
        const double S = shell_norm(u, x0, r);
        std::vector<double> t;
        if (!detail::rescaled_trace(u, x0, r, Normalization::spherical, S, t))
            throw PreconditionError("rotation fit is meaningless in the trivial regime");
        const std::size_t m = t.size();
        const double dm = static_cast<double>(m);
        const double model_norm = std::sqrt(pi);
        // distance^2 = |t|^2 + 1 - 2|<t, model>| with |t| = 1 on the circle
        double tt = 0.0;
        for (double v : t) tt += v * v;
        tt *= two_pi / dm;
        auto dist2 = [&](double th0) {
            double ip = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double th = two_pi * static_cast<double>(k) / dm;
                ip += t[k] * std::cos(2.0 * (th - th0));
            }
            ip *= two_pi / dm / model_norm;
            return std::max(0.0, tt + 1.0 - 2.0 * std::abs(ip));
        };
        const int coarse = 64;
        const double step = 0.5 * pi / coarse;
        int best = 0;
        double best_val = dist2(0.0);
        for (int k = 1; k < coarse; ++k) {
            const double v = dist2(k * step);
            if (v < best_val) {
                best_val = v;
                best = k;
            }
        }
        double lo = (best - 1) * step, hi = (best + 1) * step;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = dist2(x1), f2 = dist2(x2);
        while (hi - lo > 1e-4) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = dist2(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = dist2(x2);
            }
        }
        const double th = 0.5 * (lo + hi);
        out.push_back({r, detail::wrap_quarter(th), std::sqrt(dist2(th))});
    }
    return out;
}

inline std::vector<RotationSample> rotation_fit(const ScalarField& u, Point x0, std::span<const double> radii) {
    return rotation_fit(SampledField(u), x0, radii);
}

/// Distance between two angles modulo pi/2.
inline double quarter_turn_distance(double a, double b) {
    const double d = detail::wrap_quarter(a - b);
    return std::min(d, 0.5 * pi - d);
}

}  // namespace uol
