#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uol/integrals.hpp"
#include "uol/pulse.hpp"
#include "uol/sampler.hpp"

namespace uol {

namespace detail {

template <FieldLike F>
void require_shell(const F& u, Point c, double r, double min_cells) {
    if (!(r > 0.0)) throw PreconditionError("radius must be positive");
    if (!u.contains_ball(c, r)) throw DomainError("ball of radius " + std::to_string(r) + " leaves the domain");
    if (r < min_cells * u.spacing() * (1.0 - 1e-12))
        throw PreconditionError("radius " + std::to_string(r) + " is below " + std::to_string(min_cells) + " grid spacings");
}

inline void require_increasing(std::span<const double> radii) {
    if (radii.empty()) throw PreconditionError("radius list is empty");
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (!(radii[k] > radii[k - 1])) throw PreconditionError("radii must be strictly increasing");
}

}  // namespace detail

/// Weiss energy Phi(r) = r^-4 int_{B_r}(|grad u|^2 - 2 max(u,0)) - 2 r^-5 int_{dB_r} u^2 (plane).
template <FieldLike F>
double weiss_phi(const F& u, Point x0, double r) {
    detail::require_shell(u, x0, r, 8.0);
    const double vol = ball_integral_of(u, x0, r, [](const F& f, Point p) {
        const Vec2 g = f.gradient(p);
        return dot(g, g) - 2.0 * std::max(f.value(p), 0.0);
    });
    const double surf = circle_integral_of(u, x0, r, [](const F& f, Point p) {
        const double v = f.value(p);
        return v * v;
    });
    return vol / std::pow(r, 4) - 2.0 * surf / std::pow(r, 5);
}

inline double weiss_phi(const ScalarField& u, Point x0, double r) { return weiss_phi(SampledField(u), x0, r); }

/// Shell drift int_rho^sigma 2 r^-4 int_{dB_r} (d_nu u - 2u/r)^2 dH^1 dr.
template <FieldLike F>
double weiss_drift(const F& u, Point x0, double rho, double sigma) {
    if (!(sigma > rho) || !(rho > 0.0)) throw PreconditionError("drift needs 0 < rho < sigma");
    PolarResolution res = polar_resolution(sigma, u.spacing());
    res.radial = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(2.0 * (sigma - rho) / u.spacing())));
    return integrate_annulus(
        [&](Point p) {
            const Point d = p - x0;
            const double r = norm(d);
            const double e = dot(u.gradient(p), d) / r - 2.0 * u.value(p) / r;
            return 2.0 * e * e / std::pow(r, 4);
        },
        x0, rho, sigma, res);
}

/// Correction to the drift identity for fields that do not solve the equation:
/// -1/2 int_{B_sigma} (Lap u + chi_{u>0})(x.grad u - 2u)(max(|x|,rho)^-4 - sigma^-4).
template <HasLaplacian F>
double weiss_defect(const F& u, Point x0, double rho, double sigma) {
    auto integrand = [&](const F& f, Point p) {
        const Point d = p - x0;
        const double r = norm(d);
        const double src = f.laplacian(p) + (f.value(p) > 0.0 ? 1.0 : 0.0);
        const double w = std::pow(std::max(r, rho), -4) - std::pow(sigma, -4);
        return src * (dot(d, f.gradient(p)) - 2.0 * f.value(p)) * w;
    };
    return -0.5 * ball_integral_of(u, x0, sigma, integrand, {rho});
}

struct MonotonicityTrace {
    Point center;
    std::vector<double> radii;
    std::vector<double> phi;
    /// drift[k] covers (radii[k], radii[k+1]).
    std::vector<double> drift;
    /// Non-solution correction per pair; zero unless requested.
    std::vector<double> defect;

    double tolerance(std::size_t k) const { return 1e-2 * (1.0 + std::max(std::abs(phi[k]), std::abs(phi[k + 1]))); }

    /// |Phi(r_{k+1}) - Phi(r_k) - drift_k - defect_k| for each pair.
    std::vector<double> identity_errors() const {
        std::vector<double> e;
        for (std::size_t k = 0; k + 1 < phi.size(); ++k) e.push_back(std::abs(phi[k + 1] - phi[k] - drift[k] - defect[k]));
        return e;
    }

    bool identity_holds() const {
        const auto e = identity_errors();
        for (std::size_t k = 0; k < e.size(); ++k)
            if (e[k] > tolerance(k)) return false;
        return true;
    }

    bool non_decreasing() const {
        for (std::size_t k = 0; k + 1 < phi.size(); ++k)
            if (phi[k + 1] < phi[k] - tolerance(k)) return false;
        return true;
    }
};

/// Phi at each radius and the drift between consecutive radii.
template <FieldLike F>
MonotonicityTrace monotonicity_trace(const F& u, Point x0, std::span<const double> radii, bool with_defect = false) {
    detail::require_increasing(radii);
    for (double r : radii) detail::require_shell(u, x0, r, 8.0);
    MonotonicityTrace t;
    t.center = x0;
    t.radii.assign(radii.begin(), radii.end());
    for (double r : radii) t.phi.push_back(weiss_phi(u, x0, r));
    for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
        t.drift.push_back(weiss_drift(u, x0, radii[k], radii[k + 1]));
        double d = 0.0;
        if (with_defect) {
            if constexpr (HasLaplacian<F>) {
                d = weiss_defect(u, x0, radii[k], radii[k + 1]);
            } else {
                throw PreconditionError("defect term needs a field with a Laplacian");
            }
        }
        t.defect.push_back(d);
    }
    return t;
}

inline MonotonicityTrace monotonicity_trace(const ScalarField& u, Point x0, std::span<const double> radii,
                                            bool with_defect = false) {
    return monotonicity_trace(SampledField(u), x0, radii, with_defect);
}

/// r, 2r, 4r, ... up to r_max (inclusive within round-off).
inline std::vector<double> dyadic_radii(double r_min, double r_max) {
    std::vector<double> r;
    for (double v = r_min; v <= r_max * (1.0 + 1e-12); v *= 2.0) r.push_back(v);
    return r;
}

struct NondegeneracyMargin {
    double r = 0.0;
    /// min over the circle of u.
    double min_value = 0.0;
    /// min_value + c2 r^2.
    double margin = 0.0;
};

/// margin(r) = min_{dB_r(x0)} u + c2 r^2 at each radius; requires |u(x0)| <= zero_tol.
template <FieldLike F>
std::vector<NondegeneracyMargin> nondegeneracy_check(const F& u, Point x0, std::span<const double> radii, double zero_tol) {
    const double u0 = u.value(x0);
    if (std::abs(u0) > zero_tol)
        throw PreconditionError("non-degeneracy check needs u(x0) = 0, got " + std::to_string(u0));
    std::vector<NondegeneracyMargin> out;
    for (double r : radii) {
        detail::require_shell(u, x0, r, 0.0);
        const std::size_t n = polar_resolution(r, u.spacing()).angular;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k)
            m = std::min(m, u.value(x0 + r * polar(two_pi * static_cast<double>(k) / static_cast<double>(n))));
        out.push_back({r, m, m + Constants::c2 * r * r});
    }
    return out;
}

inline std::vector<NondegeneracyMargin> nondegeneracy_check(const ScalarField& u, Point x0, std::span<const double> radii) {
    return nondegeneracy_check(SampledField(u), x0, radii, u.spec().h * u.spec().h);
}

/// Allowed margin 0.1 c2 r^2 + 10 h^2.
inline double nondegeneracy_slack(double r, double h) { return 0.1 * Constants::c2 * r * r + 10.0 * h * h; }

struct FrequencyResult {
    double defect = 0.0;
    double dirichlet = 0.0;
    double boundary = 0.0;
    /// max |Lap_h w| over nodes of B_1 relative to max |w| there.
    double harmonic_defect = 0.0;
    /// Size of the fitted degree < alpha part near 0 relative to |w| on the patch.
    double vanishing_defect = 0.0;
    bool preconditions_ok = true;
    std::string warning;
};

namespace detail {

// Least-squares fit of w by all monomials of total degree <= deg on the given
// points (coordinates already scaled); returns the coefficients ordered by degree.
inline std::vector<double> poly_fit(const std::vector<Point>& pts, const std::vector<double>& vals, int deg) {
    std::vector<std::pair<int, int>> mon;
    for (int d = 0; d <= deg; ++d)
        for (int a = d; a >= 0; --a) mon.push_back({a, d - a});
    const std::size_t m = mon.size();
    std::vector<double> ata(m * m, 0.0), atb(m, 0.0);
    std::vector<double> row(m);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        for (std::size_t c = 0; c < m; ++c) row[c] = std::pow(pts[k].x, mon[c].first) * std::pow(pts[k].y, mon[c].second);
        for (std::size_t a = 0; a < m; ++a) {
            atb[a] += row[a] * vals[k];
            for (std::size_t b = 0; b < m; ++b) ata[a * m + b] += row[a] * row[b];
        }
    }
    // Gaussian elimination with partial pivoting
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::abs(ata[r * m + c]) > std::abs(ata[piv * m + c])) piv = r;
        for (std::size_t b = 0; b < m; ++b) std::swap(ata[c * m + b], ata[piv * m + b]);
        std::swap(atb[c], atb[piv]);
        const double d = ata[c * m + c];
        if (std::abs(d) < 1e-300) continue;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == c) continue;
            const double f = ata[r * m + c] / d;
            if (f == 0.0) continue;
            for (std::size_t b = c; b < m; ++b) ata[r * m + b] -= f * ata[c * m + b];
            atb[r] -= f * atb[c];
        }
    }
    std::vector<double> coef(m);
    for (std::size_t c = 0; c < m; ++c) coef[c] = ata[c * m + c] != 0.0 ? atb[c] / ata[c * m + c] : 0.0;
    return coef;
}

}  // namespace detail

/// int_{B_1} |grad w|^2 - alpha int_{dB_1} w^2 on a grid containing the unit disc at the origin.
///
/// Preconditions (w harmonic on B_1, derivatives below order alpha vanish at 0)
/// are checked and reported; the value is returned either way.
inline FrequencyResult frequency_defect(const ScalarField& w, int alpha, double tol = 1e-3) {
    if (alpha < 1) throw PreconditionError("frequency exponent must be at least 1");
    const SampledField f(w);
    const Point o{0.0, 0.0};
    detail::require_shell(f, o, 1.0, 8.0);
    FrequencyResult res;
    res.dirichlet = ball_integral_of(f, o, 1.0, [](const SampledField& s, Point p) {
        const Vec2 g = s.gradient(p);
        return dot(g, g);
    });
    res.boundary = circle_integral_of(f, o, 1.0, [](const SampledField& s, Point p) {
        const double v = s.value(p);
        return v * v;
    });
    res.defect = res.dirichlet - alpha * res.boundary;

    const GridSpec& s = w.spec();
    const ScalarField lap = laplacian(w);
    double lap_max = 0.0, w_max = 0.0;
    std::vector<Point> patch;
    std::vector<double> vals;
    const double scale = 8.0 * s.h;
    for (std::size_t j = 1; j + 1 < s.ny; ++j)
        for (std::size_t i = 1; i + 1 < s.nx; ++i) {
            const Point p = s.node(i, j);
            if (norm(p) <= 1.0) {
                lap_max = std::max(lap_max, std::abs(lap(i, j)));
                w_max = std::max(w_max, std::abs(w(i, j)));
            }
            if (norm(p) <= scale) {
                patch.push_back(p / scale);
                vals.push_back(w(i, j));
            }
        }
    res.harmonic_defect = lap_max / std::max(w_max, 1e-300);
    if (w_max == 0.0) res.harmonic_defect = 0.0;

    const auto coef = detail::poly_fit(patch, vals, alpha + 1);
    double low = 0.0, patch_max = 0.0;
    std::size_t idx = 0;
    for (int d = 0; d < alpha; ++d)
        for (int a = 0; a <= d; ++a) low += std::abs(coef[idx++]);
    for (double v : vals) patch_max = std::max(patch_max, std::abs(v));
    res.vanishing_defect = patch_max > 0.0 ? low / patch_max : 0.0;

    if (res.harmonic_defect > tol) {
        res.preconditions_ok = false;
        res.warning = "field is not harmonic on the unit disc";
    }
    if (res.vanishing_defect > tol) {
        res.preconditions_ok = false;
        if (!res.warning.empty()) res.warning += "; ";
        res.warning += "derivatives below order " + std::to_string(alpha) + " do not vanish at 0";
    }
    return res;
}

struct CheminResult {
    std::vector<double> radii;
    /// sup over the circle of |grad u| / (r log(1/r)).
    std::vector<double> ratio;
    double sup = 0.0;
    /// Slope of log(ratio) against log(1/r); near zero or negative when bounded.
    double growth_slope = 0.0;
    bool diverging = false;
};

/// Sup of |grad u(x)| / (|x - x0| log(1/|x - x0|)) on circles around x0 (radii < 1).
template <FieldLike F>
CheminResult chemin_bound_check(const F& u, Point x0, std::span<const double> radii) {
    CheminResult res;
    for (double r : radii) {
        if (!(r > 0.0 && r < 1.0)) throw PreconditionError("Chemin radii must lie in (0, 1)");
        detail::require_shell(u, x0, r, 0.0);
        const std::size_t n = polar_resolution(r, u.spacing()).angular;
        double m = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            m = std::max(m, norm(u.gradient(x0 + r * polar(two_pi * static_cast<double>(k) / static_cast<double>(n)))));
        const double q = m / (r * std::log(1.0 / r));
        res.radii.push_back(r);
        res.ratio.push_back(q);
        res.sup = std::max(res.sup, q);
    }
    if (res.radii.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(res.radii.size());
        for (std::size_t k = 0; k < res.radii.size(); ++k) {
            const double x = std::log(1.0 / res.radii[k]);
            const double y = std::log(std::max(res.ratio[k], 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        res.growth_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        res.diverging = res.growth_slope > 0.5;
    }
    return res;
}

inline CheminResult chemin_bound_check(const ScalarField& u, Point x0, std::span<const double> radii) {
    return chemin_bound_check(SampledField(u), x0, radii);
}

}  // namespace uol
