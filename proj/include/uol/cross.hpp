#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uol/free_boundary.hpp"
#include "uol/grid.hpp"
#include "uol/sampler.hpp"

namespace uol {

enum class Side { plus, minus };

inline const char* to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

/// Coefficients of the logarithmic cross expansion truncated at order 0 or 1.
///
/// Positive phase: u = r^2 L z+(theta+), theta+ = alpha / (1 + phi);
/// negative phase: u = -r^2 L z-(theta-), theta- = (pi/2 - alpha) / (1 - phi),
/// with L = -log r, rho = 1/L, phi = rho phi1 and z = z^0 + rho z^1.
struct CrossExpansion {
    double A0 = 1.0 / (2.0 * pi);
    double phi1 = -0.5;
    double A_plus_1 = 1.0 / pi;
    double A_minus_1 = 0.0;
    int order = 1;

    static CrossExpansion canonical(int order = 1) {
        CrossExpansion e;
        e.order = order;
        e.validate();
        return e;
    }

    void validate() const {
        if (order != 0 && order != 1) throw PreconditionError("cross expansion supports orders 0 and 1 only");
        for (double v : {A0, phi1, A_plus_1, A_minus_1})
            if (!std::isfinite(v)) throw PreconditionError("cross expansion coefficients must be finite");
    }
};

/// d-th theta-derivative (d = 0, 1, 2) of the angular profile z^{side,k}.
inline double z_profile_derivative(const CrossExpansion& e, Side side, int k, double theta, int d) {
    if (k != 0 && k != 1) throw PreconditionError("profile order must be 0 or 1");
    if (d < 0 || d > 2) throw PreconditionError("profile derivative order must be 0, 1 or 2");
    const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
    // derivatives of cos 2t and t sin 2t
    const double cos_d[3] = {c, -2.0 * s, -4.0 * c};
    const double tsin_d[3] = {theta * s, s + 2.0 * theta * c, 4.0 * c - 4.0 * theta * s};
    if (k == 0) return e.A0 * cos_d[d];
    if (side == Side::plus) {
        const double v = e.A_plus_1 * cos_d[d] + (1.0 - 2.0 * e.phi1) * e.A0 * tsin_d[d];
        return d == 0 ? v - 0.25 : v;
    }
    return e.A_minus_1 * cos_d[d] + (1.0 + 2.0 * e.phi1) * e.A0 * tsin_d[d];
}

/// Angular profile z^{side,k}(theta) on [0, pi/4].
inline double z_profile(const CrossExpansion& e, Side side, int k, double theta) {
    if (!(theta >= 0.0 && theta <= 0.25 * pi * (1.0 + 1e-14)))
        throw DomainError("profile angle must lie in [0, pi/4]");
    return z_profile_derivative(e, side, k, theta, 0);
}

/// Residual of the profile ODE at one angle.
///
/// Order 0: z'' + 4z. Order 1: z'' + 4z + (8 phi1 - 4) z^0 + 1 on the positive
/// side and z'' + 4z + (-8 phi1 - 4) z^0 on the negative side.
inline double ode_residual_at(const CrossExpansion& e, int k, Side side, double theta) {
    const double z2 = z_profile_derivative(e, side, k, theta, 2);
    const double z = z_profile_derivative(e, side, k, theta, 0);
    if (k == 0) return z2 + 4.0 * z;
    const double z0 = z_profile_derivative(e, side, 0, theta, 0);
    if (side == Side::plus) return z2 + 4.0 * z + (8.0 * e.phi1 - 4.0) * z0 + 1.0;
    return z2 + 4.0 * z + (-8.0 * e.phi1 - 4.0) * z0;
}

/// Max |residual| over the sample angles.
inline double ode_residual(const CrossExpansion& e, int k, Side side, std::span<const double> thetas) {
    double m = 0.0;
    for (double t : thetas) m = std::max(m, std::abs(ode_residual_at(e, k, side, t)));
    return m;
}

/// n equispaced angles strictly inside (0, pi/4).
inline std::vector<double> theta_samples(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = 0.25 * pi * (static_cast<double>(i) + 1.0) / (static_cast<double>(n) + 1.0);
    return t;
}

struct ConditionResult {
    std::string name;
    double defect = 0.0;
    bool pass = false;
};

struct MatchingReport {
    std::vector<ConditionResult> conditions;
    /// Order-rho term of z+_theta - ((1+phi)/(1-phi)) z-_theta at pi/4, which
    /// works out to 2(A-1 - A+1). Reported only; it is not one of the conditions.
    double gradient_ratio_defect_order1 = 0.0;

    bool all_pass() const {
        return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
    }
    double max_defect() const {
        double m = 0.0;
        for (const auto& c : conditions) m = std::max(m, std::abs(c.defect));
        return m;
    }
};

/// Boundary and matching conditions of the profile system.
inline MatchingReport matching_conditions(const CrossExpansion& e, double tol = 1e-12) {
    e.validate();
    MatchingReport rep;
    const double q = 0.25 * pi;
    auto add = [&](std::string name, double defect) { rep.conditions.push_back({std::move(name), defect, std::abs(defect) <= tol}); };
    auto z = [&](Side s, int k, double t, int d) { return z_profile_derivative(e, s, k, t, d); };

    add("z+0_theta(0) = 0", z(Side::plus, 0, 0.0, 1));
    add("z-0_theta(0) = 0", z(Side::minus, 0, 0.0, 1));
    add("z+0(pi/4) = 0", z(Side::plus, 0, q, 0));
    add("z-0(pi/4) = 0", z(Side::minus, 0, q, 0));
    add("z+0_theta(pi/4) = z-0_theta(pi/4)", z(Side::plus, 0, q, 1) - z(Side::minus, 0, q, 1));
    if (e.order >= 1) {
        add("z+1_theta(0) = 0", z(Side::plus, 1, 0.0, 1));
        add("z-1_theta(0) = 0", z(Side::minus, 1, 0.0, 1));
        add("z+1(pi/4) = 0", z(Side::plus, 1, q, 0));
        add("z-1(pi/4) = 0", z(Side::minus, 1, q, 0));
        add("z+1_theta(pi/4) = z-1_theta(pi/4) - 2 phi1 z-0_theta(pi/4)",
            z(Side::plus, 1, q, 1) - z(Side::minus, 1, q, 1) + 2.0 * e.phi1 * z(Side::minus, 0, q, 1));
        // first-order term of z+_theta - ((1+phi)/(1-phi)) z-_theta
        rep.gradient_ratio_defect_order1 =
            z(Side::plus, 1, q, 1) - z(Side::minus, 1, q, 1) - 2.0 * e.phi1 * z(Side::minus, 0, q, 1);
    }
    return rep;
}

namespace detail {

struct CrossLocal {
    double value;
    double u_r;      // radial derivative
    double u_alpha;  // derivative in the folded angle
};

// Value and polar derivatives in the first quadrant, alpha in [0, pi/2].
inline CrossLocal cross_local(const CrossExpansion& e, double r, double alpha) {
    if (r <= 0.0) return {0.0, 0.0, 0.0};
    const double L = -std::log(r);
    const double rho = 1.0 / L;
    const bool first = e.order >= 1;
    const double phi = first ? rho * e.phi1 : 0.0;
    Side side;
    double theta, dtheta_da, dtheta_drho, sign;
    if (alpha <= 0.25 * pi * (1.0 + phi)) {
        side = Side::plus;
        theta = alpha / (1.0 + phi);
        dtheta_da = 1.0 / (1.0 + phi);
        dtheta_drho = first ? -alpha * e.phi1 / ((1.0 + phi) * (1.0 + phi)) : 0.0;
        sign = 1.0;
    } else {
        side = Side::minus;
        theta = (0.5 * pi - alpha) / (1.0 - phi);
        dtheta_da = -1.0 / (1.0 - phi);
        dtheta_drho = first ? (0.5 * pi - alpha) * e.phi1 / ((1.0 - phi) * (1.0 - phi)) : 0.0;
        sign = -1.0;
    }
    theta = std::clamp(theta, 0.0, 0.25 * pi);
    double Z = z_profile_derivative(e, side, 0, theta, 0);
    double Zt = z_profile_derivative(e, side, 0, theta, 1);
    double z1 = 0.0;
    if (first) {
        z1 = z_profile_derivative(e, side, 1, theta, 0);
        Z += rho * z1;
        Zt += rho * z_profile_derivative(e, side, 1, theta, 1);
    }
    Z *= sign;
    Zt *= sign;
    const double Z_a = Zt * dtheta_da;
    const double Z_rho = sign * z1 + Zt * dtheta_drho;
    // u = r^2 L Z(rho, alpha), d rho / d r = rho^2 / r
    const double value = r * r * L * Z;
    const double u_r = r * (2.0 * L - 1.0) * Z + r * rho * Z_rho;
    const double u_a = r * r * L * Z_a;
    return {value, u_r, u_a};
}

}  // namespace detail

/// Closed-form value of the truncated expansion at x (0 at the origin).
///
/// Symmetric under x1 -> -x1 and x2 -> -x2; requires |x| < 1.
inline double cross_value(const CrossExpansion& e, Point x) {
    const double r = norm(x);
    if (r >= 1.0) throw DomainError("cross expansion is only defined for |x| < 1");
    return detail::cross_local(e, r, std::atan2(std::abs(x.y), std::abs(x.x))).value;
}

/// Gradient of the truncated expansion. Across the free boundary the order-1
/// field has a small gradient jump; each phase returns its own one-sided value.
inline Vec2 cross_gradient(const CrossExpansion& e, Point x) {
    const double r = norm(x);
    if (r >= 1.0) throw DomainError("cross expansion is only defined for |x| < 1");
    if (r == 0.0) return {0.0, 0.0};
    const double ax = std::abs(x.x), ay = std::abs(x.y);
    const double a = std::atan2(ay, ax);
    const auto loc = detail::cross_local(e, r, a);
    const double c = ax / r, s = ay / r;
    const double gx = loc.u_r * c - loc.u_alpha / r * s;
    const double gy = loc.u_r * s + loc.u_alpha / r * c;
    return {x.x < 0.0 ? -gx : gx, x.y < 0.0 ? -gy : gy};
}

/// Polar angle of the free boundary in the first quadrant at radius r.
inline double cross_free_boundary_angle(const CrossExpansion& e, double r) {
    const double phi = e.order >= 1 ? e.phi1 / (-std::log(r)) : 0.0;
    return 0.25 * pi * (1.0 + phi);
}

/// Direction of the free-boundary tangent at radius r, alpha(r) + atan(r alpha'(r)).
inline double cross_free_boundary_tangent_angle(const CrossExpansion& e, double r) {
    if (e.order < 1) return 0.25 * pi;
    const double rho = -1.0 / std::log(r);
    return cross_free_boundary_angle(e, r) + std::atan(0.25 * pi * e.phi1 * rho * rho);
}

/// Coefficients forced by the conditions z-1(pi/4) = 0 (fixes phi1) and then
/// z+1(pi/4) = 0 (fixes A0). Both conditions are affine in the unknown, so two
/// evaluations of the closed forms locate the root.
struct ForcedCoefficients {
    double phi1 = 0.0;
    double A0 = 0.0;
};

inline ForcedCoefficients forced_coefficients(const CrossExpansion& base) {
    const double q = 0.25 * pi;
    auto affine_root = [](auto f) {
        const double f0 = f(0.0), f1 = f(1.0);
        if (f1 == f0) throw PreconditionError("condition does not depend on the coefficient");
        return -f0 / (f1 - f0);
    };
    CrossExpansion e = base;
    e.order = 1;
    ForcedCoefficients out;
    out.phi1 = affine_root([&](double x) {
        CrossExpansion t = e;
        t.phi1 = x;
        return z_profile_derivative(t, Side::minus, 1, q, 0);
    });
    e.phi1 = out.phi1;
    out.A0 = affine_root([&](double x) {
        CrossExpansion t = e;
        t.A0 = x;
        return z_profile_derivative(t, Side::plus, 1, q, 0);
    });
    return out;
}

/// The expansion as a closed-form field trusted on the square [-half, half]^2.
inline AnalyticField cross_field(const CrossExpansion& e, double spacing, double half_extent) {
    e.validate();
    if (half_extent * std::sqrt(2.0) >= 1.0) throw DomainError("cross field extent must stay inside the unit disc");
    return AnalyticField([e](Point p) { return cross_value(e, p); }, [e](Point p) { return cross_gradient(e, p); },
                         spacing, {}, half_extent);
}

/// Samples the expansion on a grid centred at the origin whose nodes all lie within r_max <= 1/e.
inline ScalarField synthesize_cross_field(const CrossExpansion& e, const GridSpec& spec, double r_max) {
    e.validate();
    if (!(r_max < 1.0)) throw DomainError("r_max must be below 1");
    if (r_max > 1.0 / std::numbers::e + 1e-12) throw PreconditionError("r_max must not exceed 1/e");
    const Point c = spec.center();
    if (norm(c) > 1e-9 * std::max(1.0, spec.width())) throw PreconditionError("grid must be centred at the origin");
    const double corner = norm(spec.upper());
    if (corner > r_max * (1.0 + 1e-12)) throw PreconditionError("grid reaches beyond r_max");
    return ScalarField::sample(spec, [&](Point p) { return cross_value(e, p); });
}

/// Empirical free-boundary angle fit phi_hat(r) = 4 alpha / pi - 1 against rho = 1/(-log r).
struct PhiFit {
    /// Least-squares slope through the origin.
    double slope = 0.0;
    /// RMS residual of the through-origin fit.
    double residual = 0.0;
    /// Unconstrained affine fit phi_hat = affine_slope rho + intercept.
    double affine_slope = 0.0;
    double intercept = 0.0;
    std::vector<double> radii;
    std::vector<double> rho;
    std::vector<double> phi_hat;
};

/// Fits phi from the four arcs crossing each circle |x - center| = r (radii <= 1/e^2).
inline PhiFit fit_phi(const FreeBoundary& fb, Point center, std::span<const double> radii) {
    if (radii.empty()) throw PreconditionError("fit_phi needs at least one radius");
    PhiFit fit;
    for (double r : radii) {
        if (!(r > 0.0) || r > std::exp(-2.0) * (1.0 + 1e-12)) throw PreconditionError("fit_phi radii must lie in (0, 1/e^2]");
        const auto hits = circle_crossings(fb, center, r);
        if (hits.size() != 4) {
            throw PreconditionError("expected four free-boundary arcs at radius " + std::to_string(r) + ", found " +
                                    std::to_string(hits.size()));
        }
        double mean = 0.0;
        for (const Point& p : hits) {
            const double a = std::atan2(std::abs(p.y - center.y), std::abs(p.x - center.x));
            mean += 4.0 * a / pi - 1.0;
        }
        fit.radii.push_back(r);
        fit.rho.push_back(-1.0 / std::log(r));
        fit.phi_hat.push_back(0.25 * mean);
    }
    double sxy = 0.0, sxx = 0.0, sx = 0.0, sy = 0.0;
    const double n = static_cast<double>(fit.rho.size());
    for (std::size_t k = 0; k < fit.rho.size(); ++k) {
        sxy += fit.rho[k] * fit.phi_hat[k];
        sxx += fit.rho[k] * fit.rho[k];
        sx += fit.rho[k];
        sy += fit.phi_hat[k];
    }
    fit.slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t k = 0; k < fit.rho.size(); ++k) ss += std::pow(fit.phi_hat[k] - fit.slope * fit.rho[k], 2);
    fit.residual = std::sqrt(ss / n);
    const double det = n * sxx - sx * sx;
    if (fit.rho.size() >= 2 && std::abs(det) > 1e-300) {
        fit.affine_slope = (n * sxy - sx * sy) / det;
        fit.intercept = (sy - fit.affine_slope * sx) / n;
    } else {
        fit.affine_slope = fit.slope;
    }
    return fit;
}

}  // namespace uol
