#pragma once

#include <cmath>

#include "uol/core.hpp"

namespace uol {

/// Dimensional constants of the non-degeneracy estimate.
struct Constants {
    /// Optimal planar non-degeneracy constant 1/(4e).
    static constexpr double c2 = 1.0 / (4.0 * std::numbers::e);
    int dimension = 2;
};

/// Radial profile of the stationary pulse in dimension n, as a function of s = |x|.
///
/// Paraboloid inside the unit sphere glued C^1 to the radial harmonic
/// tail outside: -log(s^2)/4 in the plane, (s^{2-n} - 1)/(n(n-2)) for n > 2.
inline double pulse_radial(double s, int n = 2) {
    if (n < 2) throw PreconditionError("pulse is defined for n >= 2");
    const double dn = static_cast<double>(n);
    if (s <= 1.0) return (1.0 - s * s) / (2.0 * dn);
    if (n == 2) return -std::log(s * s) / 4.0;
    return (std::pow(s, 2.0 - dn) - 1.0) / (dn * (dn - 2.0));
}

/// d/ds of the radial profile.
inline double pulse_radial_derivative(double s, int n = 2) {
    if (n < 2) throw PreconditionError("pulse is defined for n >= 2");
    const double dn = static_cast<double>(n);
    if (s <= 1.0) return -s / dn;
    if (n == 2) return -0.5 / s;
    return -std::pow(s, 1.0 - dn) / dn;
}

inline double pulse(Point x, int n = 2) { return pulse_radial(norm(x), n); }

inline Vec2 pulse_gradient(Point x, int n = 2) {
    const double s = norm(x);
    if (s == 0.0) return {0.0, 0.0};
    return (pulse_radial_derivative(s, n) / s) * x;
}

/// Lap p for the planar pulse: -1 inside the unit disc, 0 outside.
inline double pulse_laplacian(Point x) { return norm(x) < 1.0 ? -1.0 : 0.0; }

}  // namespace uol
