#pragma once

#include <sstream>

#include "uol/grid.hpp"
#include "uol/quadrature.hpp"
#include "uol/sampler.hpp"

namespace uol {

namespace detail {

inline void require_ball(const GridSpec& s, Point c, double r, double min_cells) {
    if (!s.contains_ball(c, r)) {
        std::ostringstream msg;
        msg << "ball of radius " << r << " at (" << c.x << ", " << c.y << ") is not contained in the grid";
        throw DomainError(msg.str());
    }
    if (r < min_cells * s.h * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "radius " << r << " is below " << min_cells << " grid spacings";
        throw PreconditionError(msg.str());
    }
}

}  // namespace detail

/// Integral of u over B_r(c) by polar quadrature over interpolated values (requires r >= 4h).
inline double ball_integral(const ScalarField& u, Point c, double r) {
    detail::require_ball(u.spec(), c, r, 4.0);
    return integrate_ball([&](Point p) { return interpolate(u, p); }, c, r, polar_resolution(r, u.spec().h));
}

/// Integral of u over the circle |x - c| = r by the angular trapezoid rule.
inline double circle_integral(const ScalarField& u, Point c, double r) {
    detail::require_ball(u.spec(), c, r, 4.0);
    return integrate_circle([&](Point p) { return interpolate(u, p); }, c, r, polar_resolution(r, u.spec().h).angular);
}

/// Ball integral of g(field, x) for any FieldLike; g receives the field and the point.
template <FieldLike F, class G>
double ball_integral_of(const F& field, Point c, double r, G&& g, std::initializer_list<double> breaks = {}) {
    if (!field.contains_ball(c, r)) throw DomainError("ball is not contained in the field's domain");
    return integrate_ball([&](Point p) { return g(field, p); }, c, r, polar_resolution(r, field.spacing()), breaks);
}

template <FieldLike F, class G>
double circle_integral_of(const F& field, Point c, double r, G&& g) {
    if (!field.contains_ball(c, r)) throw DomainError("circle is not contained in the field's domain");
    return integrate_circle([&](Point p) { return g(field, p); }, c, r, polar_resolution(r, field.spacing()).angular);
}

}  // namespace uol
