#pragma once

#include <concepts>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>

#include "uol/grid.hpp"

namespace uol {

/// Anything the free-boundary diagnostics can evaluate: a value, a gradient,
/// a nominal resolution that drives quadrature node counts, and a containment
/// test for balls.
template <class F>
concept FieldLike = requires(const F& f, Point p, double r) {
    { f.value(p) } -> std::convertible_to<double>;
    { f.gradient(p) } -> std::convertible_to<Vec2>;
    { f.spacing() } -> std::convertible_to<double>;
    { f.contains_ball(p, r) } -> std::convertible_to<bool>;
};

/// A FieldLike that can also report Lap u (used by the monotonicity defect term).
template <class F>
concept HasLaplacian = FieldLike<F> && requires(const F& f, Point p) {
    { f.laplacian(p) } -> std::convertible_to<double>;
};

/// Grid field viewed through bilinear interpolation of its nodal values,
/// central-difference gradient and five-point Laplacian.
class SampledField {
public:
    explicit SampledField(ScalarField u)
        : u_(std::make_shared<ScalarField>(std::move(u))),
          grad_(std::make_shared<VectorField>(uol::gradient(*u_))),
          lap_(std::make_shared<ScalarField>(extended_laplacian(*u_))) {}

    double value(Point p) const { return interpolate(*u_, p); }
    Vec2 gradient(Point p) const { return interpolate(*grad_, p); }
    /// Five-point Laplacian; boundary nodes repeat the nearest interior value.
    double laplacian(Point p) const { return interpolate(*lap_, p); }
    double spacing() const { return u_->spec().h; }
    bool contains_ball(Point c, double r) const { return u_->spec().contains_ball(c, r); }

    const ScalarField& field() const { return *u_; }
    const VectorField& gradient_field() const { return *grad_; }

private:
    static ScalarField extended_laplacian(const ScalarField& u) {
        ScalarField lap = uol::laplacian(u);
        const GridSpec& s = u.spec();
        for (std::size_t j = 0; j < s.ny; ++j)
            for (std::size_t i = 0; i < s.nx; ++i)
                if (s.is_boundary(i, j))
                    lap(i, j) = lap(std::clamp<std::size_t>(i, 1, s.nx - 2), std::clamp<std::size_t>(j, 1, s.ny - 2));
        return lap;
    }

    std::shared_ptr<const ScalarField> u_;
    std::shared_ptr<const VectorField> grad_;
    std::shared_ptr<const ScalarField> lap_;
};

/// Closed-form field: value, gradient and (optionally) Laplacian callbacks.
///
/// `spacing` sets the quadrature resolution; `half_extent` bounds the square
/// [-half, half]^2 around `center` on which the formula is trusted (infinite by default).
class AnalyticField {
public:
    using ValueFn = std::function<double(Point)>;
    using GradFn = std::function<Vec2(Point)>;

    AnalyticField(ValueFn value, GradFn grad, double spacing, ValueFn lap = {},
                  double half_extent = std::numeric_limits<double>::infinity(), Point center = {})
        : value_(std::move(value)),
          grad_(std::move(grad)),
          lap_(std::move(lap)),
          spacing_(spacing),
          half_(half_extent),
          center_(center) {
        if (!(spacing_ > 0.0)) throw PreconditionError("analytic field spacing must be positive");
    }

    double value(Point p) const { return value_(p); }
    Vec2 gradient(Point p) const { return grad_(p); }
    double laplacian(Point p) const {
        if (!lap_) throw PreconditionError("analytic field has no Laplacian");
        return lap_(p);
    }
    bool has_laplacian() const { return static_cast<bool>(lap_); }
    double spacing() const { return spacing_; }
    bool contains_ball(Point c, double r) const {
        return std::abs(c.x - center_.x) + r <= half_ + 1e-12 && std::abs(c.y - center_.y) + r <= half_ + 1e-12;
    }

    /// Same formula, sampled with a different nominal resolution.
    AnalyticField with_spacing(double h) const {
        AnalyticField copy = *this;
        if (!(h > 0.0)) throw PreconditionError("analytic field spacing must be positive");
        copy.spacing_ = h;
        return copy;
    }

private:
    ValueFn value_;
    GradFn grad_;
    ValueFn lap_;
    double spacing_;
    double half_;
    Point center_;
};

static_assert(HasLaplacian<SampledField>);
static_assert(HasLaplacian<AnalyticField>);

}  // namespace uol
