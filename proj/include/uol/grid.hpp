#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "uol/core.hpp"

namespace uol {

/// Uniform, axis-aligned node grid on a rectangle.
///
/// `nx` and `ny` count nodes; the physical extent is (nx-1)h by (ny-1)h
/// starting at `origin` (the lower-left node).
struct GridSpec {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double h = 0.0;
    Point origin{};

    static GridSpec make(std::size_t nx, std::size_t ny, double h, Point origin) {
        GridSpec s{nx, ny, h, origin};
        s.validate();
        return s;
    }

    /// Grid spanning [xmin,xmax] x [ymin,ymax]; h must divide both side lengths.
    static GridSpec covering(double xmin, double xmax, double ymin, double ymax, double h) {
        auto count = [h](double len, const char* axis) {
            const double cells = len / h;
            const double rounded = std::round(cells);
            if (!(h > 0.0) || rounded < 2.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
                std::ostringstream msg;
                msg << "grid spacing " << h << " does not divide the " << axis << " extent " << len;
                throw PreconditionError(msg.str());
            }
            return static_cast<std::size_t>(rounded) + 1;
        };
        return make(count(xmax - xmin, "x"), count(ymax - ymin, "y"), h, {xmin, ymin});
    }

    /// Square grid [-half, half]^2 with the given spacing.
    static GridSpec centered_square(double half, double h) { return covering(-half, half, -half, half, h); }

    void validate() const {
        if (nx < 3 || ny < 3) throw PreconditionError("grid needs at least 3 nodes per axis");
        if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("grid spacing must be positive and finite");
        if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) throw PreconditionError("grid origin must be finite");
    }

    std::size_t size() const noexcept { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    double width() const noexcept { return static_cast<double>(nx - 1) * h; }
    double height() const noexcept { return static_cast<double>(ny - 1) * h; }
    Point upper() const noexcept { return {origin.x + width(), origin.y + height()}; }
    Point center() const noexcept { return {origin.x + 0.5 * width(), origin.y + 0.5 * height()}; }

    Point node(std::size_t i, std::size_t j) const noexcept {
        return {origin.x + static_cast<double>(i) * h, origin.y + static_cast<double>(j) * h};
    }

    bool is_boundary(std::size_t i, std::size_t j) const noexcept {
        return i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
    }

    /// Whether p lies in the closed extent, with a relative slack for round-off.
    bool contains(Point p) const noexcept {
        const double slack = 1e-12 * std::max({1.0, width(), height()});
        const Point up = upper();
        return p.x >= origin.x - slack && p.x <= up.x + slack && p.y >= origin.y - slack && p.y <= up.y + slack;
    }

    bool contains_ball(Point c, double r) const noexcept {
        return contains({c.x - r, c.y - r}) && contains({c.x + r, c.y + r});
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Grid-sampled real function, row-major (x fastest).
class ScalarField {
public:
    ScalarField() = default;

    explicit ScalarField(GridSpec spec, double fill = 0.0) : spec_(spec), values_(spec.size(), fill) {
        spec_.validate();
        if (!std::isfinite(fill)) throw PreconditionError("scalar field values must be finite");
    }

    ScalarField(GridSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
        spec_.validate();
        if (values_.size() != spec_.size()) throw PreconditionError("value count does not match grid size");
        check_finite();
    }

    /// Samples f(Point) at every node.
    template <class F>
    static ScalarField sample(const GridSpec& spec, F&& f) {
        ScalarField u(spec);
        for (std::size_t j = 0; j < spec.ny; ++j)
            for (std::size_t i = 0; i < spec.nx; ++i) u(i, j) = f(spec.node(i, j));
        u.check_finite();
        return u;
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[spec_.index(i, j)]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[spec_.index(i, j)]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double sup_norm() const noexcept {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    double max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }
    double min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }

    void check_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) throw PreconditionError("scalar field contains a non-finite value");
    }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_grid(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }

    ScalarField& operator-=(const ScalarField& o) {
        require_same_grid(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }

    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    void require_same_grid(const ScalarField& o) const {
        if (!(spec_ == o.spec_)) throw PreconditionError("fields live on different grids");
    }

private:
    GridSpec spec_{};
    std::vector<double> values_;
};

/// Two components per node; houses gradients.
struct VectorField {
    GridSpec spec{};
    std::vector<double> x;
    std::vector<double> y;

    Vec2 operator()(std::size_t i, std::size_t j) const noexcept {
        const std::size_t k = spec.index(i, j);
        return {x[k], y[k]};
    }
};

/// Five-point Laplacian at interior nodes; boundary nodes carry 0.
inline ScalarField laplacian(const ScalarField& u) {
    const GridSpec& s = u.spec();
    ScalarField out(s);
    const double inv_h2 = 1.0 / (s.h * s.h);
    for (std::size_t j = 1; j + 1 < s.ny; ++j)
        for (std::size_t i = 1; i + 1 < s.nx; ++i)
            out(i, j) = (u(i + 1, j) + u(i - 1, j) + u(i, j + 1) + u(i, j - 1) - 4.0 * u(i, j)) * inv_h2;
    return out;
}

/// Central differences inside, second-order one-sided differences on the boundary.
inline VectorField gradient(const ScalarField& u) {
    const GridSpec& s = u.spec();
    VectorField g{s, std::vector<double>(s.size()), std::vector<double>(s.size())};
    const double inv_2h = 0.5 / s.h;
    for (std::size_t j = 0; j < s.ny; ++j) {
        for (std::size_t i = 0; i < s.nx; ++i) {
            const std::size_t k = s.index(i, j);
            if (i == 0)
                g.x[k] = (-3.0 * u(0, j) + 4.0 * u(1, j) - u(2, j)) * inv_2h;
            else if (i + 1 == s.nx)
                g.x[k] = (3.0 * u(i, j) - 4.0 * u(i - 1, j) + u(i - 2, j)) * inv_2h;
            else
                g.x[k] = (u(i + 1, j) - u(i - 1, j)) * inv_2h;
            if (j == 0)
                g.y[k] = (-3.0 * u(i, 0) + 4.0 * u(i, 1) - u(i, 2)) * inv_2h;
            else if (j + 1 == s.ny)
                g.y[k] = (3.0 * u(i, j) - 4.0 * u(i, j - 1) + u(i, j - 2)) * inv_2h;
            else
                g.y[k] = (u(i, j + 1) - u(i, j - 1)) * inv_2h;
        }
    }
    return g;
}

namespace detail {

struct CellCoords {
    std::size_t i;
    std::size_t j;
    double tx;
    double ty;
};

inline CellCoords locate(const GridSpec& s, Point p) {
    if (!s.contains(p)) {
        std::ostringstream msg;
        msg << "point (" << p.x << ", " << p.y << ") lies outside the grid extent";
        throw DomainError(msg.str());
    }
    const double fx = std::clamp((p.x - s.origin.x) / s.h, 0.0, static_cast<double>(s.nx - 1));
    const double fy = std::clamp((p.y - s.origin.y) / s.h, 0.0, static_cast<double>(s.ny - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(fx), s.nx - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(fy), s.ny - 2);
    return {i, j, fx - static_cast<double>(i), fy - static_cast<double>(j)};
}

inline double bilinear(std::span<const double> v, const GridSpec& s, const CellCoords& c) {
    const std::size_t k = s.index(c.i, c.j);
    const double v00 = v[k], v10 = v[k + 1], v01 = v[k + s.nx], v11 = v[k + s.nx + 1];
    return (1.0 - c.ty) * ((1.0 - c.tx) * v00 + c.tx * v10) + c.ty * ((1.0 - c.tx) * v01 + c.tx * v11);
}

}  // namespace detail

/// Bilinear interpolation; throws DomainError outside the extent.
inline double interpolate(const ScalarField& u, Point p) {
    return detail::bilinear(u.values(), u.spec(), detail::locate(u.spec(), p));
}

inline Vec2 interpolate(const VectorField& g, Point p) {
    const auto c = detail::locate(g.spec, p);
    return {detail::bilinear(g.x, g.spec, c), detail::bilinear(g.y, g.spec, c)};
}

/// Copy of `u` whose boundary nodes take the values of `g` (interior untouched).
inline ScalarField with_boundary(ScalarField u, const ScalarField& g) {
    u.require_same_grid(g);
    const GridSpec& s = u.spec();
    for (std::size_t j = 0; j < s.ny; ++j)
        for (std::size_t i = 0; i < s.nx; ++i)
            if (s.is_boundary(i, j)) u(i, j) = g(i, j);
    return u;
}

}  // namespace uol
