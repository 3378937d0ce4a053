#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "uol/core.hpp"

namespace uol {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(std::size_t n) {
    if (n == 0) throw PreconditionError("Gauss-Legendre rule needs at least one node");
    GaussRule g{std::vector<double>(n), std::vector<double>(n)};
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.nodes[i] = -x;
        g.nodes[n - 1 - i] = x;
        g.weights[i] = w;
        g.weights[n - 1 - i] = w;
    }
    return g;
}

/// Node counts used by the polar rules.
struct PolarResolution {
    std::size_t radial = 8;
    std::size_t angular = 64;
};

/// Angular nodes max(64, ceil(4 pi r / h)), radial Gauss nodes max(8, ceil(2 r / h)).
inline PolarResolution polar_resolution(double r, double h) {
    const auto ang = static_cast<std::size_t>(std::ceil(4.0 * pi * r / h));
    const auto rad = static_cast<std::size_t>(std::ceil(2.0 * r / h));
    return {std::max<std::size_t>(8, rad), std::max<std::size_t>(64, ang)};
}

/// Trapezoid rule in angle for the line integral of f over the circle |x - c| = r.
template <class F>
double integrate_circle(F&& f, Point c, double r, std::size_t angular) {
    const double dtheta = two_pi / static_cast<double>(angular);
    double s = 0.0;
    for (std::size_t k = 0; k < angular; ++k) s += f(c + r * polar(dtheta * static_cast<double>(k)));
    return s * dtheta * r;
}

/// Gauss-Legendre in r on [a, b] times the angular trapezoid rule (annulus integral).
template <class F>
double integrate_annulus(F&& f, Point c, double a, double b, PolarResolution res) {
    if (b <= a) return 0.0;
    const GaussRule g = gauss_legendre(res.radial);
    const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    double s = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
        const double rho = mid + half * g.nodes[q];
        s += g.weights[q] * half * integrate_circle(f, c, rho, res.angular);
    }
    return s;
}

/// Integral over B_r(c); radial panels are split at the given breakpoints (kinks of f in |x - c|).
template <class F>
double integrate_ball(F&& f, Point c, double r, PolarResolution res, std::initializer_list<double> breaks = {}) {
    std::vector<double> edges{0.0};
    for (double b : breaks)
        if (b > 0.0 && b < r) edges.push_back(b);
    edges.push_back(r);
    std::sort(edges.begin(), edges.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        PolarResolution panel = res;
        const double frac = (edges[k + 1] - edges[k]) / r;
        panel.radial = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(res.radial))));
        s += integrate_annulus(f, c, edges[k], edges[k + 1], panel);
    }
    return s;
}

}  // namespace uol
