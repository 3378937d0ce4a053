#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uol/extremal.hpp"
#include "uol/free_boundary.hpp"
#include "uol/grid.hpp"
#include "uol/poisson.hpp"

namespace uol {

struct EnergyValue {
    double total = 0.0;
    double dirichlet = 0.0;
    double bulk = 0.0;
};

/// Discrete Dirichlet integral: each cell averages the squared difference
/// quotients of its two horizontal and its two vertical edges.
///
/// `region` (optional) keeps cells whose centre it accepts.
inline double dirichlet_integral(const ScalarField& v, const std::function<bool(Point)>& region = {}) {
    const GridSpec& s = v.spec();
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < s.ny; ++j)
        for (std::size_t i = 0; i + 1 < s.nx; ++i) {
            if (region && !region(s.node(i, j) + Point{0.5 * s.h, 0.5 * s.h})) continue;
            const double dxb = v(i + 1, j) - v(i, j), dxt = v(i + 1, j + 1) - v(i, j + 1);
            const double dyl = v(i, j + 1) - v(i, j), dyr = v(i + 1, j + 1) - v(i + 1, j);
            sum += 0.5 * (dxb * dxb + dxt * dxt + dyl * dyl + dyr * dyr);
        }
    return sum;  // the h^2 cell area cancels the 1/h^2 of the difference quotients
}

/// E(v) = int |grad v|^2 - 2 max(v, 0); bulk term by the nodal trapezoid rule.
inline EnergyValue energy(const ScalarField& v, const std::function<bool(Point)>& region = {}) {
    const GridSpec& s = v.spec();
    EnergyValue e;
    e.dirichlet = dirichlet_integral(v, region);
    double bulk = 0.0;
    for (std::size_t j = 0; j < s.ny; ++j)
        for (std::size_t i = 0; i < s.nx; ++i) {
            if (region && !region(s.node(i, j))) continue;
            const double wx = (i == 0 || i + 1 == s.nx) ? 0.5 : 1.0;
            const double wy = (j == 0 || j + 1 == s.ny) ? 0.5 : 1.0;
            bulk += wx * wy * std::max(v(i, j), 0.0);
        }
    e.bulk = 2.0 * bulk * s.h * s.h;
    e.total = e.dirichlet - e.bulk;
    return e;
}

struct DescentParams {
    /// Armijo sufficient-decrease constant (at most 1/2 so the full step is always accepted).
    double armijo = 1e-4;
    double shrink = 0.5;
    double min_step = 1e-10;
    /// Stop once the sup norm of the preconditioned gradient drops below this.
    double gradient_tol = 1e-9;
    int max_steps = 2000;
    std::vector<std::string> starts{"harmonic", "maximal", "minimal", "random", "torsion", "zero"};
    std::uint64_t seed = 1;
    /// Number of seeded random starts (named random-0, random-1, ...).
    int random_starts = 1;
    ExtremalParams extremal{};
    LinearSolveParams inner{1e-11, 100};

    void validate() const {
        if (!(armijo > 0.0 && armijo <= 0.5)) throw PreconditionError("armijo constant must lie in (0, 1/2]");
        if (!(shrink > 0.0 && shrink < 1.0)) throw PreconditionError("shrink factor must lie in (0, 1)");
        if (!(gradient_tol > 0.0) || !(min_step > 0.0)) throw PreconditionError("descent tolerances must be positive");
        if (max_steps < 1) throw PreconditionError("max_steps must be at least 1");
        if (starts.empty()) throw PreconditionError("descent needs at least one start");
        for (const auto& s : starts)
            if (s != "zero" && s != "harmonic" && s != "torsion" && s != "maximal" && s != "minimal" && s != "random")
                throw PreconditionError("unknown descent start '" + s + "'");
        inner.validate();
    }
};

/// Line search gave up; carries the iterate it stopped at.
class DescentError : public SolverError {
public:
    DescentError(const std::string& what, double last_residual, int iterations, ScalarField last)
        : SolverError(what, last_residual, iterations), last_(std::move(last)) {}
    const ScalarField& last_iterate() const noexcept { return last_; }

private:
    ScalarField last_;
};

/// Descent from one start. The direction d solves Lap d = -Lap v - chi_{v>0}
/// with d = 0 on the boundary, i.e. minus the energy gradient -2 Lap v - 2 chi
/// preconditioned by the Dirichlet Laplacian.
inline SolveReport descend(const ScalarField& g, ScalarField v, const DescentParams& p, const std::string& name) {
    const GridSpec& s = g.spec();
    v = with_boundary(std::move(v), g);
    SolveReport rep;
    rep.kind = SolutionKind::minimizer;
    rep.start = name;
    EnergyValue e = energy(v);
    ScalarField rhs(s);
    for (int step = 0;; ++step) {
        for (std::size_t k = 0; k < s.size(); ++k) rhs[k] = -(v[k] > 0.0 ? 1.0 : 0.0);
        ScalarField target = poisson_solve(rhs, g, p.inner, &v);
        ScalarField d = target - v;
        for (std::size_t j = 0; j < s.ny; ++j)
            for (std::size_t i = 0; i < s.nx; ++i)
                if (s.is_boundary(i, j)) d(i, j) = 0.0;
        const double gnorm = d.sup_norm();
        if (step == 0) rep.trace.push_back({0, e.total, gnorm, 0.0});
        if (gnorm <= p.gradient_tol || step >= p.max_steps) break;
        // directional derivative <grad E, d> = -2 int |grad d|^2
        const double slope = -2.0 * dirichlet_integral(d);
        double t = 1.0;
        for (;;) {
            ScalarField trial = v;
            for (std::size_t k = 0; k < s.size(); ++k) trial[k] += t * d[k];
            const EnergyValue et = energy(trial);
            if (et.total <= e.total + p.armijo * t * slope) {
                v = std::move(trial);
                e = et;
                break;
            }
            t *= p.shrink;
            if (t < p.min_step) {
                throw DescentError("line search failed from start '" + name + "'", gnorm, step, v);
            }
        }
        rep.trace.push_back({step + 1, e.total, gnorm, t});
    }
    rep.energy = e.total;
    rep.pde_residual = pde_residual(v);
    rep.u = std::move(v);
    return rep;
}

/// Initial field for a named start.
inline std::vector<std::pair<std::string, ScalarField>> descent_starts(const ScalarField& g, const DescentParams& p) {
    const GridSpec& s = g.spec();
    std::vector<std::pair<std::string, ScalarField>> out;
    for (const auto& name : p.starts) {
        if (name == "zero") {
            out.emplace_back(name, ScalarField(s));
        } else if (name == "harmonic") {
            out.emplace_back(name, poisson_solve(ScalarField(s), g, p.inner));
        } else if (name == "torsion") {
            out.emplace_back(name, poisson_solve(ScalarField(s, -1.0), g, p.inner));
        } else if (name == "maximal") {
            out.emplace_back(name, maximal_solution(g, p.extremal).u);
        } else if (name == "minimal") {
            out.emplace_back(name, minimal_solution(g, p.extremal).u);
        } else {
            std::mt19937_64 rng(p.seed);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            const double amp = 0.5 * (1.0 + g.sup_norm());
            for (int k = 0; k < p.random_starts; ++k) {
                ScalarField v(s);
                for (std::size_t q = 0; q < s.size(); ++q) v[q] = amp * dist(rng);
                out.emplace_back("random-" + std::to_string(k), std::move(v));
            }
        }
    }
    return out;
}

/// Runs every start and keeps the lowest energy; ties go to the smallest start name.
inline SolveReport minimize_energy(const ScalarField& g, const DescentParams& p = {}) {
    p.validate();
    g.check_finite();
    std::optional<SolveReport> best;
    for (auto& [name, v0] : descent_starts(g, p)) {
        SolveReport r = descend(g, std::move(v0), p, name);
        if (!best) {
            best = std::move(r);
            continue;
        }
        const double tie = 1e-12 * (1.0 + std::abs(best->energy));
        if (r.energy < best->energy - tie || (std::abs(r.energy - best->energy) <= tie && r.start < best->start))
            best = std::move(r);
    }
    return std::move(*best);
}

struct SecondVariationValue {
    double total = 0.0;
    double dirichlet = 0.0;
    double boundary = 0.0;
};

namespace detail {

// Midpoint-rule line integral of w^2 / |grad u| along fb. With support_only,
// segments where w vanishes are skipped and the floor applies only elsewhere.
inline double free_boundary_term(const ScalarField& w, const VectorField& grad_u, const FreeBoundary& fb, double floor,
                                 bool support_only) {
    double sum = 0.0;
    for (const auto& pl : fb.segments) {
        if (!support_only) {
            for (std::size_t k = 0; k < pl.points.size(); ++k)
                if (pl.grad_norm[k] < floor)
                    throw DegenerateFreeBoundary("|grad u| below the floor on the free boundary", pl.points[k], pl.grad_norm[k]);
        }
        for (std::size_t k = 0; k < pl.segment_count(); ++k) {
            const auto [a, b] = pl.segment(k);
            const Point m = 0.5 * (a + b);
            const double wm = interpolate(w, m);
            if (support_only && wm == 0.0) continue;
            const double gm = norm(interpolate(grad_u, m));
            if (gm < floor || gm == 0.0) throw DegenerateFreeBoundary("|grad u| vanishes on the support of w", m, gm);
            sum += distance(a, b) * wm * wm / gm;
        }
    }
    return sum;
}

}  // namespace detail

/// int |grad w|^2 - int_{u=0} w^2 / |grad u| with the default floor 10h on |grad u|.
inline SecondVariationValue second_variation(const ScalarField& u, const ScalarField& w, const FreeBoundary& fb,
                                             double gradient_floor = -1.0) {
    u.require_same_grid(w);
    const GridSpec& s = u.spec();
    for (std::size_t j = 0; j < s.ny; ++j)
        for (std::size_t i = 0; i < s.nx; ++i)
            if (s.is_boundary(i, j) && w(i, j) != 0.0) throw PreconditionError("test function must vanish on the boundary");
    if (gradient_floor < 0.0) gradient_floor = 10.0 * s.h;
    SecondVariationValue v;
    v.dirichlet = dirichlet_integral(w);
    v.boundary = detail::free_boundary_term(w, gradient(u), fb, gradient_floor, false);
    v.total = v.dirichlet - v.boundary;
    return v;
}

/// Radial cutoff: 1 for s <= 1/2, 0 for s >= 1, cubic smoothstep in between.
inline double radial_cutoff(double s) { return 1.0 - smoothstep(2.0 * s - 1.0); }

/// phi(|x - c| / radius) sampled on the grid.
inline ScalarField cutoff_bump(const GridSpec& spec, Point c, double radius) {
    return ScalarField::sample(spec, [&](Point p) { return radial_cutoff(distance(p, c) / radius); });
}

/// w_delta(x) = phi((x - x1)/r1) - phi((x - x1)/(delta r1)).
inline ScalarField probe_function(const GridSpec& spec, Point x1, double r1, double delta) {
    return ScalarField::sample(spec, [&](Point p) {
        const double s = distance(p, x1);
        return radial_cutoff(s / r1) - radial_cutoff(s / (delta * r1));
    });
}

struct ProbeResult {
    std::vector<double> delta;
    std::vector<SecondVariationValue> values;
    /// Least-squares slope of the boundary term against log(1/delta).
    double boundary_log_slope = 0.0;

    bool totals_non_increasing(double tol = 0.0) const {
        for (std::size_t k = 1; k < values.size(); ++k)
            if (values[k].total > values[k - 1].total + tol) return false;
        return true;
    }
};

/// Second variation along w_delta for each delta; |grad u| may be small only where w_delta vanishes.
inline ProbeResult instability_probe(const ScalarField& u, Point x1, double r1, std::span<const double> deltas) {
    const GridSpec& s = u.spec();
    if (!s.contains_ball(x1, r1)) throw DomainError("probe ball leaves the grid");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (!(deltas[k] > 0.0 && deltas[k] < 1.0)) throw PreconditionError("probe widths must lie in (0, 1)");
        if (k > 0 && !(deltas[k] < deltas[k - 1])) throw PreconditionError("probe widths must decrease");
    }
    const FreeBoundary fb = extract_free_boundary(u);
    const VectorField grad = gradient(u);
    ProbeResult res;
    for (double d : deltas) {
        const ScalarField w = probe_function(s, x1, r1, d);
        SecondVariationValue v;
        v.dirichlet = dirichlet_integral(w);
        v.boundary = detail::free_boundary_term(w, grad, fb, 0.0, true);
        v.total = v.dirichlet - v.boundary;
        res.delta.push_back(d);
        res.values.push_back(v);
    }
    if (res.delta.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(res.delta.size());
        for (std::size_t k = 0; k < res.delta.size(); ++k) {
            const double x = std::log(1.0 / res.delta[k]);
            sx += x;
            sy += res.values[k].boundary;
            sxx += x * x;
            sxy += x * res.values[k].boundary;
        }
        res.boundary_log_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return res;
}

}  // namespace uol
