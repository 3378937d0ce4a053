#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "uol/free_boundary.hpp"
#include "uol/grid.hpp"
#include "uol/poisson.hpp"

namespace uol {

/// Cubic smoothstep: 0 for t <= 0, 1 for t >= 1, 3t^2 - 2t^3 in between.
inline double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * (3.0 - 2.0 * t);
}

enum class RegularizationSide { above, below };

/// Smoothed Heaviside families bracketing chi_{z>0} from above and below.
///
/// above: 1 for z >= 0 and smoothstep((z + eps)/eps) for z < 0, so >= chi_{z>0};
/// below: smoothstep(z/eps), so <= chi_{z>0}.
struct RegularizedNonlinearity {
    double epsilon = 0.1;
    RegularizationSide side = RegularizationSide::above;

    RegularizedNonlinearity(double eps, RegularizationSide s) : epsilon(eps), side(s) {
        if (!(epsilon > 0.0)) throw PreconditionError("regularization width must be positive");
    }

    double operator()(double z) const {
        if (side == RegularizationSide::above) return z >= 0.0 ? 1.0 : smoothstep((z + epsilon) / epsilon);
        return smoothstep(z / epsilon);
    }
};

struct ExtremalParams {
    /// Decreasing widths; empty means 0.1 * 2^-j continued while eps >= h^2.
    std::vector<double> epsilon_schedule;
    double fixed_point_tol = 1e-9;
    double outer_tol = 1e-8;
    int max_fixed_point_iterations = 2000;
    LinearSolveParams inner{1e-11, 100};

    void validate() const {
        for (std::size_t k = 0; k < epsilon_schedule.size(); ++k) {
            if (!(epsilon_schedule[k] > 0.0)) throw PreconditionError("epsilon schedule must be positive");
            if (k > 0 && !(epsilon_schedule[k] < epsilon_schedule[k - 1]))
                throw PreconditionError("epsilon schedule must be strictly decreasing");
        }
        if (!(fixed_point_tol > 0.0) || !(outer_tol > 0.0)) throw PreconditionError("tolerances must be positive");
        if (max_fixed_point_iterations < 1) throw PreconditionError("max_fixed_point_iterations must be at least 1");
        inner.validate();
    }

    /// Schedule actually used on a grid of spacing h.
    std::vector<double> schedule_for(double h) const {
        if (!epsilon_schedule.empty()) return epsilon_schedule;
        std::vector<double> s;
        for (double eps = 0.1; eps >= h * h; eps *= 0.5) s.push_back(eps);
        if (s.empty()) s.push_back(0.1);
        return s;
    }
};

enum class SolutionKind { maximal, minimal, minimizer };

inline const char* to_string(SolutionKind k) {
    switch (k) {
        case SolutionKind::maximal: return "maximal";
        case SolutionKind::minimal: return "minimal";
        default: return "minimizer";
    }
}

/// One epsilon level of an extremal solve.
struct EpsilonLevel {
    double epsilon = 0.0;
    int iterations = 0;
    double last_update = 0.0;
};

/// One accepted descent step (minimizer only).
struct DescentStep {
    int step = 0;
    double energy = 0.0;
    double gradient_norm = 0.0;
    double step_size = 0.0;
};

struct SolveReport {
    ScalarField u;
    SolutionKind kind = SolutionKind::maximal;
    double pde_residual = 0.0;
    std::vector<EpsilonLevel> levels;
    /// Largest step against the monotone direction between successive iterates.
    double monotone_violation = 0.0;
    /// Largest step against the monotone direction between successive epsilon limits.
    double epsilon_monotone_violation = 0.0;
    /// Minimizer only: winning start and its descent trace.
    std::string start;
    std::vector<DescentStep> trace;
    double energy = 0.0;

    int total_iterations() const {
        int n = 0;
        for (const auto& l : levels) n += l.iterations;
        return n;
    }
};

/// Options of the equation residual; nodes within `band_cells` spacings of the zero set are skipped.
struct ResidualOptions {
    double band_cells = 2.0;
    /// Optional mask; only nodes where it returns true are considered.
    std::function<bool(Point)> region;
};

/// Interior nodes farther than band_cells * h from {u = 0}.
inline std::vector<char> off_free_boundary_mask(const ScalarField& u, double band_cells) {
    const GridSpec& s = u.spec();
    std::vector<char> keep(s.size(), 1);
    const double band = band_cells * s.h;
    const FreeBoundary fb = extract_free_boundary(u);
    const auto reach = static_cast<long>(std::ceil(band / s.h)) + 1;
    for (const auto& pl : fb.segments) {
        const std::size_t nseg = std::max<std::size_t>(pl.segment_count(), pl.points.empty() ? 0 : 1);
        for (std::size_t k = 0; k < nseg; ++k) {
            const auto [a, b] = pl.points.size() == 1 ? std::pair{pl.points[0], pl.points[0]} : pl.segment(k);
            const long ic = std::lround((0.5 * (a.x + b.x) - s.origin.x) / s.h);
            const long jc = std::lround((0.5 * (a.y + b.y) - s.origin.y) / s.h);
            for (long j = jc - reach; j <= jc + reach; ++j) {
                if (j < 0 || j >= static_cast<long>(s.ny)) continue;
                for (long i = ic - reach; i <= ic + reach; ++i) {
                    if (i < 0 || i >= static_cast<long>(s.nx)) continue;
                    const Point p = s.node(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                    const Point d = b - a;
                    const double len2 = dot(d, d);
                    const double t = len2 > 0.0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
                    if (distance(p, a + t * d) <= band) keep[s.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))] = 0;
                }
            }
        }
    }
    return keep;
}

/// sup |Lap u + chi_{u>0}| over interior nodes away from the zero set.
inline double pde_residual(const ScalarField& u, const ResidualOptions& opt) {
    const GridSpec& s = u.spec();
    const ScalarField lap = laplacian(u);
    const auto keep = off_free_boundary_mask(u, opt.band_cells);
    double m = 0.0;
    for (std::size_t j = 1; j + 1 < s.ny; ++j)
        for (std::size_t i = 1; i + 1 < s.nx; ++i) {
            const std::size_t k = s.index(i, j);
            if (!keep[k]) continue;
            if (opt.region && !opt.region(s.node(i, j))) continue;
            m = std::max(m, std::abs(lap[k] + (u[k] > 0.0 ? 1.0 : 0.0)));
        }
    return m;
}

inline double pde_residual(const ScalarField& u) { return pde_residual(u, ResidualOptions{}); }

namespace detail {

inline SolveReport extremal_solve(const ScalarField& g, const ExtremalParams& p, RegularizationSide side) {
    p.validate();
    const GridSpec& s = g.spec();
    g.check_finite();
    const bool above = side == RegularizationSide::above;

    // explicit super/subsolution: Lap u0 = -1 (above) or Lap u0 = 0 (below)
    ScalarField u = poisson_solve(ScalarField(s, above ? -1.0 : 0.0), g, p.inner);

    SolveReport rep;
    rep.kind = above ? SolutionKind::maximal : SolutionKind::minimal;
    const auto schedule = p.schedule_for(s.h);
    ScalarField previous_limit;
    ScalarField rhs(s);
    for (std::size_t level = 0; level < schedule.size(); ++level) {
        const RegularizedNonlinearity beta(schedule[level], side);
        EpsilonLevel lv{schedule[level], 0, 0.0};
        bool converged = false;
        for (int it = 1; it <= p.max_fixed_point_iterations; ++it) {
            for (std::size_t k = 0; k < s.size(); ++k) rhs[k] = -beta(u[k]);
            ScalarField next = poisson_solve(rhs, g, p.inner, &u);
            double update = 0.0, violation = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) {
                const double d = next[k] - u[k];
                update = std::max(update, std::abs(d));
                violation = std::max(violation, above ? d : -d);
            }
            rep.monotone_violation = std::max(rep.monotone_violation, violation);
            u = std::move(next);
            lv.iterations = it;
            lv.last_update = update;
            if (update <= p.fixed_point_tol) {
                converged = true;
                break;
            }
        }
        rep.levels.push_back(lv);
        if (!converged) {
            std::ostringstream msg;
            msg << to_string(rep.kind) << " solve: fixed point not reached at eps = " << lv.epsilon << " after "
                << lv.iterations << " iterations (last update " << lv.last_update << ")";
            throw SolverError(msg.str(), lv.last_update, lv.iterations);
        }
        if (level > 0) {
            double diff = 0.0, violation = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) {
                const double d = u[k] - previous_limit[k];
                diff = std::max(diff, std::abs(d));
                violation = std::max(violation, above ? d : -d);
            }
            rep.epsilon_monotone_violation = std::max(rep.epsilon_monotone_violation, violation);
            if (diff < p.outer_tol) break;
        }
        previous_limit = u;
    }
    rep.pde_residual = pde_residual(u);
    rep.u = std::move(u);
    return rep;
}

}  // namespace detail

/// Maximal solution of Lap u = -chi_{u>0} with u = g on the boundary.
///
/// Monotone iteration from above: starts at the solution of Lap u = -1 and
/// iterates u <- poisson_solve(-beta_eps(u), g) through a decreasing schedule
/// of eps, warm-starting each level from the previous limit.
inline SolveReport maximal_solution(const ScalarField& g, const ExtremalParams& p = {}) {
    return detail::extremal_solve(g, p, RegularizationSide::above);
}

/// Minimal solution; mirror image starting from the harmonic extension of g.
inline SolveReport minimal_solution(const ScalarField& g, const ExtremalParams& p = {}) {
    return detail::extremal_solve(g, p, RegularizationSide::below);
}

}  // namespace uol
