#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include "uol/grid.hpp"

namespace uol {

struct LinearSolveParams {
    /// Relative tolerance on ||Lap u - f|| / (1 + ||f||), discrete L2 over interior nodes.
    double residual_tol = 1e-10;
    /// Maximum number of multigrid V-cycles.
    int max_iterations = 100;

    void validate() const {
        if (!(residual_tol > 0.0)) throw PreconditionError("residual_tol must be positive");
        if (max_iterations < 1) throw PreconditionError("max_iterations must be at least 1");
    }
};

namespace detail {

/// Discrete L2 norm sqrt(h^2 sum v^2) over interior nodes.
inline double interior_l2(std::span<const double> v, std::size_t nx, std::size_t ny, double h) {
    double s = 0.0;
    for (std::size_t j = 1; j + 1 < ny; ++j)
        for (std::size_t i = 1; i + 1 < nx; ++i) s += v[j * nx + i] * v[j * nx + i];
    return std::sqrt(s) * h;
}

/// One level of the multigrid hierarchy. Dirichlet values live in `u` at boundary nodes.
struct MgLevel {
    std::size_t nx;
    std::size_t ny;
    double h;
    std::vector<double> u;
    std::vector<double> f;
    std::vector<double> r;

    MgLevel(std::size_t nx_, std::size_t ny_, double h_)
        : nx(nx_), ny(ny_), h(h_), u(nx_ * ny_, 0.0), f(nx_ * ny_, 0.0), r(nx_ * ny_, 0.0) {}

    bool coarsenable() const { return (nx - 1) % 2 == 0 && (ny - 1) % 2 == 0 && nx >= 5 && ny >= 5; }

    /// Red-black Gauss-Seidel; color of node (i,j) is (i+j) mod 2, red first.
    void smooth(int sweeps) {
        const double h2 = h * h;
        for (int s = 0; s < sweeps; ++s) {
            for (std::size_t color = 0; color < 2; ++color) {
                for (std::size_t j = 1; j + 1 < ny; ++j) {
                    std::size_t i = 1 + ((j + 1 + color) % 2);
                    for (; i + 1 < nx; i += 2) {
                        const std::size_t k = j * nx + i;
                        u[k] = 0.25 * (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx] - h2 * f[k]);
                    }
                }
            }
        }
    }

    void residual() {
        const double inv_h2 = 1.0 / (h * h);
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t j = 1; j + 1 < ny; ++j)
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                const std::size_t k = j * nx + i;
                r[k] = f[k] - (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx] - 4.0 * u[k]) * inv_h2;
            }
    }

    /// Conjugate gradients on -Lap e = -f with the current boundary values held fixed.
    void cg_solve(double rel_tol, std::size_t max_iter) {
        const std::size_t n = nx * ny;
        const double inv_h2 = 1.0 / (h * h);
        auto apply = [&](const std::vector<double>& p, std::vector<double>& out) {
            for (std::size_t j = 1; j + 1 < ny; ++j)
                for (std::size_t i = 1; i + 1 < nx; ++i) {
                    const std::size_t k = j * nx + i;
                    out[k] = (4.0 * p[k] - p[k - 1] - p[k + 1] - p[k - nx] - p[k + nx]) * inv_h2;
                }
        };
        residual();
        std::vector<double> res(n, 0.0), p(n, 0.0), ap(n, 0.0);
        // residual of -Lap u = -f is (-f) - (-Lap u) = -(f - Lap u)
        for (std::size_t k = 0; k < n; ++k) res[k] = -r[k];
        double rr = 0.0;
        for (double v : res) rr += v * v;
        const double stop = rel_tol * rel_tol * std::max(rr, 1e-300);
        p = res;
        for (std::size_t it = 0; it < max_iter && rr > stop; ++it) {
            apply(p, ap);
            double pap = 0.0;
            for (std::size_t k = 0; k < n; ++k) pap += p[k] * ap[k];
            if (!(pap > 0.0)) break;
            const double alpha = rr / pap;
            double rr_new = 0.0;
            for (std::size_t j = 1; j + 1 < ny; ++j)
                for (std::size_t i = 1; i + 1 < nx; ++i) {
                    const std::size_t k = j * nx + i;
                    u[k] += alpha * p[k];
                    res[k] -= alpha * ap[k];
                    rr_new += res[k] * res[k];
                }
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t k = 0; k < n; ++k) p[k] = res[k] + beta * p[k];
        }
    }
};

inline void restrict_full_weighting(const MgLevel& fine, MgLevel& coarse) {
    std::fill(coarse.f.begin(), coarse.f.end(), 0.0);
    const std::size_t nxf = fine.nx;
    for (std::size_t J = 1; J + 1 < coarse.ny; ++J)
        for (std::size_t I = 1; I + 1 < coarse.nx; ++I) {
            const std::size_t k = (2 * J) * nxf + 2 * I;
            const auto& r = fine.r;
            coarse.f[J * coarse.nx + I] =
                (4.0 * r[k] + 2.0 * (r[k - 1] + r[k + 1] + r[k - nxf] + r[k + nxf]) +
                 (r[k - nxf - 1] + r[k - nxf + 1] + r[k + nxf - 1] + r[k + nxf + 1])) /
                16.0;
        }
}

inline void prolong_add(const MgLevel& coarse, MgLevel& fine) {
    const std::size_t nxc = coarse.nx;
    for (std::size_t j = 1; j + 1 < fine.ny; ++j)
        for (std::size_t i = 1; i + 1 < fine.nx; ++i) {
            const std::size_t I = i / 2, J = j / 2;
            const bool ox = i % 2 == 1, oy = j % 2 == 1;
            const auto& e = coarse.u;
            double v;
            if (!ox && !oy)
                v = e[J * nxc + I];
            else if (ox && !oy)
                v = 0.5 * (e[J * nxc + I] + e[J * nxc + I + 1]);
            else if (!ox && oy)
                v = 0.5 * (e[J * nxc + I] + e[(J + 1) * nxc + I]);
            else
                v = 0.25 * (e[J * nxc + I] + e[J * nxc + I + 1] + e[(J + 1) * nxc + I] + e[(J + 1) * nxc + I + 1]);
            fine.u[j * fine.nx + i] += v;
        }
}

class Multigrid {
public:
    Multigrid(std::size_t nx, std::size_t ny, double h) {
        levels_.emplace_back(nx, ny, h);
        while (levels_.back().coarsenable() && levels_.size() < 24) {
            const auto& l = levels_.back();
            levels_.emplace_back((l.nx - 1) / 2 + 1, (l.ny - 1) / 2 + 1, 2.0 * l.h);
        }
    }

    MgLevel& top() { return levels_.front(); }

    void vcycle(std::size_t level = 0) {
        MgLevel& l = levels_[level];
        if (level + 1 == levels_.size()) {
            l.cg_solve(1e-12, 4 * l.nx * l.ny + 100);
            return;
        }
        l.smooth(2);
        l.residual();
        MgLevel& c = levels_[level + 1];
        restrict_full_weighting(l, c);
        std::fill(c.u.begin(), c.u.end(), 0.0);
        vcycle(level + 1);
        prolong_add(c, l);
        l.smooth(2);
    }

    bool single_level() const { return levels_.size() == 1; }

private:
    std::vector<MgLevel> levels_;
};

}  // namespace detail

/// Solves Lap u = f on interior nodes with u = g on boundary nodes.
///
/// `g` supplies Dirichlet data at its boundary nodes; interior values of `g`
/// are ignored. An optional initial guess warm-starts the V-cycles.
/// Throws SolverError (carrying the last relative residual) if the tolerance
/// is not met within `p.max_iterations` cycles.
inline ScalarField poisson_solve(const ScalarField& f, const ScalarField& g, const LinearSolveParams& p = {},
                                 const ScalarField* initial_guess = nullptr) {
    p.validate();
    f.require_same_grid(g);
    const GridSpec& s = f.spec();
    detail::Multigrid mg(s.nx, s.ny, s.h);
    auto& top = mg.top();
    std::copy(f.values().begin(), f.values().end(), top.f.begin());
    if (initial_guess) {
        f.require_same_grid(*initial_guess);
        std::copy(initial_guess->values().begin(), initial_guess->values().end(), top.u.begin());
    }
    for (std::size_t j = 0; j < s.ny; ++j)
        for (std::size_t i = 0; i < s.nx; ++i)
            if (s.is_boundary(i, j)) top.u[s.index(i, j)] = g(i, j);

    const double scale = 1.0 + detail::interior_l2(top.f, s.nx, s.ny, s.h);
    double rel = 0.0;
    for (int it = 0; it <= p.max_iterations; ++it) {
        top.residual();
        rel = detail::interior_l2(top.r, s.nx, s.ny, s.h) / scale;
        if (rel <= p.residual_tol) return ScalarField(s, std::move(top.u));
        if (it == p.max_iterations) break;
        if (mg.single_level())
            top.cg_solve(std::min(1e-3, p.residual_tol), 4 * s.size() + 100);
        else
            mg.vcycle();
    }
    std::ostringstream msg;
    msg << "poisson_solve did not reach residual " << p.residual_tol << " in " << p.max_iterations
        << " cycles (last " << rel << ")";
    throw SolverError(msg.str(), rel, p.max_iterations);
}

/// Relative residual ||Lap u - f|| / (1 + ||f||) in the solver's norm.
inline double poisson_relative_residual(const ScalarField& u, const ScalarField& f) {
    const GridSpec& s = u.spec();
    ScalarField r = laplacian(u) - f;
    return detail::interior_l2(r.values(), s.nx, s.ny, s.h) / (1.0 + detail::interior_l2(f.values(), s.nx, s.ny, s.h));
}

}  // namespace uol
