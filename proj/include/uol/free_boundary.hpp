#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uol/grid.hpp"

namespace uol {

/// One connected piece of the zero set, with |grad u| interpolated at each vertex.
struct Polyline {
    std::vector<Point> points;
    std::vector<double> grad_norm;
    bool closed = false;

    double length() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < points.size(); ++k) s += distance(points[k], points[k + 1]);
        if (closed && points.size() > 1) s += distance(points.back(), points.front());
        return s;
    }

    std::size_t segment_count() const { return points.size() < 2 ? 0 : points.size() - (closed ? 0 : 1); }
    std::pair<Point, Point> segment(std::size_t k) const {
        return {points[k], points[(k + 1) % points.size()]};
    }
};

/// Extracted approximation of the free boundary, i.e. the zero level of u.
struct FreeBoundary {
    std::vector<Polyline> segments;

    bool empty() const { return segments.empty(); }

    std::size_t vertex_count() const {
        std::size_t n = 0;
        for (const auto& s : segments) n += s.points.size();
        return n;
    }

    double length() const {
        double s = 0.0;
        for (const auto& p : segments) s += p.length();
        return s;
    }

    /// Calls f(point, |grad u|) for every vertex.
    template <class F>
    void for_each_vertex(F&& f) const {
        for (const auto& s : segments)
            for (std::size_t k = 0; k < s.points.size(); ++k) f(s.points[k], s.grad_norm[k]);
    }
};

namespace detail {

// Edge numbering inside a cell: 0 bottom, 1 right, 2 top, 3 left.
// Corner bits: 1 lower-left, 2 lower-right, 4 upper-right, 8 upper-left.
inline std::size_t cell_edge_id(const GridSpec& s, std::size_t i, std::size_t j, int edge) {
    switch (edge) {
        case 0: return 2 * s.index(i, j);
        case 1: return 2 * s.index(i + 1, j) + 1;
        case 2: return 2 * s.index(i, j + 1);
        default: return 2 * s.index(i, j) + 1;
    }
}

}  // namespace detail

/// Marching-squares zero isoline of u with linear interpolation along cell edges.
///
/// Nodes with u > 0 are inside. Saddle cells are resolved by the sign of the
/// cell average. Polylines ending on the grid boundary are open, the rest closed.
inline FreeBoundary extract_free_boundary(const ScalarField& u) {
    const GridSpec& s = u.spec();
    const VectorField grad = gradient(u);

    std::vector<Point> verts;
    std::unordered_map<std::size_t, std::size_t> vertex_of_edge;
    std::vector<std::array<std::size_t, 2>> segs;

    auto edge_vertex = [&](std::size_t i, std::size_t j, int edge) {
        const std::size_t id = detail::cell_edge_id(s, i, j, edge);
        auto it = vertex_of_edge.find(id);
        if (it != vertex_of_edge.end()) return it->second;
        std::size_t ia = i, ja = j, ib = i, jb = j;
        switch (edge) {
            case 0: ib = i + 1; break;
            case 1: ia = i + 1; ib = i + 1; jb = j + 1; break;
            case 2: ja = j + 1; ib = i + 1; jb = j + 1; break;
            default: jb = j + 1; break;
        }
        const double ua = u(ia, ja), ub = u(ib, jb);
        const double t = ua / (ua - ub);
        const Point pa = s.node(ia, ja), pb = s.node(ib, jb);
        verts.push_back(pa + t * (pb - pa));
        vertex_of_edge.emplace(id, verts.size() - 1);
        return verts.size() - 1;
    };

    static constexpr std::array<std::array<int, 4>, 16> table = {{
        {-1, -1, -1, -1}, {3, 0, -1, -1}, {0, 1, -1, -1}, {3, 1, -1, -1},
        {1, 2, -1, -1},   {-2, -1, -1, -1}, {0, 2, -1, -1}, {3, 2, -1, -1},
        {2, 3, -1, -1},   {0, 2, -1, -1}, {-3, -1, -1, -1}, {1, 2, -1, -1},
        {3, 1, -1, -1},   {0, 1, -1, -1}, {3, 0, -1, -1},  {-1, -1, -1, -1},
    }};

    for (std::size_t j = 0; j + 1 < s.ny; ++j) {
        for (std::size_t i = 0; i + 1 < s.nx; ++i) {
            const double c0 = u(i, j), c1 = u(i + 1, j), c2 = u(i + 1, j + 1), c3 = u(i, j + 1);
            const int code = (c0 > 0 ? 1 : 0) | (c1 > 0 ? 2 : 0) | (c2 > 0 ? 4 : 0) | (c3 > 0 ? 8 : 0);
            auto add = [&](int a, int b) { segs.push_back({edge_vertex(i, j, a), edge_vertex(i, j, b)}); };
            const auto& row = table[static_cast<std::size_t>(code)];
            if (row[0] >= 0) {
                add(row[0], row[1]);
            } else if (row[0] == -2 || row[0] == -3) {
                const bool center_inside = 0.25 * (c0 + c1 + c2 + c3) > 0.0;
                // code 5: corners 0 and 2 inside; code 10: corners 1 and 3 inside
                const bool cut_odd = (code == 5) == center_inside;
                if (cut_odd) {
                    add(0, 1);
                    add(2, 3);
                } else {
                    add(3, 0);
                    add(1, 2);
                }
            }
        }
    }

    const std::size_t nv = verts.size();
    std::vector<std::array<std::size_t, 2>> adj(nv, {SIZE_MAX, SIZE_MAX});
    auto link = [&](std::size_t a, std::size_t b) {
        auto& slot = adj[a];
        if (slot[0] == SIZE_MAX)
            slot[0] = b;
        else
            slot[1] = b;
    };
    for (const auto& sg : segs) {
        link(sg[0], sg[1]);
        link(sg[1], sg[0]);
    }

    FreeBoundary fb;
    std::vector<char> used(nv, 0);
    auto walk = [&](std::size_t start, bool closed) {
        Polyline pl;
        pl.closed = closed;
        std::size_t prev = SIZE_MAX, cur = start;
        while (cur != SIZE_MAX && !used[cur]) {
            used[cur] = 1;
            pl.points.push_back(verts[cur]);
            const auto& nb = adj[cur];
            std::size_t next = nb[0] != prev ? nb[0] : nb[1];
            if (next == prev) next = SIZE_MAX;
            prev = cur;
            cur = next;
        }
        for (const Point& p : pl.points) pl.grad_norm.push_back(norm(interpolate(grad, p)));
        fb.segments.push_back(std::move(pl));
    };
    for (std::size_t v = 0; v < nv; ++v)
        if (!used[v] && adj[v][1] == SIZE_MAX) walk(v, false);
    for (std::size_t v = 0; v < nv; ++v)
        if (!used[v]) walk(v, true);
    return fb;
}

/// Largest second-difference Hessian norm (Frobenius) over interior nodes.
inline double hessian_norm_estimate(const ScalarField& u) {
    const GridSpec& s = u.spec();
    const double inv_h2 = 1.0 / (s.h * s.h);
    double m = 0.0;
    for (std::size_t j = 1; j + 1 < s.ny; ++j)
        for (std::size_t i = 1; i + 1 < s.nx; ++i) {
            const double uxx = (u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j)) * inv_h2;
            const double uyy = (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) * inv_h2;
            const double uxy = 0.25 * (u(i + 1, j + 1) - u(i + 1, j - 1) - u(i - 1, j + 1) + u(i - 1, j - 1)) * inv_h2;
            m = std::max(m, std::sqrt(uxx * uxx + uyy * uyy + 2.0 * uxy * uxy));
        }
    return m;
}

/// Default singular-point threshold 10 h ||D^2 u||.
inline double default_singular_threshold(const ScalarField& u) { return 10.0 * u.spec().h * hessian_norm_estimate(u); }

/// Centroids of clusters of free-boundary vertices where |grad u| <= tau.
///
/// Vertices are linked when closer than `link` (default 3h); clusters are
/// reported in order of their first vertex.
inline std::vector<Point> singular_points(const ScalarField& u, const FreeBoundary& fb, double tau, double link = -1.0) {
    if (link <= 0.0) link = 3.0 * u.spec().h;
    std::vector<Point> pts;
    fb.for_each_vertex([&](Point p, double g) {
        if (g <= tau) pts.push_back(p);
    });
    const std::size_t n = pts.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    // sort by x to keep the pairwise scan near-linear
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a].x < pts[b].x; });
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n && pts[order[b]].x - pts[order[a]].x <= link; ++b)
            if (distance(pts[order[a]], pts[order[b]]) <= link) parent[find(order[a])] = find(order[b]);
    std::vector<Point> sum;
    std::vector<double> count;
    std::unordered_map<std::size_t, std::size_t> slot;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t root = find(k);
        auto [it, inserted] = slot.emplace(root, sum.size());
        if (inserted) {
            sum.push_back({0.0, 0.0});
            count.push_back(0.0);
        }
        sum[it->second] = sum[it->second] + pts[k];
        count[it->second] += 1.0;
    }
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] = sum[c] / count[c];
    return sum;
}

inline std::vector<Point> singular_points(const ScalarField& u, const FreeBoundary& fb) {
    return singular_points(u, fb, default_singular_threshold(u));
}

/// Outward directions of the arcs leaving `center`, measured on an annulus.
struct ArcDirections {
    /// Polar angles in [0, 2pi) of the fitted outward tangents, sorted.
    std::vector<double> angles;
    /// Angle between consecutive arcs (wrapping), same order as `angles`.
    std::vector<double> gaps;
    /// max |gap - pi/2|.
    double right_angle_deviation = 0.0;
};

/// Splits annulus vertices into `arcs` angular groups at the largest gaps and
/// fits each group with a total-least-squares line through its centroid.
inline ArcDirections arc_directions(const FreeBoundary& fb, Point center, double r_in, double r_out, std::size_t arcs = 4) {
    std::vector<std::pair<double, Point>> pts;
    fb.for_each_vertex([&](Point p, double) {
        const double r = distance(p, center);
        if (r >= r_in && r <= r_out) {
            double a = std::atan2(p.y - center.y, p.x - center.x);
            if (a < 0) a += two_pi;
            pts.push_back({a, p});
        }
    });
    if (pts.size() < 2 * arcs) throw PreconditionError("too few free-boundary vertices in the annulus");
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t n = pts.size();
    std::vector<std::pair<double, std::size_t>> gaps;  // gap after index k
    for (std::size_t k = 0; k < n; ++k) {
        double g = pts[(k + 1) % n].first - pts[k].first;
        if (k + 1 == n) g += two_pi;
        gaps.push_back({g, k});
    }
    std::sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> cuts;
    for (std::size_t c = 0; c < arcs; ++c) cuts.push_back(gaps[c].second);
    std::sort(cuts.begin(), cuts.end());

    ArcDirections out;
    for (std::size_t c = 0; c < arcs; ++c) {
        const std::size_t begin = (cuts[c] + 1) % n;
        const std::size_t end = cuts[(c + 1) % arcs];  // inclusive
        std::vector<Point> group;
        for (std::size_t k = begin;; k = (k + 1) % n) {
            group.push_back(pts[k].second);
            if (k == end) break;
        }
        Point mean{0.0, 0.0};
        for (const Point& p : group) mean = mean + p;
        mean = mean / static_cast<double>(group.size());
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (const Point& p : group) {
            const Point d = p - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        Point dir = polar(phi);
        if (dot(dir, mean - center) < 0.0) dir = -dir;
        double a = std::atan2(dir.y, dir.x);
        if (a < 0) a += two_pi;
        out.angles.push_back(a);
    }
    std::sort(out.angles.begin(), out.angles.end());
    for (std::size_t c = 0; c < arcs; ++c) {
        double g = out.angles[(c + 1) % arcs] - out.angles[c];
        if (c + 1 == arcs) g += two_pi;
        out.gaps.push_back(g);
        out.right_angle_deviation = std::max(out.right_angle_deviation, std::abs(g - 0.5 * pi));
    }
    return out;
}

/// Points where the free boundary crosses the circle |x - center| = r.
inline std::vector<Point> circle_crossings(const FreeBoundary& fb, Point center, double r) {
    std::vector<Point> out;
    for (const auto& pl : fb.segments) {
        for (std::size_t k = 0; k < pl.segment_count(); ++k) {
            const auto [p, q] = pl.segment(k);
            const double dp = distance(p, center) - r, dq = distance(q, center) - r;
            if ((dp < 0.0) == (dq < 0.0)) continue;
            // solve |p + t (q - p) - c| = r on [0, 1]
            const Point d = q - p, f = p - center;
            const double a = dot(d, d), b = 2.0 * dot(f, d), c = dot(f, f) - r * r;
            const double disc = std::max(0.0, b * b - 4.0 * a * c);
            const double sq = std::sqrt(disc);
            double t = (-b + sq) / (2.0 * a);
            if (t < 0.0 || t > 1.0) t = (-b - sq) / (2.0 * a);
            out.push_back(p + std::clamp(t, 0.0, 1.0) * d);
        }
    }
    return out;
}

}  // namespace uol
