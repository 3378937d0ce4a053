#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "uol/cross.hpp"
#include "uol/grid.hpp"
#include "uol/pulse.hpp"

namespace uol {

/// Dirichlet data given by a named closed-form expression.
///
/// Registry:
///   constant     value
///   quadratic    a + b x + c y + d x^2 + e x y + f y^2
///   pulse-trace  p((x - center) / scale) * scale^2, params center_x, center_y, scale
///   cross-trace  truncated cross expansion, param order (0 or 1)
struct BoundaryExpression {
    std::string name = "constant";
    std::map<std::string, double> params;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

inline const std::vector<std::string>& boundary_registry_names() {
    static const std::vector<std::string> names{"constant", "quadratic", "pulse-trace", "cross-trace"};
    return names;
}

/// Known parameter names and defaults for a registry entry.
inline std::map<std::string, double> boundary_defaults(const std::string& name) {
    if (name == "constant") return {{"value", 0.0}};
    if (name == "quadratic") return {{"a", 0.0}, {"b", 0.0}, {"c", 0.0}, {"d", 0.0}, {"e", 0.0}, {"f", 0.0}};
    if (name == "pulse-trace") return {{"center_x", 0.0}, {"center_y", 0.0}, {"scale", 1.0}};
    if (name == "cross-trace") return {{"order", 1.0}};
    throw PreconditionError("unknown boundary expression '" + name + "'");
}

/// The expression as a function of position.
inline std::function<double(Point)> boundary_function(const BoundaryExpression& b) {
    const auto defaults = boundary_defaults(b.name);
    for (const auto& [k, v] : b.params) {
        if (!defaults.count(k)) throw PreconditionError("boundary expression '" + b.name + "' has no parameter '" + k + "'");
        if (!std::isfinite(v)) throw PreconditionError("boundary parameter '" + k + "' must be finite");
    }
    auto get = [&](const char* k) { return b.param(k, defaults.at(k)); };
    if (b.name == "constant") {
        const double c = get("value");
        return [c](Point) { return c; };
    }
    if (b.name == "quadratic") {
        const double a = get("a"), bx = get("b"), cy = get("c"), d = get("d"), e = get("e"), f = get("f");
        return [=](Point p) { return a + bx * p.x + cy * p.y + d * p.x * p.x + e * p.x * p.y + f * p.y * p.y; };
    }
    if (b.name == "pulse-trace") {
        const Point c{get("center_x"), get("center_y")};
        const double s = get("scale");
        if (!(s > 0.0)) throw PreconditionError("pulse-trace scale must be positive");
        return [=](Point p) { return s * s * pulse((p - c) / s); };
    }
    const int order = static_cast<int>(get("order"));
    const CrossExpansion e = CrossExpansion::canonical(order);
    return [e](Point p) { return cross_value(e, p); };
}

/// Field carrying the expression at boundary nodes and 0 inside.
inline ScalarField boundary_field(const GridSpec& spec, const BoundaryExpression& b) {
    const auto f = boundary_function(b);
    ScalarField g(spec);
    for (std::size_t j = 0; j < spec.ny; ++j)
        for (std::size_t i = 0; i < spec.nx; ++i)
            if (spec.is_boundary(i, j)) g(i, j) = f(spec.node(i, j));
    g.check_finite();
    return g;
}

/// Reads boundary values as text lines "node-index value" (row-major index j*nx + i).
///
/// Every boundary node must be listed exactly once; blank lines and lines
/// starting with '#' are skipped.
inline ScalarField read_boundary_values(std::istream& is, const GridSpec& spec) {
    ScalarField g(spec);
    std::vector<char> seen(spec.size(), 0);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long long idx = -1;
        double v = 0.0;
        std::string extra;
        if (!(ls >> idx >> v) || (ls >> extra)) {
            throw PreconditionError("boundary file line " + std::to_string(lineno) + ": expected '<index> <value>'");
        }
        if (idx < 0 || static_cast<std::size_t>(idx) >= spec.size())
            throw PreconditionError("boundary file line " + std::to_string(lineno) + ": node index out of range");
        const auto k = static_cast<std::size_t>(idx);
        if (!spec.is_boundary(k % spec.nx, k / spec.nx))
            throw PreconditionError("boundary file line " + std::to_string(lineno) + ": node " + std::to_string(k) + " is interior");
        if (seen[k]) throw PreconditionError("boundary file line " + std::to_string(lineno) + ": duplicate node");
        if (!std::isfinite(v)) throw PreconditionError("boundary file line " + std::to_string(lineno) + ": value not finite");
        seen[k] = 1;
        g[k] = v;
    }
    for (std::size_t j = 0; j < spec.ny; ++j)
        for (std::size_t i = 0; i < spec.nx; ++i)
            if (spec.is_boundary(i, j) && !seen[spec.index(i, j)])
                throw PreconditionError("boundary file misses node " + std::to_string(spec.index(i, j)));
    return g;
}

inline ScalarField load_boundary_values(const std::string& path, const GridSpec& spec) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open boundary file " + path);
    return read_boundary_values(is, spec);
}

/// Writes the boundary nodes of g in the format read_boundary_values accepts.
inline void write_boundary_values(std::ostream& os, const ScalarField& g) {
    const GridSpec& s = g.spec();
    os.precision(17);
    for (std::size_t j = 0; j < s.ny; ++j)
        for (std::size_t i = 0; i < s.nx; ++i)
            if (s.is_boundary(i, j)) os << s.index(i, j) << ' ' << g(i, j) << '\n';
}

}  // namespace uol
