#pragma once

// Experiment runner: JSON configuration, task dispatch, CSV/JSON/image
// artifacts and a SHA-256 manifest. Needs nlohmann/json and OpenSSL (libcrypto).

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "uol/uol.hpp"

namespace uol {

using json = nlohmann::ordered_json;

/// Invalid experiment configuration; `field` is the offending JSON path.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> t{"solve-max", "solve-min", "minimize", "monotonicity",
                                            "blowup", "cross-check", "instability-probe"};
    return t;
}

/// Column layouts of the CSV artifacts, as shown by `uol --help`.
inline const char* csv_columns_help() {
    return "CSV artifacts by task:\n"
           "  solve-max, solve-min  levels.csv: epsilon,iterations,last_update\n"
           "                        free_boundary.csv: polyline,vertex,x,y,grad_norm\n"
           "  minimize              descent.csv: step,energy,gradient_norm,step_size\n"
           "                        free_boundary.csv: polyline,vertex,x,y,grad_norm\n"
           "  monotonicity          monotonicity.csv: center_x,center_y,r,phi,drift,defect,identity_error\n"
           "  blowup                blowup.csv: r,S,regime,a,b,c,fit_residual,theta\n"
           "                        rotation.csv: r,theta,distance\n"
           "  cross-check           phi_fit.csv: r,rho,phi_hat\n"
           "                        rotation.csv: r,theta,distance\n"
           "  instability-probe     probe.csv: delta,dirichlet,boundary,total\n";
}

struct ExperimentConfig {
    std::string task;
    GridSpec grid;
    /// Either a registry expression or a boundary file.
    BoundaryExpression boundary;
    std::string boundary_file;
    json params;
    std::string output_dir;
    std::uint64_t seed = 1;
    /// Normalized document with every default filled in.
    json echo;
};

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + key, "missing required field");
    return obj.at(key);
}

inline double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
    return d;
}

inline std::vector<double> numbers_at(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number_at(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

inline Point point_at(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected a point [x, y]");
    return {number_at(v[0], path + "[0]"), number_at(v[1], path + "[1]")};
}

inline std::vector<Point> points_at(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of points");
    std::vector<Point> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(point_at(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

inline json point_json(Point p) { return json::array({p.x, p.y}); }

// Fills defaults into params[key] and checks the type of supplied values.
inline void default_number(json& params, const char* key, double value, const std::string& path) {
    if (!params.contains(key))
        params[key] = value;
    else
        number_at(params[key], path + key);
}

inline void default_integer(json& params, const char* key, long value, long min, const std::string& path) {
    if (!params.contains(key)) {
        params[key] = value;
        return;
    }
    const json& v = params[key];
    const bool integral = v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (!integral) throw ConfigError(path + key, "expected an integer");
    if (v.get<double>() < static_cast<double>(min)) throw ConfigError(path + key, "must be at least " + std::to_string(min));
    params[key] = static_cast<long>(v.get<double>());
}

inline void reject_unknown(const json& params, const std::vector<std::string>& known, const std::string& path) {
    for (auto it = params.begin(); it != params.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) throw ConfigError(path + it.key(), "unknown parameter");
}

inline json default_field_source() { return json{{"source", "maximal"}}; }

inline void check_field_source(json& src, const std::string& path) {
    if (!src.is_object()) throw ConfigError(path, "expected an object");
    if (!src.contains("source")) src["source"] = "maximal";
    if (!src["source"].is_string()) throw ConfigError(path + ".source", "expected a string");
    const std::string s = src["source"];
    if (s == "cross") {
        default_integer(src, "order", 1, 0, path + ".");
        const double o = src["order"].get<double>();
        if (o != 0.0 && o != 1.0) throw ConfigError(path + ".order", "expected 0 or 1");
    } else if (s == "file") {
        if (!src.contains("path") || !src["path"].is_string()) throw ConfigError(path + ".path", "missing required field");
    } else if (s != "maximal" && s != "minimal" && s != "minimizer") {
        throw ConfigError(path + ".source", "unknown field source '" + s + "'");
    }
}

inline std::vector<double> dyadic_list(double first, int count, double factor) {
    std::vector<double> v;
    double x = first;
    for (int k = 0; k < count; ++k, x *= factor) v.push_back(x);
    return v;
}

}  // namespace detail

/// Default output root: $UOL_OUTPUT_ROOT if set, else ./uol-runs.
inline std::filesystem::path default_output_root() {
    if (const char* env = std::getenv("UOL_OUTPUT_ROOT"); env && *env) return env;
    return "uol-runs";
}

/// Validates a configuration document and fills in every default.
inline ExperimentConfig parse_config(const json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
    ExperimentConfig c;
    json echo = doc;

    const json& task = require(doc, "task", "");
    if (!task.is_string()) throw ConfigError("task", "expected a string");
    c.task = task.get<std::string>();
    if (std::find(task_names().begin(), task_names().end(), c.task) == task_names().end())
        throw ConfigError("task", "unknown task '" + c.task + "'");

    const json& dom = require(doc, "domain", "");
    if (!dom.is_object()) throw ConfigError("domain", "expected an object");
    const double h = number_at(require(dom, "h", "domain."), "domain.h");
    double xmin, xmax, ymin, ymax;
    if (dom.contains("half")) {
        const double half = number_at(dom["half"], "domain.half");
        xmin = ymin = -half;
        xmax = ymax = half;
    } else {
        xmin = number_at(require(dom, "xmin", "domain."), "domain.xmin");
        xmax = number_at(require(dom, "xmax", "domain."), "domain.xmax");
        ymin = number_at(require(dom, "ymin", "domain."), "domain.ymin");
        ymax = number_at(require(dom, "ymax", "domain."), "domain.ymax");
    }
    if (!(xmax > xmin) || !(ymax > ymin)) throw ConfigError("domain", "empty extent");
    try {
        c.grid = GridSpec::covering(xmin, xmax, ymin, ymax, h);
    } catch (const PreconditionError& e) {
        throw ConfigError("domain.h", e.what());
    }
    echo["domain"] = json{{"xmin", xmin}, {"xmax", xmax}, {"ymin", ymin}, {"ymax", ymax}, {"h", h}};

    json bnd = doc.contains("boundary") ? doc["boundary"] : json{{"expression", "constant"}};
    if (!bnd.is_object()) throw ConfigError("boundary", "expected an object");
    if (bnd.contains("file")) {
        if (!bnd["file"].is_string()) throw ConfigError("boundary.file", "expected a path string");
        c.boundary_file = bnd["file"];
    } else {
        if (!bnd.contains("expression")) bnd["expression"] = "constant";
        if (!bnd["expression"].is_string()) throw ConfigError("boundary.expression", "expected a string");
        c.boundary.name = bnd["expression"];
        json params = bnd.contains("params") ? bnd["params"] : json::object();
        if (!params.is_object()) throw ConfigError("boundary.params", "expected an object");
        std::map<std::string, double> defaults;
        try {
            defaults = boundary_defaults(c.boundary.name);
        } catch (const PreconditionError& e) {
            throw ConfigError("boundary.expression", e.what());
        }
        for (auto it = params.begin(); it != params.end(); ++it) {
            if (!defaults.count(it.key())) throw ConfigError("boundary.params." + it.key(), "unknown parameter");
            c.boundary.params[it.key()] = number_at(it.value(), "boundary.params." + it.key());
        }
        for (const auto& [k, v] : defaults)
            if (!params.contains(k)) params[k] = v;
        bnd["params"] = params;
    }
    echo["boundary"] = bnd;

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) throw ConfigError("seed", "expected an integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    echo["seed"] = c.seed;

    json p = doc.contains("params") ? doc["params"] : json::object();
    if (!p.is_object()) throw ConfigError("params", "expected an object");
    const std::string pp = "params.";
    const bool solves = c.task == "solve-max" || c.task == "solve-min" || c.task == "minimize" || c.task == "monotonicity" ||
                        c.task == "blowup" || c.task == "instability-probe";
    std::vector<std::string> known;
    if (solves) known = {"fixed_point_tol", "outer_tol", "max_fixed_point_iterations", "inner_tol", "epsilon_schedule"};
    const std::map<std::string, std::vector<std::string>> task_keys{
        {"solve-max", {"probe_points"}},
        {"solve-min", {"probe_points"}},
        {"minimize", {"starts", "gradient_tol", "max_steps", "random_starts"}},
        {"monotonicity", {"field", "centers", "radii", "with_defect"}},
        {"blowup", {"field", "center", "radii", "normalization", "trend_radii"}},
        {"cross-check", {"order", "samples", "tol", "synthesize", "r_max", "fit_radii", "rotation_radii"}},
        {"instability-probe", {"field", "center", "r1", "deltas"}},
    };
    const auto& extra = task_keys.at(c.task);
    known.insert(known.end(), extra.begin(), extra.end());
    reject_unknown(p, known, pp);
    if (solves) {
        default_number(p, "fixed_point_tol", 1e-9, pp);
        default_number(p, "outer_tol", 1e-8, pp);
        default_integer(p, "max_fixed_point_iterations", 2000, 1, pp);
        default_number(p, "inner_tol", 1e-11, pp);
        if (!p.contains("epsilon_schedule")) p["epsilon_schedule"] = json::array();
        if (!p["epsilon_schedule"].is_array()) throw ConfigError(pp + "epsilon_schedule", "expected an array");
        for (std::size_t k = 0; k < p["epsilon_schedule"].size(); ++k)
            number_at(p["epsilon_schedule"][k], pp + "epsilon_schedule[" + std::to_string(k) + "]");
    }
    const Point mid = c.grid.center();
    if (c.task == "solve-max" || c.task == "solve-min") {
        if (!p.contains("probe_points")) p["probe_points"] = json::array({point_json(mid)});
        points_at(p["probe_points"], pp + "probe_points");
    } else if (c.task == "minimize") {
        if (!p.contains("starts")) p["starts"] = DescentParams{}.starts;
        if (!p["starts"].is_array() || p["starts"].empty()) throw ConfigError(pp + "starts", "expected a non-empty array");
        default_number(p, "gradient_tol", 1e-9, pp);
        default_integer(p, "max_steps", 2000, 1, pp);
        default_integer(p, "random_starts", 1, 0, pp);
    } else if (c.task == "monotonicity") {
        if (!p.contains("field")) p["field"] = default_field_source();
        check_field_source(p["field"], pp + "field");
        points_at(require(p, "centers", pp), pp + "centers");
        numbers_at(require(p, "radii", pp), pp + "radii");
        if (!p.contains("with_defect")) p["with_defect"] = false;
        if (!p["with_defect"].is_boolean()) throw ConfigError(pp + "with_defect", "expected a boolean");
    } else if (c.task == "blowup") {
        if (!p.contains("field")) p["field"] = default_field_source();
        check_field_source(p["field"], pp + "field");
        point_at(require(p, "center", pp), pp + "center");
        numbers_at(require(p, "radii", pp), pp + "radii");
        if (!p.contains("normalization")) p["normalization"] = "spherical";
        if (p["normalization"] != "spherical" && p["normalization"] != "quadratic")
            throw ConfigError(pp + "normalization", "expected 'spherical' or 'quadratic'");
        if (!p.contains("trend_radii")) p["trend_radii"] = p["radii"];
        numbers_at(p["trend_radii"], pp + "trend_radii");
    } else if (c.task == "cross-check") {
        default_integer(p, "order", 1, 0, pp);
        default_integer(p, "samples", 1000, 2, pp);
        default_number(p, "tol", 1e-12, pp);
        if (!p.contains("synthesize")) p["synthesize"] = true;
        if (!p["synthesize"].is_boolean()) throw ConfigError(pp + "synthesize", "expected a boolean");
        default_number(p, "r_max", 1.0 / std::numbers::e, pp);
        if (!p.contains("fit_radii")) p["fit_radii"] = json::array({0.01, 0.02, 0.04, 0.08});
        numbers_at(p["fit_radii"], pp + "fit_radii");
        if (!p.contains("rotation_radii")) p["rotation_radii"] = dyadic_list(1.0 / 16, 5, 0.5);
        numbers_at(p["rotation_radii"], pp + "rotation_radii");
    } else if (c.task == "instability-probe") {
        if (!p.contains("field")) p["field"] = json{{"source", "cross"}, {"order", 1}};
        check_field_source(p["field"], pp + "field");
        if (p.contains("center")) point_at(p["center"], pp + "center");
        default_number(p, "r1", 0.25, pp);
        if (!p.contains("deltas")) p["deltas"] = dyadic_list(0.25, 5, 0.5);
        numbers_at(p["deltas"], pp + "deltas");
    }
    c.params = p;
    echo["params"] = p;

    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string()) throw ConfigError("output_dir", "expected a path string");
        c.output_dir = doc["output_dir"];
    } else {
        c.output_dir = (default_output_root() / c.task).string();
    }
    echo["output_dir"] = c.output_dir;
    c.echo = echo;
    return c;
}

/// Parses JSON text; syntax errors report line and column.
inline ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("", "cannot open configuration file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

/// Lower-case hex SHA-256 of a byte string.
inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
    return os.str();
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_file_bytes(p)); }

struct Artifact {
    std::string path;  // relative to the run directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// Collects artifacts written under one directory.
class ArtifactSink {
public:
    explicit ArtifactSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& dir() const { return dir_; }

    void write_text(const std::string& name, const std::string& text) { write(name, text); }

    void write(const std::string& name, const std::string& bytes) {
        const auto p = dir_ / name;
        std::ofstream os(p, std::ios::binary);
        if (!os) throw Error("cannot write " + p.string());
        os << bytes;
        os.close();
        if (!os) throw Error("failed writing " + p.string());
        artifacts_.push_back({name, sha256_hex(bytes), bytes.size()});
    }

    const std::vector<Artifact>& artifacts() const { return artifacts_; }

private:
    std::filesystem::path dir_;
    std::vector<Artifact> artifacts_;
};

inline std::string svg_heatmap(const ScalarField& u, const FreeBoundary& fb) {
    const GridSpec& s = u.spec();
    const std::size_t cells_x = s.nx - 1, cells_y = s.ny - 1;
    const std::size_t block = std::max<std::size_t>(1, (std::max(cells_x, cells_y) + 127) / 128);
    const std::size_t bx = (cells_x + block - 1) / block, by = (cells_y + block - 1) / block;
    const double px = 4.0;
    const double lo = u.min(), hi = u.max();
    const double W = static_cast<double>(bx) * px, H = static_cast<double>(by) * px;
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" shape-rendering=\"crispEdges\">\n";
    for (std::size_t J = 0; J < by; ++J) {
        for (std::size_t I = 0; I < bx; ++I) {
            double sum = 0.0;
            int n = 0;
            for (std::size_t j = J * block; j <= std::min((J + 1) * block, s.ny - 1); ++j)
                for (std::size_t i = I * block; i <= std::min((I + 1) * block, s.nx - 1); ++i) {
                    sum += u(i, j);
                    ++n;
                }
            const double v = sum / n;
            const int g = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 128;
            os << "<rect x=\"" << static_cast<double>(I) * px << "\" y=\"" << H - static_cast<double>(J + 1) * px
               << "\" width=\"" << px << "\" height=\"" << px << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
        }
    }
    const double sx = W / s.width(), sy = H / s.height();
    for (const auto& pl : fb.segments) {
        os << (pl.closed ? "<polygon" : "<polyline") << " fill=\"none\" stroke=\"red\" stroke-width=\"1\" points=\"";
        for (std::size_t k = 0; k < pl.points.size(); ++k) {
            if (k) os << ' ';
            os << (pl.points[k].x - s.origin.x) * sx << ',' << H - (pl.points[k].y - s.origin.y) * sy;
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline std::string pgm_bytes(const ScalarField& u) {
    std::ostringstream os(std::ios::binary);
    write_pgm(os, u);
    return os.str();
}

inline std::string free_boundary_csv(const FreeBoundary& fb) {
    std::ostringstream os;
    os << "polyline,vertex,x,y,grad_norm\n";
    for (std::size_t p = 0; p < fb.segments.size(); ++p)
        for (std::size_t k = 0; k < fb.segments[p].points.size(); ++k)
            os << p << ',' << k << ',' << fmt(fb.segments[p].points[k].x) << ',' << fmt(fb.segments[p].points[k].y) << ','
               << fmt(fb.segments[p].grad_norm[k]) << '\n';
    return os.str();
}

}  // namespace detail

/// Writes stem.pgm and, when a free boundary is given, stem.svg with the zero contour; returns the paths.
inline std::vector<std::filesystem::path> emit_heatmap(const ScalarField& u, const std::filesystem::path& stem,
                                                       const FreeBoundary* fb = nullptr) {
    std::vector<std::filesystem::path> out;
    auto put = [&](const std::filesystem::path& p, const std::string& bytes) {
        std::ofstream os(p, std::ios::binary);
        if (!os) throw Error("cannot write " + p.string());
        os << bytes;
        if (!os) throw Error("failed writing " + p.string());
        out.push_back(p);
    };
    put(std::filesystem::path(stem.string() + ".pgm"), detail::pgm_bytes(u));
    if (fb) put(std::filesystem::path(stem.string() + ".svg"), detail::svg_heatmap(u, *fb));
    return out;
}

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
};

struct RunReport {
    json config;
    std::string status = "ok";
    std::vector<std::string> errors;
    json metrics = json::object();
    std::vector<Check> checks;
    double wall_clock_seconds = 0.0;
    std::vector<Artifact> artifacts;
    std::filesystem::path directory;

    bool ok() const { return status == "ok"; }

    json to_json() const {
        json j;
        j["config"] = config;
        j["status"] = status;
        j["errors"] = errors;
        j["metrics"] = metrics;
        json cj = json::array();
        for (const auto& c : checks) cj.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}});
        j["checks"] = cj;
        j["wall_clock_seconds"] = wall_clock_seconds;
        json aj = json::array();
        for (const auto& a : artifacts) aj.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
        j["artifacts"] = aj;
        return j;
    }
};

namespace detail {

inline ExtremalParams extremal_params(const json& p) {
    ExtremalParams e;
    e.fixed_point_tol = p["fixed_point_tol"];
    e.outer_tol = p["outer_tol"];
    e.max_fixed_point_iterations = static_cast<int>(p["max_fixed_point_iterations"].get<double>());
    e.inner.residual_tol = p["inner_tol"];
    for (const auto& v : p["epsilon_schedule"]) e.epsilon_schedule.push_back(v.get<double>());
    return e;
}

inline DescentParams descent_params(const json& p, std::uint64_t seed) {
    DescentParams d;
    d.extremal = extremal_params(p);
    d.inner.residual_tol = p["inner_tol"];
    d.seed = seed;
    if (p.contains("starts")) d.starts = p["starts"].get<std::vector<std::string>>();
    if (p.contains("gradient_tol")) d.gradient_tol = p["gradient_tol"];
    if (p.contains("max_steps")) d.max_steps = static_cast<int>(p["max_steps"].get<double>());
    if (p.contains("random_starts")) d.random_starts = static_cast<int>(p["random_starts"].get<double>());
    return d;
}

inline ScalarField boundary_data(const ExperimentConfig& c) {
    if (!c.boundary_file.empty()) return load_boundary_values(c.boundary_file, c.grid);
    return boundary_field(c.grid, c.boundary);
}

inline ScalarField field_from_source(const ExperimentConfig& c, const json& src) {
    const std::string s = src["source"];
    if (s == "file") return load_field(src["path"].get<std::string>());
    if (s == "cross") {
        const CrossExpansion e = CrossExpansion::canonical(static_cast<int>(src["order"].get<double>()));
        return synthesize_cross_field(e, c.grid, 1.0 / std::numbers::e);
    }
    const ScalarField g = boundary_data(c);
    if (s == "minimal") return minimal_solution(g, extremal_params(c.params)).u;
    if (s == "minimizer") return minimize_energy(g, descent_params(c.params, c.seed)).u;
    return maximal_solution(g, extremal_params(c.params)).u;
}

inline void emit_field(ArtifactSink& sink, const ScalarField& u, const FreeBoundary& fb) {
    std::ostringstream bin(std::ios::binary);
    write_field(bin, u);
    sink.write("field.uol", bin.str());
    sink.write("field.pgm", pgm_bytes(u));
    sink.write_text("field.svg", svg_heatmap(u, fb));
    sink.write_text("free_boundary.csv", free_boundary_csv(fb));
}

inline void add_check(RunReport& r, const std::string& name, bool pass, double value, double tol) {
    r.checks.push_back({name, pass, value, tol});
    if (!pass) r.status = "failed";
}

inline void run_solve(const ExperimentConfig& c, RunReport& r, ArtifactSink& sink) {
    const ScalarField g = boundary_data(c);
    const ExtremalParams ep = extremal_params(c.params);
    const SolveReport rep = c.task == "solve-max" ? maximal_solution(g, ep) : minimal_solution(g, ep);
    const FreeBoundary fb = extract_free_boundary(rep.u);
    json probes = json::array();
    for (const auto& pt : c.params["probe_points"]) {
        const Point p{pt[0].get<double>(), pt[1].get<double>()};
        probes.push_back({{"x", p.x}, {"y", p.y}, {"u", interpolate(rep.u, p)}});
    }
    r.metrics["kind"] = to_string(rep.kind);
    r.metrics["probes"] = probes;
    r.metrics["pde_residual"] = rep.pde_residual;
    r.metrics["sup_norm"] = rep.u.sup_norm();
    r.metrics["min"] = rep.u.min();
    r.metrics["max"] = rep.u.max();
    r.metrics["epsilon_levels"] = rep.levels.size();
    r.metrics["total_iterations"] = rep.total_iterations();
    r.metrics["monotone_violation"] = rep.monotone_violation;
    r.metrics["epsilon_monotone_violation"] = rep.epsilon_monotone_violation;
    r.metrics["free_boundary_vertices"] = fb.vertex_count();
    r.metrics["free_boundary_length"] = fb.length();
    add_check(r, "monotone_iteration", rep.monotone_violation <= 10.0 * ep.fixed_point_tol, rep.monotone_violation,
              10.0 * ep.fixed_point_tol);
    add_check(r, "epsilon_monotonicity", rep.epsilon_monotone_violation <= 10.0 * ep.fixed_point_tol,
              rep.epsilon_monotone_violation, 10.0 * ep.fixed_point_tol);
    emit_field(sink, rep.u, fb);
    std::ostringstream lv;
    lv << "epsilon,iterations,last_update\n";
    for (const auto& l : rep.levels) lv << fmt(l.epsilon) << ',' << l.iterations << ',' << fmt(l.last_update) << '\n';
    sink.write_text("levels.csv", lv.str());
}

inline void run_minimize(const ExperimentConfig& c, RunReport& r, ArtifactSink& sink) {
    const ScalarField g = boundary_data(c);
    const SolveReport rep = minimize_energy(g, descent_params(c.params, c.seed));
    const FreeBoundary fb = extract_free_boundary(rep.u);
    const EnergyValue e = energy(rep.u);
    r.metrics["start"] = rep.start;
    r.metrics["energy"] = e.total;
    r.metrics["dirichlet"] = e.dirichlet;
    r.metrics["bulk"] = e.bulk;
    r.metrics["steps"] = rep.trace.empty() ? 0 : rep.trace.back().step;
    r.metrics["pde_residual"] = rep.pde_residual;
    r.metrics["sup_norm"] = rep.u.sup_norm();
    bool monotone = true;
    for (std::size_t k = 1; k < rep.trace.size(); ++k) monotone = monotone && rep.trace[k].energy <= rep.trace[k - 1].energy;
    add_check(r, "energy_monotone", monotone, monotone ? 1.0 : 0.0, 0.0);
    emit_field(sink, rep.u, fb);
    std::ostringstream tr;
    tr << "step,energy,gradient_norm,step_size\n";
    for (const auto& s : rep.trace) tr << s.step << ',' << fmt(s.energy) << ',' << fmt(s.gradient_norm) << ',' << fmt(s.step_size) << '\n';
    sink.write_text("descent.csv", tr.str());
}

inline void run_monotonicity(const ExperimentConfig& c, RunReport& r, ArtifactSink& sink) {
    const ScalarField u = field_from_source(c, c.params["field"]);
    const SampledField f(u);
    const auto radii = numbers_at(c.params["radii"], "params.radii");
    const bool with_defect = c.params["with_defect"];
    std::ostringstream csv;
    csv << "center_x,center_y,r,phi,drift,defect,identity_error\n";
    json traces = json::array();
    bool all_identity = true, all_monotone = true;
    double worst = 0.0;
    for (const Point x0 : points_at(c.params["centers"], "params.centers")) {
        const MonotonicityTrace t = monotonicity_trace(f, x0, radii, with_defect);
        const auto err = t.identity_errors();
        for (std::size_t k = 0; k < t.radii.size(); ++k) {
            csv << fmt(x0.x) << ',' << fmt(x0.y) << ',' << fmt(t.radii[k]) << ',' << fmt(t.phi[k]) << ',';
            if (k < t.drift.size())
                csv << fmt(t.drift[k]) << ',' << fmt(t.defect[k]) << ',' << fmt(err[k]) << '\n';
            else
                csv << ",,\n";
        }
        for (std::size_t k = 0; k < err.size(); ++k) worst = std::max(worst, err[k] / t.tolerance(k));
        all_identity = all_identity && t.identity_holds();
        all_monotone = all_monotone && t.non_decreasing();
        traces.push_back({{"center", point_json(x0)}, {"phi", t.phi}, {"drift", t.drift}, {"defect", t.defect},
                          {"identity_holds", t.identity_holds()}, {"non_decreasing", t.non_decreasing()}});
    }
    r.metrics["traces"] = traces;
    r.metrics["worst_identity_error_over_tolerance"] = worst;
    add_check(r, "drift_identity", all_identity, worst, 1.0);
    const std::string src = c.params["field"]["source"];
    if (src == "maximal" || src == "minimal" || src == "minimizer") add_check(r, "phi_non_decreasing", all_monotone, all_monotone, 1.0);
    else r.metrics["phi_non_decreasing"] = all_monotone;
    sink.write_text("monotonicity.csv", csv.str());
}

inline void run_blowup(const ExperimentConfig& c, RunReport& r, ArtifactSink& sink) {
    const ScalarField u = field_from_source(c, c.params["field"]);
    const SampledField f(u);
    const Point x0 = point_at(c.params["center"], "params.center");
    const auto radii = numbers_at(c.params["radii"], "params.radii");
    PhiTrend trend;
    trend.radii = numbers_at(c.params["trend_radii"], "params.trend_radii");
    for (double t : trend.radii) trend.phi.push_back(weiss_phi(f, x0, t));
    const Normalization n = c.params["normalization"] == "quadratic" ? Normalization::quadratic : Normalization::spherical;
    std::ostringstream csv;
    csv << "r,S,regime,a,b,c,fit_residual,theta\n";
    json fits = json::array();
    for (double rad : radii) {
        const BlowupFit b = blowup(f, x0, rad, n, trend);
        csv << fmt(rad) << ',' << fmt(b.S_value) << ',' << to_string(b.regime) << ',' << fmt(b.a) << ',' << fmt(b.b) << ','
            << fmt(b.c) << ',' << fmt(b.fit_residual) << ',' << fmt(b.rotation_angle) << '\n';
        fits.push_back({{"r", rad}, {"S", b.S_value}, {"regime", to_string(b.regime)}, {"a", b.a}, {"b", b.b}, {"c", b.c},
                        {"fit_residual", b.fit_residual}, {"rotation_angle", b.rotation_angle}});
    }
    r.metrics["phi_trend"] = {{"radii", trend.radii}, {"phi", trend.phi}, {"slope", classify_regime(trend).slope}};
    r.metrics["fits"] = fits;
    sink.write_text("blowup.csv", csv.str());
    try {
        std::ostringstream rc;
        rc << "r,theta,distance\n";
        for (const auto& s : rotation_fit(f, x0, radii)) rc << fmt(s.r) << ',' << fmt(s.theta) << ',' << fmt(s.distance) << '\n';
        sink.write_text("rotation.csv", rc.str());
    } catch (const PreconditionError& e) {
        r.metrics["rotation_fit"] = e.what();
    }
}

inline void run_cross_check(const ExperimentConfig& c, RunReport& r, ArtifactSink& sink) {
    const int order = static_cast<int>(c.params["order"].get<double>());
    const double tol = c.params["tol"];
    const CrossExpansion e = CrossExpansion::canonical(order);
    const auto thetas = theta_samples(static_cast<std::size_t>(c.params["samples"].get<double>()));
    json expansion;
    expansion["coefficients"] = {{"A0", e.A0}, {"phi1", e.phi1}, {"A_plus_1", e.A_plus_1}, {"A_minus_1", e.A_minus_1}, {"order", e.order}};
    json ode = json::object();
    for (int k = 0; k <= order; ++k)
        for (Side s : {Side::plus, Side::minus}) {
            const double res = ode_residual(e, k, s, thetas);
            const std::string name = "order" + std::to_string(k) + "_" + to_string(s);
            ode[name] = res;
            add_check(r, "ode_residual_" + name, res <= tol, res, tol);
        }
    expansion["ode_residuals"] = ode;
    const MatchingReport m = matching_conditions(e, tol);
    json conds = json::array();
    for (const auto& cd : m.conditions) {
        conds.push_back({{"name", cd.name}, {"defect", cd.defect}, {"pass", cd.pass}});
        add_check(r, "matching: " + cd.name, cd.pass, std::abs(cd.defect), tol);
    }
    expansion["matching_conditions"] = conds;
    if (order >= 1) {
        expansion["gradient_ratio_defect_order1"] = m.gradient_ratio_defect_order1;
        const ForcedCoefficients fc = forced_coefficients(e);
        expansion["forced"] = {{"phi1", fc.phi1}, {"A0", fc.A0}};
        const double dev = std::max(std::abs(fc.phi1 - e.phi1), std::abs(fc.A0 - e.A0));
        add_check(r, "forced_coefficients", dev <= tol, dev, tol);
    }
    r.metrics["expansion"] = expansion;
    sink.write_text("expansion.json", expansion.dump(2) + "\n");

    if (!c.params["synthesize"].get<bool>()) return;
    const ScalarField u = synthesize_cross_field(e, c.grid, c.params["r_max"].get<double>());
    const FreeBoundary fb = extract_free_boundary(u);
    emit_field(sink, u, fb);
    // exploratory diagnostics: reported, never failing the run
    json expl;
    try {
        const PhiFit fit = fit_phi(fb, {0.0, 0.0}, numbers_at(c.params["fit_radii"], "params.fit_radii"));
        expl["phi_fit"] = {{"slope", fit.slope}, {"residual", fit.residual}, {"affine_slope", fit.affine_slope}, {"intercept", fit.intercept}};
        std::ostringstream csv;
        csv << "r,rho,phi_hat\n";
        for (std::size_t k = 0; k < fit.radii.size(); ++k) csv << fmt(fit.radii[k]) << ',' << fmt(fit.rho[k]) << ',' << fmt(fit.phi_hat[k]) << '\n';
        sink.write_text("phi_fit.csv", csv.str());
    } catch (const Error& ex) {
        expl["phi_fit"] = ex.what();
    }
    try {
        const auto rot = rotation_fit(u, {0.0, 0.0}, numbers_at(c.params["rotation_radii"], "params.rotation_radii"));
        std::ostringstream csv;
        csv << "r,theta,distance\n";
        double drift = 0.0;
        for (std::size_t k = 0; k < rot.size(); ++k) {
            csv << fmt(rot[k].r) << ',' << fmt(rot[k].theta) << ',' << fmt(rot[k].distance) << '\n';
            if (k) drift = std::max(drift, quarter_turn_distance(rot[k].theta, rot[k - 1].theta));
        }
        expl["rotation_max_drift"] = drift;
        sink.write_text("rotation.csv", csv.str());
    } catch (const Error& ex) {
        expl["rotation_fit"] = ex.what();
    }
    const auto sp = singular_points(u, fb);
    json pts = json::array();
    for (Point p : sp) pts.push_back(point_json(p));
    expl["singular_points"] = pts;
    r.metrics["synthesized"] = expl;
}

inline void run_probe(const ExperimentConfig& c, RunReport& r, ArtifactSink& sink) {
    const ScalarField u = field_from_source(c, c.params["field"]);
    Point x1;
    if (c.params.contains("center")) {
        x1 = point_at(c.params["center"], "params.center");
    } else {
        const FreeBoundary fb = extract_free_boundary(u);
        const auto sp = singular_points(u, fb);
        if (sp.empty()) throw PreconditionError("no singular point detected; give params.center");
        const Point mid = c.grid.center();
        x1 = *std::min_element(sp.begin(), sp.end(), [&](Point a, Point b) { return distance(a, mid) < distance(b, mid); });
    }
    const auto deltas = numbers_at(c.params["deltas"], "params.deltas");
    const ProbeResult pr = instability_probe(u, x1, c.params["r1"].get<double>(), deltas);
    std::ostringstream csv;
    csv << "delta,dirichlet,boundary,total\n";
    json rows = json::array();
    bool negative = false;
    for (std::size_t k = 0; k < pr.delta.size(); ++k) {
        const auto& v = pr.values[k];
        csv << fmt(pr.delta[k]) << ',' << fmt(v.dirichlet) << ',' << fmt(v.boundary) << ',' << fmt(v.total) << '\n';
        rows.push_back({{"delta", pr.delta[k]}, {"dirichlet", v.dirichlet}, {"boundary", v.boundary}, {"total", v.total}});
        negative = negative || v.total < 0.0;
    }
    r.metrics["center"] = point_json(x1);
    r.metrics["values"] = rows;
    r.metrics["totals_non_increasing"] = pr.totals_non_increasing();
    r.metrics["boundary_log_slope"] = pr.boundary_log_slope;
    r.metrics["negative_total_reached"] = negative;
    sink.write_text("probe.csv", csv.str());
}

}  // namespace detail

/// Executes the configured task and writes report.json plus artifacts into the output directory.
///
/// Task failures are recorded in the report (status "failed") rather than thrown.
inline RunReport run(const ExperimentConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport r;
    r.config = c.echo;
    r.directory = c.output_dir;
    std::filesystem::create_directories(r.directory);
    detail::ArtifactSink sink(r.directory);
    try {
        if (c.task == "solve-max" || c.task == "solve-min")
            detail::run_solve(c, r, sink);
        else if (c.task == "minimize")
            detail::run_minimize(c, r, sink);
        else if (c.task == "monotonicity")
            detail::run_monotonicity(c, r, sink);
        else if (c.task == "blowup")
            detail::run_blowup(c, r, sink);
        else if (c.task == "cross-check")
            detail::run_cross_check(c, r, sink);
        else
            detail::run_probe(c, r, sink);
    } catch (const std::exception& e) {
        r.status = "failed";
        r.errors.push_back(e.what());
    }
    r.artifacts = sink.artifacts();
    r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream os(r.directory / "report.json");
    os << r.to_json().dump(2) << '\n';
    if (!os) throw Error("cannot write report.json in " + r.directory.string());
    return r;
}

struct ManifestCheck {
    bool ok = true;
    std::vector<std::string> problems;
    json report;
};

/// Re-hashes every artifact listed in run-dir/report.json.
inline ManifestCheck verify_run_dir(const std::filesystem::path& dir) {
    ManifestCheck m;
    const auto text = read_file_bytes(dir / "report.json");
    try {
        m.report = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("report.json is not valid JSON: ") + e.what());
    }
    for (const auto& a : m.report.at("artifacts")) {
        const auto p = dir / a.at("path").get<std::string>();
        if (!std::filesystem::exists(p)) {
            m.ok = false;
            m.problems.push_back("missing " + a.at("path").get<std::string>());
            continue;
        }
        if (sha256_file(p) != a.at("sha256").get<std::string>()) {
            m.ok = false;
            m.problems.push_back("hash mismatch " + a.at("path").get<std::string>());
        }
    }
    return m;
}

}  // namespace uol
