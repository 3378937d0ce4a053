// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "uol/runner.hpp"

using namespace uol;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Dyadic radii 8h, 16h, ... as long as the ball stays inside the grid.
std::vector<double> admissible_radii(const GridSpec& s, Point c, double cap) {
    std::vector<double> r;
    for (double v = 8.0 * s.h; v <= cap && s.contains_ball(c, v); v *= 2.0) r.push_back(v);
    return r;
}

std::vector<Point> sample_vertices(const FreeBoundary& fb, std::size_t count) {
    std::vector<Point> all;
    fb.for_each_vertex([&](Point p, double) { all.push_back(p); });
    std::vector<Point> out;
    if (all.empty()) return out;
    for (std::size_t k = 0; k < count; ++k) out.push_back(all[k * all.size() / count]);
    return out;
}

ScalarField pulse_data(double half, double h) { return boundary_field(GridSpec::centered_square(half, h), {"pulse-trace", {}}); }

// 1. maximal/minimal bracket with zero data
Outcome criterion1() {
    Stopwatch sw;
    const GridSpec s = GridSpec::centered_square(1.0, 1.0 / 256);
    const ScalarField g(s);
    const SolveReport mx = maximal_solution(g), mn = minimal_solution(g);
    const double t = sw.seconds();
    const double u0 = interpolate(mx.u, {0, 0}), ref = oracle::torsion_square(0, 0);
    double order = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) order = std::min(order, mx.u[k] - mn.u[k]);
    const double rel = std::abs(u0 - ref) / ref;
    Outcome o;
    o.pass = rel <= 0.01 && mn.u.sup_norm() <= 1e-8 && order >= 0.0 && t <= 60.0;
    o.detail = fmt("u(0,0)=%.7f oracle=%.7f rel=%.2e |min|=%.1e min(max-min)=%.1e t=%.1fs", u0, ref, rel, mn.u.sup_norm(), order, t);
    return o;
}

// 2. minimizer energy equals the maximal solution's energy
Outcome criterion2() {
    Outcome o;
    auto compare = [&](const char* name, const ScalarField& g) {
        const double em = energy(maximal_solution(g).u).total;
        const SolveReport z = minimize_energy(g);
        const double d = std::abs(z.energy - em);
        const bool ok = d <= 1e-3 * (1.0 + std::abs(em));
        o.pass = o.pass && ok;
        o.detail += fmt("%s: E(min)=%.6f E(max)=%.6f start=%s; ", name, z.energy, em, z.start.c_str());
    };
    compare("zero data", ScalarField(GridSpec::centered_square(1.0, 1.0 / 64)));
    compare("pulse trace [-1.125,1.125]^2", pulse_data(1.125, 1.0 / 64));
    return o;
}

// Informational: the same comparison on a larger square where the two differ.
std::string criterion2_info() {
    const ScalarField g = pulse_data(1.5, 1.0 / 32);
    const double em = energy(maximal_solution(g).u).total;
    DescentParams p;
    p.starts = {"harmonic", "maximal"};
    const SolveReport z = minimize_energy(g, p);
    return fmt("pulse trace on [-1.5,1.5]^2: E(max)=%.4f E(minimizer)=%.4f from '%s'", em, z.energy, z.start.c_str());
}

// 3. non-degeneracy at free-boundary points of a maximal solution
Outcome criterion3() {
    const double h = 1.0 / 128;
    const ScalarField u = maximal_solution(pulse_data(1.125, h)).u;
    const FreeBoundary fb = extract_free_boundary(u);
    const std::vector<double> radii{8 * h, 16 * h, 32 * h};
    Outcome o;
    std::size_t tested = 0;
    double worst = -1e300;
    fb.for_each_vertex([&](Point p, double) {
        if (!u.spec().contains_ball(p, 32 * h)) return;
        for (const auto& m : nondegeneracy_check(u, p, radii)) {
            worst = std::max(worst, m.margin - nondegeneracy_slack(m.r, h));
            if (m.margin > nondegeneracy_slack(m.r, h)) o.pass = false;
        }
        ++tested;
    });
    if (tested == 0) o.pass = false;
    o.detail = fmt("%zu zero-set points, max(margin - slack)=%.3e", tested, worst);
    return o;
}

// 4. monotonicity and drift identity on solver outputs
Outcome criterion4() {
    struct Case {
        std::string name;
        ScalarField u;
    };
    std::vector<Case> cases;
    {
        const ScalarField g(GridSpec::centered_square(1.0, 1.0 / 256));
        cases.push_back({"max, zero data", maximal_solution(g).u});
        cases.push_back({"min, zero data", minimal_solution(g).u});
    }
    {
        const ScalarField g = pulse_data(1.125, 1.0 / 128);
        cases.push_back({"max, pulse", maximal_solution(g).u});
        cases.push_back({"min, pulse", minimal_solution(g).u});
        cases.push_back({"minimizer, pulse", minimize_energy(g).u});
    }
    Outcome o;
    std::size_t traces = 0;
    double worst_ratio = 0.0, slowest = 0.0;
    for (const auto& c : cases) {
        std::vector<Point> centers{{0, 0}, {0.3, -0.2}, {-0.5, 0.45}};
        for (Point p : sample_vertices(extract_free_boundary(c.u), 8)) centers.push_back(p);
        for (Point x0 : centers) {
            const auto radii = admissible_radii(c.u.spec(), x0, 0.5);
            if (radii.size() < 2) continue;
            Stopwatch sw;
            const MonotonicityTrace t = monotonicity_trace(c.u, x0, radii);
            slowest = std::max(slowest, sw.seconds());
            ++traces;
            const auto err = t.identity_errors();
            for (std::size_t k = 0; k < err.size(); ++k) worst_ratio = std::max(worst_ratio, err[k] / t.tolerance(k));
            if (!t.identity_holds() || !t.non_decreasing()) {
                o.pass = false;
                o.detail += fmt("[%s at (%.3f,%.3f) fails] ", c.name.c_str(), x0.x, x0.y);
            }
        }
    }
    o.pass = o.pass && slowest <= 5.0;
    o.detail += fmt("%zu traces over %zu fields, max identity error/tol=%.3f, slowest trace %.2fs", traces, cases.size(), worst_ratio, slowest);
    return o;
}

// 5. Phi of x1^2 - x2^2
Outcome criterion5() {
    const ScalarField q = ScalarField::sample(GridSpec::centered_square(1.0, 1.0 / 256), [](Point p) { return p.x * p.x - p.y * p.y; });
    Outcome o;
    for (double r : {0.125, 0.25, 0.5}) {
        const double phi = weiss_phi(q, {0, 0}, r);
        const double ref = oracle::phi_harmonic_quadratic(1.0);
        o.pass = o.pass && std::abs(phi - ref) <= 1e-2;
        o.detail += fmt("Phi(%.3f)=%.6f ", r, phi);
    }
    return o;
}

// 6. frequency defects of random harmonic polynomials
Outcome criterion6() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const GridSpec s = GridSpec::centered_square(1.25, 1.0 / 256);
    Outcome o;
    double min_defect = 1e300, max_homog = 0.0, worst_oracle = 0.0;
    for (int alpha : {2, 3}) {
        for (int n = 0; n < 20; ++n) {
            oracle::HarmonicPoly w;
            const int top = alpha + static_cast<int>(rng() % 3);
            w.a.assign(top, 0.0);
            w.b.assign(top, 0.0);
            for (int k = alpha; k <= top; ++k) {
                w.a[k - 1] = coef(rng);
                w.b[k - 1] = coef(rng);
            }
            const ScalarField f = ScalarField::sample(s, [&](Point p) { return w.value(p.x, p.y); });
            const FrequencyResult r = frequency_defect(f, alpha);
            min_defect = std::min(min_defect, r.defect);
            worst_oracle = std::max(worst_oracle, std::abs(r.defect - w.frequency_defect(alpha)));
            if (r.defect < -1e-3 || !r.preconditions_ok) o.pass = false;
        }
        for (int n = 0; n < 5; ++n) {
            oracle::HarmonicPoly w;
            w.a.assign(alpha, 0.0);
            w.b.assign(alpha, 0.0);
            w.a[alpha - 1] = coef(rng);
            w.b[alpha - 1] = coef(rng);
            const ScalarField f = ScalarField::sample(s, [&](Point p) { return w.value(p.x, p.y); });
            const FrequencyResult r = frequency_defect(f, alpha);
            max_homog = std::max(max_homog, std::abs(r.defect));
            if (std::abs(r.defect) > 1e-3) o.pass = false;
        }
    }
    o.detail = fmt("40 random: min defect=%.4e, max |defect - closed form|=%.2e; homogeneous: max |defect|=%.2e", min_defect,
                   worst_oracle, max_homog);
    return o;
}

// 7. blow-up classification on planted fields sampled in closed form
Outcome criterion7() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double h = 1e-4, r = 1e-2;
    const std::vector<double> trend_radii{r, 2 * r, 4 * r, 8 * r};
    Outcome o;
    int regimes_ok = 0, total = 0;
    double worst = 0.0;
    for (int n = 0; n < 10; ++n) {
        double a = unit(rng), b = unit(rng);
        const double len = std::hypot(a, b);
        if (len < 0.2) {
            a /= len * 5;
            b /= len * 5;
        }
        auto q = [=](Point p) { return a * (p.x * p.x - p.y * p.y) + b * 2 * p.x * p.y; };
        auto qg = [=](Point p) { return Vec2{2 * a * p.x + 2 * b * p.y, -2 * a * p.y + 2 * b * p.x}; };
        auto cube = [](Point p) { return std::pow(norm(p), 3); };
        auto cubeg = [](Point p) { return 3 * norm(p) * p; };
        struct Planted {
            const char* name;
            AnalyticField f;
            Regime regime;
            bool carries_q;
        };
        const std::vector<Planted> fields{
            {"q+|x|^3", AnalyticField([=](Point p) { return q(p) + cube(p); }, [=](Point p) { return qg(p) + cubeg(p); }, h),
             Regime::homogeneous_solution, true},
            {"q(-log|x|)+|x|^3",
             AnalyticField([=](Point p) { const double s = norm(p); return s == 0 ? 0.0 : -std::log(s) * q(p) + cube(p); },
                           [=](Point p) {
                               const double s = norm(p);
                               if (s == 0) return Vec2{0, 0};
                               return -std::log(s) * qg(p) - (q(p) / (s * s)) * p + cubeg(p);
                           },
                           h),
             Regime::polynomial, true},
            {"|x|^3", AnalyticField(cube, cubeg, h), Regime::trivial, false},
        };
        for (const auto& pf : fields) {
            PhiTrend trend;
            trend.radii = trend_radii;
            for (double t : trend_radii) trend.phi.push_back(weiss_phi(pf.f, {0, 0}, t));
            const BlowupFit fit = blowup(pf.f, {0, 0}, r, Normalization::spherical, trend);
            ++total;
            const bool regime_ok = fit.regime == pf.regime;
            regimes_ok += regime_ok;
            double err = 0.0;
            if (pf.carries_q) {
                // planted direction q / |q|_{L2(dB_1)}; |q| on the circle is sqrt(pi (a^2 + b^2))
                const double nq = std::sqrt(oracle::pi * (a * a + b * b));
                const double da = fit.a - a / nq, db = fit.b - b / nq;
                err = std::sqrt(da * da + db * db) * std::sqrt(oracle::pi);  // L2(dB_1) norm of the difference
            }
            worst = std::max(worst, err);
            if (!regime_ok || err > 1e-2) {
                o.pass = false;
                o.detail += fmt("[%s #%d: %s err %.2e] ", pf.name, n, to_string(fit.regime), err);
            }
        }
    }
    o.detail += fmt("%d/%d regimes recovered, max relative L2 coefficient error=%.2e", regimes_ok, total, worst);
    return o;
}

// 8. cross expansion exactness
Outcome criterion8() {
    Stopwatch sw;
    const CrossExpansion e = CrossExpansion::canonical(1);
    const auto th = theta_samples(1000);
    double ode = 0.0;
    for (int k : {0, 1})
        for (Side s : {Side::plus, Side::minus}) ode = std::max(ode, ode_residual(e, k, s, th));
    const MatchingReport m = matching_conditions(e);
    CrossExpansion perturbed = e;
    perturbed.A0 = 0.2;
    perturbed.phi1 = 0.3;
    const ForcedCoefficients fc = forced_coefficients(perturbed);
    const double forced = std::max(std::abs(fc.A0 - 1.0 / (2.0 * oracle::pi)), std::abs(fc.phi1 + 0.5));
    const double t = sw.seconds();
    Outcome o;
    o.pass = ode <= 1e-12 && m.all_pass() && m.max_defect() <= 1e-12 && forced <= 1e-12 && t <= 1.0;
    o.detail = fmt("max ODE residual=%.1e, max matching defect=%.1e (%zu conditions), forced A0/phi1 deviation=%.1e, t=%.3fs", ode,
                   m.max_defect(), m.conditions.size(), forced, t);
    return o;
}

struct CrossFixture {
    double h = 1.0 / 2048;
    ScalarField u;
    FreeBoundary fb;
    CrossFixture()
        : u(synthesize_cross_field(CrossExpansion::canonical(1), GridSpec::centered_square(0.25, h), 1.0 / std::numbers::e)),
          fb(extract_free_boundary(u)) {}
};

// 9. instability probe on the synthesized cross
Outcome criterion9(const CrossFixture& cf) {
    Stopwatch sw;
    const std::vector<double> deltas{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    const ProbeResult pr = instability_probe(cf.u, {0, 0}, 0.25, deltas);
    const double t = sw.seconds();
    bool negative = false;
    std::string totals;
    for (const auto& v : pr.values) {
        negative = negative || v.total < 0.0;
        totals += fmt("%.3f ", v.total);
    }
    Outcome o;
    o.pass = pr.totals_non_increasing() && negative && pr.boundary_log_slope > 0.0 && t <= 30.0;
    o.detail = fmt("totals %s| non-increasing=%s negative=%s boundary slope=%.3f t=%.1fs", totals.c_str(),
                   pr.totals_non_increasing() ? "yes" : "no", negative ? "yes" : "no", pr.boundary_log_slope, t);
    return o;
}

// 10. free-boundary angle fit
Outcome criterion10(const CrossFixture& cf) {
    const PhiFit f = fit_phi(cf.fb, {0, 0}, std::vector<double>{0.01, 0.02, 0.04, 0.08});
    Outcome o;
    o.pass = std::abs(f.slope + 0.5) <= 0.02 * 0.5;
    o.detail = fmt("slope=%.5f (affine %.4f, intercept %.4f)", f.slope, f.affine_slope, f.intercept);
    return o;
}

// 11. rotation-fit stability
Outcome criterion11(const CrossFixture& cf) {
    const std::vector<double> radii{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
    const auto rot = rotation_fit(cf.u, {0, 0}, radii);
    double drift = 0.0;
    for (std::size_t k = 1; k < rot.size(); ++k) drift = std::max(drift, quarter_turn_distance(rot[k].theta, rot[k - 1].theta));
    Outcome o;
    o.pass = drift <= 1e-2;
    o.detail = fmt("max |theta(2r) - theta(r)|=%.2e over %zu radii", drift, radii.size());
    return o;
}

// 12. reproducibility of runner output
bool metrics_close(const json& a, const json& b, double rel, std::string& where, const std::string& path = "") {
    if (a.type() != b.type() && !(a.is_number() && b.is_number())) {
        where = path;
        return false;
    }
    if (a.is_number()) {
        const double x = a.get<double>(), y = b.get<double>();
        if (std::abs(x - y) > rel * std::max(std::abs(x), std::abs(y))) {
            where = path;
            return false;
        }
        return true;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) {
            where = path;
            return false;
        }
        for (auto it = a.begin(); it != a.end(); ++it)
            if (!b.contains(it.key()) || !metrics_close(it.value(), b[it.key()], rel, where, path + "." + it.key())) return false;
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            where = path;
            return false;
        }
        for (std::size_t k = 0; k < a.size(); ++k)
            if (!metrics_close(a[k], b[k], rel, where, path + "[" + std::to_string(k) + "]")) return false;
        return true;
    }
    if (a != b) where = path;
    return a == b;
}

Outcome criterion12() {
    const std::vector<std::string> configs{
        R"({"task":"solve-max","domain":{"half":1,"h":0.03125},"boundary":{"expression":"pulse-trace"}})",
        R"({"task":"minimize","domain":{"half":1,"h":0.0625},"seed":11,"params":{"starts":["random","harmonic"],"random_starts":3}})",
        R"({"task":"cross-check","domain":{"half":0.25,"h":0.001953125}})",
        R"({"task":"blowup","domain":{"half":0.25,"h":0.001953125},"params":{"field":{"source":"cross"},"center":[0,0],"radii":[0.02,0.04]}})",
        R"({"task":"instability-probe","domain":{"half":0.25,"h":0.001953125}})",
    };
    const auto root = std::filesystem::temp_directory_path() / ("uol-acceptance-" + std::to_string(::getpid()));
    Outcome o;
    std::size_t artifacts = 0;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        RunReport reps[2];
        for (int rep = 0; rep < 2; ++rep) {
            json doc = json::parse(configs[k]);
            doc["output_dir"] = (root / (std::to_string(k) + "-" + std::to_string(rep))).string();
            reps[rep] = run(parse_config(doc));
        }
        std::string where;
        if (!metrics_close(reps[0].metrics, reps[1].metrics, 1e-12, where)) {
            o.pass = false;
            o.detail += "[metrics differ at " + where + "] ";
        }
        if (reps[0].artifacts.size() != reps[1].artifacts.size()) o.pass = false;
        for (std::size_t a = 0; a < std::min(reps[0].artifacts.size(), reps[1].artifacts.size()); ++a) {
            ++artifacts;
            if (reps[0].artifacts[a].sha256 != reps[1].artifacts[a].sha256) {
                o.pass = false;
                o.detail += "[" + reps[0].artifacts[a].path + " hash differs] ";
            }
        }
        for (const auto& r : reps)
            if (!verify_run_dir(r.directory).ok) o.pass = false;
    }
    std::filesystem::remove_all(root);
    o.detail += fmt("%zu configs run twice, %zu artifact hashes compared", configs.size(), artifacts);
    return o;
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int n, auto&& fn) {
        Stopwatch sw;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::printf("criterion %2d: %s  %s  (%.1fs)\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(), sw.seconds());
        std::fflush(stdout);
    };
    report(1, criterion1);
    report(2, criterion2);
    try {
        std::printf("info: %s\n", criterion2_info().c_str());
    } catch (const std::exception& e) {
        std::printf("info: larger square comparison failed: %s\n", e.what());
    }
    report(3, criterion3);
    report(4, criterion4);
    report(5, criterion5);
    report(6, criterion6);
    report(7, criterion7);
    report(8, criterion8);
    const CrossFixture cross;
    report(9, [&] { return criterion9(cross); });
    report(10, [&] { return criterion10(cross); });
    report(11, [&] { return criterion11(cross); });
    report(12, criterion12);
    std::printf("%d of 12 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
