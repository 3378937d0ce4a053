#include <CLI11.hpp>

#include <iostream>

#include "uol/runner.hpp"

namespace {

int cmd_run(const std::string& path, const std::string& out) {
    uol::ExperimentConfig c;
    try {
        c = uol::load_config(path);
    } catch (const uol::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (!out.empty()) {
        c.output_dir = out;
        c.echo["output_dir"] = out;
    }
    const uol::RunReport r = uol::run(c);
    std::cout << r.directory.string() << "/report.json: " << r.status << " (" << r.wall_clock_seconds << " s)\n";
    for (const auto& ch : r.checks)
        if (!ch.pass) std::cout << "  check failed: " << ch.name << " value=" << ch.value << " tol=" << ch.tolerance << '\n';
    for (const auto& e : r.errors) std::cout << "  error: " << e << '\n';
    return r.ok() ? 0 : 1;
}

int cmd_validate(const std::string& path) {
    try {
        const uol::ExperimentConfig c = uol::load_config(path);
        std::cout << c.echo.dump(2) << '\n';
        return 0;
    } catch (const uol::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
}

int cmd_report(const std::string& dir) {
    const uol::ManifestCheck m = uol::verify_run_dir(dir);
    std::cout << "status: " << m.report.value("status", "?") << '\n';
    for (const auto& a : m.report["artifacts"]) std::cout << "  " << a["sha256"].get<std::string>() << "  " << a["path"].get<std::string>() << '\n';
    for (const auto& p : m.problems) std::cout << "  " << p << '\n';
    std::cout << (m.ok ? "manifest ok\n" : "manifest BROKEN\n");
    return m.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free-boundary experiment runner"};
    app.footer(std::string("\nOutput goes to the config output_dir, else $UOL_OUTPUT_ROOT/<task>, else ./uol-runs/<task>.\n"
                           "Exit status: 0 ok, 1 task or check failure, 2 configuration error.\n\n") +
               uol::csv_columns_help());
    app.require_subcommand(1);

    std::string config, out, dir;
    auto* run = app.add_subcommand("run", "Run one experiment from a JSON configuration");
    run->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", out, "override the output directory");
    auto* val = app.add_subcommand("validate", "Check a configuration and print it with defaults filled in");
    val->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
    auto* rep = app.add_subcommand("report", "Verify the artifact hashes of a finished run");
    rep->add_option("dir", dir, "run directory containing report.json")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config, out);
        if (*val) return cmd_validate(config);
        return cmd_report(dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
