// rbsde: solve, verify and refine switching problems described by JSON configs.
//
//   rbsde solve <config> [--out report.json] [--seed n] [--csv values.csv] [--timing]
//   rbsde verify <config> [--out report.json] [--seed n]
//   rbsde convergence <config> --levels k [--out table.csv]
//   rbsde presets
//
// <config> is a file path or the name of a bundled preset.
// Exit status: 0 ok, 1 a check/validation/solver failure, 2 usage or config error.

#include "rbsde/errors.hpp"
#include "rbsde/harness/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 2;
    }
    out << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rbsde::harness;

    CLI::App app{"Numerical solver for obliquely reflected BSDEs from optimal switching"};
    app.require_subcommand(1);

    std::string config_arg;
    std::string out_path;
    std::string csv_path;
    std::uint64_t seed = 0;
    bool timing = false;
    std::size_t levels = 0;

    auto* solve = app.add_subcommand("solve", "Solve a problem and write a JSON report");
    solve->add_option("config", config_arg, "Config file or preset name")->required();
    solve->add_option("--out", out_path, "Report path (default: stdout)");
    auto* solve_seed = solve->add_option("--seed", seed, "Override the config seed");
    solve->add_option("--csv", csv_path, "Write the value table to this CSV file");
    solve->add_flag("--timing", timing, "Include wall-clock timings in the report");

    auto* verify = app.add_subcommand("verify", "Run the full diagnostic battery");
    verify->add_option("config", config_arg, "Config file or preset name")->required();
    verify->add_option("--out", out_path, "Report path (default: stdout)");
    auto* verify_seed = verify->add_option("--seed", seed, "Override the config seed");
    verify->add_flag("--timing", timing, "Include wall-clock timings in the report");

    auto* conv = app.add_subcommand("convergence", "Refinement study, CSV output");
    conv->add_option("config", config_arg, "Config file or preset name")->required();
    conv->add_option("--levels", levels, "Number of refinement levels (>= 2)")->required();
    conv->add_option("--out", out_path, "CSV path (default: stdout)");

    auto* presets = app.add_subcommand("presets", "List bundled presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (presets->parsed()) {
            for (const auto& name : preset_names()) std::cout << name << "\n";
            return 0;
        }
        const RunConfig config = load_config(config_arg);
        if (conv->parsed()) {
            if (levels < 2) {
                std::cerr << "error: --levels must be at least 2\n";
                return 2;
            }
            return emit(cmd_convergence(config, levels).to_csv(), out_path);
        }
        CommandOptions options;
        options.timing = timing;
        if (solve_seed->count() > 0 || verify_seed->count() > 0) options.seed = seed;
        if (!csv_path.empty()) options.csv_path = csv_path;
        const SolveReport report =
            solve->parsed() ? cmd_solve(config, options) : cmd_verify(config, options);
        if (const int rc = emit(report.dump(), out_path); rc != 0) return rc;
        if (!report.passed()) {
            for (const Check& c : report.checks) {
                if (c.status == rbsde::Severity::Failure) {
                    std::cerr << "check failed: " << c.name
                              << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
                }
            }
            return 1;
        }
        return 0;
    } catch (const rbsde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rbsde::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
