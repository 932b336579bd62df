#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "qbatt/csv_io.hpp"
#include "qbatt/scenario.hpp"
#include "qbatt/validation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitIntegrationFailure = 2;
constexpr int kExitValidationFailure = 3;

std::string self_path() {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return "";
    buf[n] = '\0';
    return std::string(buf);
}

int run_simulate(const std::string& config_path, const std::string& out_dir, bool svg) {
    qbatt::ScenarioConfig cfg = qbatt::ScenarioConfig::from_json_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (svg) cfg.emit_svg = true;
    const qbatt::ScenarioResult result = qbatt::run_scenario(cfg);
    if (result.validation_passed.has_value()) {
        return *result.validation_passed ? kExitOk : kExitValidationFailure;
    }
    for (const auto& path : result.artifacts) std::cout << "wrote " << path << "\n";
    return kExitOk;
}

int run_sweep_cmd(const std::string& config_path, const std::string& axis,
                  const std::string& values_csv, const std::string& out_dir, bool svg) {
    qbatt::ScenarioConfig cfg = qbatt::ScenarioConfig::from_json_file(config_path);
    if (cfg.kind != qbatt::ScenarioKind::RateSweep &&
        cfg.kind != qbatt::ScenarioKind::GapSweep) {
        throw qbatt::ConfigError("scenario", "sweep requires a rate-sweep or gap-sweep config");
    }
    if (!axis.empty()) cfg.sweep.axis = axis;
    if (!values_csv.empty()) {
        cfg.sweep.values.clear();
        std::string token;
        for (char c : values_csv + ",") {
            if (c == ',') {
                if (!token.empty()) cfg.sweep.values.push_back(std::stod(token));
                token.clear();
            } else {
                token += c;
            }
        }
        if (cfg.sweep.values.empty())
            throw qbatt::ConfigError("sweep.values", "no values parsed from --values");
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (svg) cfg.emit_svg = true;
    const qbatt::ScenarioResult result = qbatt::run_scenario(cfg);
    for (const auto& path : result.artifacts) std::cout << "wrote " << path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resonator-qutrits quantum battery simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, axis, values_csv, defaults_kind;
    bool svg = false, fast = false;

    auto* simulate = app.add_subcommand("simulate", "run one scenario from a JSON config");
    simulate->add_option("--config", config_path, "JSON config file")->required();
    simulate->add_option("--out", out_dir, "output directory (overrides config)");
    simulate->add_flag("--svg", svg, "also emit SVG plots");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--config", config_path, "JSON config file")->required();
    sweep->add_option("--axis", axis, "sweep axis (overrides config)");
    sweep->add_option("--values", values_csv, "comma-separated axis values");
    sweep->add_option("--out", out_dir, "output directory (overrides config)");
    sweep->add_flag("--svg", svg, "also emit SVG plots");

    auto* validate = app.add_subcommand("validate", "run the validation suite");
    validate->add_flag("--fast", fast, "N<=2 subset (CI budget)");

    auto* defaults = app.add_subcommand("defaults", "print a scenario's parameter set");
    defaults->add_option("--scenario", defaults_kind, "scenario kind")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (simulate->parsed()) return run_simulate(config_path, out_dir, svg);
        if (sweep->parsed()) return run_sweep_cmd(config_path, axis, values_csv, out_dir, svg);
        if (validate->parsed()) {
            const auto results = qbatt::run_validation(fast, std::cout, self_path());
            return qbatt::all_passed(results) ? kExitOk : kExitValidationFailure;
        }
        if (defaults->parsed()) {
            std::cout << qbatt::default_params(defaults_kind).to_json() << "\n";
            return kExitOk;
        }
    } catch (const qbatt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const qbatt::IntegrationFailureError& e) {
        std::cerr << "error: integration failed at t = " << e.t_last << ": " << e.what()
                  << "\n";
        return kExitIntegrationFailure;
    } catch (const qbatt::FileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const qbatt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIntegrationFailure;
    }
    return kExitConfigError;
}
