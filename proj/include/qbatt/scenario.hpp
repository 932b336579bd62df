#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qbatt/lindblad.hpp"
#include "qbatt/model.hpp"
#include "qbatt/version.hpp"

namespace qbatt {

enum class ScenarioKind {
    ChargeResonatorQutrits,
    ChargeQutritDrive,
    SelfDischarge,
    RateSweep,
    GapSweep,
    Validate,
};

const char* to_string(ScenarioKind kind);

struct SweepSpec {
    std::string axis;  // kappa | gamma01 | gamma11 | omega2 | g | J
    std::vector<double> values;
};

// One run, fully resolved. Unset JSON fields inherit the scenario kind's
// defaults; unknown keys are a hard error.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::ChargeResonatorQutrits;
    ModelParams model;
    DriveParams drive;
    IntegratorConfig integrator;
    std::string init = "ground";  // self-discharge: excited | from_charge
    double charge_t_end = 20.0;   // prep horizon when init == from_charge
    SweepSpec sweep;
    std::string out_dir = "out";
    bool emit_svg = false;
    unsigned seed = 0;  // reserved; every run is deterministic
    bool fast = false;  // validate kind only
    bool cutoff_guard = false;

    static ScenarioConfig from_json_file(const std::string& path);
    static ScenarioConfig from_json_text(const std::string& text);
    std::string to_json() const;  // resolved echo, key-sorted

    void validate() const;
};

// The paper parameter set for a scenario kind. Also accepts the single-cell
// convenience variants "charge-single-cell" and "charge-single-cell-two-mode".
ScenarioConfig default_params(const std::string& kind_name);

struct SweepRow {
    double axis_value;
    double E_s;
    double P_max;
    double t_steady;  // -1 when the trailing window never settles
};

struct SweepTable {
    std::string axis;
    std::vector<SweepRow> rows;
    std::string config_echo;
    double wall_seconds = 0;  // reporting only, never emitted
};

struct ScenarioResult {
    std::optional<TrajectoryRecord> trajectory;
    std::optional<TrajectoryRecord> charge_trajectory;  // pipeline prep phase
    std::optional<SweepTable> table;
    std::vector<std::string> artifacts;
    std::optional<bool> validation_passed;  // validate kind only
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Building blocks shared with the validation suite. Observers fill the
// delta_E / P / C / S columns; diagnostics come from the integrator.
std::vector<SampleObserver> standard_battery_observers(const ModelParams& p,
                                                       const HilbertLayout& layout);
TrajectoryRecord run_charging_trajectory(const ModelParams& p, const IntegratorConfig& cfg,
                                         const std::vector<SampleObserver>& extra = {});
TrajectoryRecord run_drive_trajectory(const DriveParams& d,
                                      const std::array<double, 2>& gamma_rel,
                                      const std::array<double, 2>& gamma_dep,
                                      const IntegratorConfig& cfg);
TrajectoryRecord run_discharge_trajectory(const ModelParams& p, const DensityState& rho_bat0,
                                          const IntegratorConfig& cfg,
                                          const std::vector<SampleObserver>& extra = {});

// Battery state handed from a charging run to the discharge phase.
DensityState battery_state_after_charge(const ModelParams& p, double charge_t_end,
                                        const IntegratorConfig& base_cfg);

void apply_sweep_axis(ModelParams& p, const std::string& axis, double value);

}  // namespace qbatt
