#include "qbatt/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qbatt/csv_io.hpp"
#include "qbatt/observables.hpp"
#include "qbatt/svg_plot.hpp"
#include "qbatt/validation.hpp"

namespace qbatt {

using nlohmann::json;

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::ChargeResonatorQutrits: return "charge-resonator-qutrits";
        case ScenarioKind::ChargeQutritDrive: return "charge-qutrit-drive";
        case ScenarioKind::SelfDischarge: return "self-discharge";
        case ScenarioKind::RateSweep: return "rate-sweep";
        case ScenarioKind::GapSweep: return "gap-sweep";
        case ScenarioKind::Validate: return "validate";
    }
    return "?";
}

namespace {

ScenarioKind kind_from_string(const std::string& name) {
    if (name == "charge-resonator-qutrits" || name == "charge-single-cell" ||
        name == "charge-single-cell-two-mode")
        return ScenarioKind::ChargeResonatorQutrits;
    if (name == "charge-qutrit-drive") return ScenarioKind::ChargeQutritDrive;
    if (name == "self-discharge") return ScenarioKind::SelfDischarge;
    if (name == "rate-sweep") return ScenarioKind::RateSweep;
    if (name == "gap-sweep") return ScenarioKind::GapSweep;
    if (name == "validate") return ScenarioKind::Validate;
    throw ConfigError("scenario", "unknown scenario kind '" + name + "'");
}

IntegratorConfig with_t_end(IntegratorConfig cfg, double t_end) {
    cfg.t_end = t_end;
    return cfg;
}

unsigned sweep_thread_cap(std::size_t n_jobs) {
    unsigned cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("QBATT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1) cap = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(cap, n_jobs));
}

}  // namespace

// Observers shared by every battery-bearing run: reduced battery state,
// stored energy, average power, l1 coherence, charger-battery negativity.
std::vector<SampleObserver> standard_battery_observers(const ModelParams& p,
                                                       const HilbertLayout& layout) {
    auto h_q = std::make_shared<DenseOperator>(
        build_battery_hamiltonian(p, p.battery_layout()));
    const double e0 = p.n_qutrits * p.omega_levels[0];
    const std::vector<int> qslots = layout.qutrit_slots();
    const bool joint = layout.n_modes() > 0;
    SampleObserver obs = [h_q, e0, qslots, joint](const DenseOperator& rho, double t,
                                                  TrajectorySample& s) {
        const DenseOperator rho_bat = joint ? reduce_to_slots(rho, qslots) : rho;
        s.delta_E = stored_energy_op(rho_bat, *h_q, e0);
        s.power = average_power(s.delta_E, t);
        s.coherence = l1_coherence(rho_bat);
        s.negativity = joint ? log_negativity_op(rho, qslots) : 0.0;
    };
    return {obs};
}

TrajectoryRecord run_charging_trajectory(const ModelParams& p, const IntegratorConfig& cfg,
                                         const std::vector<SampleObserver>& extra) {
    p.validate();
    const HilbertLayout layout = p.layout();
    const RhsFn rhs = make_structured_rhs(p, layout, dissipators_from(p));
    const DensityState rho0 = initial_charging_state(p, layout);
    auto observers = standard_battery_observers(p, layout);
    observers.insert(observers.end(), extra.begin(), extra.end());
    return integrate(rhs, rho0, cfg, observers);
}

TrajectoryRecord run_drive_trajectory(const DriveParams& d,
                                      const std::array<double, 2>& gamma_rel,
                                      const std::array<double, 2>& gamma_dep,
                                      const IntegratorConfig& cfg) {
    d.validate();
    std::vector<DissipatorSpec> specs = {
        {DissipatorKind::Relaxation, DissipatorScope::Collective, {gamma_rel[0], gamma_rel[1]}},
        {DissipatorKind::Dephasing, DissipatorScope::Collective, {gamma_dep[0], gamma_dep[1]}},
    };
    const RhsFn rhs = make_drive_rhs(d, specs);
    const HilbertLayout layout = HilbertLayout::single_qutrit();
    const DensityState rho0 = DensityState::basis_state(layout, 0);

    ModelParams battery_only;
    battery_only.n_qutrits = 1;
    battery_only.n_modes = 1;  // unused by the observer's battery part
    battery_only.omega_levels = d.omega_levels;
    auto h0 = std::make_shared<DenseOperator>(
        qutrit_sz(d.omega_levels[0], d.omega_levels[1], d.omega_levels[2]));
    const double e0 = d.omega_levels[0];
    const DriveParams drive = d;
    SampleObserver obs = [h0, e0, drive](const DenseOperator& rho, double t,
                                         TrajectorySample& s) {
        s.delta_E = stored_energy_op(rho, *h0, e0);
        s.power = average_power(s.delta_E, t);
        s.coherence = l1_coherence(rho);
        s.negativity = 0.0;  // no charger subsystem
        const DenseOperator h_t = build_drive_hamiltonian(t, drive);
        cdouble e(0, 0);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) e += h_t(i, k) * rho(k, i);
        s.total_E = e.real();
    };
    return integrate(rhs, rho0, cfg, {obs});
}

TrajectoryRecord run_discharge_trajectory(const ModelParams& p, const DensityState& rho_bat0,
                                          const IntegratorConfig& cfg,
                                          const std::vector<SampleObserver>& extra) {
    p.validate();
    const HilbertLayout battery = p.battery_layout();
    if (!(rho_bat0.op().layout() == battery))
        throw InvalidDimensionError("discharge: initial state must live on the battery layout");
    std::vector<DissipatorSpec> specs;
    for (auto& spec : dissipators_from(p)) {
        if (spec.kind != DissipatorKind::ResonatorDecay) specs.push_back(spec);
    }
    const RhsFn rhs = make_structured_rhs(p, battery, specs);
    auto observers = standard_battery_observers(p, battery);
    observers.insert(observers.end(), extra.begin(), extra.end());
    return integrate(rhs, rho_bat0, cfg, observers);
}

DensityState battery_state_after_charge(const ModelParams& p, double charge_t_end,
                                        const IntegratorConfig& base_cfg) {
    const TrajectoryRecord rec =
        run_charging_trajectory(p, with_t_end(base_cfg, charge_t_end));
    DenseOperator rho_bat =
        reduce_to_slots(rec.final_state, rec.final_state.layout().qutrit_slots());
    return DensityState(std::move(rho_bat));
}

void apply_sweep_axis(ModelParams& p, const std::string& axis, double value) {
    if (axis == "kappa") {
        p.kappa = value;
    } else if (axis == "gamma01") {
        p.gamma_rel = {value, 2.0 * value};  // G12 = 2 G01 parameterization
    } else if (axis == "gamma11") {
        p.gamma_dep = {value, 2.0 * value};
    } else if (axis == "omega2") {
        p.omega_levels[2] = value;
    } else if (axis == "g") {
        for (auto& gk : p.g) gk = value;
    } else if (axis == "J") {
        p.J = value;
    } else {
        throw ConfigError("sweep.axis", "unknown sweep axis '" + axis + "'");
    }
}

void ScenarioConfig::validate() const {
    model.validate();
    integrator.validate();
    if (kind == ScenarioKind::ChargeQutritDrive) drive.validate();
    if (kind == ScenarioKind::SelfDischarge) {
        if (init != "ground" && init != "excited" && init != "from_charge")
            throw ConfigError("init", "must be ground, excited or from_charge");
        if (charge_t_end <= 0) throw ConfigError("charge_t_end", "must be positive");
    }
    if (kind == ScenarioKind::RateSweep || kind == ScenarioKind::GapSweep) {
        if (sweep.values.empty()) throw ConfigError("sweep.values", "must be non-empty");
        ModelParams probe = model;
        apply_sweep_axis(probe, sweep.axis, sweep.values.front());
    }
    if (out_dir.empty()) throw ConfigError("out_dir", "must be non-empty");
}

ScenarioConfig default_params(const std::string& kind_name) {
    ScenarioConfig cfg;
    cfg.kind = kind_from_string(kind_name);
    // shared parameter base: levels (0, 1, 1.95), resonance omega_r = omega01,
    // G12 = 2 G01, G22 = 2 G11, n_photons = 2N per mode, cutoff = n + 4
    cfg.model.omega_levels = {0.0, 1.0, 1.95};
    switch (cfg.kind) {
        case ScenarioKind::ChargeResonatorQutrits: {
            if (kind_name == "charge-single-cell") {
                cfg.model.n_qutrits = 1;
                cfg.model.n_modes = 1;
                cfg.model.omega_r = {1.0};
                cfg.model.g = {1.0};
                cfg.model.J = 0.0;
                cfg.model.n_photons = {2};
                cfg.model.cutoff = {6};
            } else if (kind_name == "charge-single-cell-two-mode") {
                cfg.model.n_qutrits = 1;
                cfg.model.n_modes = 2;
                cfg.model.omega_r = {1.0, 2.0};
                cfg.model.g = {1.0, 1.0};
                cfg.model.J = 0.0;
                cfg.model.n_photons = {2, 2};
                cfg.model.cutoff = {6, 6};
            } else {
                cfg.model.n_qutrits = 3;
                cfg.model.n_modes = 1;
                cfg.model.omega_r = {1.0};
                cfg.model.g = {1.0};
                cfg.model.J = 1.0;
                cfg.model.n_photons = {6};
                cfg.model.cutoff = {10};
            }
            cfg.model.kappa = 0.1;
            cfg.model.gamma_rel = {0.1, 0.2};
            cfg.model.gamma_dep = {0.1, 0.2};
            cfg.integrator.t_end = 20.0;
            break;
        }
        case ScenarioKind::ChargeQutritDrive: {
            cfg.model.n_qutrits = 1;
            cfg.model.gamma_rel = {0.1, 0.2};
            cfg.model.gamma_dep = {0.1, 0.2};
            cfg.drive.Omega0 = 0.25;
            cfg.drive.tau = 160.0;  // 40 / Omega0, slow enough for the passage
            cfg.drive.omega_levels = cfg.model.omega_levels;
            cfg.integrator.t_end = 200.0;
            cfg.integrator.record_every = 100;
            break;
        }
        case ScenarioKind::SelfDischarge: {
            cfg.model.n_qutrits = 3;
            cfg.model.n_modes = 1;
            cfg.model.omega_r = {1.0};
            cfg.model.g = {1.0};
            cfg.model.J = 1.0;
            cfg.model.n_photons = {6};
            cfg.model.cutoff = {10};
            cfg.model.kappa = 0.1;
            cfg.model.gamma_rel = {0.1, 0.2};
            cfg.model.gamma_dep = {0.0, 0.0};
            cfg.init = "from_charge";
            cfg.charge_t_end = 20.0;
            cfg.integrator.t_end = 50.0;
            break;
        }
        case ScenarioKind::RateSweep: {
            cfg = default_params("charge-resonator-qutrits");
            cfg.kind = ScenarioKind::RateSweep;
            cfg.model.kappa = 0.0;
            cfg.model.gamma_rel = {0.0, 0.0};
            cfg.model.gamma_dep = {0.0, 0.0};
            cfg.sweep.axis = "gamma01";
            cfg.sweep.values = {0.02, 0.05, 0.1, 0.2};
            break;
        }
        case ScenarioKind::GapSweep: {
            cfg = default_params("self-discharge");
            cfg.kind = ScenarioKind::GapSweep;
            cfg.model.gamma_dep = {0.1, 0.2};
            cfg.sweep.axis = "omega2";
            cfg.sweep.values = {1.95, 1.8, 1.6, 1.4};
            break;
        }
        case ScenarioKind::Validate: {
            break;
        }
    }
    return cfg;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& path) {
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            const std::string where = path.empty() ? item.key() : path + "." + item.key();
            throw ConfigError(where, "unknown key");
        }
    }
}

double read_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

int read_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

bool read_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected a boolean");
    return j.get<bool>();
}

std::string read_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> read_double_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(read_double(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<int> read_int_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(read_int(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

template <std::size_t N>
std::array<double, N> read_double_array(const json& j, const std::string& path) {
    const auto v = read_double_list(j, path);
    if (v.size() != N)
        throw ConfigError(path, "expected exactly " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

void parse_model(const json& j, ModelParams& p) {
    check_keys(j, {"N", "modes", "omega_r", "omega_levels", "g", "J", "kappa", "gamma_rel",
                   "gamma_dep", "n_photons", "cutoff", "local_dissipation"},
               "model");
    if (j.contains("N")) p.n_qutrits = read_int(j["N"], "model.N");
    if (j.contains("modes")) p.n_modes = read_int(j["modes"], "model.modes");
    if (j.contains("omega_r")) p.omega_r = read_double_list(j["omega_r"], "model.omega_r");
    if (j.contains("omega_levels"))
        p.omega_levels = read_double_array<3>(j["omega_levels"], "model.omega_levels");
    if (j.contains("g")) p.g = read_double_list(j["g"], "model.g");
    if (j.contains("J")) p.J = read_double(j["J"], "model.J");
    if (j.contains("kappa")) p.kappa = read_double(j["kappa"], "model.kappa");
    if (j.contains("gamma_rel"))
        p.gamma_rel = read_double_array<2>(j["gamma_rel"], "model.gamma_rel");
    if (j.contains("gamma_dep"))
        p.gamma_dep = read_double_array<2>(j["gamma_dep"], "model.gamma_dep");
    if (j.contains("n_photons")) p.n_photons = read_int_list(j["n_photons"], "model.n_photons");
    if (j.contains("cutoff")) p.cutoff = read_int_list(j["cutoff"], "model.cutoff");
    if (j.contains("local_dissipation"))
        p.local_dissipation = read_bool(j["local_dissipation"], "model.local_dissipation");
}

void parse_integrator(const json& j, IntegratorConfig& cfg) {
    check_keys(j, {"method", "dt", "abs_tol", "rel_tol", "t_end", "record_every", "hermitize"},
               "integrator");
    if (j.contains("method")) {
        const std::string m = read_string(j["method"], "integrator.method");
        if (m == "fixed-rk4") {
            cfg.method = IntegratorConfig::Method::FixedRk4;
        } else if (m == "adaptive-embedded") {
            cfg.method = IntegratorConfig::Method::AdaptiveEmbedded;
        } else {
            throw ConfigError("integrator.method", "must be fixed-rk4 or adaptive-embedded");
        }
    }
    if (j.contains("dt")) cfg.dt = read_double(j["dt"], "integrator.dt");
    if (j.contains("abs_tol")) cfg.abs_tol = read_double(j["abs_tol"], "integrator.abs_tol");
    if (j.contains("rel_tol")) cfg.rel_tol = read_double(j["rel_tol"], "integrator.rel_tol");
    if (j.contains("t_end")) cfg.t_end = read_double(j["t_end"], "integrator.t_end");
    if (j.contains("record_every"))
        cfg.record_every = read_int(j["record_every"], "integrator.record_every");
    if (j.contains("hermitize")) cfg.hermitize = read_bool(j["hermitize"], "integrator.hermitize");
}

void parse_drive(const json& j, DriveParams& d) {
    check_keys(j, {"Omega0", "tau", "omega_levels"}, "drive");
    if (j.contains("Omega0")) d.Omega0 = read_double(j["Omega0"], "drive.Omega0");
    if (j.contains("tau")) d.tau = read_double(j["tau"], "drive.tau");
    if (j.contains("omega_levels"))
        d.omega_levels = read_double_array<3>(j["omega_levels"], "drive.omega_levels");
}

void parse_sweep(const json& j, SweepSpec& s) {
    check_keys(j, {"axis", "values"}, "sweep");
    if (j.contains("axis")) s.axis = read_string(j["axis"], "sweep.axis");
    if (j.contains("values")) s.values = read_double_list(j["values"], "sweep.values");
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("<document>", "top level must be an object");
    check_keys(j,
               {"scenario", "model", "drive", "integrator", "init", "charge_t_end", "sweep",
                "out_dir", "emit_svg", "seed", "fast", "cutoff_guard"},
               "");
    if (!j.contains("scenario")) throw ConfigError("scenario", "missing required key");
    const std::string kind_name = read_string(j["scenario"], "scenario");

    ScenarioConfig cfg = default_params(kind_name);
    if (j.contains("model")) parse_model(j["model"], cfg.model);
    if (j.contains("integrator")) parse_integrator(j["integrator"], cfg.integrator);
    if (j.contains("drive")) parse_drive(j["drive"], cfg.drive);
    if (j.contains("sweep")) parse_sweep(j["sweep"], cfg.sweep);
    if (j.contains("init")) cfg.init = read_string(j["init"], "init");
    if (j.contains("charge_t_end")) cfg.charge_t_end = read_double(j["charge_t_end"], "charge_t_end");
    if (j.contains("out_dir")) cfg.out_dir = read_string(j["out_dir"], "out_dir");
    if (j.contains("emit_svg")) cfg.emit_svg = read_bool(j["emit_svg"], "emit_svg");
    if (j.contains("seed")) cfg.seed = static_cast<unsigned>(read_int(j["seed"], "seed"));
    if (j.contains("fast")) cfg.fast = read_bool(j["fast"], "fast");
    if (j.contains("cutoff_guard")) cfg.cutoff_guard = read_bool(j["cutoff_guard"], "cutoff_guard");

    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("<document>", e.what());
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ScenarioConfig::to_json() const {
    json j;
    j["scenario"] = to_string(kind);
    j["model"] = {{"N", model.n_qutrits},
                  {"modes", model.n_modes},
                  {"omega_r", model.omega_r},
                  {"omega_levels", model.omega_levels},
                  {"g", model.g},
                  {"J", model.J},
                  {"kappa", model.kappa},
                  {"gamma_rel", model.gamma_rel},
                  {"gamma_dep", model.gamma_dep},
                  {"n_photons", model.n_photons},
                  {"cutoff", model.cutoff},
                  {"local_dissipation", model.local_dissipation}};
    j["drive"] = {{"Omega0", drive.Omega0}, {"tau", drive.tau},
                  {"omega_levels", drive.omega_levels}};
    j["integrator"] = {
        {"method", integrator.method == IntegratorConfig::Method::FixedRk4
                       ? "fixed-rk4"
                       : "adaptive-embedded"},
        {"dt", integrator.dt},
        {"abs_tol", integrator.abs_tol},
        {"rel_tol", integrator.rel_tol},
        {"t_end", integrator.t_end},
        {"record_every", integrator.record_every},
        {"hermitize", integrator.hermitize}};
    j["init"] = init;
    j["charge_t_end"] = charge_t_end;
    j["sweep"] = {{"axis", sweep.axis}, {"values", sweep.values}};
    j["out_dir"] = out_dir;
    j["emit_svg"] = emit_svg;
    j["seed"] = seed;
    j["fast"] = fast;
    j["cutoff_guard"] = cutoff_guard;
    return j.dump();
}

namespace {

std::vector<SvgSeries> trajectory_series(const TrajectoryRecord& rec) {
    SvgSeries e{"delta_E (hbar*omega)", {}, {}};
    SvgSeries c{"C (l1 coherence)", {}, {}};
    SvgSeries s{"S (log-negativity, bits)", {}, {}};
    for (const auto& smp : rec.samples) {
        e.x.push_back(smp.t);
        e.y.push_back(smp.delta_E);
        c.x.push_back(smp.t);
        c.y.push_back(smp.coherence);
        s.x.push_back(smp.t);
        s.y.push_back(smp.negativity);
    }
    return {e, c, s};
}

TrajectoryRecord run_charging_with_guard(const ScenarioConfig& cfg) {
    TrajectoryRecord rec = run_charging_trajectory(cfg.model, cfg.integrator);
    if (!cfg.cutoff_guard) return rec;
    ModelParams p = cfg.model;
    double prev = detect_steady_state(rec, std::min(10.0, cfg.integrator.t_end / 2), 1e-4).E_s;
    for (int round = 0; round < 4; ++round) {
        ModelParams bigger = p;
        for (auto& c : bigger.cutoff) c += 4;
        TrajectoryRecord probe = run_charging_trajectory(bigger, cfg.integrator);
        const double e_s =
            detect_steady_state(probe, std::min(10.0, cfg.integrator.t_end / 2), 1e-4).E_s;
        if (std::abs(e_s - prev) < 1e-6) return rec;
        p = bigger;
        rec = std::move(probe);
        prev = e_s;
    }
    throw TruncationError("cutoff guard: E_s did not converge within +16 levels");
}

SweepTable run_sweep(const ScenarioConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepTable table;
    table.axis = cfg.sweep.axis;
    table.config_echo = cfg.to_json();
    table.rows.resize(cfg.sweep.values.size());

    const double window = std::min(10.0, cfg.integrator.t_end / 2);
    auto run_one = [&](std::size_t i) {
        ModelParams p = cfg.model;
        apply_sweep_axis(p, cfg.sweep.axis, cfg.sweep.values[i]);
        TrajectoryRecord rec;
        if (cfg.kind == ScenarioKind::GapSweep) {
            const DensityState rho_bat =
                battery_state_after_charge(p, cfg.charge_t_end, cfg.integrator);
            rec = run_discharge_trajectory(p, rho_bat, cfg.integrator);
        } else {
            rec = run_charging_trajectory(p, cfg.integrator);
        }
        const auto steady = detect_steady_state(rec, window, 1e-4);
        const auto pmax = max_power(rec);
        table.rows[i] = {cfg.sweep.values[i], steady.E_s, pmax.value,
                         steady.is_steady ? steady.t_steady : -1.0};
    };

    const unsigned n_threads = sweep_thread_cap(cfg.sweep.values.size());
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error = nullptr;
        std::mutex err_mutex;
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_threads; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cfg.sweep.values.size()) return;
                    try {
                        run_one(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    table.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioResult result;
    if (cfg.kind == ScenarioKind::Validate) {
        const auto results = run_validation(cfg.fast, std::cout, "");
        result.validation_passed = all_passed(results);
        return result;
    }

    std::filesystem::create_directories(cfg.out_dir);
    const std::string echo = cfg.to_json();
    auto out_path = [&](const char* name) {
        return (std::filesystem::path(cfg.out_dir) / name).string();
    };

    switch (cfg.kind) {
        case ScenarioKind::ChargeResonatorQutrits: {
            TrajectoryRecord rec = run_charging_with_guard(cfg);
            emit_csv(rec, out_path("trajectory.csv"), echo);
            result.artifacts.push_back(out_path("trajectory.csv"));
            if (cfg.emit_svg) {
                write_svg_lines(out_path("trajectory.svg"), "charging dynamics", "t (1/omega)",
                                "value", trajectory_series(rec), echo);
                result.artifacts.push_back(out_path("trajectory.svg"));
            }
            result.trajectory = std::move(rec);
            break;
        }
        case ScenarioKind::ChargeQutritDrive: {
            TrajectoryRecord rec = run_drive_trajectory(cfg.drive, cfg.model.gamma_rel,
                                                        cfg.model.gamma_dep, cfg.integrator);
            emit_csv(rec, out_path("trajectory.csv"), echo);
            result.artifacts.push_back(out_path("trajectory.csv"));
            if (cfg.emit_svg) {
                write_svg_lines(out_path("trajectory.svg"), "driven-qutrit charging",
                                "t (1/omega)", "value", trajectory_series(rec), echo);
                result.artifacts.push_back(out_path("trajectory.svg"));
            }
            result.trajectory = std::move(rec);
            break;
        }
        case ScenarioKind::SelfDischarge: {
            DensityState rho_bat = [&]() {
                if (cfg.init == "from_charge") {
                    TrajectoryRecord charge = run_charging_trajectory(
                        cfg.model, with_t_end(cfg.integrator, cfg.charge_t_end));
                    emit_csv(charge, out_path("charge.csv"), echo);
                    result.artifacts.push_back(out_path("charge.csv"));
                    DenseOperator reduced = reduce_to_slots(
                        charge.final_state, charge.final_state.layout().qutrit_slots());
                    result.charge_trajectory = std::move(charge);
                    return DensityState(std::move(reduced));
                }
                const HilbertLayout battery = cfg.model.battery_layout();
                std::vector<int> idx(static_cast<std::size_t>(battery.slots()),
                                     cfg.init == "excited" ? 2 : 0);
                return DensityState::basis_state(battery, battery.flatten(idx));
            }();
            TrajectoryRecord rec =
                run_discharge_trajectory(cfg.model, rho_bat, cfg.integrator);
            emit_csv(rec, out_path("discharge.csv"), echo);
            result.artifacts.push_back(out_path("discharge.csv"));
            if (cfg.emit_svg) {
                write_svg_lines(out_path("discharge.svg"), "self-discharge dynamics",
                                "t (1/omega)", "value", trajectory_series(rec), echo);
                result.artifacts.push_back(out_path("discharge.svg"));
            }
            result.trajectory = std::move(rec);
            break;
        }
        case ScenarioKind::RateSweep:
        case ScenarioKind::GapSweep: {
            SweepTable table = run_sweep(cfg);
            emit_csv(table, out_path("sweep.csv"));
            result.artifacts.push_back(out_path("sweep.csv"));
            if (cfg.emit_svg) {
                SvgSeries es{"E_s (hbar*omega)", {}, {}};
                SvgSeries pm{"P_max (hbar*omega^2)", {}, {}};
                for (const auto& r : table.rows) {
                    es.x.push_back(r.axis_value);
                    es.y.push_back(r.E_s);
                    pm.x.push_back(r.axis_value);
                    pm.y.push_back(r.P_max);
                }
                write_svg_lines(out_path("sweep.svg"), "sweep: " + table.axis, table.axis,
                                "value", {es, pm}, table.config_echo);
                result.artifacts.push_back(out_path("sweep.svg"));
            }
            result.table = std::move(table);
            break;
        }
        case ScenarioKind::Validate:
            break;  // handled above
    }
    return result;
}

}  // namespace qbatt
