#pragma once

// Config-driven experiment runner used by the command-line tool.
//
// Configs are JSON documents; rates are given as rate/2pi in GHz, times in ns,
// phases in units of pi, wavelengths in nm. Unknown keys are rejected. See
// docs/config.md for the schema.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "analytics.hpp"
#include "dynamics.hpp"
#include "instrument.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "scalability.hpp"
#include "units.hpp"

namespace wgqed::experiments {

using json = nlohmann::ordered_json;

inline constexpr const char* code_version = "wgqed 1.0.0";

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"transmission-scan", "transmission-saturation", "lifetime",
                                                "phase-sweep",       "detuning-sweep",          "g2-cw",
                                                "g2-pulsed",         "g2-map",                  "scalability",
                                                "scalability-heatmap"};
    return names;
}

inline const std::map<std::string, std::string>& experiment_descriptions() {
    static const std::map<std::string, std::string> d{
        {"transmission-scan", "linear transmission over a grid of emitter detunings"},
        {"transmission-saturation", "steady-state transmission versus drive strength"},
        {"lifetime", "pulsed single-emitter decay with detector response"},
        {"phase-sweep", "directional emission versus relative drive phase"},
        {"detuning-sweep", "time-resolved emission versus detuning of the second emitter"},
        {"g2-cw", "steady-state intensity correlations for all port pairs"},
        {"g2-pulsed", "pulsed coincidence histograms and centre-peak heights"},
        {"g2-map", "time-resolved pulsed correlation maps"},
        {"scalability", "probability of resonant emitter sets per waveguide and chip"},
        {"scalability-heatmap", "set probability versus mean emitter count and tuning range"}};
    return d;
}

// ---------------------------------------------------------------------------
// Config parsing helpers

namespace detail {

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

inline double number(const json& j, const char* key, const std::string& path, std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(path + ": missing required key '" + key + "'");
    }
    if (!j.at(key).is_number()) throw ConfigError(path + "." + key + ": expected a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw ConfigError(path + "." + key + ": must be finite");
    return v;
}

inline std::int64_t integer(const json& j, const char* key, const std::string& path, std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return j.at(key).get<std::int64_t>();
}

inline std::string text(const json& j, const char* key, const std::string& path, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(path + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

/// Either an explicit array or {"start", "stop", "count"} (inclusive ends).
inline std::vector<double> range(const json& j, const std::string& path) {
    if (j.is_array()) return numbers(j, path);
    check_keys(j, path, {"start", "stop", "count"});
    const double a = number(j, "start", path), b = number(j, "stop", path);
    const auto n = integer(j, "count", path, 0);
    if (n < 1) throw ConfigError(path + ".count: must be >= 1");
    std::vector<double> out;
    for (std::int64_t i = 0; i < n; ++i)
        out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

inline std::vector<double> scaled(std::vector<double> v, double factor) {
    for (double& x : v) x *= factor;
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Resolved configuration

struct NoiseSettings {
    bool enabled = false;
    NoiseAveragingPlan plan;
};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    int threads = 1;
    std::optional<WaveguideSystem> system;
    std::optional<DriveConfig> drive;
    DetectorModel detector;
    bool jitter = true;
    NoiseSettings noise;
    json grid = json::object();
    std::optional<scalability::ScalabilityConfig> scal;
    json scal_extra = json::object();
    json raw;  // the document as given
};

namespace detail {

inline WaveguideSystem parse_system(const json& j) {
    const std::string path = "system";
    check_keys(j, path, {"preset", "emitters", "detunings_ghz", "coupling_phase_pi", "propagation_phases_pi"});
    std::vector<EmitterParams> emitters;
    if (j.contains("preset")) {
        if (j.contains("emitters")) throw ConfigError("system: give either 'preset' or 'emitters'");
        if (text(j, "preset", path, "") != "table_one") throw ConfigError("system.preset: only 'table_one' is known");
        emitters = presets::table_one().emitters();
    } else {
        if (!j.contains("emitters") || !j.at("emitters").is_array() || j.at("emitters").empty())
            throw ConfigError("system.emitters: expected a non-empty array");
        int idx = 0;
        for (const auto& e : j.at("emitters")) {
            const std::string p = "system.emitters[" + std::to_string(idx++) + "]";
            check_keys(e, p,
                       {"gamma_ghz", "beta", "detuning_ghz", "dephasing_ghz", "spectral_diffusion_ghz",
                        "permanent_dipole_ghz_per_mv", "fano_xi"});
            EmitterParams q;
            q.gamma_total = units::from_ghz(number(e, "gamma_ghz", p));
            q.beta = number(e, "beta", p, 1.0);
            q.detuning = units::from_ghz(number(e, "detuning_ghz", p, 0.0));
            q.dephasing = units::from_ghz(number(e, "dephasing_ghz", p, 0.0));
            q.spectral_diffusion_sigma = units::from_ghz(number(e, "spectral_diffusion_ghz", p, 0.0));
            q.permanent_dipole = number(e, "permanent_dipole_ghz_per_mv", p, 0.0);
            q.fano_xi = number(e, "fano_xi", p, 0.0);
            emitters.push_back(q);
        }
    }
    const auto n = emitters.size();
    if (j.contains("detunings_ghz")) {
        const auto d = numbers(j.at("detunings_ghz"), "system.detunings_ghz");
        if (d.size() != n) throw ConfigError("system.detunings_ghz: one entry per emitter");
        for (std::size_t m = 0; m < n; ++m) emitters[m].detuning = units::from_ghz(d[m]);
    }
    std::vector<double> phases(n, 0.0);
    if (j.contains("propagation_phases_pi")) {
        if (j.contains("coupling_phase_pi")) throw ConfigError("system: give either coupling_phase_pi or propagation_phases_pi");
        phases = scaled(numbers(j.at("propagation_phases_pi"), "system.propagation_phases_pi"), std::numbers::pi);
        if (phases.size() != n) throw ConfigError("system.propagation_phases_pi: one entry per emitter");
    } else {
        const double phi = number(j, "coupling_phase_pi", path, 0.8) * std::numbers::pi;
        for (std::size_t m = 0; m < n; ++m) phases[m] = phi * static_cast<double>(m);
    }
    try {
        return WaveguideSystem(std::move(emitters), std::move(phases));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
}

inline DriveConfig parse_drive(const json& j, const WaveguideSystem& system) {
    const std::string path = "drive";
    check_keys(j, path,
               {"mode", "rabi_ghz", "rabi_over_gamma", "phases_pi", "areas_pi", "sigma_t_ns", "repetition_period_ns"});
    const auto n = static_cast<std::size_t>(system.size());
    const std::string mode = text(j, "mode", path, "cw");
    std::vector<double> phases(n, 0.0);
    if (j.contains("phases_pi")) phases = scaled(numbers(j.at("phases_pi"), "drive.phases_pi"), std::numbers::pi);
    if (phases.size() != n) throw ConfigError("drive.phases_pi: one entry per emitter");
    DriveConfig d;
    if (mode == "cw") {
        if (j.contains("areas_pi") || j.contains("sigma_t_ns") || j.contains("repetition_period_ns"))
            throw ConfigError("drive: pulse keys given for a cw drive");
        std::vector<double> rabi(n, 0.0);
        if (j.contains("rabi_ghz") && j.contains("rabi_over_gamma"))
            throw ConfigError("drive: give either rabi_ghz or rabi_over_gamma");
        if (j.contains("rabi_ghz")) rabi = scaled(numbers(j.at("rabi_ghz"), "drive.rabi_ghz"), units::two_pi);
        if (j.contains("rabi_over_gamma")) {
            rabi = numbers(j.at("rabi_over_gamma"), "drive.rabi_over_gamma");
            for (std::size_t m = 0; m < std::min(n, rabi.size()); ++m)
                rabi[m] *= system.emitter(static_cast<int>(m)).gamma_total;
        }
        if (rabi.size() != n) throw ConfigError("drive: one Rabi amplitude per emitter");
        d = DriveConfig::cw(rabi, phases);
    } else if (mode == "pulsed") {
        if (j.contains("rabi_ghz") || j.contains("rabi_over_gamma"))
            throw ConfigError("drive: pulsed drives are given by areas_pi");
        PulseShape shape;
        shape.sigma_t = number(j, "sigma_t_ns", path, shape.sigma_t);
        shape.repetition_period = number(j, "repetition_period_ns", path, shape.repetition_period);
        if (!(shape.sigma_t > 0.0)) throw ConfigError("drive.sigma_t_ns: must be positive");
        std::vector<double> areas(n, 1.0);
        if (j.contains("areas_pi")) areas = numbers(j.at("areas_pi"), "drive.areas_pi");
        if (areas.size() != n) throw ConfigError("drive.areas_pi: one entry per emitter");
        d = DriveConfig::pulsed(scaled(areas, std::numbers::pi), phases, shape);
    } else {
        throw ConfigError("drive.mode: expected 'cw' or 'pulsed'");
    }
    try {
        d.validate(system);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("drive: ") + e.what());
    }
    return d;
}

inline scalability::ScalabilityConfig parse_scalability(const json& j, std::uint64_t seed, json& extra) {
    const std::string path = "scalability";
    check_keys(j, path,
               {"mu_qd", "sigma_qd_nm", "delta_lambda_nm", "n_reg", "n_set", "n_wg", "runs", "mode", "mass_target",
                "mu_values", "relative_tuning_values", "compare_modes"});
    scalability::ScalabilityConfig c;
    c.mu_qd = number(j, "mu_qd", path, c.mu_qd);
    c.sigma_qd = number(j, "sigma_qd_nm", path, c.sigma_qd);
    c.delta_lambda = number(j, "delta_lambda_nm", path, c.delta_lambda);
    c.n_reg = static_cast<int>(integer(j, "n_reg", path, c.n_reg));
    c.n_set = static_cast<int>(integer(j, "n_set", path, c.n_set));
    c.n_wg = static_cast<int>(integer(j, "n_wg", path, c.n_wg));
    c.runs = integer(j, "runs", path, c.runs);
    c.mass_target = number(j, "mass_target", path, c.mass_target);
    c.seed = seed;
    const auto mode = text(j, "mode", path, "consecutive");
    if (mode == "consecutive") c.mode = scalability::FeasibilityMode::consecutive;
    else if (mode == "window_distinct") c.mode = scalability::FeasibilityMode::window_distinct;
    else throw ConfigError("scalability.mode: expected 'consecutive' or 'window_distinct'");
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("scalability: ") + e.what());
    }
    for (const char* k : {"mu_values", "relative_tuning_values"})
        if (j.contains(k)) extra[k] = range(j.at(k), path + "." + k);
    extra["compare_modes"] = j.value("compare_modes", true);
    return c;
}

} // namespace detail

inline bool needs_system(const std::string& e) { return e != "scalability" && e != "scalability-heatmap"; }

inline bool needs_drive(const std::string& e) {
    return e == "g2-cw" || e == "g2-pulsed" || e == "g2-map" || e == "lifetime" || e == "detuning-sweep" ||
           e == "phase-sweep";
}

inline ExperimentConfig parse_config(const json& j) {
    detail::check_keys(j, "config",
                       {"experiment", "seed", "threads", "system", "drive", "detector", "noise", "grid", "scalability",
                        "output"});
    ExperimentConfig c;
    c.raw = j;
    c.experiment = detail::text(j, "experiment", "config", "");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("config.experiment: unknown experiment '" + c.experiment + "'");
    const auto seed = detail::integer(j, "seed", "config", 1);
    if (seed < 0) throw ConfigError("config.seed: must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.threads = static_cast<int>(detail::integer(j, "threads", "config", 1));
    if (c.threads < 1) throw ConfigError("config.threads: must be >= 1");
    if (j.contains("output") && !j.at("output").is_string()) throw ConfigError("config.output: expected a string");

    if (needs_system(c.experiment)) {
        if (!j.contains("system")) throw ConfigError("config: experiment needs a 'system'");
        c.system = detail::parse_system(j.at("system"));
        if (needs_drive(c.experiment)) {
            if (!j.contains("drive")) throw ConfigError("config: experiment needs a 'drive'");
            c.drive = detail::parse_drive(j.at("drive"), *c.system);
        } else if (j.contains("drive")) {
            throw ConfigError("config.drive: not used by " + c.experiment);
        }
    } else {
        for (const char* k : {"system", "drive", "detector", "noise"})
            if (j.contains(k)) throw ConfigError(std::string("config.") + k + ": not used by " + c.experiment);
        c.scal = detail::parse_scalability(j.value("scalability", json::object()), c.seed, c.scal_extra);
    }
    if (j.contains("scalability") && needs_system(c.experiment))
        throw ConfigError("config.scalability: not used by " + c.experiment);

    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        detail::check_keys(d, "detector", {"irf_sigma_ns", "bin_width_ns", "enabled"});
        c.detector.irf_sigma = detail::number(d, "irf_sigma_ns", "detector", c.detector.irf_sigma);
        c.detector.bin_width = detail::number(d, "bin_width_ns", "detector", c.detector.bin_width);
        c.jitter = d.value("enabled", true);
        try {
            c.detector.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("detector: ") + e.what());
        }
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        detail::check_keys(n, "noise", {"scheme", "count"});
        const auto scheme = detail::text(n, "scheme", "noise", "gauss_hermite");
        c.noise.enabled = scheme != "none";
        if (scheme == "gauss_hermite") c.noise.plan.scheme = NoiseScheme::gauss_hermite;
        else if (scheme == "monte_carlo") c.noise.plan.scheme = NoiseScheme::monte_carlo;
        else if (scheme != "none") throw ConfigError("noise.scheme: expected gauss_hermite, monte_carlo or none");
        if (c.experiment == "lifetime" || c.experiment == "phase-sweep" || c.experiment == "transmission-saturation")
            throw ConfigError("noise: not used by " + c.experiment);
        // Steady-state quantities are Lorentzian in the detuning and need many
        // nodes once the spectral diffusion exceeds the linewidth; short pulses
        // are broadband and converge with a few.
        const bool steady = c.experiment == "transmission-scan" || c.experiment == "g2-cw";
        const bool gh = c.noise.plan.scheme == NoiseScheme::gauss_hermite;
        const std::int64_t fallback = gh ? (steady ? 41 : 5) : (steady ? 2000 : 200);
        c.noise.plan.count = static_cast<int>(detail::integer(n, "count", "noise", fallback));
        c.noise.plan.seed = c.seed;
        if (c.noise.plan.count < 1) throw ConfigError("noise.count: must be >= 1");
    }
    if (j.contains("grid")) {
        c.grid = j.at("grid");
        detail::check_keys(c.grid, "grid",
                           {"detuning1_ghz", "detuning2_ghz", "drive_ratio", "time_ns", "tau_ns", "phase_pi",
                            "window_ns", "step_ns", "integration_ns", "weak_area_pi", "emitter"});
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Results

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != columns.size()) throw std::logic_error("table row width mismatch in " + name);
        rows.push_back(std::move(row));
    }
};

struct ResultBundle {
    std::vector<Table> tables;
    json metadata = json::object();
    Diagnostics diagnostics;
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

namespace detail {

inline std::vector<double> grid_or(const ExperimentConfig& c, const char* key, std::vector<double> fallback) {
    if (!c.grid.contains(key)) return fallback;
    return range(c.grid.at(key), std::string("grid.") + key);
}

inline double grid_number(const ExperimentConfig& c, const char* key, double fallback) {
    return number(c.grid, key, "grid", fallback);
}

inline std::vector<double> sd_sigmas(const WaveguideSystem& s) {
    std::vector<double> out;
    for (const auto& e : s.emitters()) out.push_back(e.spectral_diffusion_sigma);
    return out;
}

inline double to_ghz(double rate) { return units::to_ghz(rate); }

/// Averages f(system with detuning offsets) when noise averaging is enabled.
template <class F>
auto with_noise(const ExperimentConfig& c, const WaveguideSystem& system, F&& f, json& meta) {
    if (!c.noise.enabled) {
        meta["spectral_diffusion"] = "off";
        return f(system);
    }
    const auto avg = spectral_diffusion_average(
        [&](const std::vector<double>& off) { return f(system.with_detuning_offsets(off)); }, sd_sigmas(system),
        c.noise.plan, c.threads);
    meta["spectral_diffusion"] = {{"scheme", c.noise.plan.scheme == NoiseScheme::gauss_hermite ? "gauss_hermite"
                                                                                              : "monte_carlo"},
                                  {"count", c.noise.plan.count},
                                  {"evaluations", avg.evaluations}};
    return avg.mean;
}

inline const char* pair_name(std::size_t a, std::size_t b) {
    static const char* names[2][2] = {{"LL", "LR"}, {"RL", "RR"}};
    return names[a][b];
}

inline constexpr std::array<Direction, 2> ports{Direction::left, Direction::right};

} // namespace detail

// ---------------------------------------------------------------------------
// Experiments

namespace run_detail {

struct VecPair {
    std::vector<double> first, second;

    friend VecPair operator+(VecPair a, const VecPair& b) {
        for (std::size_t i = 0; i < a.first.size(); ++i) a.first[i] += b.first[i];
        for (std::size_t i = 0; i < a.second.size(); ++i) a.second[i] += b.second[i];
        return a;
    }
    friend VecPair operator*(double w, VecPair a) {
        for (double& v : a.first) v *= w;
        for (double& v : a.second) v *= w;
        return a;
    }
};

inline ResultBundle transmission_scan(const ExperimentConfig& c) {
    const auto& sys = *c.system;
    ResultBundle r;
    const auto d1 = detail::grid_or(c, "detuning1_ghz", detail::range(json{{"start", -6}, {"stop", 6}, {"count", 121}}, ""));
    const auto d2 = sys.size() > 1 ? detail::grid_or(c, "detuning2_ghz", d1) : std::vector<double>{0.0};
    if (sys.size() > 2) throw ConfigError("transmission-scan supports one or two emitters");
    const int nodes = c.noise.enabled ? c.noise.plan.count : 0;
    if (c.noise.enabled && c.noise.plan.scheme != NoiseScheme::gauss_hermite)
        throw ConfigError("transmission-scan averages with gauss_hermite nodes only");
    Table t{"transmission_scan", {"detuning1_ghz", "detuning2_ghz", "transmission", "transmission_bare"}, {}};
    std::vector<std::vector<double>> rows(d1.size() * d2.size());
    parallel_for(rows.size(), c.threads, [&](std::size_t k) {
        const double a = d1[k / d2.size()], b = d2[k % d2.size()];
        std::vector<double> det{units::from_ghz(a)};
        if (sys.size() == 2) det.push_back(units::from_ghz(b));
        const auto p = transmission_coherent(sys, det, nodes);
        rows[k] = {a, sys.size() == 2 ? b : 0.0, p.transmission, std::norm(p.amplitude)};
    });
    for (auto& row : rows) t.add(std::move(row));
    r.tables.push_back(std::move(t));
    r.metadata["model"] = "linear response, dephasing broadens the resonance only";
    r.metadata["spectral_diffusion_nodes_per_emitter"] = nodes;
    return r;
}

inline ResultBundle transmission_saturation(const ExperimentConfig& c) {
    const auto& sys = *c.system;
    ResultBundle r;
    std::vector<double> def;
    for (int i = 0; i <= 40; ++i) def.push_back(std::pow(10.0, -2.0 + 3.5 * i / 40.0));
    const auto ratios = detail::grid_or(c, "drive_ratio", def);
    std::vector<double> det;
    for (const auto& e : sys.emitters()) det.push_back(e.detuning);
    Table t{"transmission_saturation", {"drive_ratio", "input_flux_per_ns", "coherent", "total", "linear_limit"}, {}};
    const double linear = transmission_coherent(sys, det).transmission;
    for (const auto& p : transmission_saturated(sys, ratios, c.threads))
        t.add({p.drive_ratio, p.input_flux, p.coherent, p.total, linear});
    r.tables.push_back(std::move(t));
    r.metadata["power_axis"] = "Omega_0 / Gamma_0; Omega_m = sqrt(2 gamma_wg_m P), drive phase = propagation phase";
    return r;
}

inline ResultBundle lifetime(const ExperimentConfig& c) {
    const int m = static_cast<int>(detail::grid_number(c, "emitter", 0));
    if (m < 0 || m >= c.system->size()) throw ConfigError("grid.emitter: out of range");
    const auto em = c.system->emitter(m);
    const auto single = WaveguideSystem::single(em);
    auto drive = *c.drive;
    if (drive.mode != DriveMode::pulsed) throw ConfigError("lifetime needs a pulsed drive");
    drive.rabi_amplitude = {drive.rabi_amplitude.at(static_cast<std::size_t>(m))};
    drive.drive_phase = {0.0};
    const double step = detail::grid_number(c, "step_ns", c.detector.bin_width);
    const double window = detail::grid_number(c, "window_ns", 6.0);
    const auto times = uniform_grid(window, step);
    ResultBundle r;
    const auto traj = propagate(DensityState::ground(1), single, drive, times);
    const auto rec = intensities(traj, single);
    TimeSeries total{0.0, step, {}};
    for (std::size_t i = 0; i < times.size(); ++i) total.values.push_back(rec.left[i] + rec.right[i]);
    const auto conv = c.jitter ? jitter_convolve(total, c.detector, &r.diagnostics) : total;
    // Reference: exponential from the pulse centre convolved with the IRF, scaled to the same area.
    const double t0 = drive.pulse.center();
    Table t{"lifetime", {"time_ns", "intensity", "detected", "emg_model"}, {}};
    const double area = conv.integral();
    for (std::size_t i = 0; i < conv.size(); ++i) {
        const double time = conv.time(i);
        const double model = em.gamma_total * area *
                             analytics::lifetime_irf(time - t0, em.gamma_total, c.jitter ? c.detector.irf_sigma : 0.0);
        t.add({time, total.at(time), conv.values[i], model});
    }
    r.tables.push_back(std::move(t));
    r.metadata["emitter"] = m;
    r.metadata["gamma_ghz"] = units::to_ghz(em.gamma_total);
    return r;
}

inline ResultBundle phase_sweep(const ExperimentConfig& c) {
    const auto& sys = *c.system;
    if (sys.size() != 2) throw ConfigError("phase-sweep needs two emitters");
    const auto thetas = detail::grid_or(c, "phase_pi", detail::range(json{{"start", 0}, {"stop", 2}, {"count", 73}}, ""));
    const double weak = detail::grid_number(c, "weak_area_pi", 0.05) * std::numbers::pi;
    const double window = detail::grid_number(c, "window_ns", 2.0);
    const double integration = detail::grid_number(c, "integration_ns", 0.4);
    const double step = detail::grid_number(c, "step_ns", 0.01);
    PulseShape shape = c.drive->pulse;
    ResultBundle r;
    const double phi = sys.coupling_phase(0, 1);
    Table series{"phase_sweep_time", {"theta_d_pi", "time_ns", "intensity_left", "intensity_right"}, {}};
    Table summary{"phase_sweep",
                  {"theta_d_pi", "right_fraction_after_pulse", "right_fraction_integrated", "interference_right_fraction"},
                  {}};
    const auto times = uniform_grid(window, step);
    std::vector<IntensityRecord> recs(thetas.size());
    parallel_for(thetas.size(), c.threads, [&](std::size_t k) {
        const auto drive = DriveConfig::pulsed({weak, weak}, {0.0, thetas[k] * std::numbers::pi}, shape);
        recs[k] = intensities(propagate(DensityState::ground(2), sys, drive, times), sys);
    });
    const auto after = static_cast<std::size_t>(std::ceil(shape.end() / step));
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const auto& rec = recs[k];
        double il = 0.0, ir = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            series.add({thetas[k], times[i], rec.left[i], rec.right[i]});
            if (times[i] >= shape.end() && times[i] < shape.end() + integration) {
                il += rec.left[i];
                ir += rec.right[i];
            }
        }
        const auto f = analytics::interference_intensities(thetas[k] * std::numbers::pi, phi);
        summary.add({thetas[k], directionality(rec.left.at(after), rec.right.at(after)).right,
                     directionality(il, ir).right, f.right / (f.left + f.right)});
    }
    r.tables.push_back(std::move(summary));
    r.tables.push_back(std::move(series));
    r.metadata["weak_area_rad"] = weak;
    r.metadata["integration_ns"] = integration;
    r.metadata["after_pulse_time_ns"] = times.at(after);
    return r;
}

inline ResultBundle detuning_sweep(const ExperimentConfig& c) {
    const auto& sys = *c.system;
    if (sys.size() != 2) throw ConfigError("detuning-sweep needs two emitters");
    if (c.drive->mode != DriveMode::pulsed) throw ConfigError("detuning-sweep needs a pulsed drive");
    const auto d2 = detail::grid_or(c, "detuning2_ghz", detail::range(json{{"start", -3}, {"stop", 3}, {"count", 61}}, ""));
    const double window = detail::grid_number(c, "window_ns", 3.0);
    const double step = detail::grid_number(c, "step_ns", c.detector.bin_width);
    const auto times = uniform_grid(window, step);
    ResultBundle r;
    std::vector<std::array<TimeSeries, 2>> out(d2.size());
    parallel_for(d2.size(), c.threads, [&](std::size_t k) {
        const auto base = sys.with_detunings({sys.emitter(0).detuning, units::from_ghz(d2[k])});
        auto one = [&](const WaveguideSystem& s) {
            const auto rec = intensities(propagate(DensityState::ground(2), s, *c.drive, times), s);
            std::array<std::vector<double>, 2> v{rec.left, rec.right};
            return v;
        };
        std::array<std::vector<double>, 2> v;
        if (c.noise.enabled) {
            const auto avg = spectral_diffusion_average(
                [&](const std::vector<double>& off) {
                    auto a = one(base.with_detuning_offsets(off));
                    return VecPair{std::move(a[0]), std::move(a[1])};
                },
                detail::sd_sigmas(base), c.noise.plan);
            v = {avg.mean.first, avg.mean.second};
        } else {
            v = one(base);
        }
        Diagnostics local;
        for (std::size_t a = 0; a < 2; ++a) {
            TimeSeries s{0.0, step, v[a]};
            out[k][a] = c.jitter ? jitter_convolve(s, c.detector, &local) : s;
        }
    });
    Table t{"detuning_sweep", {"detuning2_ghz", "time_ns", "intensity_left", "intensity_right", "right_fraction"}, {}};
    for (std::size_t k = 0; k < d2.size(); ++k)
        for (std::size_t i = 0; i < out[k][0].size(); ++i) {
            const double l = out[k][0].values[i], rr = out[k][1].values[i];
            t.add({d2[k], out[k][0].time(i), l, rr, l + rr > 0.0 ? rr / (l + rr) : std::nan("")});
        }
    r.tables.push_back(std::move(t));
    r.metadata["jitter"] = c.jitter;
    r.metadata["spectral_diffusion"] = c.noise.enabled;
    return r;
}

inline ResultBundle g2_cw(const ExperimentConfig& c) {
    const auto& sys = *c.system;
    if (c.drive->mode != DriveMode::cw) throw ConfigError("g2-cw needs a cw drive");
    const auto taus = uniform_grid(detail::grid_number(c, "window_ns", 8.0), detail::grid_number(c, "step_ns", 0.005));
    ResultBundle r;
    const auto corr = detail::with_noise(
        c, sys, [&](const WaveguideSystem& s) { return cw_correlations(s, *c.drive, taus); }, r.metadata);
    const double sigma = c.jitter ? c.detector.irf_sigma : 0.0;
    Table t{"g2_cw", {"tau_ns", "g2_LL", "g2_LR", "g2_RL", "g2_RR"}, {}};
    std::array<std::array<TimeSeries, 2>, 2> s;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            s[a][b] = cw_g2_series(corr, detail::ports[a], detail::ports[b], sigma, &r.diagnostics);
    for (std::size_t i = 0; i < s[0][0].size(); ++i)
        t.add({s[0][0].time(i), s[0][0].values[i], s[0][1].values[i], s[1][0].values[i], s[1][1].values[i]});
    const auto mid = s[0][0].size() / 2;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) r.metadata["g2_zero"][detail::pair_name(a, b)] = s[a][b].values[mid];
    r.metadata["intensity_left_per_ns"] = corr.intensity[0];
    r.metadata["intensity_right_per_ns"] = corr.intensity[1];
    r.metadata["jitter_sigma_coincidence_ns"] = std::numbers::sqrt2 * sigma;
    r.tables.push_back(std::move(t));
    return r;
}

inline PulsedCorrelations pulsed_maps(const ExperimentConfig& c, json& meta) {
    if (c.drive->mode != DriveMode::pulsed) throw ConfigError("pulsed correlations need a pulsed drive");
    MapGrid grid{detail::grid_number(c, "window_ns", 4.0), detail::grid_number(c, "step_ns", 0.01)};
    PropagationOptions opt;
    return detail::with_noise(
        c, *c.system, [&](const WaveguideSystem& s) { return pulsed_g2_map(s, *c.drive, grid, opt); }, meta);
}

inline ResultBundle g2_pulsed(const ExperimentConfig& c) {
    ResultBundle r;
    const auto pc = pulsed_maps(c, r.metadata);
    const double sigma = c.jitter ? c.detector.irf_sigma : 0.0;
    Table hist{"g2_pulsed", {"tau_ns", "g2_LL", "g2_LR", "g2_RL", "g2_RR"}, {}};
    Table summary{"g2_pulsed_summary",
                  {"alpha_right", "beta_right", "center_height_ratio", "center_area_ratio", "center_height",
                   "side_height"},
                  {}};
    std::array<std::array<PulsedG2, 2>, 2> g;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) {
            g[a][b] = pulsed_g2(pc, detail::ports[a], detail::ports[b], sigma, &r.diagnostics);
            summary.add({double(a), double(b), g[a][b].center_height_ratio(), g[a][b].area_ratio(),
                         g[a][b].side_peak.center_height, g[a][b].side_peak.side_height});
            r.metadata["center_height_ratio"][detail::pair_name(a, b)] = g[a][b].center_height_ratio();
        }
    const auto& h = g[0][0].histogram;
    for (std::size_t i = 0; i < h.size(); ++i)
        hist.add({h.time(i), g[0][0].histogram.values[i], g[0][1].histogram.values[i], g[1][0].histogram.values[i],
                  g[1][1].histogram.values[i]});
    r.tables.push_back(std::move(summary));
    r.tables.push_back(std::move(hist));
    r.metadata["normalization"] = "histogram / (N_alpha N_beta); ratios use the maximum of the +-1 period side peaks";
    r.metadata["jitter_axes"] = "t1 and t2";
    return r;
}

inline ResultBundle g2_map(const ExperimentConfig& c) {
    ResultBundle r;
    auto pc = pulsed_maps(c, r.metadata);
    const double sigma = c.jitter ? c.detector.irf_sigma : 0.0;
    const double dt = pc.times.at(1) - pc.times.at(0);
    Table t{"g2_map",
            {"t1_ns", "t2_ns", "same_LL", "same_LR", "same_RL", "same_RR", "next_LL", "next_LR", "next_RL", "next_RR"},
            {}};
    std::array<Eigen::MatrixXd, 8> m;
    double origin = 0.0;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) {
            const auto s = jitter_convolve_2d(TimeMap{0.0, dt, pc.same_pulse[a][b].values}, sigma, &r.diagnostics);
            const auto d = jitter_convolve_2d(TimeMap{0.0, dt, pc.different_pulse[a][b].values}, sigma);
            m[2 * a + b] = s.values;
            m[4 + 2 * a + b] = d.values;
            origin = s.t0;
        }
    for (Eigen::Index i = 0; i < m[0].rows(); ++i)
        for (Eigen::Index j = 0; j < m[0].cols(); ++j) {
            std::vector<double> row{origin + static_cast<double>(i) * dt, origin + static_cast<double>(j) * dt};
            for (const auto& x : m) row.push_back(x(i, j));
            t.add(std::move(row));
        }
    r.tables.push_back(std::move(t));
    r.metadata["next_pulse_t2_offset_ns"] = pc.period;
    r.metadata["units"] = "photons^2 / ns^2 (unnormalised G2)";
    return r;
}

inline json yield_json(const scalability::YieldResult& y) {
    return {{"p_per_waveguide", y.p_per_waveguide},
            {"standard_error", y.standard_error},
            {"p_per_chip", y.p_per_chip},
            {"truncation_n_max", y.truncation_n_max},
            {"poisson_mass", y.poisson_mass}};
}

inline ResultBundle scalability_run(const ExperimentConfig& c) {
    ResultBundle r;
    auto cfg = *c.scal;
    const auto main = scalability::probability_per_waveguide(cfg, c.threads);
    r.metadata["result"] = yield_json(main);
    r.metadata["result"]["mode"] = scalability::to_string(cfg.mode);
    Table t{"scalability", {"n_qd", "poisson_weight", "p_conditional", "standard_error"}, {}};
    const auto weights = scalability::poisson_weights(cfg.mu_qd, cfg.mass_target);
    for (const auto& est : main.conditional)
        t.add({double(est.n_qd), weights.at(static_cast<std::size_t>(est.n_qd)).weight, est.probability(),
               est.standard_error()});
    r.tables.push_back(std::move(t));
    if (c.scal_extra.value("compare_modes", true)) {
        auto other = cfg;
        other.mode = cfg.mode == scalability::FeasibilityMode::consecutive ? scalability::FeasibilityMode::window_distinct
                                                                           : scalability::FeasibilityMode::consecutive;
        const auto alt = scalability::probability_per_waveguide(other, c.threads);
        r.metadata["alternate"] = yield_json(alt);
        r.metadata["alternate"]["mode"] = scalability::to_string(other.mode);
    }
    return r;
}

inline ResultBundle scalability_heatmap(const ExperimentConfig& c) {
    ResultBundle r;
    const auto& base = *c.scal;
    const auto mus = c.scal_extra.contains("mu_values") ? c.scal_extra["mu_values"].get<std::vector<double>>()
                                                        : detail::range(json{{"start", 5}, {"stop", 100}, {"count", 20}}, "");
    const auto rel = c.scal_extra.contains("relative_tuning_values")
                         ? c.scal_extra["relative_tuning_values"].get<std::vector<double>>()
                         : detail::range(json{{"start", 0.002}, {"stop", 0.1}, {"count", 20}}, "");
    Table t{"scalability_heatmap", {"mu_qd", "relative_tuning", "p_per_waveguide", "standard_error", "p_per_chip"}, {}};
    for (double mu : mus)
        for (double x : rel) {
            auto cfg = base;
            cfg.mu_qd = mu;
            cfg.delta_lambda = x * cfg.sigma_qd;
            try {
                cfg.validate();
            } catch (const InvalidArgument& e) {
                throw ConfigError(std::string("scalability-heatmap: ") + e.what());
            }
            const auto y = scalability::probability_per_waveguide(cfg, c.threads);
            t.add({mu, x, y.p_per_waveguide, y.standard_error, y.p_per_chip});
        }
    r.tables.push_back(std::move(t));
    r.metadata["relative_tuning"] = "delta_lambda / sigma_qd";
    return r;
}

} // namespace run_detail

inline json system_json(const WaveguideSystem& s) {
    json em = json::array();
    for (const auto& e : s.emitters())
        em.push_back({{"gamma_ghz", units::to_ghz(e.gamma_total)},
                      {"beta", e.beta},
                      {"detuning_ghz", units::to_ghz(e.detuning)},
                      {"dephasing_ghz", units::to_ghz(e.dephasing)},
                      {"spectral_diffusion_ghz", units::to_ghz(e.spectral_diffusion_sigma)},
                      {"permanent_dipole_ghz_per_mv", e.permanent_dipole},
                      {"fano_xi", e.fano_xi}});
    json phases = json::array();
    for (int m = 0; m < s.size(); ++m) phases.push_back(s.propagation_phase(m) / std::numbers::pi);
    return {{"emitters", em}, {"propagation_phases_pi", phases}};
}

inline json drive_json(const DriveConfig& d) {
    json j{{"mode", d.mode == DriveMode::cw ? "cw" : "pulsed"}};
    std::vector<double> phases;
    for (double p : d.drive_phase) phases.push_back(p / std::numbers::pi);
    j["phases_pi"] = phases;
    if (d.mode == DriveMode::cw) {
        std::vector<double> r;
        for (double o : d.rabi_amplitude) r.push_back(units::to_ghz(o));
        j["rabi_ghz"] = r;
    } else {
        std::vector<double> a;
        for (int m = 0; m < d.size(); ++m) a.push_back(d.area(m) / std::numbers::pi);
        j["areas_pi"] = a;
        j["sigma_t_ns"] = d.pulse.sigma_t;
        j["repetition_period_ns"] = d.pulse.repetition_period;
        j["truncation_sigma"] = d.pulse.truncation;
    }
    return j;
}

/// Runs one experiment. Numerical failures propagate as NumericalError with
/// the experiment name prefixed.
inline ResultBundle run(const ExperimentConfig& c) {
    using Fn = ResultBundle (*)(const ExperimentConfig&);
    static const std::map<std::string, Fn> table{{"transmission-scan", run_detail::transmission_scan},
                                                 {"transmission-saturation", run_detail::transmission_saturation},
                                                 {"lifetime", run_detail::lifetime},
                                                 {"phase-sweep", run_detail::phase_sweep},
                                                 {"detuning-sweep", run_detail::detuning_sweep},
                                                 {"g2-cw", run_detail::g2_cw},
                                                 {"g2-pulsed", run_detail::g2_pulsed},
                                                 {"g2-map", run_detail::g2_map},
                                                 {"scalability", run_detail::scalability_run},
                                                 {"scalability-heatmap", run_detail::scalability_heatmap}};
    ResultBundle r;
    try {
        r = table.at(c.experiment)(c);
    } catch (const NumericalError& e) {
        throw NumericalError(c.experiment + ": " + e.what());
    }
    json meta;
    meta["experiment"] = c.experiment;
    meta["code_version"] = code_version;
    meta["seed"] = c.seed;
    json recorded = c.raw;  // thread count and output path do not affect results
    recorded.erase("threads");
    recorded.erase("output");
    meta["config"] = recorded;
    if (c.system) meta["resolved_system"] = system_json(*c.system);
    if (c.drive) meta["resolved_drive"] = drive_json(*c.drive);
    if (c.system) {
        meta["detector"] = {{"irf_sigma_ns", c.detector.irf_sigma},
                            {"bin_width_ns", c.detector.bin_width},
                            {"enabled", c.jitter}};
        const PropagationOptions opt;
        meta["tolerances"] = {{"integrator_abs", opt.abs_tol},
                              {"integrator_rel", opt.rel_tol},
                              {"trace_drift", 1e-8},
                              {"positivity_floor", -1e-8},
                              {"correlation_clip", correlation_clip_tolerance},
                              {"steady_state_gap", 1e-10}};
    }
    if (c.scal) {
        const auto& s = *c.scal;
        meta["resolved_scalability"] = {{"mu_qd", s.mu_qd},       {"sigma_qd_nm", s.sigma_qd},
                                        {"delta_lambda_nm", s.delta_lambda},
                                        {"n_reg", s.n_reg},       {"n_set", s.n_set},
                                        {"n_wg", s.n_wg},         {"runs", s.runs},
                                        {"mode", scalability::to_string(s.mode)},
                                        {"mass_target", s.mass_target},
                                        {"rng", "mt19937_64 per block of 4096 samples, seeded from (seed, n_qd, block)"}};
    }
    for (auto& [k, v] : r.metadata.items()) meta[k] = v;
    meta["diagnostics"] = {{"warnings", r.diagnostics.warnings},
                           {"clipped_negative", r.diagnostics.clipped_negative},
                           {"clipped_tiny", r.diagnostics.clipped_tiny}};
    r.metadata = std::move(meta);
    return r;
}

/// Writes <dir>/<table>.csv for every table plus <dir>/<experiment>.json.
inline std::vector<std::filesystem::path> write_bundle(const ResultBundle& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const std::string preamble_meta = r.metadata.dump();
    for (const auto& t : r.tables) {
        const auto path = dir / (t.name + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << "# experiment: " << r.metadata.value("experiment", "") << "\n";
        out << "# code_version: " << code_version << "\n";
        out << "# seed: " << r.metadata.value("seed", std::uint64_t{0}) << "\n";
        out << "# metadata: " << preamble_meta << "\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
        out << "\n";
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
            out << "\n";
        }
        written.push_back(path);
    }
    const auto side = dir / (r.metadata.value("experiment", std::string("result")) + ".json");
    std::ofstream js(side, std::ios::binary);
    js << r.metadata.dump(2) << "\n";
    written.push_back(side);
    return written;
}

} // namespace wgqed::experiments
