// Configuration, serialization, and artifact emission for the command-line
// front end: a strict JSON config schema (unknown keys rejected, resolved
// echo with every default materialized), the frozen `paper-weak-turbulence`
// preset, gain files, and deterministic CSV/JSON writers (fixed %.17g float
// formatting, sorted JSON keys, no timestamps).
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsopoint/aperture.hpp"
#include "fsopoint/clverify.hpp"
#include "fsopoint/errors.hpp"
#include "fsopoint/lmi.hpp"
#include "fsopoint/metrics.hpp"
#include "fsopoint/plant.hpp"
#include "fsopoint/turbulence.hpp"

namespace fso::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// =============================================================================
// Small helpers
// =============================================================================

/// Fixed-format float for CSV cells: shortest-but-exact via %.17g.
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_file(const std::string &path, const std::string &content) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ValidationError("cannot open for writing: " + path);
    f << content;
    if (!f)
        throw ValidationError("write failed: " + path);
}

inline std::string read_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ValidationError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

namespace detail {

inline void require_known_keys(const json &j, const std::vector<std::string> &known,
                               const std::string &section) {
    if (!j.is_object())
        throw ValidationError("config section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto &k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ValidationError("unknown key '" + it.key() + "' in config section '" +
                                  section + "'");
    }
}

template <typename T> T get_or(const json &j, const char *key, T fallback) {
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ValidationError(std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace detail

// =============================================================================
// Enum codecs
// =============================================================================

inline std::string to_string(turb::DriftScaling v) {
    return v == turb::DriftScaling::Dt ? "dt" : "none";
}
inline std::string to_string(turb::DriftAnchor v) {
    return v == turb::DriftAnchor::Stationary ? "stationary" : "paper";
}
inline std::string to_string(plant::RConvention v) {
    return v == plant::RConvention::Derived ? "derived" : "paper";
}
inline std::string to_string(plant::OutputMatrix v) {
    return v == plant::OutputMatrix::Derived ? "derived" : "paper";
}
inline std::string to_string(metrics::QNorm v) {
    return v == metrics::QNorm::Standard ? "standard" : "paper";
}

namespace detail {

template <typename E>
E parse_enum(const std::string &s, const std::vector<std::pair<std::string, E>> &table,
             const char *what) {
    for (const auto &[name, val] : table)
        if (s == name)
            return val;
    std::string opts;
    for (const auto &[name, val] : table)
        opts += (opts.empty() ? "" : "|") + name;
    throw ValidationError(std::string("invalid ") + what + " '" + s + "' (expected " + opts +
                          ")");
}

} // namespace detail

inline turb::DriftScaling parse_drift_scaling(const std::string &s) {
    return detail::parse_enum<turb::DriftScaling>(
        s, {{"dt", turb::DriftScaling::Dt}, {"none", turb::DriftScaling::None}},
        "drift_scaling");
}
inline turb::DriftAnchor parse_drift_anchor(const std::string &s) {
    return detail::parse_enum<turb::DriftAnchor>(
        s, {{"stationary", turb::DriftAnchor::Stationary}, {"paper", turb::DriftAnchor::Paper}},
        "drift_anchor");
}
inline plant::RConvention parse_r_convention(const std::string &s) {
    return detail::parse_enum<plant::RConvention>(
        s, {{"derived", plant::RConvention::Derived}, {"paper", plant::RConvention::Paper}},
        "r_convention");
}
inline plant::OutputMatrix parse_output_matrix(const std::string &s) {
    return detail::parse_enum<plant::OutputMatrix>(
        s, {{"derived", plant::OutputMatrix::Derived}, {"paper", plant::OutputMatrix::Paper}},
        "output_matrix");
}
inline metrics::QNorm parse_q_norm(const std::string &s) {
    return detail::parse_enum<metrics::QNorm>(
        s, {{"standard", metrics::QNorm::Standard}, {"paper", metrics::QNorm::Unnormalized}},
        "q_norm");
}

// =============================================================================
// Run configuration
// =============================================================================

/// Channel-characterization extras beyond the physical parameters.
struct ChannelRunConfig {
    long long n_steps = 1000000;
    int bins = 80;
    double x0 = 1.0;           ///< initial irradiance
    long long thin_stride = 0; ///< 0 = auto: ceil(tau_c / dt)
    long long traj_rows = 10000;
};

struct PlantConfig {
    double d = 1.0;
    double x_min = 0.2;
    double x_max = 4.0;
    double lipschitz_margin = 1.05;
    plant::RConvention r_convention = plant::RConvention::Derived;
    plant::OutputMatrix output_matrix = plant::OutputMatrix::Derived;
};

struct SimulateConfig {
    int n_seeds = 100;
    int n_steps = 10000;
    int burn_in = 1000;
    int dissipation_seeds = 100;
    int dissipation_steps = 2000;
};

struct MetricsConfig {
    double sigma2_open = 0.0380;
    double sigma2_closed = 0.0231;
    double eta = 0.5;
    double n0 = 0.01;
    metrics::QNorm q_norm = metrics::QNorm::Standard;
    double margin_db_min = 0.0;
    double margin_db_max = 8.0;
    double margin_db_step = 0.2;
    double snr_db_min = 0.0;
    double snr_db_max = 22.0;
    double snr_db_step = 0.5;
    double p_o = 1e-6;
    int quad_order = 32;
    long long mc_bits = 200000;
};

/**
 * @brief Full validated run configuration.
 *
 * Default-constructed values ARE the frozen `paper-weak-turbulence` preset:
 * the published weak-turbulence channel (sigma2 = 0.0380, tau_c = 0.1 s,
 * dt = 1 ms) with a slow aperture mode (a_l = 0.9, stationary std 0.1) and
 * the certified Lipschitz domain [0.2, 4.0].
 */
struct RunConfig {
    std::uint64_t seed = 12345;
    turb::TurbulenceParams channel;
    ChannelRunConfig channel_run;
    apert::ApertureParams aperture;
    PlantConfig plant_cfg;
    lmi::SynthesisOptions synthesis;
    SimulateConfig simulate;
    MetricsConfig metrics_cfg;

    RunConfig() {
        aperture.a_l = 0.9;
        aperture.r_l = 0.043588989435406735; // stationary std 0.1
        aperture.c_l = 1.0;
    }

    /// Assemble the augmented plant described by this configuration.
    plant::AugmentedPlant build_plant() const {
        return plant::build_augmented(channel, aperture, plant_cfg.d, plant_cfg.x_min,
                                      plant_cfg.x_max, plant_cfg.r_convention,
                                      plant_cfg.output_matrix, plant_cfg.lipschitz_margin);
    }

    void validate() const {
        channel.validate();
        aperture.validate();
        if (channel_run.n_steps < 1000)
            throw ValidationError("channel.n_steps must be >= 1000");
        if (channel_run.bins < 10)
            throw ValidationError("channel.bins must be >= 10");
        if (!(channel_run.x0 > 0.0))
            throw ValidationError("channel.x0 must be > 0");
        if (channel_run.thin_stride < 0)
            throw ValidationError("channel.thin_stride must be >= 0");
        if (!(plant_cfg.d > 0.0))
            throw ValidationError("plant.d must be > 0");
        if (!(plant_cfg.x_min > 0.0) || !(plant_cfg.x_max > plant_cfg.x_min))
            throw ValidationError("plant.x_min/x_max must satisfy 0 < x_min < x_max");
        if (!(plant_cfg.lipschitz_margin >= 1.0))
            throw ValidationError("plant.lipschitz_margin must be >= 1");
        if (simulate.n_seeds < 1 || simulate.n_steps < 2 ||
            simulate.burn_in >= simulate.n_steps)
            throw ValidationError("simulate: need n_seeds >= 1, burn_in < n_steps");
        if (simulate.dissipation_seeds < 1 || simulate.dissipation_steps < 1)
            throw ValidationError("simulate: dissipation ensemble must be nonempty");
        if (!(metrics_cfg.sigma2_open > 0.0) || !(metrics_cfg.sigma2_closed > 0.0))
            throw ValidationError("metrics: sigma2 values must be > 0");
        if (!(metrics_cfg.eta > 0.0) || !(metrics_cfg.n0 > 0.0))
            throw ValidationError("metrics: eta and n0 must be > 0");
        if (!(metrics_cfg.margin_db_step > 0.0) || !(metrics_cfg.snr_db_step > 0.0))
            throw ValidationError("metrics: axis steps must be > 0");
        if (!(metrics_cfg.margin_db_max > metrics_cfg.margin_db_min) ||
            !(metrics_cfg.snr_db_max > metrics_cfg.snr_db_min))
            throw ValidationError("metrics: axis ranges must be nonempty");
        if (!(metrics_cfg.p_o > 0.0) || !(metrics_cfg.p_o < 0.5))
            throw ValidationError("metrics: p_o must lie in (0, 0.5)");
        if (metrics_cfg.quad_order < 8 || metrics_cfg.quad_order > 64)
            throw ValidationError("metrics: quad_order must lie in [8, 64]");
        if (metrics_cfg.mc_bits < 100000)
            throw ValidationError("metrics: mc_bits must be >= 1e5");
        if (synthesis.delta_points < 1 || synthesis.coarse_cap < 10 ||
            synthesis.final_cap < 10)
            throw ValidationError("synthesis: iteration budgets out of range");
        if (!(synthesis.bisect_rel > 0.0) || !(synthesis.coarse_rel > 0.0))
            throw ValidationError("synthesis: bisection tolerances must be > 0");
        if (!(synthesis.eps_lo > 0.0) || !(synthesis.eps_hi_cap > synthesis.eps_lo))
            throw ValidationError("synthesis: need 0 < eps_lo < eps_hi_cap");
    }
};

// --- JSON decoding -----------------------------------------------------------

inline RunConfig config_from_json(const json &j) {
    detail::require_known_keys(j,
                               {"schema_version", "seed", "channel", "aperture", "plant",
                                "synthesis", "simulate", "metrics"},
                               "(top level)");
    RunConfig c;
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
        throw ValidationError("unsupported config schema_version");
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);

    if (j.contains("channel")) {
        const json &s = j.at("channel");
        detail::require_known_keys(s,
                                   {"sigma2", "i0", "tau_c", "dt", "a_p", "b_p", "c_p",
                                    "drift_scaling", "drift_anchor", "n_steps", "bins", "x0",
                                    "thin_stride", "traj_rows"},
                                   "channel");
        c.channel.sigma2 = detail::get_or(s, "sigma2", c.channel.sigma2);
        c.channel.i0 = detail::get_or(s, "i0", c.channel.i0);
        c.channel.tau_c = detail::get_or(s, "tau_c", c.channel.tau_c);
        c.channel.dt = detail::get_or(s, "dt", c.channel.dt);
        c.channel.a_p = detail::get_or(s, "a_p", c.channel.a_p);
        c.channel.b_p = detail::get_or(s, "b_p", c.channel.b_p);
        c.channel.c_p = detail::get_or(s, "c_p", c.channel.c_p);
        if (s.contains("drift_scaling"))
            c.channel.drift_scaling = parse_drift_scaling(s.at("drift_scaling").get<std::string>());
        if (s.contains("drift_anchor"))
            c.channel.drift_anchor = parse_drift_anchor(s.at("drift_anchor").get<std::string>());
        c.channel_run.n_steps = detail::get_or(s, "n_steps", c.channel_run.n_steps);
        c.channel_run.bins = detail::get_or(s, "bins", c.channel_run.bins);
        c.channel_run.x0 = detail::get_or(s, "x0", c.channel_run.x0);
        c.channel_run.thin_stride = detail::get_or(s, "thin_stride", c.channel_run.thin_stride);
        c.channel_run.traj_rows = detail::get_or(s, "traj_rows", c.channel_run.traj_rows);
    }

    if (j.contains("aperture")) {
        const json &s = j.at("aperture");
        detail::require_known_keys(s, {"a_l", "r_l", "c_l", "physics"}, "aperture");
        if (s.contains("physics")) {
            if (s.contains("a_l") || s.contains("r_l"))
                throw ValidationError(
                    "aperture: give either direct {a_l, r_l} or a physics block, not both");
            const json &ph = s.at("physics");
            detail::require_known_keys(ph, {"gamma1", "k1", "kbt", "dT", "noise_convention"},
                                       "aperture.physics");
            apert::ApertureNoise conv = apert::ApertureNoise::Physical;
            if (ph.contains("noise_convention"))
                conv = detail::parse_enum<apert::ApertureNoise>(
                    ph.at("noise_convention").get<std::string>(),
                    {{"physical", apert::ApertureNoise::Physical},
                     {"paper", apert::ApertureNoise::Paper}},
                    "noise_convention");
            c.aperture = apert::aperture_params_from_physics(
                ph.at("gamma1").get<double>(), ph.at("k1").get<double>(),
                ph.at("kbt").get<double>(), ph.at("dT").get<double>(), conv);
        } else {
            c.aperture.a_l = detail::get_or(s, "a_l", c.aperture.a_l);
            c.aperture.r_l = detail::get_or(s, "r_l", c.aperture.r_l);
        }
        c.aperture.c_l = detail::get_or(s, "c_l", c.aperture.c_l);
    }

    if (j.contains("plant")) {
        const json &s = j.at("plant");
        detail::require_known_keys(s,
                                   {"d", "x_min", "x_max", "lipschitz_margin", "r_convention",
                                    "output_matrix"},
                                   "plant");
        c.plant_cfg.d = detail::get_or(s, "d", c.plant_cfg.d);
        c.plant_cfg.x_min = detail::get_or(s, "x_min", c.plant_cfg.x_min);
        c.plant_cfg.x_max = detail::get_or(s, "x_max", c.plant_cfg.x_max);
        c.plant_cfg.lipschitz_margin =
            detail::get_or(s, "lipschitz_margin", c.plant_cfg.lipschitz_margin);
        if (s.contains("r_convention"))
            c.plant_cfg.r_convention = parse_r_convention(s.at("r_convention").get<std::string>());
        if (s.contains("output_matrix"))
            c.plant_cfg.output_matrix =
                parse_output_matrix(s.at("output_matrix").get<std::string>());
    }

    if (j.contains("synthesis")) {
        const json &s = j.at("synthesis");
        detail::require_known_keys(s,
                                   {"bisect_rel", "coarse_rel", "coarse_cap", "final_cap",
                                    "delta_log_lo", "delta_log_hi", "delta_points",
                                    "golden_iters", "eps_lo", "eps_hi_cap", "feas_tol",
                                    "pd_tol"},
                                   "synthesis");
        auto &o = c.synthesis;
        o.bisect_rel = detail::get_or(s, "bisect_rel", o.bisect_rel);
        o.coarse_rel = detail::get_or(s, "coarse_rel", o.coarse_rel);
        o.coarse_cap = detail::get_or(s, "coarse_cap", o.coarse_cap);
        o.final_cap = detail::get_or(s, "final_cap", o.final_cap);
        o.delta_log_lo = detail::get_or(s, "delta_log_lo", o.delta_log_lo);
        o.delta_log_hi = detail::get_or(s, "delta_log_hi", o.delta_log_hi);
        o.delta_points = detail::get_or(s, "delta_points", o.delta_points);
        o.golden_iters = detail::get_or(s, "golden_iters", o.golden_iters);
        o.eps_lo = detail::get_or(s, "eps_lo", o.eps_lo);
        o.eps_hi_cap = detail::get_or(s, "eps_hi_cap", o.eps_hi_cap);
        o.feas_tol = detail::get_or(s, "feas_tol", o.feas_tol);
        o.pd_tol = detail::get_or(s, "pd_tol", o.pd_tol);
    }

    if (j.contains("simulate")) {
        const json &s = j.at("simulate");
        detail::require_known_keys(s,
                                   {"n_seeds", "n_steps", "burn_in", "dissipation_seeds",
                                    "dissipation_steps"},
                                   "simulate");
        c.simulate.n_seeds = detail::get_or(s, "n_seeds", c.simulate.n_seeds);
        c.simulate.n_steps = detail::get_or(s, "n_steps", c.simulate.n_steps);
        c.simulate.burn_in = detail::get_or(s, "burn_in", c.simulate.burn_in);
        c.simulate.dissipation_seeds =
            detail::get_or(s, "dissipation_seeds", c.simulate.dissipation_seeds);
        c.simulate.dissipation_steps =
            detail::get_or(s, "dissipation_steps", c.simulate.dissipation_steps);
    }

    if (j.contains("metrics")) {
        const json &s = j.at("metrics");
        detail::require_known_keys(s,
                                   {"sigma2_open", "sigma2_closed", "eta", "n0", "q_norm",
                                    "margin_db_min", "margin_db_max", "margin_db_step",
                                    "snr_db_min", "snr_db_max", "snr_db_step", "p_o",
                                    "quad_order", "mc_bits"},
                                   "metrics");
        auto &m = c.metrics_cfg;
        m.sigma2_open = detail::get_or(s, "sigma2_open", m.sigma2_open);
        m.sigma2_closed = detail::get_or(s, "sigma2_closed", m.sigma2_closed);
        m.eta = detail::get_or(s, "eta", m.eta);
        m.n0 = detail::get_or(s, "n0", m.n0);
        if (s.contains("q_norm"))
            m.q_norm = parse_q_norm(s.at("q_norm").get<std::string>());
        m.margin_db_min = detail::get_or(s, "margin_db_min", m.margin_db_min);
        m.margin_db_max = detail::get_or(s, "margin_db_max", m.margin_db_max);
        m.margin_db_step = detail::get_or(s, "margin_db_step", m.margin_db_step);
        m.snr_db_min = detail::get_or(s, "snr_db_min", m.snr_db_min);
        m.snr_db_max = detail::get_or(s, "snr_db_max", m.snr_db_max);
        m.snr_db_step = detail::get_or(s, "snr_db_step", m.snr_db_step);
        m.p_o = detail::get_or(s, "p_o", m.p_o);
        m.quad_order = detail::get_or(s, "quad_order", m.quad_order);
        m.mc_bits = detail::get_or(s, "mc_bits", m.mc_bits);
    }

    c.validate();
    return c;
}

// --- JSON encoding (resolved echo) -------------------------------------------

inline json config_to_json(const RunConfig &c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = c.seed;
    j["channel"] = {{"sigma2", c.channel.sigma2},
                    {"i0", c.channel.i0},
                    {"tau_c", c.channel.tau_c},
                    {"dt", c.channel.dt},
                    {"a_p", c.channel.a_p},
                    {"b_p", c.channel.b_p},
                    {"c_p", c.channel.c_p},
                    {"drift_scaling", to_string(c.channel.drift_scaling)},
                    {"drift_anchor", to_string(c.channel.drift_anchor)},
                    {"n_steps", c.channel_run.n_steps},
                    {"bins", c.channel_run.bins},
                    {"x0", c.channel_run.x0},
                    {"thin_stride", c.channel_run.thin_stride},
                    {"traj_rows", c.channel_run.traj_rows}};
    j["aperture"] = {{"a_l", c.aperture.a_l}, {"r_l", c.aperture.r_l}, {"c_l", c.aperture.c_l}};
    j["plant"] = {{"d", c.plant_cfg.d},
                  {"x_min", c.plant_cfg.x_min},
                  {"x_max", c.plant_cfg.x_max},
                  {"lipschitz_margin", c.plant_cfg.lipschitz_margin},
                  {"r_convention", to_string(c.plant_cfg.r_convention)},
                  {"output_matrix", to_string(c.plant_cfg.output_matrix)}};
    j["synthesis"] = {{"bisect_rel", c.synthesis.bisect_rel},
                      {"coarse_rel", c.synthesis.coarse_rel},
                      {"coarse_cap", c.synthesis.coarse_cap},
                      {"final_cap", c.synthesis.final_cap},
                      {"delta_log_lo", c.synthesis.delta_log_lo},
                      {"delta_log_hi", c.synthesis.delta_log_hi},
                      {"delta_points", c.synthesis.delta_points},
                      {"golden_iters", c.synthesis.golden_iters},
                      {"eps_lo", c.synthesis.eps_lo},
                      {"eps_hi_cap", c.synthesis.eps_hi_cap},
                      {"feas_tol", c.synthesis.feas_tol},
                      {"pd_tol", c.synthesis.pd_tol}};
    j["simulate"] = {{"n_seeds", c.simulate.n_seeds},
                     {"n_steps", c.simulate.n_steps},
                     {"burn_in", c.simulate.burn_in},
                     {"dissipation_seeds", c.simulate.dissipation_seeds},
                     {"dissipation_steps", c.simulate.dissipation_steps}};
    j["metrics"] = {{"sigma2_open", c.metrics_cfg.sigma2_open},
                    {"sigma2_closed", c.metrics_cfg.sigma2_closed},
                    {"eta", c.metrics_cfg.eta},
                    {"n0", c.metrics_cfg.n0},
                    {"q_norm", to_string(c.metrics_cfg.q_norm)},
                    {"margin_db_min", c.metrics_cfg.margin_db_min},
                    {"margin_db_max", c.metrics_cfg.margin_db_max},
                    {"margin_db_step", c.metrics_cfg.margin_db_step},
                    {"snr_db_min", c.metrics_cfg.snr_db_min},
                    {"snr_db_max", c.metrics_cfg.snr_db_max},
                    {"snr_db_step", c.metrics_cfg.snr_db_step},
                    {"p_o", c.metrics_cfg.p_o},
                    {"quad_order", c.metrics_cfg.quad_order},
                    {"mc_bits", c.metrics_cfg.mc_bits}};
    return j;
}

/// Serialize a JSON document deterministically (sorted keys, trailing \n).
inline std::string dump_json(const json &j) { return j.dump(2) + "\n"; }

// =============================================================================
// Presets
// =============================================================================

inline std::vector<std::string> preset_names() { return {"paper-weak-turbulence"}; }

/// Resolve a preset name to its configuration.
inline RunConfig preset_config(const std::string &name) {
    if (name == "paper-weak-turbulence")
        return RunConfig{}; // frozen defaults, see RunConfig docs
    throw ValidationError("unknown preset '" + name + "' (available: paper-weak-turbulence)");
}

inline RunConfig load_config_file(const std::string &path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception &e) {
        throw ValidationError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// =============================================================================
// Gain files
// =============================================================================

struct GainFile {
    Eigen::RowVector2d K;
    std::optional<Eigen::Matrix2d> Y;
    std::optional<double> eps;
    std::optional<double> delta;
};

inline GainFile load_gain_file(const std::string &path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception &e) {
        throw ValidationError("gain file parse error in " + path + ": " + e.what());
    }
    detail::require_known_keys(j, {"schema_version", "K", "Y", "eps", "delta"}, "gain file");
    if (!j.contains("K") || !j.at("K").is_array() || j.at("K").size() != 2)
        throw ValidationError("gain file: K must be an array of 2 numbers");
    GainFile g;
    g.K << j.at("K")[0].get<double>(), j.at("K")[1].get<double>();
    if (j.contains("Y")) {
        const json &y = j.at("Y");
        if (!y.is_array() || y.size() != 2 || y[0].size() != 2 || y[1].size() != 2)
            throw ValidationError("gain file: Y must be a 2x2 array");
        Eigen::Matrix2d Y;
        Y << y[0][0].get<double>(), y[0][1].get<double>(), y[1][0].get<double>(),
            y[1][1].get<double>();
        g.Y = Y;
    }
    if (j.contains("eps"))
        g.eps = j.at("eps").get<double>();
    if (j.contains("delta"))
        g.delta = j.at("delta").get<double>();
    return g;
}

inline json gain_to_json(const Eigen::RowVector2d &K, const std::optional<Eigen::Matrix2d> &Y,
                         std::optional<double> eps, std::optional<double> delta) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["K"] = {K(0), K(1)};
    if (Y)
        j["Y"] = {{(*Y)(0, 0), (*Y)(0, 1)}, {(*Y)(1, 0), (*Y)(1, 1)}};
    if (eps)
        j["eps"] = *eps;
    if (delta)
        j["delta"] = *delta;
    return j;
}

// =============================================================================
// CSV writers
// =============================================================================

inline std::string channel_trajectory_csv(const turb::ChannelTrajectory &tr, double dt,
                                          long long max_rows) {
    std::string out = "# schema: channel-trajectory/1\nk,t,x_p,w_p\n";
    const long long n = std::min<long long>(max_rows, static_cast<long long>(tr.w_p.size()));
    for (long long k = 0; k < n; ++k) {
        out += std::to_string(k) + "," + fmt(static_cast<double>(k) * dt) + "," +
               fmt(tr.x_p[static_cast<std::size_t>(k)]) + "," +
               fmt(tr.w_p[static_cast<std::size_t>(k)]) + "\n";
    }
    return out;
}

inline std::string histogram_csv(const turb::Histogram &h, const turb::TurbulenceParams &p) {
    std::string out = "# schema: histogram/1\nbin_lo,bin_hi,count,density,model_density\n";
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) {
        const double mid = 0.5 * (h.edges[i] + h.edges[i + 1]);
        const double model = mid > 0.0 ? turb::lognormal_pdf(mid, p) : 0.0;
        out += fmt(h.edges[i]) + "," + fmt(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) +
               "," + fmt(h.density[i]) + "," + fmt(model) + "\n";
    }
    return out;
}

inline std::string seed_stats_csv(const std::vector<clv::SeedStats> &stats) {
    std::string out = "# schema: seed-stats/1\n"
                      "seed,var_open,var_closed,reduction,max_abs_y_open,max_abs_y_closed\n";
    for (const auto &s : stats) {
        out += std::to_string(s.seed) + "," + fmt(s.var_open) + "," + fmt(s.var_closed) + "," +
               fmt(1.0 - s.var_closed / s.var_open) + "," + fmt(s.max_abs_y_open) + "," +
               fmt(s.max_abs_y_closed) + "\n";
    }
    return out;
}

/// One row of a closed-loop demonstration trace.
struct TraceRow {
    long long k;
    double t, x_p, x_l, u, y;
};

inline std::string loop_trajectory_csv(const std::vector<TraceRow> &rows) {
    std::string out = "# schema: loop-trajectory/1\nk,t,x_p,x_l,u,y\n";
    for (const auto &r : rows) {
        out += std::to_string(r.k) + "," + fmt(r.t) + "," + fmt(r.x_p) + "," + fmt(r.x_l) +
               "," + fmt(r.u) + "," + fmt(r.y) + "\n";
    }
    return out;
}

inline std::string curves_csv(const std::vector<metrics::MetricCurve> &curves) {
    std::string out = "# schema: metric-curves/1\nmetric,method,sigma2,axis_db,value\n";
    for (const auto &c : curves)
        for (std::size_t i = 0; i < c.axis_db.size(); ++i)
            out += c.metric + "," + c.method + "," + fmt(c.sigma2) + "," + fmt(c.axis_db[i]) +
                   "," + fmt(c.values[i]) + "\n";
    return out;
}

// =============================================================================
// Report JSON builders
// =============================================================================

inline json fit_report_json(const turb::LognormalEstimate &est, const turb::FitReport &fit,
                            double tau_hat, const RunConfig &cfg, long long thin_stride,
                            std::size_t reflections) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["sigma2_hat"] = est.sigma2_hat;
    j["i0_hat"] = est.i0_hat;
    j["tau_c_hat"] = tau_hat;
    j["chi2"] = fit.chi2;
    j["dof"] = fit.dof;
    j["chi2_per_dof"] = fit.chi2_per_dof;
    j["bins_used"] = fit.bins_used;
    j["bins_excluded"] = fit.bins_excluded;
    j["fit_accepted"] = fit.accepted;
    j["weak_regime"] = cfg.channel.weak_regime();
    j["n_steps"] = cfg.channel_run.n_steps;
    j["thin_stride"] = thin_stride;
    j["reflections"] = reflections;
    return j;
}

inline json synthesis_report_json(const lmi::SynthesisResult &r, double gain_freq,
                                  const plant::AugmentedPlant &pl) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps_star"] = r.eps_star;
    j["delta_star"] = r.delta_star;
    j["K"] = {r.K(0), r.K(1)};
    j["Y"] = {{r.Y(0, 0), r.Y(0, 1)}, {r.Y(1, 0), r.Y(1, 1)}};
    j["S"] = {r.S(0), r.S(1)};
    j["cert_lambda_max_lmi"] = r.cert_lmax_lmi;
    j["cert_lambda_min_y"] = r.cert_lmin_y;
    j["rho_closed_loop"] = r.rho_acl;
    j["congruence_rel_err"] = r.congruence_rel_err;
    j["gain_freq"] = gain_freq;
    j["lmi_blocks"] = r.blocks;
    j["lipschitz_h_eff"] = pl.lip.h_eff;
    j["lipschitz_argmax"] = pl.lip.argmax;
    j["probes"] = r.probes.size();
    long long iters = 0;
    for (const auto &p : r.probes)
        iters += p.iters;
    j["solver_iterations_total"] = iters;
    return j;
}

inline json verification_report_json(const clv::VerificationReport &v,
                                     const std::optional<clv::DissipationReport> &diss) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["gain_freq"] = v.gain_freq;
    j["var_open"] = v.var_open;
    j["var_closed"] = v.var_closed;
    j["reduction"] = v.reduction;
    j["reduction_min"] = v.reduction_min;
    j["max_abs_y_open"] = v.max_abs_y_open;
    j["max_abs_y_closed"] = v.max_abs_y_closed;
    j["n_seeds"] = v.per_seed.size();
    if (diss) {
        j["dissipation"] = {{"checked", diss->checked},
                            {"violations", diss->violations},
                            {"out_of_domain", diss->out_of_domain},
                            {"reflections", diss->reflections},
                            {"worst_checked", diss->worst_checked},
                            {"worst_overall", diss->worst_overall}};
    }
    return j;
}

} // namespace fso::io
