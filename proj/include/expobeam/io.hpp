#pragma once

// trace.csv, summary.json and sweep.csv writers.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "expobeam/config.hpp"
#include "expobeam/sim.hpp"
#include "expobeam/thermal.hpp"

namespace expobeam {

inline std::string fmt17(double v) { return detail::format_double(v); }

/// Column names in file order.
inline std::vector<std::string> trace_columns(int m, int n_tx) {
    std::vector<std::string> cols = {"slot", "ue_x",  "ue_y",       "ue_z",  "alpha",
                                     "beta", "power_w", "snr_db", "lambda_max", "silent"};
    for (const char* prefix : {"pd_m", "t_m", "q_m"}) {
        for (int i = 1; i <= m; ++i) cols.push_back(prefix + std::to_string(i));
    }
    for (const char* prefix : {"w_re_", "w_im_"}) {
        for (int i = 1; i <= n_tx; ++i) cols.push_back(prefix + std::to_string(i));
    }
    return cols;
}

inline void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
    const int m = trace.cfg.n_sampling_points;
    const int nt = trace.cfg.n_tx;
    const auto cols = trace_columns(m, nt);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    std::string row;
    for (const auto& r : trace.slots) {
        row.clear();
        row += std::to_string(r.slot);
        for (double v : {r.pose.center.x(), r.pose.center.y(), r.pose.center.z(), r.pose.tilt_angle,
                         r.pose.polar_angle, r.power, r.snr.db, r.lambda_max}) {
            row += ',';
            row += fmt17(v);
        }
        row += r.silent ? ",1" : ",0";
        for (const Eigen::VectorXd* vec : {&r.pd, &r.temps, &r.queues}) {
            for (Eigen::Index i = 0; i < vec->size(); ++i) {
                row += ',';
                row += fmt17((*vec)(i));
            }
        }
        for (Eigen::Index i = 0; i < r.w.size(); ++i) row += ',' + fmt17(r.w(i).real());
        for (Eigen::Index i = 0; i < r.w.size(); ++i) row += ',' + fmt17(r.w(i).imag());
        out << row << '\n';
    }
}

/// JSON number, or null for NaN/inf.
inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json summary_json(const SimulationTrace& trace, const SimulationSummary& s) {
    using nlohmann::json;
    const Scenario sc(trace.cfg);
    const ScenarioConfig& cfg = trace.cfg;
    json j;
    json echo = json::object();
    for (const auto& [k, v] : config_echo(cfg)) echo[k] = v;
    j["config"] = echo;

    const double lambda = sc.consts.wavelength;
    j["unit_conversions"] = json::array({
        {{"key", "blood_perfusion_ml_per_min_kg"}, {"from", cfg.blood_perfusion_ml_per_min_kg},
         {"from_unit", "ml/(min kg)"}, {"to", sc.cfg.tissue().blood_perfusion}, {"to_unit", "m^3/(s kg)"}},
        {{"key", "tx_spacing_wavelengths"}, {"from", cfg.tx_spacing_wavelengths}, {"from_unit", "wavelengths"},
         {"to", cfg.tx_spacing_wavelengths * lambda}, {"to_unit", "m"}},
        {{"key", "rx_spacing_wavelengths"}, {"from", cfg.rx_spacing_wavelengths}, {"from_unit", "wavelengths"},
         {"to", cfg.rx_spacing_wavelengths * lambda}, {"to_unit", "m"}},
        {{"key", "wire_radius_wavelengths"}, {"from", cfg.wire_radius_wavelengths}, {"from_unit", "wavelengths"},
         {"to", cfg.wire_radius_wavelengths * lambda}, {"to_unit", "m"}},
        {{"key", "head_radius_wavelengths"}, {"from", cfg.head_radius_wavelengths}, {"from_unit", "wavelengths"},
         {"to", cfg.head_radius()}, {"to_unit", "m"}},
        {{"key", "tilt/polar ranges"}, {"from_unit", "deg"}, {"to_unit", "rad"}},
    });

    const double c_pen = sc.kernel.slot_gain();
    j["notes"] = json::array({
        "penalty: A = V H^H H - (c_pen / 2 eta) sum_m Q_m Phi_m^H Phi_m with c_pen = xi_0 T_tr R_th / kappa = " +
            fmt17(c_pen) + " C per W/m^2; dropping c_pen is the same policy with V replaced by V / c_pen = " +
            fmt17(cfg.v_param / c_pen),
        "polar angle: beta = polar_center_deg + U(polar_min_deg, polar_max_deg) with polar_center_deg = " +
            fmt17(cfg.polar_center_deg) + " (0 keeps the dipoles near vertical, co-polarized with the z-polarized BS)",
        std::string("temperature dynamics: ") +
            (cfg.thermal_mode == "markov" ? "first-order recursion (approximation)" : "truncated convolution"),
        "queues are tracked for every scheme; only the lyapunov scheme uses them to choose w",
    });
    json warnings = json::array();
    if (!trace.thermal_warning.empty()) warnings.push_back(trace.thermal_warning);
    if (s.bound_t_max_violated) warnings.push_back("observed maximum temperature exceeds bound_t_max");
    j["warnings"] = warnings;

    j["derived"] = {
        {"wavelength_m", lambda},
        {"tau_s", sc.kernel.tau},
        {"r_th_m", sc.kernel.r_th},
        {"prefactor_c_per_w_m2", sc.kernel.prefactor},
        {"xi_0", sc.kernel.xi.front()},
        {"kernel_window_slots", sc.kernel.truncation_index},
        {"kernel_tail", sc.kernel.tail},
        {"penalty_coefficient", c_pen},
        {"v0", sc.v0},
        {"self_impedance_ohm", {sc.z->z(0, 0).real(), sc.z->z(0, 0).imag()}},
        {"impedance_condition", sc.z->condition},
        {"worst_case_power_w", num(trace.worst_case_power)},
    };

    json q = json::object();
    for (const auto& [p, v] : s.snr_db_quantiles) {
        char key[16];
        std::snprintf(key, sizeof key, "p%02d", static_cast<int>(std::lround(p * 100)));
        q[key] = num(v);
    }
    j["summary"] = {
        {"scheme", cfg.scheme},
        {"n_slots", s.n_slots},
        {"avg_snr_db", num(s.avg_snr_db)},
        {"avg_snr_linear", s.avg_snr_linear},
        {"snr_db_quantiles", q},
        {"avg_received_power", s.avg_received_power},
        {"avg_transmit_power_w", s.avg_transmit_power},
        {"avg_queue", s.avg_queue},
        {"final_avg_temperature_c", s.final_avg_temperature},
        {"max_temperature_c", s.max_temperature},
        {"max_avg_temperature_c", s.max_avg_temperature},
        {"silent_fraction", s.silent_fraction},
        {"avg_pd_w_m2", s.avg_pd},
        {"max_pd_w_m2", s.max_pd},
        {"max_final_queue_ratio", s.max_final_queue_ratio},
        {"min_queue_bound_slack", s.min_queue_bound_slack},
        {"bound_reference", cfg.bound_reference},
        {"reference_power", s.reference_power},
        {"bound_b", s.bound_b},
        {"bound_t_max_c", s.bound_t_max},
        {"bound_gap", num(s.bound_gap)},
        {"avg_temperature_series", s.avg_temperature_series},
    };
    j["wall_seconds"] = trace.wall_seconds;
    return j;
}

inline const std::vector<std::string>& sweep_summary_columns() {
    static const std::vector<std::string> cols = {
        "scheme",          "avg_snr_db",        "snr_p50_db",    "avg_received_power", "avg_transmit_power_w",
        "avg_queue",       "final_avg_temperature_c", "max_temperature_c", "silent_fraction", "max_pd_w_m2",
        "bound_gap"};
    return cols;
}

inline std::vector<std::string> sweep_summary_values(const ScenarioConfig& cfg, const SimulationSummary& s) {
    double p50 = std::nan("");
    for (const auto& [p, v] : s.snr_db_quantiles) {
        if (p == 0.5) p50 = v;
    }
    return {cfg.scheme,
            fmt17(s.avg_snr_db),
            fmt17(p50),
            fmt17(s.avg_received_power),
            fmt17(s.avg_transmit_power),
            fmt17(s.avg_queue),
            fmt17(s.final_avg_temperature),
            fmt17(s.max_temperature),
            fmt17(s.silent_fraction),
            fmt17(s.max_pd),
            fmt17(s.bound_gap)};
}

/// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace expobeam
