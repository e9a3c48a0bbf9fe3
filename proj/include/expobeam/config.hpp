#pragma once

// Flat key=value scenario files and sweep manifests.
//
//   # comment
//   scheme = lyapunov
//   n_slots = 3600
//
// Keys match ScenarioConfig field names. Unknown or repeated keys are errors.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "expobeam/errors.hpp"
#include "expobeam/sim.hpp"

namespace expobeam {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, int line, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty()) {
        throw ConfigError(key, line, "line " + std::to_string(line) + ": key '" + key + "': cannot parse '" +
                                         text + "' as a number");
    }
    return v;
}

inline bool parse_bool(const std::string& key, int line, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(key, line, "line " + std::to_string(line) + ": key '" + key + "': expected true or false");
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// One configurable field: name, setter from text, getter to text.
struct ConfigKey {
    std::string name;
    std::function<void(ScenarioConfig&, const std::string&, int)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        auto dbl = [&k](const char* name, double ScenarioConfig::*m) {
            k.push_back({name,
                         [m, name](ScenarioConfig& c, const std::string& v, int line) {
                             c.*m = detail::parse_number<double>(name, line, v);
                         },
                         [m](const ScenarioConfig& c) { return detail::format_double(c.*m); }});
        };
        auto integer = [&k](const char* name, int ScenarioConfig::*m) {
            k.push_back({name,
                         [m, name](ScenarioConfig& c, const std::string& v, int line) {
                             c.*m = detail::parse_number<int>(name, line, v);
                         },
                         [m](const ScenarioConfig& c) { return std::to_string(c.*m); }});
        };
        auto str = [&k](const char* name, std::string ScenarioConfig::*m) {
            k.push_back({name, [m](ScenarioConfig& c, const std::string& v, int) { c.*m = v; },
                         [m](const ScenarioConfig& c) { return c.*m; }});
        };
        str("scheme", &ScenarioConfig::scheme);
        dbl("frequency", &ScenarioConfig::frequency);
        integer("n_tx", &ScenarioConfig::n_tx);
        integer("n_rx", &ScenarioConfig::n_rx);
        dbl("tx_spacing_wavelengths", &ScenarioConfig::tx_spacing_wavelengths);
        dbl("rx_spacing_wavelengths", &ScenarioConfig::rx_spacing_wavelengths);
        dbl("wire_radius_wavelengths", &ScenarioConfig::wire_radius_wavelengths);
        dbl("bs_height", &ScenarioConfig::bs_height);
        dbl("head_x", &ScenarioConfig::head_x);
        dbl("head_y", &ScenarioConfig::head_y);
        dbl("head_z", &ScenarioConfig::head_z);
        dbl("head_radius_wavelengths", &ScenarioConfig::head_radius_wavelengths);
        integer("n_sampling_points", &ScenarioConfig::n_sampling_points);
        dbl("d_ref", &ScenarioConfig::d_ref);
        dbl("d_min", &ScenarioConfig::d_min);
        dbl("d_max", &ScenarioConfig::d_max);
        dbl("tilt_min_deg", &ScenarioConfig::tilt_min_deg);
        dbl("tilt_max_deg", &ScenarioConfig::tilt_max_deg);
        dbl("polar_min_deg", &ScenarioConfig::polar_min_deg);
        dbl("polar_max_deg", &ScenarioConfig::polar_max_deg);
        dbl("polar_center_deg", &ScenarioConfig::polar_center_deg);
        dbl("dt", &ScenarioConfig::dt);
        integer("n_slots", &ScenarioConfig::n_slots);
        dbl("p_max", &ScenarioConfig::p_max);
        dbl("noise_variance", &ScenarioConfig::noise_variance);
        dbl("temp_threshold", &ScenarioConfig::temp_threshold);
        dbl("pd_limit", &ScenarioConfig::pd_limit);
        dbl("v_param", &ScenarioConfig::v_param);
        dbl("antenna_factor", &ScenarioConfig::antenna_factor);
        dbl("thermal_conductivity", &ScenarioConfig::thermal_conductivity);
        dbl("density", &ScenarioConfig::density);
        dbl("specific_heat", &ScenarioConfig::specific_heat);
        dbl("blood_perfusion_ml_per_min_kg", &ScenarioConfig::blood_perfusion_ml_per_min_kg);
        dbl("transmission_coeff", &ScenarioConfig::transmission_coeff);
        dbl("kernel_eps", &ScenarioConfig::kernel_eps);
        str("thermal_mode", &ScenarioConfig::thermal_mode);
        k.push_back({"far_field_mismatch",
                     [](ScenarioConfig& c, const std::string& v, int line) {
                         c.far_field_mismatch = detail::parse_bool("far_field_mismatch", line, v);
                     },
                     [](const ScenarioConfig& c) { return std::string(c.far_field_mismatch ? "true" : "false"); }});
        k.push_back({"worst_case_refine",
                     [](ScenarioConfig& c, const std::string& v, int line) {
                         c.worst_case_refine = detail::parse_bool("worst_case_refine", line, v);
                     },
                     [](const ScenarioConfig& c) { return std::string(c.worst_case_refine ? "true" : "false"); }});
        integer("worst_case_tilt_points", &ScenarioConfig::worst_case_tilt_points);
        integer("worst_case_polar_points", &ScenarioConfig::worst_case_polar_points);
        integer("per_slot_starts", &ScenarioConfig::per_slot_starts);
        str("bound_reference", &ScenarioConfig::bound_reference);
        dbl("bound_t_max", &ScenarioConfig::bound_t_max);
        k.push_back({"seed",
                     [](ScenarioConfig& c, const std::string& v, int line) {
                         c.seed = detail::parse_number<std::uint64_t>("seed", line, v);
                     },
                     [](const ScenarioConfig& c) { return std::to_string(c.seed); }});
        // Fixed exposure distance: d_min = d_max = d_exp.
        k.push_back({"d_exp",
                     [](ScenarioConfig& c, const std::string& v, int line) {
                         c.d_min = c.d_max = detail::parse_number<double>("d_exp", line, v);
                     },
                     nullptr});
        return k;
    }();
    return keys;
}

inline const ConfigKey* find_config_key(const std::string& name) {
    for (const auto& k : config_keys()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

/// Sets one key from text; unknown keys throw ConfigError.
inline void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value, int line = 0) {
    const ConfigKey* k = find_config_key(key);
    if (!k) {
        throw ConfigError(key, line, (line ? "line " + std::to_string(line) + ": " : std::string()) +
                                         "unknown key '" + key + "'");
    }
    k->set(cfg, value, line);
}

/// Every regular key with its current value, in registry order.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ScenarioConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_keys()) {
        if (k.get) out.emplace_back(k.name, k.get(cfg));
    }
    return out;
}

struct KeyValueLine {
    std::string key;
    std::string value;
    int line = 0;
};

/// Splits a key=value document; rejects malformed lines and repeated keys.
inline std::vector<KeyValueLine> parse_key_values(std::istream& in) {
    std::vector<KeyValueLine> out;
    std::map<std::string, int> seen;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", line, "line " + std::to_string(line) + ": expected key = value");
        }
        KeyValueLine kv{detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1)), line};
        if (kv.key.empty()) {
            throw ConfigError("", line, "line " + std::to_string(line) + ": empty key");
        }
        if (auto it = seen.find(kv.key); it != seen.end()) {
            throw ConfigError(kv.key, line, "line " + std::to_string(line) + ": key '" + kv.key +
                                                "' already set on line " + std::to_string(it->second));
        }
        seen.emplace(kv.key, line);
        out.push_back(std::move(kv));
    }
    return out;
}

inline const std::vector<std::string>& required_config_keys() {
    static const std::vector<std::string> keys = {"scheme", "n_slots"};
    return keys;
}

inline ScenarioConfig parse_config(std::istream& in) {
    const auto lines = parse_key_values(in);
    for (const auto& req : required_config_keys()) {
        const bool present =
            std::any_of(lines.begin(), lines.end(), [&](const KeyValueLine& l) { return l.key == req; });
        if (!present) throw ConfigError(req, 0, "missing required key '" + req + "'");
    }
    const bool has_exp = std::any_of(lines.begin(), lines.end(), [](const auto& l) { return l.key == "d_exp"; });
    ScenarioConfig cfg;
    for (const auto& l : lines) {
        if (has_exp && (l.key == "d_min" || l.key == "d_max")) {
            throw ConfigError(l.key, l.line, "line " + std::to_string(l.line) + ": '" + l.key +
                                                 "' conflicts with d_exp");
        }
        set_config_value(cfg, l.key, l.value, l.line);
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Sweep manifest:
///   config = base.cfg          (relative to the manifest)
///   out = results/sweep        (optional)
///   seeds = 1, 2, 3            (optional; default: the config's seed)
///   sweep.v_param = 1e-5, 1e-4 (one line per axis, Cartesian product)
struct RunManifest {
    std::string config_path;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = detail::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline RunManifest parse_manifest(std::istream& in) {
    RunManifest m;
    for (const auto& l : parse_key_values(in)) {
        if (l.key == "config") {
            m.config_path = l.value;
        } else if (l.key == "out") {
            m.out_dir = l.value;
        } else if (l.key == "seeds") {
            for (const auto& s : split_list(l.value)) {
                m.seeds.push_back(detail::parse_number<std::uint64_t>("seeds", l.line, s));
            }
        } else if (l.key.rfind("sweep.", 0) == 0) {
            const std::string key = l.key.substr(6);
            if (!find_config_key(key)) {
                throw ConfigError(l.key, l.line, "line " + std::to_string(l.line) + ": sweep axis '" + key +
                                                     "' is not a config key");
            }
            auto values = split_list(l.value);
            if (values.empty()) {
                throw ConfigError(l.key, l.line, "line " + std::to_string(l.line) + ": empty sweep axis");
            }
            m.axes.emplace_back(key, std::move(values));
        } else {
            throw ConfigError(l.key, l.line, "line " + std::to_string(l.line) + ": unknown manifest key '" +
                                                 l.key + "'");
        }
    }
    if (m.config_path.empty()) throw ConfigError("config", 0, "missing required key 'config'");
    return m;
}

/// Cartesian product of the sweep axes; each point is a list of (key, value).
inline std::vector<std::vector<std::pair<std::string, std::string>>> sweep_points(const RunManifest& m) {
    std::vector<std::vector<std::pair<std::string, std::string>>> pts(1);
    for (const auto& [key, values] : m.axes) {
        std::vector<std::vector<std::pair<std::string, std::string>>> next;
        for (const auto& p : pts) {
            for (const auto& v : values) {
                auto q = p;
                q.emplace_back(key, v);
                next.push_back(std::move(q));
            }
        }
        pts = std::move(next);
    }
    return pts;
}

}  // namespace expobeam
