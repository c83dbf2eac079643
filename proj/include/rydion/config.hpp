#pragma once

// Experiment configuration: a flat JSON file in which every physical quantity
// carries an explicit unit suffix (_kHz, _um, _us, ...).  All frequencies are
// ordinary frequencies; the 2 pi lives on this side of the boundary, so the
// rest of the library only ever sees rad/s and SI lengths.  Unknown keys are
// rejected by name, and parse -> serialize -> parse is the identity.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydion/constants.hpp"
#include "rydion/species.hpp"

namespace rydion {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ExperimentKind {
    bo_curves,
    dressed,
    trap_info,
    gate,
    gate_thermal,
    micromotion,
    taylor_check,
    fig2,
    fig3,
    fig4,
    fig5mm,
    figA,
};

inline const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
    static const std::vector<std::pair<ExperimentKind, std::string>> names = {
        {ExperimentKind::bo_curves, "bo-curves"},
        {ExperimentKind::dressed, "dressed"},
        {ExperimentKind::trap_info, "trap-info"},
        {ExperimentKind::gate, "gate"},
        {ExperimentKind::gate_thermal, "gate-thermal"},
        {ExperimentKind::micromotion, "micromotion"},
        {ExperimentKind::taylor_check, "taylor-check"},
        {ExperimentKind::fig2, "fig2"},
        {ExperimentKind::fig3, "fig3"},
        {ExperimentKind::fig4, "fig4"},
        {ExperimentKind::fig5mm, "fig5mm"},
        {ExperimentKind::figA, "figA"},
    };
    return names;
}

inline std::string kind_name(ExperimentKind k) {
    for (const auto& [kind, name] : kind_names())
        if (kind == k) return name;
    throw std::logic_error("unnamed experiment kind");
}

inline ExperimentKind kind_from_name(const std::string& name) {
    for (const auto& [kind, n] : kind_names())
        if (n == name) return kind;
    std::string valid;
    for (const auto& [kind, n] : kind_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown experiment \"" + name + "\"; valid: " + valid);
}

namespace detail {

// Default key set per experiment.  The defaults reproduce the reference
// parameter sets of each module, so an empty config runs the standard case.
inline nlohmann::json config_schema(ExperimentKind k) {
    using nlohmann::json;
    json s = json::object();
    s["experiment"] = kind_name(k);
    switch (k) {
    case ExperimentKind::bo_curves:
        s["atom"] = "6Li";
        s["defects_file"] = "";
        s["n"] = 30;
        s["l"] = 0;
        s["two_j"] = 1;
        s["basis_n_min"] = 25;
        s["basis_n_max"] = 35;
        s["basis_l_max"] = 3;
        s["R_min_um"] = 0.3;
        s["R_max_um"] = 4.0;
        s["n_R"] = 200;
        s["trap_field"] = false;
        s["Omega_rf_MHz"] = 2.5;
        s["q"] = 0.28;
        s["rf_phase"] = "zero"; // plus | zero | minus
        break;
    case ExperimentKind::dressed:
        s["atom"] = "7Li";
        s["defects_file"] = "";
        s["n"] = 30;
        s["l"] = 0;
        s["two_j"] = 1;
        s["basis_n_min"] = 25;
        s["basis_n_max"] = 35;
        s["basis_l_max"] = 2;
        s["Omega_MHz"] = 10.0;
        s["Delta0_GHz"] = 1.0;
        s["R_min_um"] = 0.5;
        s["R_max_um"] = 4.0;
        s["n_R"] = 200;
        break;
    case ExperimentKind::trap_info:
        s["omega_i_kHz"] = 250.0;
        s["Omega_rf_MHz"] = 2.5;
        s["q"] = 0.28;
        break;
    case ExperimentKind::gate_thermal:
        s["nbar"] = 0.25;
        s["n_max_thermal"] = 3;
        [[fallthrough]];
    case ExperimentKind::gate:
        s["atom"] = "7Li";
        s["defects_file"] = "";
        s["n"] = 30;
        s["basis_n_min"] = 25;
        s["basis_n_max"] = 35;
        s["basis_l_max"] = 2;
        s["Omega_MHz"] = 10.02;
        s["Delta0_GHz"] = 0.4;
        s["omega_i_kHz"] = 250.0;
        s["omega_a_kHz"] = 205.0;
        s["Omega_rf_MHz"] = 2.5;
        s["d_um"] = 0.0;      // 0: place the atom at the force optimum
        s["delta_kHz"] = 0.0; // 0: phase-gate condition delta = eta Omega_SM
        s["n_fock_i"] = 10;
        s["n_fock_a"] = 10;
        s["steps_per_period"] = 200;
        s["n_samples"] = 1000;
        break;
    case ExperimentKind::micromotion:
        s["grid_n"] = 256;
        s["n_samples"] = 1000;
        s["zoom_start_us"] = 0.0; // zoom window; length 0 disables
        s["zoom_len_us"] = 0.0;
        [[fallthrough]];
    case ExperimentKind::taylor_check:
        s["atom"] = "7Li";
        s["defects_file"] = "";
        s["n"] = 30;
        s["basis_n_min"] = 25;
        s["basis_n_max"] = 35;
        s["basis_l_max"] = 2;
        s["Omega_MHz"] = 13.1;
        s["Delta0_GHz"] = 0.8;
        s["omega_a_kHz"] = 200.0;
        s["Omega_rf_MHz"] = 2.5;
        s["q"] = std::pow(2.0, 1.5) / 10.0;
        s["d_um"] = 1.0;
        s["eta_Omega_SM_kHz"] = 1.06;
        s["delta_perp_kHz"] = 1.064;
        s["ramp_us"] = 50.0;
        s["t_end_us"] = 0.0; // 0: one detuning period 1 / delta_perp
        s["steps_per_rf_period"] = 128;
        if (k == ExperimentKind::taylor_check) s["sector"] = "ud";
        break;
    case ExperimentKind::fig2:
    case ExperimentKind::fig3:
    case ExperimentKind::fig4:
    case ExperimentKind::fig5mm:
    case ExperimentKind::figA:
        break; // preconfigured; only the kind tag is accepted
    }
    return s;
}

inline std::string json_type_name(const nlohmann::json& v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_string()) return "string";
    if (v.is_number()) return "number";
    return v.type_name();
}

} // namespace detail

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::trap_info;
    nlohmann::json values; // complete key set, defaults filled in

    bool operator==(const ExperimentConfig& o) const {
        return kind == o.kind && values == o.values;
    }

    // ---- typed accessors; the unit suffix of the key fixes the scale ----
    double number(const std::string& key) const {
        return fetch(key).get<double>();
    }
    int integer(const std::string& key) const {
        const auto& v = fetch(key);
        if (!v.is_number_integer())
            throw ConfigError("key \"" + key + "\" must be an integer");
        return v.get<int>();
    }
    bool flag(const std::string& key) const { return fetch(key).get<bool>(); }
    std::string str(const std::string& key) const {
        return fetch(key).get<std::string>();
    }
    // ordinary frequency in Hz, from a _kHz / _MHz / _GHz key
    double hz(const std::string& key) const {
        return number(key) * frequency_scale(key);
    }
    // angular frequency in rad/s
    double rad(const std::string& key) const {
        return constants::two_pi * hz(key);
    }
    double meters(const std::string& key) const {
        if (!ends_with(key, "_um") && !ends_with(key, "_nm"))
            throw std::logic_error("key \"" + key + "\" has no length suffix");
        return number(key) * (ends_with(key, "_um") ? 1e-6 : 1e-9);
    }
    double seconds(const std::string& key) const {
        if (!ends_with(key, "_us"))
            throw std::logic_error("key \"" + key + "\" has no time suffix");
        return number(key) * 1e-6;
    }

    Species atom() const {
        const std::string name = str("atom");
        Species sp;
        if (name == "6Li")
            sp = make_li6();
        else if (name == "7Li")
            sp = make_li7();
        else
            throw ConfigError("key \"atom\": unsupported species \"" + name +
                              "\" (use 6Li or 7Li)");
        const std::string defects = str("defects_file");
        if (!defects.empty()) {
            if (!std::filesystem::exists(defects))
                throw ConfigError("key \"defects_file\": no such file: " + defects);
            sp.defects = QuantumDefectTable::load(defects, "Li");
            if (sp.defects.size() == 0)
                throw ConfigError("key \"defects_file\": no Li records in " + defects);
        }
        return sp;
    }

    std::string serialize() const { return values.dump(2) + "\n"; }

private:
    const nlohmann::json& fetch(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end())
            throw std::logic_error("config key \"" + key + "\" not in schema of " +
                                   kind_name(kind));
        return *it;
    }
    static bool ends_with(const std::string& s, const std::string& suf) {
        return s.size() >= suf.size() &&
               s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    }
    static double frequency_scale(const std::string& key) {
        if (ends_with(key, "_kHz")) return 1e3;
        if (ends_with(key, "_MHz")) return 1e6;
        if (ends_with(key, "_GHz")) return 1e9;
        throw std::logic_error("key \"" + key + "\" has no frequency suffix");
    }
};

inline ExperimentConfig default_config(ExperimentKind k) {
    return {k, detail::config_schema(k)};
}

// Parse a JSON object against the schema of `kind`: unknown keys are rejected
// by name (with a hint when only a unit suffix is missing), present keys are
// type-checked, and missing keys take their defaults.
inline ExperimentConfig parse_config(const nlohmann::json& in, ExperimentKind kind) {
    if (!in.is_object()) throw ConfigError("config must be a JSON object");
    nlohmann::json schema = detail::config_schema(kind);
    for (auto it = in.begin(); it != in.end(); ++it) {
        const std::string& key = it.key();
        auto slot = schema.find(key);
        if (slot == schema.end()) {
            std::string msg = "unknown key \"" + key + "\" for experiment " +
                              kind_name(kind);
            for (const char* suf : {"_kHz", "_MHz", "_GHz", "_um", "_us"})
                if (schema.contains(key + suf)) {
                    msg += "; missing unit suffix, did you mean \"" + key + suf + "\"?";
                    break;
                }
            throw ConfigError(msg);
        }
        if (key == "experiment") {
            if (!it->is_string() || it->get<std::string>() != kind_name(kind))
                throw ConfigError("key \"experiment\" must be \"" +
                                  kind_name(kind) + "\"");
            continue;
        }
        const bool ok = slot->is_boolean() ? it->is_boolean()
                        : slot->is_string() ? it->is_string()
                        : slot->is_number_integer()
                            ? it->is_number_integer()
                            : it->is_number();
        if (!ok)
            throw ConfigError("key \"" + key + "\" must be a " +
                              detail::json_type_name(*slot) + ", got " +
                              detail::json_type_name(*it));
        *slot = *it;
    }
    return {kind, std::move(schema)};
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    ExperimentKind kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, kind);
}

} // namespace rydion
