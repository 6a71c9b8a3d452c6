#pragma once

#include <qdrt/error.hpp>
#include <qdrt/geometry.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>

namespace qdrt {

/// Per-material parameters of the reflection-loss and diffuse-cluster model.
/// Loss and decay-deviation fields are in dB; decay constants in seconds; rates in 1/s.
struct QdMaterialParams {
    std::string name;

    double s_rl_db{10.0};
    double sigma_rl_db{0.0};

    double s_k_db{10.0};
    double sigma_k_db{0.0};

    double s_gamma_pre_s{2e-9};
    double sigma_gamma_pre_s{0.0};
    double s_gamma_post_s{4e-9};
    double sigma_gamma_post_s{0.0};

    double s_sigma_s_pre_db{0.0};
    double sigma_sigma_s_pre_db{0.0};
    double s_sigma_s_post_db{0.0};
    double sigma_sigma_s_post_db{0.0};

    double lambda_pre_hz{1e9};
    double lambda_post_hz{1e9};
    int n_pre{0};
    int n_post{0};

    double angle_spread_rad{0.0};

    void validate() const {
        const auto nonneg = [&](double v, const char* what) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError("material '" + name + "': " + what + " must be finite and >= 0");
            }
        };
        nonneg(sigma_rl_db, "sigma_RL");
        nonneg(sigma_k_db, "sigma_K");
        nonneg(sigma_gamma_pre_s, "sigma_gamma_pre");
        nonneg(sigma_gamma_post_s, "sigma_gamma_post");
        nonneg(sigma_sigma_s_pre_db, "sigma_sigma_s_pre");
        nonneg(sigma_sigma_s_post_db, "sigma_sigma_s_post");
        nonneg(angle_spread_rad, "angle_spread_b");
        if (n_pre < 0 || n_post < 0) {
            throw ConfigError("material '" + name + "': cursor counts must be >= 0");
        }
        if (n_pre > 0 && !(lambda_pre_hz > 0.0)) {
            throw ConfigError("material '" + name + "': lambda_pre must be > 0 when n_pre > 0");
        }
        if (n_post > 0 && !(lambda_post_hz > 0.0)) {
            throw ConfigError("material '" + name + "': lambda_post must be > 0 when n_post > 0");
        }
        if (n_pre + n_post > 0 && (!(s_gamma_pre_s > 0.0 || n_pre == 0) || !(s_gamma_post_s > 0.0 || n_post == 0))) {
            throw ConfigError("material '" + name + "': decay constants must be > 0");
        }
    }
};

/// Material table keyed by the ids used in mesh files, plus an optional reflection-loss clamp.
struct MaterialTable {
    std::map<MaterialId, QdMaterialParams> materials;
    std::optional<std::pair<double, double>> rl_clamp_db;
    bool calibrated{false};

    bool contains(MaterialId id) const { return materials.contains(id); }

    const QdMaterialParams& at(MaterialId id) const {
        const auto it = materials.find(id);
        if (it == materials.end()) {
            throw ConfigError("unknown material id " + std::to_string(id));
        }
        return it->second;
    }
};

namespace detail {

inline double get_or(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_number()) {
        throw ConfigError(std::string("material field '") + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

} // namespace detail

/// Material file layout:
///   { "units": {...}, "calibrated": false, "rl_clamp_db": [7, 25],
///     "materials": [ { "id": 0, "name": "...", "s_RL_db": ..., ... } ] }
/// "sigma_s" fields are dB; the generator converts them to natural-log units by ln(10)/10.
inline MaterialTable parse_materials(const nlohmann::json& doc) {
    MaterialTable table;
    if (!doc.is_object() || !doc.contains("materials") || !doc.at("materials").is_array()) {
        throw ConfigError("material file needs a 'materials' array");
    }
    table.calibrated = doc.value("calibrated", false);
    if (doc.contains("rl_clamp_db")) {
        const auto& c = doc.at("rl_clamp_db");
        if (!c.is_array() || c.size() != 2 || !(c[0].get<double>() <= c[1].get<double>())) {
            throw ConfigError("rl_clamp_db must be [lo, hi] with lo <= hi");
        }
        table.rl_clamp_db = std::pair{c[0].get<double>(), c[1].get<double>()};
    }
    for (const auto& m : doc.at("materials")) {
        if (!m.contains("id") || !m.at("id").is_number_integer()) {
            throw ConfigError("material entry without integer 'id'");
        }
        const auto id = m.at("id").get<MaterialId>();
        QdMaterialParams p;
        p.name = m.value("name", "material" + std::to_string(id));
        p.s_rl_db = detail::get_or(m, "s_RL_db", p.s_rl_db);
        p.sigma_rl_db = detail::get_or(m, "sigma_RL_db", p.sigma_rl_db);
        p.s_k_db = detail::get_or(m, "s_K_db", p.s_k_db);
        p.sigma_k_db = detail::get_or(m, "sigma_K_db", p.sigma_k_db);
        p.s_gamma_pre_s = detail::get_or(m, "s_gamma_pre_s", p.s_gamma_pre_s);
        p.sigma_gamma_pre_s = detail::get_or(m, "sigma_gamma_pre_s", p.sigma_gamma_pre_s);
        p.s_gamma_post_s = detail::get_or(m, "s_gamma_post_s", p.s_gamma_post_s);
        p.sigma_gamma_post_s = detail::get_or(m, "sigma_gamma_post_s", p.sigma_gamma_post_s);
        p.s_sigma_s_pre_db = detail::get_or(m, "s_sigma_s_pre_db", p.s_sigma_s_pre_db);
        p.sigma_sigma_s_pre_db = detail::get_or(m, "sigma_sigma_s_pre_db", p.sigma_sigma_s_pre_db);
        p.s_sigma_s_post_db = detail::get_or(m, "s_sigma_s_post_db", p.s_sigma_s_post_db);
        p.sigma_sigma_s_post_db = detail::get_or(m, "sigma_sigma_s_post_db", p.sigma_sigma_s_post_db);
        p.lambda_pre_hz = detail::get_or(m, "lambda_pre_hz", p.lambda_pre_hz);
        p.lambda_post_hz = detail::get_or(m, "lambda_post_hz", p.lambda_post_hz);
        p.n_pre = static_cast<int>(detail::get_or(m, "n_pre", p.n_pre));
        p.n_post = static_cast<int>(detail::get_or(m, "n_post", p.n_post));
        p.angle_spread_rad = detail::get_or(m, "angle_spread_rad", p.angle_spread_rad);
        p.validate();
        if (!table.materials.emplace(id, std::move(p)).second) {
            throw ConfigError("duplicate material id " + std::to_string(id));
        }
    }
    return table;
}

inline MaterialTable load_materials_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open material file '" + path + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_materials(doc);
}

} // namespace qdrt
