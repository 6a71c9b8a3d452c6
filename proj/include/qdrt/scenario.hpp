#pragma once

#include <qdrt/channel.hpp>
#include <qdrt/error.hpp>
#include <qdrt/geometry.hpp>
#include <qdrt/material.hpp>
#include <qdrt/mesh_io.hpp>
#include <qdrt/parallel.hpp>
#include <qdrt/qd.hpp>
#include <qdrt/raytracer.hpp>
#include <qdrt/rng.hpp>
#include <qdrt/simplify.hpp>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qdrt {

enum class NodeKind {
    tx,
    rx,
    interferer_tx,
    interferer_rx,
};

inline NodeKind parse_node_kind(const std::string& s) {
    if (s == "tx") return NodeKind::tx;
    if (s == "rx") return NodeKind::rx;
    if (s == "interferer-tx") return NodeKind::interferer_tx;
    if (s == "interferer-rx") return NodeKind::interferer_rx;
    throw ConfigError("unknown node kind '" + s + "'");
}

inline bool transmits(NodeKind k) noexcept { return k == NodeKind::tx || k == NodeKind::interferer_tx; }

struct NodeSpec {
    std::string id;
    NodeKind kind{NodeKind::tx};
    std::optional<double> tx_power_dbm;
    ArrayConfig array;
    std::vector<Vec3> waypoints; // one entry for a static node
    double speed_mps{0.0};
    std::string serving; // rx kinds: id of the transmitter this receiver is bound to
    bool active{true};   // tx kinds: an inactive transmitter contributes no interference

    bool is_tx() const noexcept { return transmits(kind); }
};

/// Piecewise-linear motion along the waypoints at constant speed, clamped at the last waypoint.
inline Vec3 position_at(const NodeSpec& node, double t_s) {
    if (node.waypoints.empty()) {
        throw ConfigError("node '" + node.id + "' has no position");
    }
    if (node.waypoints.size() == 1 || node.speed_mps == 0.0 || t_s <= 0.0) {
        return node.waypoints.front();
    }
    double remaining = node.speed_mps * t_s;
    for (std::size_t k = 0; k + 1 < node.waypoints.size(); ++k) {
        const Vec3& a = node.waypoints[k];
        const Vec3& b = node.waypoints[k + 1];
        const double leg = distance(a, b);
        if (remaining <= leg) {
            return leg > 0.0 ? a + (b - a) * (remaining / leg) : a;
        }
        remaining -= leg;
    }
    return node.waypoints.back();
}

/// Directed link traced by the simulator.
struct LinkPair {
    std::size_t tx_index{0};
    std::size_t rx_index{0};
    std::uint64_t id{0};
    bool reverse{false}; // uplink twin of a forward pair
};

inline std::uint64_t pair_id(const std::string& tx, const std::string& rx) { return fnv1a(tx + "->" + rx); }

struct Scenario {
    TriangleMesh mesh;
    MaterialTable materials;
    std::vector<NodeSpec> nodes;
    double timestep_s{0.005};
    std::size_t steps{1};
    double carrier_freq_hz{60e9};
    LinkBudget budget;
    bool qd_enabled{false};
    bool post_qd_filter{true};
    bool threshold_after_obstruction{false};
    bool obstruction_early_exit{true};
    bool reciprocal_links{false};
    bool symmetric_shortcut{true};
    SimplificationSetting simplification;
    std::uint64_t seed{0};
    std::string digest; // of the effective configuration and referenced files

    const NodeSpec* find_node(const std::string& id) const {
        for (const auto& n : nodes) {
            if (n.id == id) {
                return &n;
            }
        }
        return nullptr;
    }

    TraceConfig trace_config() const {
        TraceConfig cfg;
        cfg.max_reflection_order = simplification.max_reflection_order;
        cfg.rel_threshold_db = simplification.rel_threshold_db;
        cfg.abs_threshold_db = simplification.abs_threshold_db;
        cfg.carrier_freq_hz = carrier_freq_hz;
        cfg.seed = seed;
        cfg.threshold_after_obstruction = threshold_after_obstruction;
        cfg.obstruction_early_exit = obstruction_early_exit;
        return cfg;
    }

    /// Every transmitter to every receiver (serving and cross links), transmitters in node order.
    /// With reciprocal_links, each forward pair is followed by its reverse.
    std::vector<LinkPair> pairs() const {
        std::vector<LinkPair> out;
        for (std::size_t t = 0; t < nodes.size(); ++t) {
            if (!nodes[t].is_tx()) {
                continue;
            }
            for (std::size_t r = 0; r < nodes.size(); ++r) {
                if (nodes[r].is_tx()) {
                    continue;
                }
                out.push_back({t, r, pair_id(nodes[t].id, nodes[r].id), false});
                if (reciprocal_links) {
                    out.push_back({r, t, pair_id(nodes[r].id, nodes[t].id), true});
                }
            }
        }
        return out;
    }

    void validate() const {
        if (steps < 1) {
            throw ConfigError("scenario needs at least one time step");
        }
        if (!(timestep_s > 0.0)) {
            throw ConfigError("time step must be > 0");
        }
        TraceConfig cfg = trace_config();
        cfg.validate();
        budget.noise_floor_dbm();
        for (const auto& t : mesh.triangles()) {
            materials.at(t.material_id);
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            if (n.id.empty() || n.id.find_first_of(", \t\n#") != std::string::npos) {
                throw ConfigError("node id '" + n.id + "' must be non-empty without commas or whitespace");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (nodes[j].id == n.id) {
                    throw ConfigError("duplicate node id '" + n.id + "'");
                }
            }
            if (n.waypoints.empty()) {
                throw ConfigError("node '" + n.id + "' needs a position or waypoints");
            }
            for (const auto& w : n.waypoints) {
                if (!is_finite(w)) {
                    throw ConfigError("node '" + n.id + "' has a non-finite position");
                }
            }
            if (!(n.speed_mps >= 0.0)) {
                throw ConfigError("node '" + n.id + "' speed must be >= 0");
            }
            if (n.is_tx() != n.tx_power_dbm.has_value()) {
                throw ConfigError("node '" + n.id + "': tx_power_dbm is required for transmitters only");
            }
            n.array.validate();
            if (!n.is_tx() && !n.serving.empty()) {
                const NodeSpec* s = find_node(n.serving);
                if (s == nullptr || !s->is_tx()) {
                    throw ConfigError("receiver '" + n.id + "' is bound to unknown transmitter '" + n.serving + "'");
                }
            }
        }
    }
};

namespace detail {

inline Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(what + " must be [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline double threshold_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf" || s == "-Inf" || s == "-INF") {
            return -std::numeric_limits<double>::infinity();
        }
        throw ConfigError("threshold string must be '-inf'");
    }
    return j.get<double>();
}

inline ArrayConfig array_from_json(const nlohmann::json& j) {
    ArrayConfig a;
    a.rows = j.value("rows", 1);
    a.cols = j.value("cols", 1);
    a.spacing_wavelengths = j.value("spacing_wavelengths", 0.5);
    a.orientation = ArrayConfig::yaw_rotation(j.value("yaw_deg", 0.0) * std::numbers::pi / 180.0);
    return a;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open '" + p.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xfU];
        v >>= 4;
    }
    return s;
}

} // namespace detail

/// Builds a scenario from its JSON configuration. Mesh and material paths resolve against
/// `base_dir`. Unknown keys are rejected so that typos do not silently fall back to defaults.
inline Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    static const char* const known[] = {"mesh", "materials", "carrier_frequency_hz", "timestep_s", "steps",
                                        "bandwidth_hz", "noise_figure_db", "noise_psd_dbm_hz", "qd", "post_qd_filter",
                                        "threshold_after_obstruction", "obstruction_early_exit", "reciprocal_links",
                                        "symmetric_shortcut", "simplification", "seed", "nodes", "description"};
    if (!doc.is_object()) {
        throw ConfigError("scenario must be a JSON object");
    }
    for (const auto& [key, _] : doc.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ConfigError("unknown scenario key '" + key + "'");
        }
    }
    Scenario s;
    try {
        if (!doc.contains("mesh") || !doc.contains("materials")) {
            throw ConfigError("scenario needs 'mesh' and 'materials'");
        }
        const auto mesh_path = base_dir / doc.at("mesh").get<std::string>();
        const auto mat_path = base_dir / doc.at("materials").get<std::string>();
        s.materials = load_materials_file(mat_path.string());
        s.mesh = load_mesh_file(mesh_path.string(), [&](MaterialId id) { return s.materials.contains(id); });

        s.carrier_freq_hz = doc.value("carrier_frequency_hz", s.carrier_freq_hz);
        s.timestep_s = doc.value("timestep_s", s.timestep_s);
        s.steps = doc.value("steps", s.steps);
        s.budget.bandwidth_hz = doc.value("bandwidth_hz", s.budget.bandwidth_hz);
        s.budget.noise_figure_db = doc.value("noise_figure_db", s.budget.noise_figure_db);
        s.budget.noise_psd_dbm_hz = doc.value("noise_psd_dbm_hz", s.budget.noise_psd_dbm_hz);
        s.qd_enabled = doc.value("qd", s.qd_enabled);
        s.post_qd_filter = doc.value("post_qd_filter", s.post_qd_filter);
        s.threshold_after_obstruction = doc.value("threshold_after_obstruction", s.threshold_after_obstruction);
        s.obstruction_early_exit = doc.value("obstruction_early_exit", s.obstruction_early_exit);
        s.reciprocal_links = doc.value("reciprocal_links", s.reciprocal_links);
        s.symmetric_shortcut = doc.value("symmetric_shortcut", s.symmetric_shortcut);
        s.seed = doc.value("seed", s.seed);
        if (doc.contains("simplification")) {
            const auto& simp = doc.at("simplification");
            s.simplification.max_reflection_order = simp.value("max_reflections", s.simplification.max_reflection_order);
            if (simp.contains("rel_threshold_db")) {
                s.simplification.rel_threshold_db = detail::threshold_from_json(simp.at("rel_threshold_db"));
            }
            if (simp.contains("abs_threshold_db")) {
                s.simplification.abs_threshold_db = detail::threshold_from_json(simp.at("abs_threshold_db"));
            }
        }
        if (!doc.contains("nodes") || !doc.at("nodes").is_array()) {
            throw ConfigError("scenario needs a 'nodes' array");
        }
        for (const auto& jn : doc.at("nodes")) {
            NodeSpec n;
            n.id = jn.at("id").get<std::string>();
            n.kind = parse_node_kind(jn.at("kind").get<std::string>());
            if (jn.contains("tx_power_dbm")) {
                n.tx_power_dbm = jn.at("tx_power_dbm").get<double>();
            }
            if (jn.contains("array")) {
                n.array = detail::array_from_json(jn.at("array"));
            }
            if (jn.contains("position")) {
                n.waypoints.push_back(detail::vec3_from_json(jn.at("position"), "node '" + n.id + "' position"));
            }
            if (jn.contains("waypoints")) {
                for (const auto& w : jn.at("waypoints")) {
                    n.waypoints.push_back(detail::vec3_from_json(w, "node '" + n.id + "' waypoint"));
                }
            }
            n.speed_mps = jn.value("speed_mps", 0.0);
            n.serving = jn.value("serving", std::string{});
            n.active = jn.value("active", true);
            s.nodes.push_back(std::move(n));
        }
        std::uint64_t h = fnv1a(doc.dump());
        h = fnv1a(detail::read_file(mesh_path), h);
        h = fnv1a(detail::read_file(mat_path), h);
        s.digest = detail::hex64(h);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path.string() + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// All MPCs of one (timestep, TX, RX) triple plus what it cost to produce them.
struct ChannelInstance {
    std::size_t timestep{0};
    std::string tx_id;
    std::string rx_id;
    std::vector<Mpc> mpcs;
    OpCounter counters;
    std::size_t rays{0};
    std::uint64_t checks_saved{0};
    std::uint64_t wall_time_ns{0};
};

/// Traces one pair at one timestep: tracer, optional diffuse expansion, post-expansion thresholds.
inline ChannelInstance trace_instance(const Scenario& scn, const LinkPair& pair, std::size_t step) {
    const auto start = std::chrono::steady_clock::now();
    const NodeSpec& tx = scn.nodes[pair.tx_index];
    const NodeSpec& rx = scn.nodes[pair.rx_index];
    const double t_s = static_cast<double>(step) * scn.timestep_s;
    ChannelInstance inst;
    inst.timestep = step;
    inst.tx_id = tx.id;
    inst.rx_id = rx.id;
    const auto traced = trace_pair(position_at(tx, t_s), position_at(rx, t_s), scn.mesh, scn.materials,
                                   scn.trace_config(), pair.id);
    inst.counters = traced.counter;
    inst.rays = traced.rays.size();
    inst.checks_saved = saved_checks(traced.discarded, scn.mesh.size());
    inst.mpcs = expand_rays(traced.rays, scn.mesh, scn.materials, scn.qd_enabled, scn.seed, step, pair.id);
    if (scn.post_qd_filter) {
        inst.mpcs = filter_thresholds(std::span<const Mpc>(inst.mpcs), scn.simplification.rel_threshold_db,
                                      scn.simplification.abs_threshold_db);
    }
    inst.wall_time_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
    return inst;
}

/// Reverse link from a forward one: same paths, departure and arrival swapped.
inline ChannelInstance reverse_instance(const ChannelInstance& fwd) {
    ChannelInstance rev = fwd;
    std::swap(rev.tx_id, rev.rx_id);
    for (auto& m : rev.mpcs) {
        std::swap(m.aod, m.aoa);
    }
    rev.counters = OpCounter{};
    rev.checks_saved = 0;
    rev.wall_time_ns = 0;
    return rev;
}

struct RunResult {
    std::vector<ChannelInstance> instances; // timestep-major, then pair order
    double trace_seconds{0.0};
};

/// Traces every (timestep, pair) work item on `jobs` threads. Output order is canonical and
/// independent of the thread count.
inline RunResult run(const Scenario& scn, unsigned jobs = 1) {
    scn.validate();
    const auto pairs = scn.pairs();
    const std::size_t per_step = pairs.size();
    RunResult res;
    res.instances.resize(scn.steps * per_step);
    const auto start = std::chrono::steady_clock::now();
    parallel_for(res.instances.size(), jobs, [&](std::size_t i) {
        const std::size_t step = i / per_step;
        const LinkPair& pair = pairs[i % per_step];
        if (pair.reverse && scn.symmetric_shortcut) {
            return; // filled from the forward twin below
        }
        res.instances[i] = trace_instance(scn, pair, step);
    });
    if (scn.reciprocal_links && scn.symmetric_shortcut) {
        for (std::size_t i = 0; i < res.instances.size(); ++i) {
            if (pairs[i % per_step].reverse) {
                res.instances[i] = reverse_instance(res.instances[i - 1]);
            }
        }
    }
    res.trace_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

} // namespace qdrt
