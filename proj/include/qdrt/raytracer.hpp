#pragma once

#include <qdrt/error.hpp>
#include <qdrt/geometry.hpp>
#include <qdrt/material.hpp>
#include <qdrt/rng.hpp>
#include <qdrt/simplify.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace qdrt {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

/// Global spherical direction. Azimuth in (-pi, pi] from +x in the x-y plane,
/// elevation in [-pi/2, pi/2] from the x-y plane.
struct Angles {
    double azimuth{0.0};
    double elevation{0.0};

    friend bool operator==(const Angles&, const Angles&) = default;
};

inline Angles direction_angles(const Vec3& d) {
    const double n = norm(d);
    if (!(n > 0.0)) {
        throw GeometryError("direction of a zero vector");
    }
    double az = std::atan2(d.y, d.x);
    if (az <= -std::numbers::pi) {
        az = std::numbers::pi;
    }
    const double el = std::atan2(d.z, std::hypot(d.x, d.y));
    return {az, el};
}

inline Vec3 unit_direction(const Angles& a) noexcept {
    const double ce = std::cos(a.elevation);
    return {ce * std::cos(a.azimuth), ce * std::sin(a.azimuth), std::sin(a.elevation)};
}

inline double wrap_two_pi(double phase) noexcept {
    double p = std::fmod(phase, 2.0 * std::numbers::pi);
    if (p < 0.0) {
        p += 2.0 * std::numbers::pi;
    }
    if (p >= 2.0 * std::numbers::pi) {
        p = 0.0;
    }
    return p;
}

/// Specular path produced by the tracer. Points run TX, P(1..r), RX.
struct DeterministicRay {
    int order{0};
    std::vector<std::size_t> tuple;
    std::vector<Vec3> points;
    std::vector<double> reflection_losses_db;
    double length_m{0.0};
    double delay_s{0.0};
    double gain_db{0.0};
    Angles aod;
    Angles aoa; // direction from RX toward the last interaction point
    double phase_rad{0.0};
    std::uint64_t id{0}; // tuple_hash(tuple)
};

/// Operation counts for one or more traced channel instances.
struct OpCounter {
    std::uint64_t geometric_ops{0};
    std::uint64_t obstruction_checks{0};
    std::uint64_t tuples_visited{0};

    // Per reflection order breakdown.
    std::vector<std::uint64_t> tuples_by_order;
    std::vector<std::uint64_t> valid_by_order;   // geometry valid
    std::vector<std::uint64_t> checked_by_order; // obstruction-checked
    std::vector<std::uint64_t> emitted_by_order;
    // Checks that full (no early exit) obstruction testing of the checked rays requires.
    std::uint64_t check_budget{0};

    void ensure_order(int r) {
        const auto n = static_cast<std::size_t>(r) + 1;
        if (tuples_by_order.size() < n) {
            tuples_by_order.resize(n, 0);
            valid_by_order.resize(n, 0);
            checked_by_order.resize(n, 0);
            emitted_by_order.resize(n, 0);
        }
    }

    std::uint64_t total_ops() const noexcept { return geometric_ops + obstruction_checks; }

    OpCounter& operator+=(const OpCounter& o) {
        geometric_ops += o.geometric_ops;
        obstruction_checks += o.obstruction_checks;
        tuples_visited += o.tuples_visited;
        check_budget += o.check_budget;
        if (!o.tuples_by_order.empty()) {
            ensure_order(static_cast<int>(o.tuples_by_order.size()) - 1);
        }
        for (std::size_t r = 0; r < o.tuples_by_order.size(); ++r) {
            tuples_by_order[r] += o.tuples_by_order[r];
            valid_by_order[r] += o.valid_by_order[r];
            checked_by_order[r] += o.checked_by_order[r];
            emitted_by_order[r] += o.emitted_by_order[r];
        }
        return *this;
    }
};

struct TraceConfig {
    int max_reflection_order{4};
    double rel_threshold_db{-std::numeric_limits<double>::infinity()};
    double abs_threshold_db{-200.0};
    double carrier_freq_hz{60e9};
    std::uint64_t seed{0};
    // Obstruction-check every valid-geometry ray first and threshold afterwards.
    bool threshold_after_obstruction{false};
    // Stop checking a ray at its first blocking triangle.
    bool obstruction_early_exit{true};

    double wavelength_m() const noexcept { return kSpeedOfLight / carrier_freq_hz; }

    void validate() const {
        SimplificationSetting{max_reflection_order, rel_threshold_db, abs_threshold_db}.validate();
        if (!(carrier_freq_hz > 0.0) || !std::isfinite(carrier_freq_hz)) {
            throw ConfigError("carrier frequency must be > 0");
        }
    }
};

/// Number of reflection-tree nodes up to depth R: 1 + sum_{r=1..R} T (T-1)^(r-1).
inline std::uint64_t predicted_tuple_count(std::uint64_t triangles, int max_order) {
    std::uint64_t total = 1;
    std::uint64_t level = triangles;
    for (int r = 1; r <= max_order; ++r) {
        total += level;
        level *= (triangles == 0 ? 0 : triangles - 1);
    }
    return total;
}

/// Images RX(1..r) of `rx`; RX(k) mirrors RX(k-1) across the k-th triangle counted from the RX side.
/// `tuple` is ordered TX side first.
inline std::vector<Vec3> image_chain(const Vec3& rx, std::span<const std::size_t> tuple, const TriangleMesh& mesh) {
    if (tuple.empty()) {
        throw GeometryError("image chain needs at least one reflector");
    }
    std::vector<Vec3> images;
    images.reserve(tuple.size());
    Vec3 current = rx;
    for (auto it = tuple.rbegin(); it != tuple.rend(); ++it) {
        current = mirror_point(current, mesh.plane(*it));
        images.push_back(current);
    }
    return images;
}

/// Same as above over an explicit triangle list.
inline std::vector<Vec3> image_chain(const Vec3& rx, std::span<const Triangle> reflectors) {
    if (reflectors.empty()) {
        throw GeometryError("image chain needs at least one reflector");
    }
    std::vector<Vec3> images;
    Vec3 current = rx;
    for (auto it = reflectors.rbegin(); it != reflectors.rend(); ++it) {
        current = mirror_point(current, *it);
        images.push_back(current);
    }
    return images;
}

/// Walks from TX toward RX(r) intersecting each reflector in turn. Returns TX, P(1..r), RX,
/// or nothing if a crossing falls outside (0, 1) or outside its triangle.
inline std::optional<std::vector<Vec3>> build_path(const Vec3& tx, const Vec3& rx, std::span<const std::size_t> tuple,
                                                   const TriangleMesh& mesh, OpCounter& counter) {
    const std::size_t r = tuple.size();
    counter.geometric_ops += r;
    std::vector<Vec3> points;
    points.reserve(r + 2);
    points.push_back(tx);
    if (r > 0) {
        const auto images = image_chain(rx, tuple, mesh);
        Vec3 current = tx;
        for (std::size_t k = 0; k < r; ++k) {
            const TrianglePlane& plane = mesh.plane(tuple[k]);
            const Vec3& target = images[r - 1 - k];
            const auto s = crossing_parameter(current, target, plane);
            if (!s || !(*s > 0.0 && *s < 1.0)) {
                return std::nullopt;
            }
            const Vec3 p = current + (target - current) * *s;
            if (!inside(barycentric(p, plane))) {
                return std::nullopt;
            }
            points.push_back(p);
            current = p;
        }
    }
    points.push_back(rx);
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        if (!(distance(points[k], points[k + 1]) > 0.0)) {
            return std::nullopt;
        }
    }
    return points;
}

namespace detail {

/// Reflecting triangles adjacent to segment k of a path with the given tuple.
inline std::size_t segment_exclusions(std::span<const std::size_t> tuple, std::size_t k, std::size_t out[2]) {
    std::size_t n = 0;
    if (k >= 1) {
        out[n++] = tuple[k - 1];
    }
    if (k < tuple.size() && (n == 0 || out[0] != tuple[k])) {
        out[n++] = tuple[k];
    }
    return n;
}

} // namespace detail

/// Number of triangle tests a full (no early exit) obstruction check of a path with this tuple performs.
inline std::uint64_t obstruction_check_budget(std::span<const std::size_t> tuple, std::size_t triangle_count) {
    std::uint64_t total = 0;
    for (std::size_t k = 0; k <= tuple.size(); ++k) {
        std::size_t ex[2];
        total += triangle_count - detail::segment_exclusions(tuple, k, ex);
    }
    return total;
}

/// True when every segment of the path is clear. Each segment skips its own reflecting triangles.
inline bool check_obstruction(std::span<const Vec3> points, std::span<const std::size_t> tuple,
                              const TriangleMesh& mesh, OpCounter& counter, bool early_exit = true) {
    if (points.size() != tuple.size() + 2) {
        throw GeometryError("path point count does not match reflection order");
    }
    bool clear = true;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        std::size_t ex[2];
        const std::size_t nex = detail::segment_exclusions(tuple, k, ex);
        const Segment seg{points[k], points[k + 1]};
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            if ((nex > 0 && ex[0] == i) || (nex > 1 && ex[1] == i)) {
                continue;
            }
            ++counter.obstruction_checks;
            if (segment_hits(seg, mesh, i)) {
                clear = false;
                if (early_exit) {
                    return false;
                }
            }
        }
    }
    return clear;
}

/// 20 log10(lambda / (4 pi l)) minus the summed reflection losses.
inline double deterministic_gain_db(double length_m, std::span<const double> reflection_losses_db, double wavelength_m) {
    if (!(length_m > 0.0) || !(wavelength_m > 0.0)) {
        throw ConfigError("path length and wavelength must be > 0");
    }
    double g = 20.0 * std::log10(wavelength_m / (4.0 * std::numbers::pi * length_m));
    for (const double rl : reflection_losses_db) {
        g -= rl;
    }
    return g;
}

inline double sample_reflection_loss(const QdMaterialParams& material, RngStream& rng,
                                     std::optional<std::pair<double, double>> clamp_db = std::nullopt) {
    double rl = sample_rician(material.s_rl_db, material.sigma_rl_db, rng);
    if (clamp_db) {
        rl = std::clamp(rl, clamp_db->first, clamp_db->second);
    }
    return rl;
}

/// Phase of a deterministic ray: pi per reflection minus the propagation phase, folded into [0, 2 pi).
inline double deterministic_phase(int order, double length_m, double wavelength_m) noexcept {
    const double cycles = length_m / wavelength_m;
    const double frac = cycles - std::floor(cycles);
    return wrap_two_pi(order * std::numbers::pi - 2.0 * std::numbers::pi * frac);
}

struct TraceResult {
    std::vector<DeterministicRay> rays;
    OpCounter counter;
    std::vector<DiscardedRay> discarded;
};

namespace detail {

/// Advances `tuple` to the next tuple of the same length (lexicographic, no consecutive repeats).
inline bool next_tuple(std::vector<std::size_t>& tuple, std::size_t triangles) {
    const std::size_t r = tuple.size();
    std::size_t k = r;
    while (k > 0) {
        --k;
        std::size_t v = tuple[k] + 1;
        if (k > 0 && v == tuple[k - 1]) {
            ++v;
        }
        if (v < triangles) {
            tuple[k] = v;
            for (std::size_t j = k + 1; j < r; ++j) {
                tuple[j] = (tuple[j - 1] == 0) ? 1 : 0;
            }
            return true;
        }
    }
    return false;
}

inline bool first_tuple(std::vector<std::size_t>& tuple, std::size_t r, std::size_t triangles) {
    tuple.assign(r, 0);
    if (r == 0) {
        return true;
    }
    if (triangles == 0 || (r > 1 && triangles < 2)) {
        return false;
    }
    for (std::size_t j = 1; j < r; ++j) {
        tuple[j] = (tuple[j - 1] == 0) ? 1 : 0;
    }
    return true;
}

inline void finalize_ray(DeterministicRay& ray, double wavelength_m) {
    double len = 0.0;
    for (std::size_t k = 0; k + 1 < ray.points.size(); ++k) {
        len += distance(ray.points[k], ray.points[k + 1]);
    }
    ray.length_m = len;
    ray.delay_s = len / kSpeedOfLight;
    ray.aod = direction_angles(ray.points[1] - ray.points[0]);
    ray.aoa = direction_angles(ray.points[ray.points.size() - 2] - ray.points.back());
    ray.phase_rad = deterministic_phase(ray.order, len, wavelength_m);
}

} // namespace detail

/// Enumerates the reflection tree for one TX/RX pair up to cfg.max_reflection_order.
///
/// Every tuple (lexicographic within each order, orders ascending) gets its geometry built.
/// Valid paths get Rician reflection losses drawn from a stream keyed by (seed, pair, tuple), so a
/// path keeps its losses across timesteps. Thresholds (absolute, then relative to the strongest
/// valid-geometry ray) run before obstruction checks unless cfg.threshold_after_obstruction.
inline TraceResult trace_pair(const Vec3& tx, const Vec3& rx, const TriangleMesh& mesh, const MaterialTable& materials,
                              const TraceConfig& cfg, std::uint64_t pair_id = 0) {
    cfg.validate();
    if (!is_finite(tx) || !is_finite(rx)) {
        throw GeometryError("node position is not finite");
    }
    TraceResult result;
    OpCounter& counter = result.counter;
    counter.ensure_order(cfg.max_reflection_order);
    const double wavelength = cfg.wavelength_m();
    const std::size_t T = mesh.size();

    std::vector<DeterministicRay> candidates;
    std::vector<std::size_t> tuple;
    for (int r = 0; r <= cfg.max_reflection_order; ++r) {
        if (!detail::first_tuple(tuple, static_cast<std::size_t>(r), T)) {
            continue;
        }
        do {
            ++counter.tuples_visited;
            ++counter.tuples_by_order[r];
            auto points = build_path(tx, rx, tuple, mesh, counter);
            if (!points) {
                continue;
            }
            ++counter.valid_by_order[r];
            DeterministicRay ray;
            ray.order = r;
            ray.tuple = tuple;
            ray.points = std::move(*points);
            ray.id = tuple_hash(tuple);
            if (r > 0) {
                RngStream rng(StreamKey{cfg.seed, 0, pair_id, ray.id, DrawPurpose::reflection_loss});
                ray.reflection_losses_db.reserve(tuple.size());
                for (const auto idx : tuple) {
                    ray.reflection_losses_db.push_back(
                        sample_reflection_loss(materials.at(mesh.triangle(idx).material_id), rng, materials.rl_clamp_db));
                }
            }
            double len = 0.0;
            for (std::size_t k = 0; k + 1 < ray.points.size(); ++k) {
                len += distance(ray.points[k], ray.points[k + 1]);
            }
            ray.gain_db = deterministic_gain_db(len, ray.reflection_losses_db, wavelength);
            candidates.push_back(std::move(ray));
        } while (detail::next_tuple(tuple, T));
    }

    const auto check = [&](DeterministicRay& ray) {
        ++counter.checked_by_order[ray.order];
        counter.check_budget += obstruction_check_budget(ray.tuple, T);
        return check_obstruction(ray.points, ray.tuple, mesh, counter, cfg.obstruction_early_exit);
    };
    const auto emit = [&](DeterministicRay&& ray) {
        detail::finalize_ray(ray, wavelength);
        ++counter.emitted_by_order[ray.order];
        result.rays.push_back(std::move(ray));
    };

    if (!cfg.threshold_after_obstruction) {
        std::vector<double> gains;
        gains.reserve(candidates.size());
        for (const auto& c : candidates) {
            gains.push_back(c.gain_db);
        }
        const auto keep = select_thresholded(gains, cfg.rel_threshold_db, cfg.abs_threshold_db);
        std::size_t next_keep = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (next_keep < keep.size() && keep[next_keep] == i) {
                ++next_keep;
                if (check(candidates[i])) {
                    emit(std::move(candidates[i]));
                }
            } else {
                const auto& c = candidates[i];
                result.discarded.push_back(
                    {c.order, c.id, static_cast<std::uint64_t>(c.order + 1) * T - obstruction_check_budget(c.tuple, T)});
            }
        }
    } else {
        std::vector<DeterministicRay> clear;
        for (auto& c : candidates) {
            if (check(c)) {
                clear.push_back(std::move(c));
            }
        }
        std::vector<double> gains;
        for (const auto& c : clear) {
            gains.push_back(c.gain_db);
        }
        for (const auto i : select_thresholded(gains, cfg.rel_threshold_db, cfg.abs_threshold_db)) {
            emit(std::move(clear[i]));
        }
    }
    return result;
}

} // namespace qdrt
