#pragma once

#include <qdrt/error.hpp>
#include <qdrt/geometry.hpp>
#include <qdrt/material.hpp>
#include <qdrt/raytracer.hpp>
#include <qdrt/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace qdrt {

enum class MpcKind : int {
    main_cursor = 0,
    pre_cursor = 1,
    post_cursor = 2,
};

inline std::string_view to_string(MpcKind k) noexcept {
    switch (k) {
    case MpcKind::main_cursor: return "main";
    case MpcKind::pre_cursor: return "pre";
    case MpcKind::post_cursor: return "post";
    }
    return "?";
}

/// One multipath component as consumed by the channel builder. The phase is the total phase
/// (propagation included); channel assembly adds no delay term.
struct Mpc {
    double delay_s{0.0};
    double gain_db{0.0};
    Angles aod;
    Angles aoa;
    double phase_rad{0.0};
    MpcKind kind{MpcKind::main_cursor};
    std::uint64_t parent{0};

    friend bool operator==(const Mpc&, const Mpc&) = default;
};

inline Mpc main_cursor(const DeterministicRay& ray) {
    return {ray.delay_s, ray.gain_db, ray.aod, ray.aoa, ray.phase_rad, MpcKind::main_cursor, ray.id};
}

inline double wrap_pi(double a) noexcept {
    double w = std::remainder(a, 2.0 * std::numbers::pi); // [-pi, pi]
    if (w <= -std::numbers::pi) {
        w += 2.0 * std::numbers::pi;
    }
    return w;
}

/// dB per unit of the natural-log exponent: 10 / ln(10).
inline constexpr double kDbPerNeper = 10.0 / std::numbers::ln10;

namespace detail {

inline Angles laplace_around(const Angles& centre, double scale, RngStream& rng) {
    const double az = wrap_pi(centre.azimuth + rng.laplace(scale));
    const double el = std::clamp(centre.elevation + rng.laplace(scale), -std::numbers::pi / 2, std::numbers::pi / 2);
    return {az, el};
}

struct ClusterSide {
    double gamma_s;
    double sigma_s_db;
};

inline void emit_side(const DeterministicRay& ray, const QdMaterialParams& p, double k_db, const ClusterSide& side,
                      bool pre, RngStream& rng, std::vector<Mpc>& out) {
    const int count = pre ? p.n_pre : p.n_post;
    const double rate = pre ? p.lambda_pre_hz : p.lambda_post_hz;
    double offset = 0.0;
    for (int i = 0; i < count; ++i) {
        offset += rng.exponential(rate);
        const double tau = pre ? ray.delay_s - offset : ray.delay_s + offset;
        const double s_db = side.sigma_s_db * rng.normal();
        Mpc m;
        m.delay_s = tau;
        m.gain_db = ray.gain_db - k_db - kDbPerNeper * offset / side.gamma_s + s_db;
        m.aod = laplace_around(ray.aod, p.angle_spread_rad, rng);
        m.aoa = laplace_around(ray.aoa, p.angle_spread_rad, rng);
        m.phase_rad = 2.0 * std::numbers::pi * rng.uniform();
        m.kind = pre ? MpcKind::pre_cursor : MpcKind::post_cursor;
        m.parent = ray.id;
        // pre-cursors never reach zero delay; the rest of this side is dropped
        if (pre && !(tau > 0.0)) {
            return;
        }
        out.push_back(m);
    }
}

} // namespace detail

/// One reflector's diffuse batch around `ray`: n_pre pre-cursors then n_post post-cursors.
///
/// Per batch: K_dB, gamma_pre/post and sigma_s pre/post are Rician draws. Per component:
/// Poisson arrivals (cumulative exponential offsets), gain
///   PG_dB = PG0_dB - K_dB - (10/ln10) |dtau| / gamma + S_dB,  S_dB ~ N(0, sigma_s^2),
/// Laplacian AoD/AoA offsets per coordinate and a uniform phase.
inline std::vector<Mpc> diffuse_batch(const DeterministicRay& ray, const QdMaterialParams& p, RngStream& rng) {
    std::vector<Mpc> out;
    out.reserve(static_cast<std::size_t>(p.n_pre + p.n_post));
    const double k_db = sample_rician(p.s_k_db, p.sigma_k_db, rng);
    const detail::ClusterSide pre{sample_rician(p.s_gamma_pre_s, p.sigma_gamma_pre_s, rng),
                                  sample_rician(p.s_sigma_s_pre_db, p.sigma_sigma_s_pre_db, rng)};
    const detail::ClusterSide post{sample_rician(p.s_gamma_post_s, p.sigma_gamma_post_s, rng),
                                   sample_rician(p.s_sigma_s_post_db, p.sigma_sigma_s_post_db, rng)};
    detail::emit_side(ray, p, k_db, pre, true, rng, out);
    detail::emit_side(ray, p, k_db, post, false, rng, out);
    return out;
}

/// Main cursor plus one diffuse batch per reflector, each drawn with that reflector's material.
inline std::vector<Mpc> multi_bounce(const DeterministicRay& ray, std::span<const QdMaterialParams* const> per_reflector,
                                     RngStream& rng) {
    if (ray.order < 1) {
        throw ConfigError("the direct ray has no diffuse components");
    }
    if (per_reflector.size() != static_cast<std::size_t>(ray.order)) {
        throw ConfigError("need one material per reflector");
    }
    std::vector<Mpc> out;
    out.push_back(main_cursor(ray));
    for (const auto* params : per_reflector) {
        if (params == nullptr) {
            throw ConfigError("missing reflector material");
        }
        const auto batch = diffuse_batch(ray, *params, rng);
        out.insert(out.end(), batch.begin(), batch.end());
    }
    return out;
}

/// Cluster for a ray whose reflectors all share `params`.
inline std::vector<Mpc> generate_cluster(const DeterministicRay& ray, const QdMaterialParams& params, RngStream& rng) {
    if (ray.order < 1) {
        throw ConfigError("the direct ray has no diffuse components");
    }
    const std::vector<const QdMaterialParams*> per(static_cast<std::size_t>(ray.order), &params);
    return multi_bounce(ray, per, rng);
}

/// Diffuse draws are keyed by timestep, so each timestep gets an independent realization.
inline StreamKey diffuse_stream_key(std::uint64_t seed, std::uint64_t timestep, std::uint64_t pair_id, std::uint64_t ray_id) {
    return {seed, timestep, pair_id, ray_id, DrawPurpose::diffuse};
}

/// All MPCs for a traced ray set: the direct ray as a lone main cursor, reflected rays as full
/// clusters when `qd_enabled`, otherwise main cursors only.
inline std::vector<Mpc> expand_rays(std::span<const DeterministicRay> rays, const TriangleMesh& mesh,
                                    const MaterialTable& materials, bool qd_enabled, std::uint64_t seed,
                                    std::uint64_t timestep, std::uint64_t pair_id) {
    std::vector<Mpc> out;
    std::vector<const QdMaterialParams*> per;
    for (const auto& ray : rays) {
        if (!qd_enabled || ray.order == 0) {
            out.push_back(main_cursor(ray));
            continue;
        }
        per.clear();
        for (const auto idx : ray.tuple) {
            per.push_back(&materials.at(mesh.triangle(idx).material_id));
        }
        RngStream rng(diffuse_stream_key(seed, timestep, pair_id, ray.id));
        const auto cluster = multi_bounce(ray, per, rng);
        out.insert(out.end(), cluster.begin(), cluster.end());
    }
    return out;
}

} // namespace qdrt
