#pragma once

#include <qdrt/geometry.hpp>
#include <qdrt/material.hpp>

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

// Synthetic scene builders: stand-ins for CAD environments, plus a facet shell for counting tests.

namespace qdrt::scenes {

inline constexpr MaterialId kFloor = 1;
inline constexpr MaterialId kCeiling = 2;
inline constexpr MaterialId kWall = 3;
inline constexpr MaterialId kFacade = 4;
inline constexpr MaterialId kVehicle = 5;

/// Two triangles covering the quad a-b-c-d (in order around its boundary).
inline void add_quad(std::vector<Triangle>& out, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                     MaterialId m) {
    out.push_back({a, b, c, m});
    out.push_back({a, c, d, m});
}

/// Vertical wall from (x0, y0) to (x1, y1), z in [z0, z1].
inline void add_wall(std::vector<Triangle>& out, double x0, double y0, double x1, double y1, double z0, double z1,
                     MaterialId m) {
    add_quad(out, {x0, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x0, y0, z1}, m);
}

/// Horizontal rectangle [x0, x1] x [y0, y1] at height z.
inline void add_slab(std::vector<Triangle>& out, double x0, double y0, double x1, double y1, double z, MaterialId m) {
    add_quad(out, {x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}, m);
}

/// Closed box [0, lx] x [0, ly] x [0, lz]: floor, ceiling, four walls, 12 triangles.
inline std::vector<Triangle> box(double lx, double ly, double lz) {
    std::vector<Triangle> t;
    add_slab(t, 0, 0, lx, ly, 0, kFloor);
    add_slab(t, 0, 0, lx, ly, lz, kCeiling);
    add_wall(t, 0, 0, lx, 0, 0, lz, kWall);
    add_wall(t, lx, 0, lx, ly, 0, lz, kWall);
    add_wall(t, lx, ly, 0, ly, 0, lz, kWall);
    add_wall(t, 0, ly, 0, 0, 0, lz, kWall);
    return t;
}

/// 10 m x 19 m x 3 m room.
inline std::vector<Triangle> indoor1() { return box(10.0, 19.0, 3.0); }

/// L-shaped corridor, 3 m high: arm A spans x in [0, 10], y in [0, 4]; arm B spans x in [6, 10],
/// y in [0, 19]. The inner corner at (6, 4) hides most of arm B from arm A. 20 triangles.
inline std::vector<Triangle> l_corridor() {
    constexpr double h = 3.0;
    std::vector<Triangle> t;
    add_slab(t, 0, 0, 6, 4, 0, kFloor);
    add_slab(t, 6, 0, 10, 19, 0, kFloor);
    add_slab(t, 0, 0, 6, 4, h, kCeiling);
    add_slab(t, 6, 0, 10, 19, h, kCeiling);
    add_wall(t, 0, 0, 10, 0, 0, h, kWall);
    add_wall(t, 10, 0, 10, 19, 0, h, kWall);
    add_wall(t, 10, 19, 6, 19, 0, h, kWall);
    add_wall(t, 6, 19, 6, 4, 0, h, kWall);
    add_wall(t, 6, 4, 0, 4, 0, h, kWall);
    add_wall(t, 0, 4, 0, 0, 0, h, kWall);
    return t;
}

/// Parking lot: a 60 m x 60 m ground plane, four buildings around a central square and four
/// rows of six parked cars (closed boxes without a bottom face). 282 triangles.
inline std::vector<Triangle> courtyard() {
    std::vector<Triangle> t;
    add_slab(t, 0, 0, 60, 60, 0, kFloor);
    const auto building = [&](double x0, double y0, double x1, double y1, double h) {
        add_wall(t, x0, y0, x1, y0, 0, h, kFacade);
        add_wall(t, x1, y0, x1, y1, 0, h, kFacade);
        add_wall(t, x1, y1, x0, y1, 0, h, kFacade);
        add_wall(t, x0, y1, x0, y0, 0, h, kFacade);
        add_slab(t, x0, y0, x1, y1, h, kCeiling);
    };
    building(5, 5, 25, 20, 12);
    building(35, 5, 55, 20, 9);
    building(5, 40, 25, 55, 15);
    building(35, 40, 55, 55, 6);
    const auto car = [&](double x0, double y0) {
        constexpr double w = 1.8, l = 4.5, h = 1.5;
        add_wall(t, x0, y0, x0 + w, y0, 0, h, kVehicle);
        add_wall(t, x0 + w, y0, x0 + w, y0 + l, 0, h, kVehicle);
        add_wall(t, x0 + w, y0 + l, x0, y0 + l, 0, h, kVehicle);
        add_wall(t, x0, y0 + l, x0, y0, 0, h, kVehicle);
        add_slab(t, x0, y0, x0 + w, y0 + l, h, kVehicle);
    };
    for (const double y0 : {23.0, 32.5}) {
        for (int k = 0; k < 6; ++k) {
            car(3.0 + 3.0 * k, y0);
            car(37.0 + 3.0 * k, y0);
        }
    }
    return t;
}

/// `count` large triangles tangent to a sphere of `radius` about `centre`, normals spread by a
/// Fibonacci lattice. Each triangle reaches far past the shell, so most tuples of distinct
/// planes admit a specular path between points inside the shell.
inline std::vector<Triangle> facet_shell(std::size_t count, double radius = 5.0, const Vec3& centre = {},
                                         double reach = 1e3) {
    std::vector<Triangle> t;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        const double rho = std::sqrt(1.0 - z * z);
        const double phi = golden * static_cast<double>(i);
        const Vec3 n{rho * std::cos(phi), rho * std::sin(phi), z};
        const Vec3 helper = std::abs(n.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        const Vec3 u = normalized(cross(n, helper));
        const Vec3 v = cross(n, u);
        const Vec3 p = centre + n * radius;
        const double s = reach * radius;
        const double h = std::sqrt(3.0) / 2.0;
        t.push_back({p + u * s, p + (v * h - u * 0.5) * s, p - (v * h + u * 0.5) * s, kWall});
    }
    return t;
}

/// Placeholder material parameters (not calibrated against measurements).
inline MaterialTable placeholder_materials() {
    MaterialTable table;
    table.calibrated = false;
    table.rl_clamp_db = std::pair{7.0, 25.0};
    const auto make = [](const char* name, double s_rl, double sigma_rl) {
        QdMaterialParams p;
        p.name = name;
        p.s_rl_db = s_rl;
        p.sigma_rl_db = sigma_rl;
        p.s_k_db = 7.0;
        p.sigma_k_db = 2.0;
        p.s_gamma_pre_s = 1.5e-9;
        p.sigma_gamma_pre_s = 0.3e-9;
        p.s_gamma_post_s = 3e-9;
        p.sigma_gamma_post_s = 0.5e-9;
        p.s_sigma_s_pre_db = 3.0;
        p.sigma_sigma_s_pre_db = 1.0;
        p.s_sigma_s_post_db = 3.0;
        p.sigma_sigma_s_post_db = 1.0;
        p.lambda_pre_hz = 1e9;
        p.lambda_post_hz = 1e9;
        p.n_pre = 3;
        p.n_post = 5;
        p.angle_spread_rad = 0.05;
        return p;
    };
    table.materials.emplace(kFloor, make("floor", 10.0, 2.0));
    table.materials.emplace(kCeiling, make("ceiling", 14.0, 3.0));
    table.materials.emplace(kWall, make("wall", 12.0, 3.0));
    table.materials.emplace(kFacade, make("facade", 9.0, 2.0));
    table.materials.emplace(kVehicle, make("vehicle", 7.0, 1.5));
    return table;
}

} // namespace qdrt::scenes
