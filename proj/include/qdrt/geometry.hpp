#pragma once

#include <qdrt/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qdrt {

struct Vec3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    constexpr Vec3& operator+=(const Vec3& o) noexcept { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) noexcept { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) noexcept { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
    friend constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) noexcept { return norm(b - a); }

inline bool is_finite(const Vec3& a) noexcept {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (!(n > 0.0)) {
        throw GeometryError("cannot normalize a zero vector");
    }
    return a * (1.0 / n);
}

/// Angle between two non-zero vectors, accurate near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) noexcept {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

using MaterialId = std::int32_t;

inline constexpr double kMinTriangleArea = 1e-12;   // m^2
inline constexpr double kParallelTolerance = 1e-12; // |unit direction . unit normal|
inline constexpr double kInsideTolerance = 1e-12;   // barycentric slack, boundary counts as inside
inline constexpr double kObstructionEpsilon = 1e-9; // crossing-parameter guard at segment ends

struct Triangle {
    Vec3 v0;
    Vec3 v1;
    Vec3 v2;
    MaterialId material_id{0};

    double area() const noexcept { return 0.5 * norm(cross(v1 - v0, v2 - v0)); }
    Vec3 centroid() const noexcept { return (v0 + v1 + v2) * (1.0 / 3.0); }
};

/// Supporting plane of a triangle plus the data needed for fast barycentric tests.
/// Plane: dot(normal, p) == offset, normal is unit length.
struct TrianglePlane {
    Vec3 normal;
    double offset{0.0};
    Vec3 origin; // v0
    Vec3 e1;     // v1 - v0
    Vec3 e2;     // v2 - v0
    double d11{0.0};
    double d12{0.0};
    double d22{0.0};
    double inv_det{0.0};
};

inline TrianglePlane make_plane(const Triangle& tri) {
    const Vec3 e1 = tri.v1 - tri.v0;
    const Vec3 e2 = tri.v2 - tri.v0;
    const Vec3 c = cross(e1, e2);
    const double twice_area = norm(c);
    if (!(0.5 * twice_area > kMinTriangleArea) || !is_finite(c)) {
        throw GeometryError("degenerate triangle (area <= 1e-12 m^2)");
    }
    TrianglePlane p;
    p.normal = c * (1.0 / twice_area);
    p.offset = dot(p.normal, tri.v0);
    p.origin = tri.v0;
    p.e1 = e1;
    p.e2 = e2;
    p.d11 = dot(e1, e1);
    p.d12 = dot(e1, e2);
    p.d22 = dot(e2, e2);
    p.inv_det = 1.0 / (p.d11 * p.d22 - p.d12 * p.d12);
    return p;
}

/// Barycentric coordinates (w0, w1, w2) of a point assumed to lie on the plane.
inline std::array<double, 3> barycentric(const Vec3& p, const TrianglePlane& plane) noexcept {
    const Vec3 q = p - plane.origin;
    const double b1 = dot(q, plane.e1);
    const double b2 = dot(q, plane.e2);
    const double w1 = (plane.d22 * b1 - plane.d12 * b2) * plane.inv_det;
    const double w2 = (plane.d11 * b2 - plane.d12 * b1) * plane.inv_det;
    return {1.0 - w1 - w2, w1, w2};
}

inline bool inside(const std::array<double, 3>& w) noexcept {
    return w[0] >= -kInsideTolerance && w[1] >= -kInsideTolerance && w[2] >= -kInsideTolerance;
}

inline Vec3 mirror_point(const Vec3& p, const TrianglePlane& plane) noexcept {
    return p - plane.normal * (2.0 * (dot(plane.normal, p) - plane.offset));
}

/// Specular image of `p` across the supporting plane of `tri`.
inline Vec3 mirror_point(const Vec3& p, const Triangle& tri) { return mirror_point(p, make_plane(tri)); }

struct Segment {
    Vec3 a;
    Vec3 b;

    double length() const noexcept { return distance(a, b); }
};

/// Crossing parameter s of the segment a + s(b - a) with the plane, if the segment is not parallel to it.
inline std::optional<double> crossing_parameter(const Vec3& a, const Vec3& b, const TrianglePlane& plane) noexcept {
    const Vec3 d = b - a;
    const double len = norm(d);
    if (!(len > 0.0)) {
        return std::nullopt;
    }
    const double denom = dot(plane.normal, d);
    if (std::abs(denom) < kParallelTolerance * len) {
        return std::nullopt;
    }
    return (plane.offset - dot(plane.normal, a)) / denom;
}

inline std::optional<Vec3> segment_plane_intersect(const Segment& seg, const TrianglePlane& plane) {
    if (!(seg.length() > 0.0)) {
        throw GeometryError("zero-length segment");
    }
    const auto s = crossing_parameter(seg.a, seg.b, plane);
    if (!s || !(*s > 0.0 && *s < 1.0)) {
        return std::nullopt;
    }
    return seg.a + (seg.b - seg.a) * *s;
}

/// Point where the segment crosses the triangle's supporting plane, for crossing parameters in (0, 1).
inline std::optional<Vec3> segment_plane_intersect(const Segment& seg, const Triangle& tri) {
    return segment_plane_intersect(seg, make_plane(tri));
}

inline bool point_in_triangle(const Vec3& p, const Triangle& tri) { return inside(barycentric(p, make_plane(tri))); }

/// Immutable triangle soup with cached planes. Shareable across threads once built.
class TriangleMesh {
public:
    TriangleMesh() = default;

    explicit TriangleMesh(std::vector<Triangle> triangles) : triangles_(std::move(triangles)) {
        planes_.reserve(triangles_.size());
        for (const auto& t : triangles_) {
            planes_.push_back(make_plane(t));
        }
    }

    std::size_t size() const noexcept { return triangles_.size(); }
    bool empty() const noexcept { return triangles_.empty(); }

    const Triangle& triangle(std::size_t i) const { return triangles_.at(i); }
    const TrianglePlane& plane(std::size_t i) const noexcept { return planes_[i]; }
    std::span<const Triangle> triangles() const noexcept { return triangles_; }

private:
    std::vector<Triangle> triangles_;
    std::vector<TrianglePlane> planes_;
};

/// True iff the open segment hits triangle `i`: crossing parameter in (eps, 1 - eps) and the hit inside.
inline bool segment_hits(const Segment& seg, const TriangleMesh& mesh, std::size_t i) noexcept {
    const TrianglePlane& plane = mesh.plane(i);
    const auto s = crossing_parameter(seg.a, seg.b, plane);
    if (!s || !(*s > kObstructionEpsilon && *s < 1.0 - kObstructionEpsilon)) {
        return false;
    }
    return inside(barycentric(seg.a + (seg.b - seg.a) * *s, plane));
}

/// Obstruction test against every triangle not listed in `exclude`.
inline bool segment_obstructed(const Segment& seg, const TriangleMesh& mesh, std::span<const std::size_t> exclude = {}) {
    if (!(seg.length() > 0.0)) {
        throw GeometryError("zero-length segment");
    }
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) {
            continue;
        }
        if (segment_hits(seg, mesh, i)) {
            return true;
        }
    }
    return false;
}

} // namespace qdrt
