#include <qdrt/geometry.hpp>
#include <qdrt/mesh_io.hpp>

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace qdrt;

namespace {

// plane x + y + z = 0
const Triangle kDiagonal{{1, -1, 0}, {0, 1, -1}, {-1, 0, 1}, 0};
const Triangle kFloorZ0{{-10, -10, 0}, {10, -10, 0}, {0, 20, 0}, 0};

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
    EXPECT_NEAR(a.x, b.x, tol);
    EXPECT_NEAR(a.y, b.y, tol);
    EXPECT_NEAR(a.z, b.z, tol);
}

} // namespace

TEST(Mirror, PointAcrossDiagonalPlane) {
    expect_vec_near(mirror_point({0, 0, 1}, kDiagonal), {-2.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0}, 1e-15);
}

TEST(Mirror, PointOnPlaneIsFixed) {
    expect_vec_near(mirror_point({0.25, 0.25, -0.5}, kDiagonal), {0.25, 0.25, -0.5}, 1e-15);
}

TEST(Mirror, InvolutionAndDistancePreservation) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-20, 20);
    for (int i = 0; i < 500; ++i) {
        const Triangle t = oracle::random_triangle(g, 5.0, 0);
        const Vec3 p{u(g), u(g), u(g)};
        const Vec3 q{u(g), u(g), u(g)};
        const Vec3 mp = mirror_point(p, t);
        expect_vec_near(mirror_point(mp, t), p, 1e-10);
        EXPECT_NEAR(distance(mp, mirror_point(q, t)), distance(p, q), 1e-10);
        EXPECT_NEAR(oracle::signed_distance(mp, t), -oracle::signed_distance(p, t), 1e-10);
    }
}

TEST(Mirror, DegenerateTriangleThrows) {
    const Triangle collinear{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, 0};
    EXPECT_THROW(mirror_point({1, 0, 0}, collinear), GeometryError);
    EXPECT_THROW(make_plane(collinear), GeometryError);
}

TEST(Intersect, SegmentCrossesFloor) {
    const auto p = segment_plane_intersect({{0, 0, 2}, {4, 0, -2}}, make_plane(kFloorZ0));
    ASSERT_TRUE(p.has_value());
    expect_vec_near(*p, {2, 0, 0}, 1e-15);
}

TEST(Intersect, ParallelSegmentMisses) {
    EXPECT_FALSE(segment_plane_intersect({{0, 0, 1}, {4, 0, 1}}, make_plane(kFloorZ0)).has_value());
}

TEST(Intersect, SegmentStoppingShortMisses) {
    EXPECT_FALSE(segment_plane_intersect({{0, 0, 2}, {0, 0, 0.5}}, make_plane(kFloorZ0)).has_value());
}

TEST(Inside, VerticesEdgesAndOutside) {
    const Triangle t{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 0};
    EXPECT_TRUE(point_in_triangle({0, 0, 0}, t));
    EXPECT_TRUE(point_in_triangle({0.5, 0.5, 0}, t));
    EXPECT_TRUE(point_in_triangle({0.2, 0.2, 0}, t));
    EXPECT_FALSE(point_in_triangle({0.6, 0.6, 0}, t));
    EXPECT_FALSE(point_in_triangle({-0.01, 0.5, 0}, t));
}

TEST(Inside, AgreesWithEdgeTestOracle) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 2000; ++i) {
        const Triangle t = oracle::random_triangle(g, 3.0, 0);
        const auto plane = make_plane(t);
        // random point on the plane
        const Vec3 p = t.v0 + (t.v1 - t.v0) * (1.5 * u(g)) + (t.v2 - t.v0) * (1.5 * u(g));
        const auto w = barycentric(p, plane);
        const double margin = std::min({w[0], w[1], w[2]});
        if (std::abs(margin) < 1e-6) {
            continue;
        }
        EXPECT_EQ(point_in_triangle(p, t), oracle::point_in_triangle(p, t, 0.0));
    }
}

TEST(Obstruction, SegmentThroughTriangleIsBlocked) {
    TriangleMesh mesh({kFloorZ0});
    const Segment seg{{0, 0, 2}, {4, 0, -2}};
    EXPECT_TRUE(segment_hits(seg, mesh, 0));
    const std::size_t none[] = {99};
    EXPECT_TRUE(segment_obstructed(seg, mesh, none));
    const std::size_t self[] = {0};
    EXPECT_FALSE(segment_obstructed(seg, mesh, self));
}

TEST(Obstruction, EndpointOnSurfaceDoesNotBlock) {
    TriangleMesh mesh({kFloorZ0});
    EXPECT_FALSE(segment_hits({{1, 1, 0}, {3, 0, 2}}, mesh, 0));
}

TEST(Obstruction, AgreesWithMollerTrumbore) {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-6, 6);
    std::vector<Triangle> tris;
    for (int i = 0; i < 20; ++i) {
        tris.push_back(oracle::random_triangle(g, 5.0, 0));
    }
    TriangleMesh mesh(tris);
    int hits = 0;
    for (int k = 0; k < 3000; ++k) {
        const Segment s{{u(g), u(g), u(g)}, {u(g), u(g), u(g)}};
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const bool got = segment_hits(s, mesh, i);
            EXPECT_EQ(got, oracle::segment_hits_triangle(s.a, s.b, tris[i]));
            hits += got;
        }
    }
    EXPECT_GT(hits, 100);
}

TEST(MeshIo, ParsesCommentsAndBlankLines) {
    std::istringstream in("# header\n\n0 0 0 1 0 0 0 1 0 3\n  0 0 1  1 0 1  0 1 1  4  \n");
    const auto mesh = load_mesh(in);
    ASSERT_EQ(mesh.size(), 2u);
    EXPECT_EQ(mesh.triangle(1).material_id, 4);
    EXPECT_EQ(mesh.triangle(1).v2, (Vec3{0, 1, 1}));
}

TEST(MeshIo, ErrorsCarryLineNumbers) {
    const auto line_of = [](const std::string& text, const std::function<bool(MaterialId)>& known = {}) -> std::size_t {
        std::istringstream in(text);
        try {
            load_mesh(in, known);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ(line_of("0 0 0 1 0 0 0 1 0 1\n0 0 0 1 0 0 0 1 0\n"), 2u);
    EXPECT_EQ(line_of("# c\n0 0 0 1 0 0 0 1 x 1\n"), 2u);
    EXPECT_EQ(line_of("0 0 0 1 0 0 2 0 0 1\n"), 1u);           // degenerate
    EXPECT_EQ(line_of("0 0 0 1 0 0 0 1 nan 1\n"), 1u);         // non-finite
    EXPECT_EQ(line_of("\n\n0 0 0 1 0 0 0 1 0 7\n", [](MaterialId m) { return m == 1; }), 3u);
}

TEST(MeshIo, RoundTripIsExact) {
    std::mt19937_64 g(9);
    std::vector<Triangle> tris;
    for (int i = 0; i < 50; ++i) {
        tris.push_back(oracle::random_triangle(g, 7.3, i % 5));
    }
    std::stringstream ss;
    write_mesh(ss, TriangleMesh(tris));
    const auto back = load_mesh(ss);
    ASSERT_EQ(back.size(), tris.size());
    for (std::size_t i = 0; i < tris.size(); ++i) {
        EXPECT_EQ(back.triangle(i).v0, tris[i].v0);
        EXPECT_EQ(back.triangle(i).v1, tris[i].v1);
        EXPECT_EQ(back.triangle(i).v2, tris[i].v2);
        EXPECT_EQ(back.triangle(i).material_id, tris[i].material_id);
    }
}
