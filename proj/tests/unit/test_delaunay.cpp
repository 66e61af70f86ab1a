// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>
#include <set>

#include "cbmar/delaunay.hpp"
#include "doctest.h"

using namespace cbmar;

namespace {

std::vector<Vec3> unit_tet() {
    return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
}

// orient the four vertex indices positively before insphere queries
std::array<int, 4> oriented(const std::vector<Vec3>& pts,
                            std::array<int, 4> t) {
    if (sign_orient3d(pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]) < 0)
        std::swap(t[2], t[3]);
    return t;
}

}  // namespace

TEST_CASE("orient3d signs match hand cases and degeneracies") {
    const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0}, d{0, 0, 1};
    CHECK(sign_orient3d(a, b, c, d) == 1);
    CHECK(sign_orient3d(a, c, b, d) == -1);
    CHECK(sign_orient3d(a, b, c, {0.3, 0.4, 0.0}) == 0);  // coplanar
    // parallel edge vectors force the exact zero path
    CHECK(sign_orient3d({0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {5, -3, 7}) == 0);
    // a tiny but genuine offset must not be flushed to zero
    CHECK(sign_orient3d(a, b, c, {0.3, 0.4, 1e-14}) == 1);
    CHECK(sign_orient3d(a, b, c, {0.3, 0.4, -1e-14}) == -1);
}

TEST_CASE("insphere signs match hand cases including the exact boundary") {
    const auto t = unit_tet();
    // circumsphere centre (.5,.5,.5), squared radius 0.75
    CHECK(sign_insphere(t[0], t[1], t[2], t[3], {0.5, 0.5, 0.5}) == -1);
    CHECK(sign_insphere(t[0], t[1], t[2], t[3], {0.25, 0.25, 0.25}) == -1);
    CHECK(sign_insphere(t[0], t[1], t[2], t[3], {2.0, 2.0, 2.0}) == 1);
    // (1,1,1) lies exactly on the circumsphere
    CHECK(sign_insphere(t[0], t[1], t[2], t[3], {1.0, 1.0, 1.0}) == 0);
    CHECK(sign_insphere(t[0], t[1], t[2], t[3], {1.0, 1.0, 1.0 + 1e-13}) == 1);
    CHECK(sign_insphere(t[0], t[1], t[2], t[3], {1.0, 1.0, 1.0 - 1e-13}) == -1);
}

TEST_CASE("four points build a single tetrahedron") {
    const Delaunay3 d = Delaunay3::build(unit_tet());
    CHECK_FALSE(d.used_jitter());
    CHECK(d.finite_tets().size() == 1);
    CHECK(d.finite_faces().size() == 4);
    const auto t = d.finite_tets()[0];
    std::set<int> verts(t.begin(), t.end());
    CHECK(verts == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("five points in general position split into two tetrahedra") {
    // the apex sits outside the unit tet's circumsphere (centre (.5,.5,.5),
    // r^2 = 0.75), so the original tet survives and the split is across the
    // shared face {1,2,3}
    std::vector<Vec3> pts = unit_tet();
    pts.push_back({1.2, 1.2, 1.2});
    const Delaunay3 d = Delaunay3::build(pts);
    CHECK(d.finite_tets().size() == 2);
    CHECK(d.finite_faces().size() == 7);  // 4 + 4 minus the shared face
}

TEST_CASE("regular octahedron triangulates into four tetrahedra") {
    const std::vector<Vec3> pts = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                   {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    const Delaunay3 d = Delaunay3::build(pts);
    CHECK_FALSE(d.used_jitter());
    CHECK(d.finite_tets().size() == 4);
}

TEST_CASE("3x3x3 lattice yields the full cube decomposition") {
    std::vector<Vec3> pts;
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                pts.push_back({double(x), double(y), double(z)});
    const Delaunay3 d = Delaunay3::build(pts);
    CHECK_FALSE(d.used_jitter());
    // eight unit cubes, six tetrahedra each, ties broken consistently
    CHECK(d.finite_tets().size() == 48);
    // every lattice point participates
    std::set<int> used;
    for (const auto& t : d.finite_tets())
        used.insert(t.begin(), t.end());
    CHECK(used.size() == 27);
}

TEST_CASE("random clouds satisfy the empty-circumsphere property") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 4 + int(rng() % 9);
        std::vector<Vec3> pts(n);
        for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
        const Delaunay3 d = Delaunay3::build(pts);
        REQUIRE_FALSE(d.used_jitter());

        std::set<int> used;
        for (const auto& raw : d.finite_tets()) {
            const auto t = oriented(pts, raw);
            used.insert(t.begin(), t.end());
            // no input point strictly inside any circumsphere
            for (int p = 0; p < n; ++p) {
                if (p == t[0] || p == t[1] || p == t[2] || p == t[3]) continue;
                CHECK(sign_insphere(pts[t[0]], pts[t[1]], pts[t[2]],
                                    pts[t[3]], pts[p]) >= 0);
            }
        }
        CHECK(used.size() == std::size_t(n));  // hull plus interior coverage
        CHECK_FALSE(d.finite_faces().empty());
    }
}

TEST_CASE("finite_faces lists each face once, sorted") {
    std::vector<Vec3> pts = unit_tet();
    pts.push_back({1.2, 1.2, 1.2});
    const auto faces = Delaunay3::build(pts).finite_faces();
    std::set<std::array<int, 3>> unique(faces.begin(), faces.end());
    CHECK(unique.size() == faces.size());
    for (const auto& f : faces) {
        CHECK(f[0] < f[1]);
        CHECK(f[1] < f[2]);
    }
}

TEST_CASE("degenerate clouds either jitter through or fail loudly") {
    // coplanar grid: jitter rescues the build, indices stay valid
    std::vector<Vec3> flat;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) flat.push_back({double(x), double(y), 0.0});
    const Delaunay3 d = Delaunay3::build(flat);
    CHECK(d.used_jitter());
    CHECK_FALSE(d.finite_tets().empty());
    for (const auto& t : d.finite_tets())
        for (int v : t) {
            CHECK(v >= 0);
            CHECK(v < int(flat.size()));
        }
    // the original coordinates are preserved verbatim
    CHECK(d.points().size() == flat.size());
    CHECK(d.points()[5].x == flat[5].x);

    // fewer than four points cannot form a tetrahedralization
    CHECK_THROWS_AS(Delaunay3::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}),
                    DegenerateInput);
    // all points coincident cannot be rescued by jitter either
    CHECK_THROWS_AS(
        Delaunay3::build({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}}),
        DegenerateInput);
}

TEST_CASE("cospherical points build a valid triangulation") {
    // cube corners are cospherical; any diagonal split is acceptable but the
    // result must be a consistent cover of the cube
    std::vector<Vec3> cube;
    for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x)
                cube.push_back({double(x), double(y), double(z)});
    const Delaunay3 d = Delaunay3::build(cube);
    const auto tets = d.finite_tets();
    CHECK((tets.size() == 5 || tets.size() == 6));
    double volume = 0.0;
    for (const auto& raw : tets) {
        const auto t = oriented(cube, raw);
        const Vec3 a = cube[t[0]], b = cube[t[1]], c = cube[t[2]],
                   e = cube[t[3]];
        volume += (b - a).cross(c - a).dot(e - a) / 6.0;
    }
    CHECK(volume == doctest::Approx(1.0));
}
