// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "cbmar/geometry.hpp"
#include "doctest.h"

using namespace cbmar;

TEST_CASE("make_circular_geometry lays out uniform angles") {
    const ScanGeometry g = make_circular_geometry(60.0, 8, 16, 8, 0.2, 0.2, 0.0);
    REQUIRE(g.n_views() == 8);
    CHECK(g.angles.front() == doctest::Approx(0.0));
    CHECK(g.angles[2] == doctest::Approx(kPi / 2));
    CHECK(g.angles.back() == doctest::Approx(2.0 * kPi * 7 / 8));
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("geometry validation rejects broken setups") {
    ScanGeometry g = make_circular_geometry(60.0, 4, 16, 8, 0.2, 0.2, 0.0);
    SUBCASE("negative radius") {
        g.source_radius = -1.0;
        CHECK_THROWS_AS(g.validate(), GeometryMismatch);
    }
    SUBCASE("empty angles") {
        g.angles.clear();
        CHECK_THROWS_AS(g.validate(), GeometryMismatch);
    }
    SUBCASE("non increasing angles") {
        g.angles = {0.0, 1.0, 1.0};
        CHECK_THROWS_AS(g.validate(), GeometryMismatch);
    }
    SUBCASE("angle out of range") {
        g.angles = {0.0, 7.0};
        CHECK_THROWS_AS(g.validate(), GeometryMismatch);
    }
    SUBCASE("zero pitch") {
        g.pixel_pitch_u = 0.0;
        CHECK_THROWS_AS(g.validate(), GeometryMismatch);
    }
}

TEST_CASE("detector pixel coordinates include the lateral offset") {
    ScanGeometry g = make_circular_geometry(60.0, 4, 5, 3, 0.4, 0.5, 1.0);
    // five columns of pitch 0.4 centred at offset 1.0
    CHECK(g.col_u(0) == doctest::Approx(-0.8 + 1.0));
    CHECK(g.col_u(2) == doctest::Approx(1.0));
    CHECK(g.col_u(4) == doctest::Approx(0.8 + 1.0));
    CHECK(g.row_v(0) == doctest::Approx(-0.5));
    CHECK(g.row_v(1) == doctest::Approx(0.0));
    CHECK(g.row_v(2) == doctest::Approx(0.5));
}

TEST_CASE("source orbits opposite the panel") {
    const ScanGeometry g = make_circular_geometry(60.0, 4, 16, 8, 0.2, 0.2, 0.0);
    const Vec3 s0 = g.source_position(0.0);
    CHECK(s0.x == doctest::Approx(0.0));
    CHECK(s0.y == doctest::Approx(-60.0));
    CHECK(s0.z == doctest::Approx(0.0));
    const Vec3 s1 = g.source_position(kPi / 2);
    CHECK(s1.x == doctest::Approx(60.0));
    CHECK(s1.y == doctest::Approx(0.0).epsilon(1e-12));
    // one full radius from the isocenter at every angle
    for (double b : {0.3, 1.7, 4.4})
        CHECK(g.source_position(b).norm() == doctest::Approx(60.0));
}

TEST_CASE("detector_point spans the virtual plane through the isocenter") {
    const ScanGeometry g = make_circular_geometry(60.0, 4, 16, 8, 0.2, 0.2, 0.0);
    const Vec3 p = g.detector_point(0.0, 2.0, -1.5);
    CHECK(p.x == doctest::Approx(2.0));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(-1.5));
    // the plane holds the isocenter and is orthogonal to the source direction
    const Vec3 q = g.detector_point(1.1, 3.0, 0.7);
    CHECK(q.dot(g.source_position(1.1)) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("detector_coords matches the projective formulas") {
    const ScanGeometry g = make_circular_geometry(60.0, 4, 16, 8, 0.2, 0.2, 0.0);
    // beta = 0: theta = (1,0), perp = (0,1); point (2,3,1)
    const DetectorCoords a = detector_coords(g, 0.0, {2.0, 3.0, 1.0});
    CHECK(a.U == doctest::Approx(63.0));
    CHECK(a.u == doctest::Approx(1.9047619047619047));
    CHECK(a.v == doctest::Approx(0.9523809523809523));
    // beta = pi/2: theta = (0,1), perp = (-1,0)
    const DetectorCoords b = detector_coords(g, kPi / 2, {2.0, 3.0, 1.0});
    CHECK(b.U == doctest::Approx(58.0));
    CHECK(b.u == doctest::Approx(3.103448275862069));
    CHECK(b.v == doctest::Approx(1.0344827586206897));
}

TEST_CASE("detector_coords round trips through detector_point") {
    const ScanGeometry g = make_circular_geometry(60.0, 4, 16, 8, 0.2, 0.2, 0.0);
    // a physical point on the virtual plane must map back to its own (u, v)
    for (double beta : {0.0, 0.9, 2.6, 5.1}) {
        const Vec3 p = g.detector_point(beta, 3.7, -2.2);
        const DetectorCoords dc = detector_coords(g, beta, p);
        CHECK(dc.u == doctest::Approx(3.7).epsilon(1e-12));
        CHECK(dc.v == doctest::Approx(-2.2).epsilon(1e-12));
        CHECK(dc.U == doctest::Approx(g.source_radius).epsilon(1e-12));
    }
    // points on the source-detector axis keep u = 0 at any depth
    const DetectorCoords on_axis = detector_coords(g, 0.0, {0.0, 10.0, 0.0});
    CHECK(on_axis.u == doctest::Approx(0.0));
    CHECK(on_axis.U == doctest::Approx(70.0));
}

TEST_CASE("points in the source plane are singular") {
    const ScanGeometry g = make_circular_geometry(60.0, 4, 16, 8, 0.2, 0.2, 0.0);
    // beta = 0 source plane: x . perp(theta) = y = -R
    CHECK_THROWS_AS(detector_coords(g, 0.0, {1.0, -60.0, 0.0}),
                    SingularProjection);
}

TEST_CASE("geometry hash is stable and parameter sensitive") {
    const ScanGeometry g = make_circular_geometry(60.0, 8, 16, 8, 0.2, 0.2, 0.5);
    const std::string h = g.hash();
    CHECK(h.size() == 16);
    CHECK(h == g.hash());
    ScanGeometry g2 = g;
    g2.source_radius = 61.0;
    CHECK(g2.hash() != h);
    ScanGeometry g3 = g;
    g3.angles[3] += 1e-9;
    CHECK(g3.hash() != h);
    ScanGeometry g4 = g;
    g4.detector_offset_u = 0.0;
    CHECK(g4.hash() != h);
}
