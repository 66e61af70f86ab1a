// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <set>

#include "cbmar/phantom.hpp"
#include "doctest.h"

using namespace cbmar;

namespace {

const char* kDataDir = CBMAR_SOURCE_DATA_DIR;

VoxelGrid cube_grid(int n, double pitch) {
    VoxelGrid g;
    g.nx = g.ny = g.nz = n;
    g.pitch = pitch;
    return g;
}

// one fat vertical tooth, big enough for every insert operation
LabelVolume single_tooth(const VoxelGrid& g) {
    Primitive p;
    p.kind = PrimitiveKind::Cylinder;
    p.center = Vec3{0.0, 0.0, 0.0};
    p.half_size = Vec3{2.0, 2.0, 3.0};
    p.material = "enamel";
    p.label = 5;
    return AnalyticPhantom{g, {p}}.rasterize();
}

}  // namespace

TEST_CASE("primitive containment honours shape and rotation") {
    Primitive e;
    e.kind = PrimitiveKind::Ellipsoid;
    e.half_size = {2.0, 1.0, 1.0};
    CHECK(e.contains({1.9, 0.0, 0.0}));
    CHECK_FALSE(e.contains({0.0, 1.9, 0.0}));
    e.rot_z = kPi / 2;  // long axis now along y
    CHECK(e.contains({0.0, 1.9, 0.0}));
    CHECK_FALSE(e.contains({1.9, 0.0, 0.0}));

    Primitive c;
    c.kind = PrimitiveKind::Cylinder;
    c.half_size = {1.0, 1.0, 2.0};
    CHECK(c.contains({0.9, 0.0, 1.9}));
    CHECK_FALSE(c.contains({0.9, 0.0, 2.1}));
    CHECK_FALSE(c.contains({0.8, 0.8, 0.0}));  // outside the circle

    Primitive b;
    b.kind = PrimitiveKind::Cuboid;
    b.half_size = {1.0, 2.0, 3.0};
    CHECK(b.contains({0.9, -1.9, 2.9}));
    CHECK_FALSE(b.contains({1.1, 0.0, 0.0}));
}

TEST_CASE("segment intersection intervals match containment") {
    Primitive s;
    s.kind = PrimitiveKind::Ellipsoid;
    s.half_size = {1.0, 1.0, 1.0};  // unit sphere
    double t0 = 0, t1 = 0;
    REQUIRE(s.intersect({-2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, t0, t1));
    CHECK(t0 == doctest::Approx(0.25));
    CHECK(t1 == doctest::Approx(0.75));
    CHECK_FALSE(s.intersect({-2.0, 1.5, 0.0}, {2.0, 1.5, 0.0}, t0, t1));
}

TEST_CASE("rasterize assigns the last overlapping primitive") {
    const VoxelGrid g = cube_grid(16, 0.5);
    Primitive big;
    big.kind = PrimitiveKind::Cuboid;
    big.half_size = {3.0, 3.0, 3.0};
    big.label = 1;
    Primitive small = big;
    small.half_size = {1.0, 1.0, 1.0};
    small.label = 2;
    const LabelVolume lab = AnalyticPhantom{g, {big, small}}.rasterize();
    CHECK(lab.at(8, 8, 8) == 2);   // centre: later primitive wins
    CHECK(lab.at(3, 8, 8) == 1);   // only the big cuboid
    CHECK(lab.at(0, 0, 0) == 0);   // air
}

TEST_CASE("analytic line integral matches closed forms") {
    const VoxelGrid g = cube_grid(16, 0.5);
    Primitive cyl;
    cyl.kind = PrimitiveKind::Cylinder;
    cyl.half_size = {2.0, 2.0, 3.0};
    cyl.material = "water";
    const AnalyticPhantom ph{g, {cyl}};
    auto mu_of = [](const std::string& m) { return m == "water" ? 0.7 : 0.0; };
    // chord through the axis: length 2 r
    CHECK(ph.line_integral({-4.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, mu_of) ==
          doctest::Approx(0.7 * 4.0));
    // chord at lateral distance 1: length 2 sqrt(r^2 - 1)
    CHECK(ph.line_integral({-4.0, 1.0, 0.0}, {4.0, 1.0, 0.0}, mu_of) ==
          doctest::Approx(0.7 * 2.0 * std::sqrt(3.0)));
    // miss above the cap
    CHECK(ph.line_integral({-4.0, 0.0, 3.5}, {4.0, 0.0, 3.5}, mu_of) ==
          doctest::Approx(0.0));
    // overlap resolution: a later air-like primitive carves the result
    Primitive hole = cyl;
    hole.half_size = {1.0, 1.0, 3.0};
    hole.material = "air";
    const AnalyticPhantom ph2{g, {cyl, hole}};
    auto mu2 = [](const std::string& m) { return m == "water" ? 0.7 : 0.0; };
    CHECK(ph2.line_integral({-4.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, mu2) ==
          doctest::Approx(0.7 * 2.0));
}

TEST_CASE("primitive centres must lie inside the grid") {
    const VoxelGrid g = cube_grid(8, 0.5);
    Primitive p;
    p.center = {10.0, 0.0, 0.0};
    CHECK_THROWS_AS(make_analytic_phantom(g, {p}), OutOfGrid);
}

TEST_CASE("jaw phantom is deterministic and fully labelled") {
    const VoxelGrid g = cube_grid(48, 0.2667);
    const AnalyticPhantom a = make_jaw_phantom(g, 8, 42);
    const AnalyticPhantom b = make_jaw_phantom(g, 8, 42);
    const LabelVolume la = a.rasterize(), lb = b.rasterize();
    CHECK(la.data == lb.data);
    const AnalyticPhantom c = make_jaw_phantom(g, 8, 43);
    CHECK(c.rasterize().data != la.data);

    std::set<int32_t> present(la.data.begin(), la.data.end());
    CHECK(present.count(labels::kAir) == 1);
    CHECK(present.count(labels::kBone) == 1);
    CHECK(present.count(labels::kSoftTissue) == 1);
    for (int t = 0; t < 8; ++t) CHECK(present.count(labels::kToothMin + t) == 1);

    // material resolution covers every label the phantom emits
    const auto mats = a.label_materials();
    for (int32_t l : present)
        if (l != labels::kAir) CHECK(mats.count(l) == 1);
}

TEST_CASE("insert specs enforce their physical ranges") {
    InsertSpec s;
    CHECK_NOTHROW(s.validate());
    s.crown_thickness_mm = 0.5;
    CHECK_THROWS_AS(s.validate(), DegenerateInput);
    s = InsertSpec{};
    s.kind = InsertKind::Implant;
    s.screw_radius_mm = 3.0;
    CHECK_THROWS_AS(s.validate(), DegenerateInput);
}

TEST_CASE("default crown heights cover universal numbering") {
    CHECK(default_crown_height(8) > 5.0);
    CHECK(default_crown_height(8) < 14.0);
    CHECK(default_crown_height(33) == doctest::Approx(8.0));  // fallback
}

TEST_CASE("crown mask is a top cap shell inside the tooth") {
    const VoxelGrid g = cube_grid(24, 0.4);
    const LabelVolume tooth = single_tooth(g);
    const BinaryMask crown = make_crown_mask(tooth, 5, 0.8, 2.0);
    REQUIRE(count_set(crown) > 0);
    // every crown voxel sits on the tooth and in its crown-height band
    int z_min = g.nz;
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x)
                if (crown.at(x, y, z)) {
                    CHECK(tooth.at(x, y, z) == 5);
                    z_min = std::min(z_min, z);
                }
    // the cap never reaches deeper than crown_height below the top slice
    int tooth_top = 0;
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x)
                if (tooth.at(x, y, z) == 5) tooth_top = std::max(tooth_top, z);
    CHECK(z_min >= tooth_top - static_cast<int>(2.0 / g.pitch));
    // a 0.8 mm shell of a 2 mm radius cap must be hollow somewhere: some
    // tooth voxel in the crown band is not part of the shell
    bool hollow = false;
    for (int z = z_min; z <= tooth_top; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x)
                if (tooth.at(x, y, z) == 5 && !crown.at(x, y, z)) hollow = true;
    CHECK(hollow);

    CHECK_THROWS_AS(make_crown_mask(tooth, 9, 0.8, 2.0), ToothNotFound);
}

TEST_CASE("implant mask is a screw through the root") {
    const VoxelGrid g = cube_grid(24, 0.4);
    const LabelVolume tooth = single_tooth(g);
    const BinaryMask screw = make_implant_mask(tooth, 5, 1.2, 2.0);
    REQUIRE(count_set(screw) > 0);
    const BinaryMask tooth_mask = [&] {
        BinaryMask m(g);
        for (std::size_t i = 0; i < m.data.size(); ++i)
            m.data[i] = tooth.data[i] == 5;
        return m;
    }();
    const BinaryMask allowed = dilate6(tooth_mask);
    for (std::size_t i = 0; i < screw.data.size(); ++i)
        if (screw.data[i]) CHECK(allowed.data[i] == 1);
    // the screw stays clear of the crown band top
    int top = 0, screw_top = 0;
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x) {
                if (tooth.at(x, y, z) == 5) top = z;
                if (screw.at(x, y, z)) screw_top = z;
            }
    CHECK(screw_top < top - static_cast<int>(2.0 / g.pitch) + 1);
}

TEST_CASE("stamp_inserts overwrites with indexed metal labels") {
    const VoxelGrid g = cube_grid(24, 0.4);
    const LabelVolume tooth = single_tooth(g);
    const BinaryMask crown = make_crown_mask(tooth, 5, 0.8, 2.0);
    const BinaryMask screw = make_implant_mask(tooth, 5, 1.2, 2.0);
    const LabelVolume out = stamp_inserts(tooth, {crown, screw});
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (screw.data[i])
            CHECK(out.data[i] == labels::kMetalBase + 1);  // later wins
        else if (crown.data[i])
            CHECK(out.data[i] == labels::kMetalBase + 0);
        else
            CHECK(out.data[i] == tooth.data[i]);
    }
}

TEST_CASE("oral scan is the one-voxel shell of dentition plus metal") {
    const VoxelGrid g = cube_grid(24, 0.4);
    const LabelVolume tooth = single_tooth(g);
    const BinaryMask crown = make_crown_mask(tooth, 5, 0.8, 2.0);
    const LabelVolume stamped = stamp_inserts(tooth, {crown});
    const OralScan scan = synthesize_oral_scan(stamped, crown);

    BinaryMask dent(g);
    for (std::size_t i = 0; i < dent.data.size(); ++i)
        dent.data[i] = labels::is_tooth(stamped.data[i]) ||
                       labels::is_metal(stamped.data[i]) || crown.data[i];
    const BinaryMask inner = erode6(dent);
    for (std::size_t i = 0; i < dent.data.size(); ++i) {
        const bool shell = dent.data[i] && !inner.data[i];
        CHECK(scan.surface.data[i] == (shell ? 1 : 0));
    }
    CHECK(scan.points.size() == count_set(scan.surface));
    // points are the physical centres of shell voxels
    REQUIRE(!scan.points.empty());
    bool found = false;
    for (int z = 0; z < g.nz && !found; ++z)
        for (int y = 0; y < g.ny && !found; ++y)
            for (int x = 0; x < g.nx && !found; ++x)
                if (scan.surface.at(x, y, z)) {
                    const Vec3 c = g.voxel_center(x, y, z);
                    for (const Vec3& p : scan.points)
                        if ((p - c).norm() < 1e-12) found = true;
                    REQUIRE(found);
                }
}

TEST_CASE("assign_materials resolves labels and rejects gaps") {
    const VoxelGrid g = cube_grid(24, 0.4);
    const MaterialTable table =
        MaterialTable::load(std::string(kDataDir) + "/materials.txt");
    const LabelVolume tooth = single_tooth(g);
    const BinaryMask crown = make_crown_mask(tooth, 5, 0.8, 2.0);
    const LabelVolume stamped = stamp_inserts(tooth, {crown});

    InsertSpec spec;
    spec.tooth_id = 5;
    spec.material = "Pd";
    const MaterialVolume mv = assign_materials(stamped, table, {spec});
    const Volume mu = mv.mu_volume(60.0);
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x) {
                const int32_t l = stamped.at(x, y, z);
                const char* want = l == 0              ? "air"
                                   : labels::is_metal(l) ? "Pd"
                                                         : "enamel";
                CHECK(mu.at(x, y, z) ==
                      doctest::Approx(table.mu(want, 60.0)));
            }
    // per-label material indices are dense and consistent
    for (int32_t l : {0, 5, labels::kMetalBase}) {
        const int idx = mv.material_index(l);
        REQUIRE(idx >= 0);
        REQUIRE(idx < mv.n_materials());
    }

    // a metal label with no matching insert spec cannot be resolved
    CHECK_THROWS_AS(assign_materials(stamped, table, {}), UnmappedLabel);
    // explicit base mapping wins over the default resolution
    const MaterialVolume mv2 =
        assign_materials(stamped, table, {spec}, {{5, "bone"}});
    CHECK(mv2.mu_volume(60.0).at(g.nx / 2, g.ny / 2, g.nz / 2 - 4) ==
          doctest::Approx(table.mu("bone", 60.0)));
}
