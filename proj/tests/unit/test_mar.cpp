// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cbmar/io.hpp"
#include "cbmar/mar.hpp"
#include "doctest.h"

using namespace cbmar;

namespace {

VoxelGrid cube_grid(int n, double pitch) {
    VoxelGrid g;
    g.nx = g.ny = g.nz = n;
    g.pitch = pitch;
    return g;
}

}  // namespace

TEST_CASE("extract_metal_mask thresholds and drops specks") {
    const VoxelGrid g = cube_grid(12, 0.5);
    Volume v(g);
    // 3x3x3 block at 0.5, one voxel exactly at the threshold, a 2-voxel speck
    for (int z = 2; z <= 4; ++z)
        for (int y = 2; y <= 4; ++y)
            for (int x = 2; x <= 4; ++x) v.at(x, y, z) = 0.5;
    v.at(8, 8, 8) = 0.3;  // speck below min_component
    v.at(8, 8, 9) = 0.9;

    const BinaryMask m = extract_metal_mask(v, 0.3, 8);
    CHECK(count_set(m) == 27);
    CHECK(m.at(3, 3, 3) == 1);
    CHECK(m.at(8, 8, 8) == 0);
    CHECK(m.at(8, 8, 9) == 0);

    // equality at the threshold counts as metal
    const BinaryMask m2 = extract_metal_mask(v, 0.3, 2);
    CHECK(m2.at(8, 8, 8) == 1);
    CHECK(m2.at(8, 8, 9) == 1);
    // raising the threshold above 0.5 clears the block
    CHECK(count_set(extract_metal_mask(v, 0.6, 1)) == 1);
}

TEST_CASE("metal_trace marks exactly the rays that cross metal") {
    const VoxelGrid g = cube_grid(10, 0.6);
    BinaryMask metal(g);
    metal.at(5, 5, 5) = 1;
    metal.at(5, 5, 6) = 1;
    const ScanGeometry geo =
        make_circular_geometry(50.0, 5, 14, 8, 0.5, 0.5, 0.0);
    const MetalTrace trace = metal_trace(metal, geo);
    REQUIRE(trace.data.size() == geo.angles.size() * 14 * 8);

    int traced = 0;
    for (std::size_t v = 0; v < geo.angles.size(); ++v)
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 14; ++c) {
                // independent reference: metal chord length of this ray
                const auto [a, b] = pixel_ray(geo, v, r, c, g);
                double len = 0.0;
                for_each_voxel_on_segment(
                    g, a, b, [&](int ix, int iy, int iz, double l) {
                        if (metal.at(ix, iy, iz)) len += l;
                    });
                const bool want = len > 1e-6;
                CHECK(trace.at(v, r, c) == (want ? 1 : 0));
                traced += trace.at(v, r, c);
            }
    CHECK(traced > 0);                                    // some rays hit
    CHECK(traced < static_cast<int>(trace.data.size()));  // most do not
}

TEST_CASE("li_inpaint bridges interior runs linearly") {
    ScanGeometry geo = make_circular_geometry(50.0, 1, 10, 1, 0.5, 0.5, 0.0);
    Sinogram sino(geo);
    for (int c = 0; c < 10; ++c) sino.at(0, 0, c) = double(c * c);
    MetalTrace trace(geo);
    trace.at(0, 0, 3) = 1;
    trace.at(0, 0, 4) = 1;
    trace.at(0, 0, 5) = 1;

    const Sinogram out = li_inpaint(sino, trace);
    // anchors at c=2 (4) and c=6 (36)
    CHECK(out.at(0, 0, 3) == doctest::Approx(12.0));
    CHECK(out.at(0, 0, 4) == doctest::Approx(20.0));
    CHECK(out.at(0, 0, 5) == doctest::Approx(28.0));
    // untouched samples keep their exact bits
    for (int c : {0, 1, 2, 6, 7, 8, 9})
        CHECK(out.at(0, 0, c) == sino.at(0, 0, c));
}

TEST_CASE("li_inpaint fills edge runs from the single anchor") {
    ScanGeometry geo = make_circular_geometry(50.0, 1, 8, 1, 0.5, 0.5, 0.0);
    Sinogram sino(geo);
    for (int c = 0; c < 8; ++c) sino.at(0, 0, c) = double(c * c);
    MetalTrace trace(geo);
    trace.at(0, 0, 0) = 1;
    trace.at(0, 0, 1) = 1;
    trace.at(0, 0, 2) = 1;  // run touches the left edge, anchor at c=3
    trace.at(0, 0, 7) = 1;  // run touches the right edge, anchor at c=6

    const Sinogram out = li_inpaint(sino, trace);
    CHECK(out.at(0, 0, 0) == doctest::Approx(9.0));
    CHECK(out.at(0, 0, 1) == doctest::Approx(9.0));
    CHECK(out.at(0, 0, 2) == doctest::Approx(9.0));
    CHECK(out.at(0, 0, 7) == doctest::Approx(36.0));
    for (int c : {3, 4, 5, 6}) CHECK(out.at(0, 0, c) == sino.at(0, 0, c));
}

TEST_CASE("li_inpaint borrows whole rows from untraced views") {
    ScanGeometry geo = make_circular_geometry(50.0, 3, 6, 1, 0.5, 0.5, 0.0);
    Sinogram sino(geo);
    for (std::size_t v = 0; v < 3; ++v)
        for (int c = 0; c < 6; ++c)
            sino.at(v, 0, c) = 100.0 * double(v) + double(c);
    MetalTrace trace(geo);
    for (int c = 0; c < 6; ++c) trace.at(1, 0, c) = 1;  // view 1 fully traced

    const Sinogram out = li_inpaint(sino, trace);
    for (int c = 0; c < 6; ++c) {
        // flanking untraced views 0 and 2 are one step away on either side
        const double expect = 0.5 * (sino.at(0, 0, c) + sino.at(2, 0, c));
        CHECK(out.at(1, 0, c) == doctest::Approx(expect));
        CHECK(out.at(0, 0, c) == sino.at(0, 0, c));
        CHECK(out.at(2, 0, c) == sino.at(2, 0, c));
    }
}

TEST_CASE("li_inpaint gives up when a row is traced in every view") {
    ScanGeometry geo = make_circular_geometry(50.0, 2, 4, 2, 0.5, 0.5, 0.0);
    Sinogram sino(geo);
    MetalTrace trace(geo);
    for (std::size_t v = 0; v < 2; ++v)
        for (int c = 0; c < 4; ++c) trace.at(v, 0, c) = 1;
    CHECK_THROWS_AS(li_inpaint(sino, trace), AllTraceRow);
}

TEST_CASE("li_inpaint clears the starved flag on repaired samples") {
    ScanGeometry geo = make_circular_geometry(50.0, 1, 6, 1, 0.5, 0.5, 0.0);
    Sinogram sino(geo);
    sino.kind = SinogramKind::Noisy;
    sino.starved.assign(sino.data.size(), 0);
    for (int c = 0; c < 6; ++c) sino.at(0, 0, c) = double(c);
    sino.starved[2] = 1;  // starved inside the trace
    sino.starved[5] = 1;  // starved outside the trace
    MetalTrace trace(geo);
    trace.at(0, 0, 2) = 1;

    const Sinogram out = li_inpaint(sino, trace);
    CHECK(out.starved[2] == 0);
    CHECK(out.starved[5] == 1);
    CHECK(out.at(0, 0, 2) == doctest::Approx(2.0));  // between 1 and 3
}

TEST_CASE("li_inpaint rejects mismatched trace geometry") {
    const ScanGeometry a = make_circular_geometry(50.0, 2, 6, 2, 0.5, 0.5, 0.0);
    const ScanGeometry b = make_circular_geometry(50.0, 2, 8, 2, 0.5, 0.5, 0.0);
    CHECK_THROWS_AS(li_inpaint(Sinogram(a), MetalTrace(b)), ShapeMismatch);
}

TEST_CASE("tooth_surface_mask is the shell of the attenuation band") {
    const VoxelGrid g = cube_grid(12, 0.5);
    Volume v(g);
    BinaryMask box(g);
    for (int z = 3; z <= 8; ++z)
        for (int y = 3; y <= 8; ++y)
            for (int x = 3; x <= 8; ++x) {
                v.at(x, y, z) = 0.05;
                box.at(x, y, z) = 1;
            }
    v.at(5, 5, 5) = 0.2;  // too dense for the band, punches a hole
    box.at(5, 5, 5) = 0;
    const BinaryMask shell = tooth_surface_mask(v, 0.04, 0.06);
    const BinaryMask inner = erode6(box);
    for (std::size_t i = 0; i < shell.data.size(); ++i)
        CHECK(shell.data[i] == (box.data[i] && !inner.data[i] ? 1 : 0));
}

TEST_CASE("identity enhancer passes the volume through") {
    const VoxelGrid g = cube_grid(6, 0.5);
    Volume x(g);
    x.at(1, 2, 3) = 0.7;
    const BinaryMask oral(g);
    const IdentityEnhancer e;
    CHECK(e.id() == "identity");
    const Volume y = apply_enhancer(e, x, oral);
    CHECK(y.data == x.data);

    BinaryMask wrong(cube_grid(5, 0.5));
    CHECK_THROWS_AS(apply_enhancer(e, x, wrong), GridMismatch);
}

TEST_CASE("score_enhancer computes l2 exactly and ce by the sigmoid model") {
    const VoxelGrid g = cube_grid(3, 1.0);
    Volume out(g), ref(g);
    out.data[0] = 0.1;
    out.data[1] = -0.3;
    BinaryMask pred(g), truth(g);
    pred.at(1, 1, 1) = 1;
    truth.at(1, 1, 1) = 1;

    const EnhancerScore s = score_enhancer(out, ref, pred, truth, 1.0);
    CHECK(s.l2 == doctest::Approx((0.01 + 0.09) / 27.0).epsilon(1e-12));
    // hand-computed: distances 1, sqrt(2), sqrt(3) from the centre voxel
    CHECK(s.ce == doctest::Approx(0.2262039823654648).epsilon(1e-12));
    // sharper sigmoid concentrates the probabilities, shrinking the loss
    const EnhancerScore sharp = score_enhancer(out, ref, pred, truth, 0.5);
    CHECK(sharp.ce == doctest::Approx(0.06756166120787709).epsilon(1e-12));
    CHECK(sharp.ce < s.ce);
    // a wrong prediction scores strictly worse
    BinaryMask off(g);
    off.at(0, 0, 0) = 1;
    const EnhancerScore bad = score_enhancer(out, ref, off, truth, 1.0);
    CHECK(bad.ce > s.ce);

    CHECK_THROWS_AS(score_enhancer(out, ref, pred, truth, 0.0),
                    DegenerateInput);
}

TEST_CASE("li-mar enhancer reconstructs from the repaired sinogram") {
    // miniature loop: water disc with a dense 2x2x2 inclusion
    const VoxelGrid g = cube_grid(16, 0.5);
    Volume mu(g);
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x) {
                const Vec3 c = g.voxel_center(x, y, z);
                if (c.x * c.x + c.y * c.y <= 9.0 && std::fabs(c.z) <= 3.0)
                    mu.at(x, y, z) = 0.02;
            }
    for (int z = 7; z <= 8; ++z)
        for (int y = 7; y <= 8; ++y)
            for (int x = 9; x <= 10; ++x) mu.at(x, y, z) = 2.0;

    const ScanGeometry geo =
        make_circular_geometry(50.0, 36, 32, 20, 0.4, 0.4, 0.0);
    const Sinogram measured = forward_project_mono(mu, geo);
    const Volume uncorrected = fdk_reconstruct(measured, g);

    const LiMarEnhancer e(measured, 0.3, 4);
    CHECK(e.id() == "li");
    const BinaryMask oral(g);
    const Volume corrected = apply_enhancer(e, uncorrected, oral);
    CHECK(corrected.grid == g);
    CHECK(corrected.data != uncorrected.data);

    // the repaired volume loses the dense inclusion's peak
    double peak_unc = 0.0, peak_cor = 0.0;
    for (std::size_t i = 0; i < corrected.data.size(); ++i) {
        peak_unc = std::max(peak_unc, uncorrected.data[i]);
        peak_cor = std::max(peak_cor, corrected.data[i]);
    }
    CHECK(peak_cor < 0.5 * peak_unc);
}

TEST_CASE("external enhancer round trips through the filesystem") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cbmar_ext_test";
    fs::create_directories(dir);
    const fs::path script = dir / "copy_through.sh";
    {
        std::ofstream s(script);
        s << "#!/bin/sh\ncp \"$1\" \"$3\" && cp \"$1.raw\" \"$3.raw\"\n";
    }
    fs::permissions(script, fs::perms::owner_all, fs::perm_options::add);

    const VoxelGrid g = cube_grid(6, 0.5);
    Volume x(g);
    // float-exact values survive the 32-bit volume format unchanged
    for (std::size_t i = 0; i < x.data.size(); ++i)
        x.data[i] = 0.25 * double(i);
    const BinaryMask oral(g);

    const ExternalEnhancer ok(script.string(), dir.string());
    CHECK(ok.id() == std::string("external:") + script.string());
    const Volume y = apply_enhancer(ok, x, oral);
    CHECK(y.data == x.data);

    const ExternalEnhancer fail("/bin/false", dir.string());
    CHECK_THROWS_AS(apply_enhancer(fail, x, oral), EnhancerFailed);
    fs::remove_all(dir);
}
