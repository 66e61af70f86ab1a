// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace cbmar {

void ScanGeometry::validate() const {
    if (source_radius <= 0.0) throw GeometryMismatch("source_radius must be > 0");
    if (detector_cols < 1 || detector_rows < 1)
        throw GeometryMismatch("detector must have at least one pixel");
    if (pixel_pitch_u <= 0.0 || pixel_pitch_v <= 0.0)
        throw GeometryMismatch("pixel pitch must be > 0");
    if (angles.empty()) throw GeometryMismatch("no view angles");
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (angles[i] < 0.0 || angles[i] >= 2.0 * kPi)
            throw GeometryMismatch("angles must lie in [0, 2*pi)");
        if (i > 0 && angles[i] <= angles[i - 1])
            throw GeometryMismatch("angles must be strictly increasing");
    }
}

Vec3 ScanGeometry::source_position(double beta) const {
    // The source sits opposite the detector on the line through the isocenter
    // perpendicular to the panel, so that U = R + x . perp(theta) is the
    // source-to-point distance along that line.
    return {source_radius * std::sin(beta), -source_radius * std::cos(beta), 0.0};
}

Vec3 ScanGeometry::detector_point(double beta, double u, double v) const {
    Vec3 theta = angle_direction(beta);
    return {u * theta.x, u * theta.y, v};
}

std::string ScanGeometry::hash() const {
    // FNV-1a over the canonical parameter serialization; used to detect
    // stage mismatches between files produced under different geometries.
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    auto mix_d = [&](double d) { mix(&d, sizeof d); };
    mix_d(source_radius);
    mix_d(pixel_pitch_u);
    mix_d(pixel_pitch_v);
    mix_d(detector_offset_u);
    int dims[2] = {detector_cols, detector_rows};
    mix(dims, sizeof dims);
    uint64_t nv = angles.size();
    mix(&nv, sizeof nv);
    for (double a : angles) mix_d(a);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScanGeometry make_circular_geometry(double source_radius, int n_views,
                                    int detector_cols, int detector_rows,
                                    double pixel_pitch_u, double pixel_pitch_v,
                                    double detector_offset_u) {
    ScanGeometry g;
    g.source_radius = source_radius;
    g.detector_cols = detector_cols;
    g.detector_rows = detector_rows;
    g.pixel_pitch_u = pixel_pitch_u;
    g.pixel_pitch_v = pixel_pitch_v;
    g.detector_offset_u = detector_offset_u;
    g.angles.resize(n_views);
    for (int i = 0; i < n_views; ++i) g.angles[i] = 2.0 * kPi * i / n_views;
    g.validate();
    return g;
}

Vec3 angle_direction(double beta) {
    return {std::cos(beta), std::sin(beta), 0.0};
}

DetectorCoords detector_coords(const ScanGeometry& geom, double beta,
                               const Vec3& point) {
    const double c = std::cos(beta), s = std::sin(beta);
    const double along = point.x * c + point.y * s;         // x . theta
    const double depth = -point.x * s + point.y * c;        // x . perp(theta)
    const double R = geom.source_radius;
    DetectorCoords dc;
    dc.U = R + depth;
    if (std::fabs(dc.U) < 1e-6)
        throw SingularProjection("point in the source plane");
    dc.u = R * along / dc.U;
    dc.v = point.z * R / dc.U;
    return dc;
}

}  // namespace cbmar
