// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbmar/core.hpp"

namespace cbmar {

// Circular cone-beam scan around the z axis with a flat panel, described on
// the virtual detector plane through the isocenter. The panel's lateral (u)
// axis may be shifted by detector_offset_u to model an offset-detector scan.
struct ScanGeometry {
    double source_radius = 60.0;        // mm, source to isocenter
    std::vector<double> angles;         // rad, strictly increasing, in [0, 2*pi)
    int detector_cols = 96;             // u samples per row
    int detector_rows = 64;             // v rows
    double pixel_pitch_u = 0.2;         // mm on the virtual detector
    double pixel_pitch_v = 0.2;         // mm
    double detector_offset_u = 0.0;     // mm, lateral shift of the panel centre

    void validate() const;

    std::size_t n_views() const { return angles.size(); }

    // u coordinate of column c / v coordinate of row r (pixel centres).
    double col_u(int c) const {
        return (c - 0.5 * (detector_cols - 1)) * pixel_pitch_u + detector_offset_u;
    }
    double row_v(int r) const {
        return (r - 0.5 * (detector_rows - 1)) * pixel_pitch_v;
    }

    // Physical position of a detector pixel at view angle beta, and of the
    // source. The ray direction axis points from the source through the
    // isocenter; u runs along (cos b, sin b, 0), v along z.
    Vec3 source_position(double beta) const;
    Vec3 detector_point(double beta, double u, double v) const;

    std::string hash() const;  // 16-hex-digit digest of all parameters
};

ScanGeometry make_circular_geometry(double source_radius, int n_views,
                                    int detector_cols, int detector_rows,
                                    double pixel_pitch_u, double pixel_pitch_v,
                                    double detector_offset_u);

// In-plane unit direction (cos b, sin b) for view angle b.
Vec3 angle_direction(double beta);

struct DetectorCoords {
    double u = 0.0;  // lateral detector coordinate, mm
    double v = 0.0;  // axial detector coordinate, mm
    double U = 0.0;  // distance weight denominator, mm
};

// Maps a physical point to virtual-detector coordinates at view angle beta:
//   U = R + x . perp(theta),  u = R (x . theta) / U,  v = z R / U
// with theta = (cos b, sin b) and perp(theta) = (-sin b, cos b).
// Throws SingularProjection when |U| < 1e-6 mm.
DetectorCoords detector_coords(const ScanGeometry& geom, double beta,
                               const Vec3& point);

}  // namespace cbmar
