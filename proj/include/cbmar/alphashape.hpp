// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "cbmar/core.hpp"
#include "cbmar/voxels.hpp"

namespace cbmar {

// Scan vertices in mm. Exact duplicate coordinates are removed on
// construction; indices elsewhere refer to the deduplicated list.
struct PointCloud {
    std::vector<Vec3> points;
};

PointCloud make_point_cloud(std::vector<Vec3> points);

// One boundary simplex: n of the slots in v are used (1 = vertex,
// 2 = edge, 3 = triangle). `normal` is meaningful for triangles; the
// boundary builders orient it outward, away from the enclosed volume,
// with the vertex winding to match.
struct BoundaryFace {
    std::array<int, 3> v{-1, -1, -1};
    int n = 3;
    Vec3 normal{};
};

struct AlphaBoundary {
    std::vector<BoundaryFace> simplices;

    std::size_t triangle_count() const {
        std::size_t c = 0;
        for (const auto& s : simplices) c += (s.n == 3);
        return c;
    }
};

// True when an open ball of radius `alpha` touches exactly the points of
// `simplex` and contains no cloud point. `simplex` holds 1..3 distinct
// vertex indices. A triangle whose circumradius exceeds alpha is not
// exposed (returns false). Throws DegenerateSimplex for collinear or
// coincident tuples.
bool alpha_exposed(const std::vector<int>& simplex, const PointCloud& cloud,
                   double alpha);

// Boundary triangles of the alpha shape, candidates drawn from the Delaunay
// tetrahedralization. Throws TooFewPoints for clouds smaller than 4.
AlphaBoundary alpha_shape_boundary(const PointCloud& cloud, double alpha);

// Exhaustive enumeration over every vertex/edge/triangle subset; oracle for
// small clouds (at most 200 points).
AlphaBoundary alpha_shape_boundary_brute(const PointCloud& cloud, double alpha);

struct ExtendedShape {
    PointCloud cloud;
    AlphaBoundary boundary;
};

// Displace every vertex that belongs to at least one triangle by `distance`
// along the normalized mean of its incident face normals. Vertices whose
// incident normals cancel are left in place. Connectivity is unchanged.
ExtendedShape extend_shape(const AlphaBoundary& boundary,
                           const PointCloud& cloud, double distance);

// Rasterize the boundary onto `grid`, flood the exterior from the grid
// border, and return the complement (boundary plus enclosed interior).
// A leaking surface is retried once with a one-voxel morphological closing;
// throws OpenSurface when that still fails to seal.
BinaryMask voxelize_shape(const AlphaBoundary& boundary,
                          const PointCloud& cloud, const VoxelGrid& grid);

// Weight region: voxels of alpha_mask not covered by the filled interior of
// the oral tooth-surface mask.
BinaryMask build_weight_region(const BinaryMask& oral_surface,
                               const BinaryMask& alpha_mask);

// out(p) = 1 iff volume(p) >= tau and p is outside `region`; values exactly
// at tau survive.
BinaryMask weighted_threshold(const Volume& volume, const BinaryMask& region,
                              double tau);

}  // namespace cbmar
