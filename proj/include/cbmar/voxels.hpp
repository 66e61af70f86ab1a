// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cbmar/core.hpp"

namespace cbmar {

// Isotropic voxel grid. `origin` is the mm offset of the grid centre from the
// scanner isocenter; voxel (0,0,0) sits at the most negative corner.
struct VoxelGrid {
    int nx = 0, ny = 0, nz = 0;
    double pitch = 1.0;  // mm
    Vec3 origin;

    std::size_t size() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * ny + iy) * nx + ix;
    }
    bool contains(int ix, int iy, int iz) const {
        return ix >= 0 && ix < nx && iy >= 0 && iy < ny && iz >= 0 && iz < nz;
    }
    Vec3 voxel_center(int ix, int iy, int iz) const {
        return {origin.x + (ix - 0.5 * (nx - 1)) * pitch,
                origin.y + (iy - 0.5 * (ny - 1)) * pitch,
                origin.z + (iz - 0.5 * (nz - 1)) * pitch};
    }
    Vec3 min_corner() const {
        return {origin.x - 0.5 * nx * pitch, origin.y - 0.5 * ny * pitch,
                origin.z - 0.5 * nz * pitch};
    }
    Vec3 max_corner() const {
        return {origin.x + 0.5 * nx * pitch, origin.y + 0.5 * ny * pitch,
                origin.z + 0.5 * nz * pitch};
    }
    bool operator==(const VoxelGrid& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz && pitch == o.pitch &&
               origin.x == o.origin.x && origin.y == o.origin.y &&
               origin.z == o.origin.z;
    }
    bool operator!=(const VoxelGrid& o) const { return !(*this == o); }
};

template <typename T>
struct GridData {
    VoxelGrid grid;
    std::vector<T> data;

    GridData() = default;
    explicit GridData(const VoxelGrid& g, T fill = T{})
        : grid(g), data(g.size(), fill) {}

    T& at(int ix, int iy, int iz) { return data[grid.index(ix, iy, iz)]; }
    const T& at(int ix, int iy, int iz) const {
        return data[grid.index(ix, iy, iz)];
    }
    std::size_t size() const { return data.size(); }
};

using Volume = GridData<double>;      // attenuation, mm^-1
using BinaryMask = GridData<uint8_t>; // 0/1
using LabelVolume = GridData<int32_t>;

void require_same_grid(const VoxelGrid& a, const VoxelGrid& b,
                       const char* what);

std::size_t count_set(const BinaryMask& m);

// 6-connected morphology, one voxel per iteration.
BinaryMask erode6(const BinaryMask& m, int iterations = 1);
BinaryMask dilate6(const BinaryMask& m, int iterations = 1);

// Labels 6-connected components 1..n; returns voxel count per label in
// `counts` (counts[0] is the background count).
LabelVolume connected_components6(const BinaryMask& m,
                                  std::vector<std::size_t>* counts = nullptr);

// Removes 6-connected components smaller than min_voxels.
BinaryMask remove_small_components(const BinaryMask& m,
                                   std::size_t min_voxels);

// Region 6-connected to the grid faces that avoids `blocked`.
BinaryMask exterior_region(const BinaryMask& blocked);

// Complement of the exterior region: the shell itself plus everything it
// encloses.
BinaryMask fill_interior(const BinaryMask& shell);

// Squared Euclidean distance (in voxels) to the nearest set voxel of m.
// Voxels of m get 0. Unreachable (empty mask) yields a large finite value.
std::vector<double> squared_distance_to(const BinaryMask& m);

// Signed distance in voxel units: positive inside m, negative outside.
std::vector<double> signed_distance(const BinaryMask& m);

}  // namespace cbmar
