// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cbmar/materials.hpp"
#include "cbmar/voxels.hpp"

namespace cbmar {

// Label conventions used by the phantom generators.
namespace labels {
constexpr int32_t kAir = 0;
constexpr int32_t kToothMin = 1;   // universal tooth numbering 1..32
constexpr int32_t kToothMax = 39;
constexpr int32_t kBone = 64;
constexpr int32_t kSoftTissue = 80;
constexpr int32_t kMetalBase = 100;  // insert k is stamped as kMetalBase + k

inline bool is_tooth(int32_t v) { return v >= kToothMin && v <= kToothMax; }
inline bool is_metal(int32_t v) { return v >= kMetalBase; }
}  // namespace labels

enum class PrimitiveKind { Ellipsoid, Cylinder, Cuboid };

// Solid primitive. half_size holds semi-axes (ellipsoid), (radius, radius,
// half-height) for a z-axis cylinder, or half-extents (cuboid). rot_z rotates
// the primitive about a vertical axis through its centre.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Ellipsoid;
    Vec3 center;
    Vec3 half_size{1.0, 1.0, 1.0};
    double rot_z = 0.0;
    std::string material = "water";
    int32_t label = 1;

    bool contains(const Vec3& p) const;
    // Intersection of the segment a + t (b - a), t in [0,1], with the solid;
    // returns the (possibly empty) parameter interval.
    bool intersect(const Vec3& a, const Vec3& b, double& t0, double& t1) const;
};

// Piecewise-constant phantom built from an ordered primitive list; where
// primitives overlap the later one wins.
struct AnalyticPhantom {
    VoxelGrid grid;
    std::vector<Primitive> primitives;

    LabelVolume rasterize() const;
    std::map<int32_t, std::string> label_materials() const;

    // Exact line integral of attenuation along the segment [a, b] given a
    // per-material lookup; used as the reference for projector tests.
    double line_integral(const Vec3& a, const Vec3& b,
                         const std::function<double(const std::string&)>& mu_of) const;
};

// Validates primitive centres against the grid (throws OutOfGrid).
AnalyticPhantom make_analytic_phantom(const VoxelGrid& grid,
                                      std::vector<Primitive> primitives);

// Desk-scale dental arch: soft-tissue body, bone arch, n_teeth enamel teeth
// on the arch, labelled 1..n_teeth. Deterministic in seed.
AnalyticPhantom make_jaw_phantom(const VoxelGrid& grid, int n_teeth,
                                 uint64_t seed);

enum class InsertKind { Crown, Implant };

struct InsertSpec {
    InsertKind kind = InsertKind::Crown;
    int tooth_id = 1;
    std::string material = "Au";
    double crown_thickness_mm = 1.0;  // must lie in [0.6, 1.4]
    double screw_radius_mm = 1.5;     // must lie in [1.0, 2.5]
    uint64_t seed = 0;

    void validate() const;
};

// Mean anatomical crown height (mm) for universal tooth ids 1..32; unknown
// ids fall back to 8.0 mm.
double default_crown_height(int tooth_id);

// Crown restoration: the tooth is cut at its crown height (measured down from
// the occlusal top) and the remaining cap is eroded to a shell of the
// requested thickness.
BinaryMask make_crown_mask(const LabelVolume& teeth, int tooth_id,
                           double thickness_mm, double crown_height_mm);

// Implant screw: root slices of the tooth are filled with discs whose centres
// follow the line through the tooth-centre points of the lowest and middle
// (median non-root) slices. Coincident line points fall back to a vertical
// axis. Discs are clipped to the tooth dilated by one voxel.
BinaryMask make_implant_mask(const LabelVolume& teeth, int tooth_id,
                             double screw_radius_mm, double crown_height_mm);

// Stamps insert masks into a label volume as labels::kMetalBase + index;
// metal overrides whatever was present.
LabelVolume stamp_inserts(const LabelVolume& base,
                          const std::vector<BinaryMask>& insert_masks);

struct OralScan {
    BinaryMask surface;        // one-voxel shell of (teeth plus metal)
    std::vector<Vec3> points;  // physical centres of the shell voxels
};

// Intra-oral scan surrogate: the outermost voxel layer of the dentition
// (teeth union metal), obtained by removing the 6-connected erosion.
OralScan synthesize_oral_scan(const LabelVolume& teeth,
                              const BinaryMask& metal);

// Label volume plus material assignment; yields attenuation volumes at any
// energy. Used as the polychromatic projector input.
struct MaterialVolume {
    LabelVolume labels;
    MaterialTable table;
    std::map<int32_t, std::string> mapping;

    // Compact per-material indexing for fast per-ray decomposition.
    std::vector<std::string> index_to_material;
    std::vector<int> label_to_index;  // dense, -1 for absent labels

    Volume mu_volume(double kev) const;
    int material_index(int32_t label) const;
    int n_materials() const { return static_cast<int>(index_to_material.size()); }
    double mu_of_index(int idx, double kev) const {
        return table.mu(index_to_material[idx], kev);
    }
};

// Resolves every label present in `labels` to a material curve. base_mapping
// entries win; otherwise tooth ids map to enamel and the standard ids to
// air / bone / soft_tissue; labels::kMetalBase + k maps to inserts[k].
// Unresolvable labels raise UnmappedLabel.
MaterialVolume assign_materials(const LabelVolume& labels,
                                const MaterialTable& table,
                                const std::vector<InsertSpec>& inserts,
                                const std::map<int32_t, std::string>& base_mapping = {});

}  // namespace cbmar
