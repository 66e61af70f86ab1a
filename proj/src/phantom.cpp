// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace cbmar {

namespace {

Vec3 to_local(const Primitive& pr, const Vec3& p) {
    const Vec3 d = p - pr.center;
    if (pr.rot_z == 0.0) return d;
    const double c = std::cos(pr.rot_z), s = std::sin(pr.rot_z);
    return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
}

Vec3 rotate_dir(const Primitive& pr, const Vec3& d) {
    if (pr.rot_z == 0.0) return d;
    const double c = std::cos(pr.rot_z), s = std::sin(pr.rot_z);
    return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
}

// Intersects [lo, hi] in t of |p + t d| <= h along one axis.
bool slab_clip(double p, double d, double h, double& t0, double& t1) {
    if (std::fabs(d) < 1e-300) return std::fabs(p) <= h;
    double a = (-h - p) / d, b = (h - p) / d;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    return t0 <= t1;
}

}  // namespace

bool Primitive::contains(const Vec3& p) const {
    const Vec3 q = to_local(*this, p);
    switch (kind) {
        case PrimitiveKind::Ellipsoid: {
            const double sx = q.x / half_size.x, sy = q.y / half_size.y,
                         sz = q.z / half_size.z;
            return sx * sx + sy * sy + sz * sz <= 1.0;
        }
        case PrimitiveKind::Cylinder:
            return q.x * q.x + q.y * q.y <= half_size.x * half_size.x &&
                   std::fabs(q.z) <= half_size.z;
        case PrimitiveKind::Cuboid:
            return std::fabs(q.x) <= half_size.x &&
                   std::fabs(q.y) <= half_size.y &&
                   std::fabs(q.z) <= half_size.z;
    }
    return false;
}

bool Primitive::intersect(const Vec3& a, const Vec3& b, double& t0,
                          double& t1) const {
    const Vec3 p = to_local(*this, a);
    const Vec3 d = rotate_dir(*this, b - a);
    t0 = 0.0;
    t1 = 1.0;
    switch (kind) {
        case PrimitiveKind::Ellipsoid: {
            const double qx = p.x / half_size.x, qy = p.y / half_size.y,
                         qz = p.z / half_size.z;
            const double ex = d.x / half_size.x, ey = d.y / half_size.y,
                         ez = d.z / half_size.z;
            const double A = ex * ex + ey * ey + ez * ez;
            const double B = 2.0 * (qx * ex + qy * ey + qz * ez);
            const double C = qx * qx + qy * qy + qz * qz - 1.0;
            if (A < 1e-300) return C <= 0.0;
            const double disc = B * B - 4.0 * A * C;
            if (disc < 0.0) return false;
            const double r = std::sqrt(disc);
            t0 = std::max(t0, (-B - r) / (2.0 * A));
            t1 = std::min(t1, (-B + r) / (2.0 * A));
            return t0 <= t1;
        }
        case PrimitiveKind::Cylinder: {
            const double A = d.x * d.x + d.y * d.y;
            const double B = 2.0 * (p.x * d.x + p.y * d.y);
            const double C = p.x * p.x + p.y * p.y - half_size.x * half_size.x;
            if (A < 1e-300) {
                if (C > 0.0) return false;
            } else {
                const double disc = B * B - 4.0 * A * C;
                if (disc < 0.0) return false;
                const double r = std::sqrt(disc);
                t0 = std::max(t0, (-B - r) / (2.0 * A));
                t1 = std::min(t1, (-B + r) / (2.0 * A));
                if (t0 > t1) return false;
            }
            return slab_clip(p.z, d.z, half_size.z, t0, t1);
        }
        case PrimitiveKind::Cuboid:
            return slab_clip(p.x, d.x, half_size.x, t0, t1) &&
                   slab_clip(p.y, d.y, half_size.y, t0, t1) &&
                   slab_clip(p.z, d.z, half_size.z, t0, t1);
    }
    return false;
}

LabelVolume AnalyticPhantom::rasterize() const {
    LabelVolume out(grid, labels::kAir);
    for (const auto& pr : primitives) {
        // conservative bounding box; the xy extent covers any z rotation
        const double rxy = std::hypot(pr.half_size.x, pr.half_size.y);
        const Vec3 lo{pr.center.x - rxy, pr.center.y - rxy,
                      pr.center.z - pr.half_size.z};
        const Vec3 hi{pr.center.x + rxy, pr.center.y + rxy,
                      pr.center.z + pr.half_size.z};
        const Vec3 c000 = grid.voxel_center(0, 0, 0);
        auto lo_idx = [&](double v, double v0, int n) {
            int i = static_cast<int>(std::floor((v - v0) / grid.pitch));
            return std::clamp(i, 0, n - 1);
        };
        auto hi_idx = [&](double v, double v0, int n) {
            int i = static_cast<int>(std::ceil((v - v0) / grid.pitch));
            return std::clamp(i, 0, n - 1);
        };
        const int x0 = lo_idx(lo.x, c000.x, grid.nx), x1 = hi_idx(hi.x, c000.x, grid.nx);
        const int y0 = lo_idx(lo.y, c000.y, grid.ny), y1 = hi_idx(hi.y, c000.y, grid.ny);
        const int z0 = lo_idx(lo.z, c000.z, grid.nz), z1 = hi_idx(hi.z, c000.z, grid.nz);
        for (int iz = z0; iz <= z1; ++iz)
            for (int iy = y0; iy <= y1; ++iy)
                for (int ix = x0; ix <= x1; ++ix)
                    if (pr.contains(grid.voxel_center(ix, iy, iz)))
                        out.at(ix, iy, iz) = pr.label;
    }
    return out;
}

std::map<int32_t, std::string> AnalyticPhantom::label_materials() const {
    std::map<int32_t, std::string> m;
    for (const auto& pr : primitives) m[pr.label] = pr.material;
    return m;
}

double AnalyticPhantom::line_integral(
    const Vec3& a, const Vec3& b,
    const std::function<double(const std::string&)>& mu_of) const {
    // Partition [0,1] at all primitive entry/exit parameters; in each piece
    // the material is decided by the last covering primitive.
    std::vector<double> cuts{0.0, 1.0};
    for (const auto& pr : primitives) {
        double t0, t1;
        if (pr.intersect(a, b, t0, t1)) {
            cuts.push_back(t0);
            cuts.push_back(t1);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    const double len = (b - a).norm();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double tm = 0.5 * (cuts[i] + cuts[i + 1]);
        if (tm < 0.0 || tm > 1.0) continue;
        const Vec3 mid = a + (b - a) * tm;
        for (auto it = primitives.rbegin(); it != primitives.rend(); ++it) {
            if (it->contains(mid)) {
                total += mu_of(it->material) * (cuts[i + 1] - cuts[i]) * len;
                break;
            }
        }
    }
    return total;
}

AnalyticPhantom make_analytic_phantom(const VoxelGrid& grid,
                                      std::vector<Primitive> primitives) {
    const Vec3 lo = grid.min_corner(), hi = grid.max_corner();
    for (const auto& pr : primitives) {
        if (pr.center.x < lo.x || pr.center.x > hi.x || pr.center.y < lo.y ||
            pr.center.y > hi.y || pr.center.z < lo.z || pr.center.z > hi.z)
            throw OutOfGrid("primitive centre outside the grid");
    }
    return AnalyticPhantom{grid, std::move(primitives)};
}

AnalyticPhantom make_jaw_phantom(const VoxelGrid& grid, int n_teeth,
                                 uint64_t seed) {
    if (n_teeth < 1) throw DegenerateInput("need at least one tooth");
    std::mt19937_64 rng(mix_seed(seed, 0x9a77));
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);

    const double s = grid.nx * grid.pitch / 12.8;  // desk reference extent
    std::vector<Primitive> prims;
    prims.push_back({PrimitiveKind::Ellipsoid, grid.origin + Vec3{0, 0.6 * s, 0},
                     {5.6 * s, 4.8 * s, 5.0 * s}, 0.0, "soft_tissue",
                     labels::kSoftTissue});
    prims.push_back({PrimitiveKind::Ellipsoid, grid.origin + Vec3{0, 0.9 * s, -0.2 * s},
                     {4.8 * s, 4.0 * s, 4.2 * s}, 0.0, "bone", labels::kBone});
    prims.push_back({PrimitiveKind::Ellipsoid, grid.origin + Vec3{0, 1.6 * s, 0.5 * s},
                     {3.0 * s, 2.4 * s, 3.4 * s}, 0.0, "soft_tissue",
                     labels::kSoftTissue});

    // teeth on the anterior arch
    const double arc_r = 4.0 * s;
    const double span = 150.0 * kPi / 180.0;
    const double step = n_teeth > 1 ? span / (n_teeth - 1) : 0.0;
    const double tooth_r = std::min(1.05 * s, 0.42 * arc_r * std::max(step, 0.3));
    for (int i = 0; i < n_teeth; ++i) {
        const double th = -kPi / 2 - span / 2 + i * step;
        const double r = tooth_r * (1.0 + 0.08 * jitter(rng));
        const double hz = 2.2 * s * (1.0 + 0.05 * jitter(rng));
        Vec3 c = grid.origin + Vec3{arc_r * std::cos(th), 0.4 * s + arc_r * std::sin(th),
                                    0.6 * s + 0.15 * s * jitter(rng)};
        prims.push_back({PrimitiveKind::Cylinder, c, {r, r, hz}, 0.0, "enamel",
                         labels::kToothMin + i});
    }
    return make_analytic_phantom(grid, std::move(prims));
}

void InsertSpec::validate() const {
    if (kind == InsertKind::Crown &&
        (crown_thickness_mm < 0.6 || crown_thickness_mm > 1.4))
        throw DegenerateInput("crown thickness outside [0.6, 1.4] mm");
    if (kind == InsertKind::Implant &&
        (screw_radius_mm < 1.0 || screw_radius_mm > 2.5))
        throw DegenerateInput("screw radius outside [1.0, 2.5] mm");
    if (material.empty()) throw DegenerateInput("insert without material");
}

double default_crown_height(int tooth_id) {
    // mean anatomical crown heights, universal numbering (1..16 maxillary,
    // 17..32 mandibular)
    static const double maxillary[8] = {7.5, 7.0, 7.5, 8.5, 8.5, 10.0, 9.0, 10.5};
    static const double mandibular[8] = {7.0, 7.0, 7.7, 8.5, 8.5, 11.0, 9.5, 9.0};
    if (tooth_id >= 1 && tooth_id <= 16) {
        int off = tooth_id <= 8 ? 8 - tooth_id : tooth_id - 9;
        return maxillary[7 - off];
    }
    if (tooth_id >= 17 && tooth_id <= 32) {
        int off = tooth_id <= 24 ? 24 - tooth_id : tooth_id - 25;
        return mandibular[7 - off];
    }
    return 8.0;
}

namespace {

struct ToothExtent {
    std::vector<std::size_t> voxels;
    int z_lo = std::numeric_limits<int>::max();
    int z_hi = std::numeric_limits<int>::min();
};

ToothExtent find_tooth(const LabelVolume& teeth, int tooth_id) {
    const auto& g = teeth.grid;
    ToothExtent t;
    for (int iz = 0; iz < g.nz; ++iz)
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                if (teeth.at(ix, iy, iz) == tooth_id) {
                    t.voxels.push_back(g.index(ix, iy, iz));
                    t.z_lo = std::min(t.z_lo, iz);
                    t.z_hi = std::max(t.z_hi, iz);
                }
    if (t.voxels.empty())
        throw ToothNotFound("tooth id " + std::to_string(tooth_id));
    if (t.voxels.size() < 27)
        throw ToothTooSmall("tooth id " + std::to_string(tooth_id) + " has " +
                            std::to_string(t.voxels.size()) + " voxels");
    return t;
}

// First slice of the crown region: crown_height measured down from the top
// occupied slice.
int crown_cut_slice(const VoxelGrid& g, const ToothExtent& t,
                    double crown_height_mm) {
    int cut = t.z_hi - static_cast<int>(std::floor(crown_height_mm / g.pitch));
    return std::max(cut, t.z_lo);
}

}  // namespace

BinaryMask make_crown_mask(const LabelVolume& teeth, int tooth_id,
                           double thickness_mm, double crown_height_mm) {
    const auto& g = teeth.grid;
    ToothExtent t = find_tooth(teeth, tooth_id);
    const int cut = crown_cut_slice(g, t, crown_height_mm);

    BinaryMask cap(g, 0);
    for (std::size_t i : t.voxels) {
        int iz = static_cast<int>(i / (static_cast<std::size_t>(g.nx) * g.ny));
        if (iz >= cut) cap.data[i] = 1;
    }
    // shell: cap voxels within thickness of the cap's boundary
    BinaryMask inv(g, 0);
    for (std::size_t i = 0; i < inv.data.size(); ++i)
        inv.data[i] = cap.data[i] ? 0 : 1;
    std::vector<double> d2 = squared_distance_to(inv);
    BinaryMask shell(g, 0);
    const double limit = thickness_mm / g.pitch + 1e-9;
    for (std::size_t i = 0; i < shell.data.size(); ++i)
        if (cap.data[i] && std::sqrt(d2[i]) <= limit) shell.data[i] = 1;
    return shell;
}

BinaryMask make_implant_mask(const LabelVolume& teeth, int tooth_id,
                             double screw_radius_mm, double crown_height_mm) {
    const auto& g = teeth.grid;
    ToothExtent t = find_tooth(teeth, tooth_id);
    const int cut = crown_cut_slice(g, t, crown_height_mm);

    // per-slice centroids
    std::map<int, std::pair<Vec3, int>> slices;  // z -> (sum, count)
    for (std::size_t i : t.voxels) {
        int ix = static_cast<int>(i % g.nx);
        int iy = static_cast<int>((i / g.nx) % g.ny);
        int iz = static_cast<int>(i / (static_cast<std::size_t>(g.nx) * g.ny));
        auto& e = slices[iz];
        e.first += g.voxel_center(ix, iy, iz);
        e.second += 1;
    }
    auto centroid = [&](int iz) {
        const auto& e = slices.at(iz);
        return e.first / e.second;
    };

    std::vector<int> non_root;
    for (const auto& kv : slices)
        if (kv.first >= cut) non_root.push_back(kv.first);
    if (non_root.empty())
        for (const auto& kv : slices) non_root.push_back(kv.first);
    const int z_low = t.z_lo;
    const int z_mid = non_root[non_root.size() / 2];

    const Vec3 c_low = centroid(z_low);
    const Vec3 c_mid = z_mid == z_low ? c_low : centroid(z_mid);
    Vec3 slope{0, 0, 0};
    const double dz = c_mid.z - c_low.z;
    if (std::fabs(dz) > 1e-12 &&
        (std::fabs(c_mid.x - c_low.x) > 1e-12 ||
         std::fabs(c_mid.y - c_low.y) > 1e-12)) {
        slope = {(c_mid.x - c_low.x) / dz, (c_mid.y - c_low.y) / dz, 0.0};
    }  // else: degenerate axis, keep the vertical fallback

    BinaryMask tooth_mask(g, 0);
    for (std::size_t i : t.voxels) tooth_mask.data[i] = 1;
    BinaryMask allowed = dilate6(tooth_mask, 1);

    BinaryMask out(g, 0);
    const double r2 = screw_radius_mm * screw_radius_mm;
    for (int iz = z_low; iz < cut; ++iz) {
        if (!slices.count(iz)) continue;  // gaps in the root get no disc
        const double zc = g.voxel_center(0, 0, iz).z;
        const double cx = c_low.x + slope.x * (zc - c_low.z);
        const double cy = c_low.y + slope.y * (zc - c_low.z);
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                const Vec3 p = g.voxel_center(ix, iy, iz);
                const double dx = p.x - cx, dy = p.y - cy;
                if (dx * dx + dy * dy <= r2 && allowed.at(ix, iy, iz))
                    out.at(ix, iy, iz) = 1;
            }
    }
    return out;
}

LabelVolume stamp_inserts(const LabelVolume& base,
                          const std::vector<BinaryMask>& insert_masks) {
    LabelVolume out = base;
    for (std::size_t k = 0; k < insert_masks.size(); ++k) {
        require_same_grid(base.grid, insert_masks[k].grid, "stamp_inserts");
        const int32_t lab = labels::kMetalBase + static_cast<int32_t>(k);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            if (insert_masks[k].data[i]) out.data[i] = lab;
    }
    return out;
}

OralScan synthesize_oral_scan(const LabelVolume& teeth,
                              const BinaryMask& metal) {
    require_same_grid(teeth.grid, metal.grid, "synthesize_oral_scan");
    const auto& g = teeth.grid;
    bool any_tooth = false;
    BinaryMask dentition(g, 0);
    for (std::size_t i = 0; i < teeth.data.size(); ++i) {
        const bool tooth = labels::is_tooth(teeth.data[i]);
        any_tooth |= tooth;
        dentition.data[i] = (tooth || metal.data[i]) ? 1 : 0;
    }
    if (!any_tooth) throw EmptyDentition("no tooth labels present");

    BinaryMask eroded = erode6(dentition, 1);
    OralScan scan;
    scan.surface = BinaryMask(g, 0);
    for (std::size_t i = 0; i < dentition.data.size(); ++i)
        scan.surface.data[i] = dentition.data[i] && !eroded.data[i];
    for (int iz = 0; iz < g.nz; ++iz)
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                if (scan.surface.at(ix, iy, iz))
                    scan.points.push_back(g.voxel_center(ix, iy, iz));
    return scan;
}

Volume MaterialVolume::mu_volume(double kev) const {
    std::vector<double> mu_of_label(label_to_index.size(), 0.0);
    for (std::size_t l = 0; l < label_to_index.size(); ++l)
        if (label_to_index[l] >= 0)
            mu_of_label[l] = mu_of_index(label_to_index[l], kev);
    Volume v(labels.grid, 0.0);
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        v.data[i] = mu_of_label[labels.data[i]];
    return v;
}

int MaterialVolume::material_index(int32_t label) const {
    if (label < 0 || label >= static_cast<int32_t>(label_to_index.size()) ||
        label_to_index[label] < 0)
        throw UnmappedLabel("label " + std::to_string(label));
    return label_to_index[label];
}

MaterialVolume assign_materials(const LabelVolume& lab_volume,
                                const MaterialTable& table,
                                const std::vector<InsertSpec>& inserts,
                                const std::map<int32_t, std::string>& base_mapping) {
    std::set<int32_t> present(lab_volume.data.begin(), lab_volume.data.end());
    MaterialVolume mv;
    mv.labels = lab_volume;
    mv.table = table;

    for (int32_t lab : present) {
        std::string mat;
        auto it = base_mapping.find(lab);
        if (it != base_mapping.end()) {
            mat = it->second;
        } else if (lab == labels::kAir) {
            mat = "air";
        } else if (labels::is_tooth(lab)) {
            mat = "enamel";
        } else if (lab == labels::kBone) {
            mat = "bone";
        } else if (lab == labels::kSoftTissue) {
            mat = "soft_tissue";
        } else if (labels::is_metal(lab)) {
            const std::size_t k = lab - labels::kMetalBase;
            if (k >= inserts.size())
                throw UnmappedLabel("metal label " + std::to_string(lab) +
                                    " has no insert");
            mat = inserts[k].material;
        } else {
            throw UnmappedLabel("label " + std::to_string(lab));
        }
        if (!table.has(mat)) throw UnknownMaterial(mat);
        mv.mapping[lab] = mat;
    }

    const int32_t max_label = *present.rbegin();
    mv.label_to_index.assign(max_label + 1, -1);
    for (const auto& kv : mv.mapping) {
        auto found = std::find(mv.index_to_material.begin(),
                               mv.index_to_material.end(), kv.second);
        int idx;
        if (found == mv.index_to_material.end()) {
            idx = static_cast<int>(mv.index_to_material.size());
            mv.index_to_material.push_back(kv.second);
        } else {
            idx = static_cast<int>(found - mv.index_to_material.begin());
        }
        mv.label_to_index[kv.first] = idx;
    }
    return mv;
}

}  // namespace cbmar
