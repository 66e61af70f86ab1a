// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cbmar/geometry.hpp"
#include "cbmar/phantom.hpp"
#include "cbmar/voxels.hpp"

namespace cbmar {

enum class SinogramKind { Mono, Poly, Noisy };

// Projection data, view-major: data[(view * rows + row) * cols + col].
// Values are line integrals of attenuation (mm^-1 times mm, dimensionless).
// For noisy data, `starved` marks pixels whose photon count reached zero;
// their value is the ln(i0) ceiling rather than a measurement.
struct Sinogram {
    ScanGeometry geometry;
    SinogramKind kind = SinogramKind::Mono;
    std::vector<double> data;
    std::vector<uint8_t> starved;

    Sinogram() = default;
    explicit Sinogram(const ScanGeometry& g, SinogramKind k = SinogramKind::Mono)
        : geometry(g), kind(k),
          data(g.angles.size() * g.detector_rows * g.detector_cols, 0.0) {}

    std::size_t n_views() const { return geometry.angles.size(); }
    int rows() const { return geometry.detector_rows; }
    int cols() const { return geometry.detector_cols; }
    std::size_t index(std::size_t view, int row, int col) const {
        return (view * rows() + row) * cols() + col;
    }
    double& at(std::size_t view, int row, int col) {
        return data[index(view, row, col)];
    }
    double at(std::size_t view, int row, int col) const {
        return data[index(view, row, col)];
    }
};

// Walks the voxels crossed by the segment a + t (b - a), t in [0,1], calling
// f(ix, iy, iz, length_mm) for each crossed voxel with the chord length
// inside it. Exact intersection lengths (Siddon-style traversal).
template <typename F>
void for_each_voxel_on_segment(const VoxelGrid& g, const Vec3& a,
                               const Vec3& b, F&& f) {
    const Vec3 d = b - a;
    const double len = d.norm();
    if (len == 0.0) return;
    const Vec3 lo = g.min_corner();
    const double av[3] = {a.x, a.y, a.z};
    const double dv[3] = {d.x, d.y, d.z};
    const double lov[3] = {lo.x, lo.y, lo.z};
    const int nv[3] = {g.nx, g.ny, g.nz};

    double t0 = 0.0, t1 = 1.0;
    for (int ax = 0; ax < 3; ++ax) {
        const double hi = lov[ax] + nv[ax] * g.pitch;
        if (std::fabs(dv[ax]) < 1e-300) {
            if (av[ax] < lov[ax] || av[ax] > hi) return;
        } else {
            double ta = (lov[ax] - av[ax]) / dv[ax];
            double tb = (hi - av[ax]) / dv[ax];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
    }
    if (t0 >= t1) return;

    int idx[3], step[3];
    double t_next[3], dt[3];
    const double t_in = t0 + (t1 - t0) * 1e-12;
    for (int ax = 0; ax < 3; ++ax) {
        const double p = av[ax] + t_in * dv[ax];
        int i = static_cast<int>(std::floor((p - lov[ax]) / g.pitch));
        idx[ax] = std::clamp(i, 0, nv[ax] - 1);
        if (dv[ax] > 0.0) {
            step[ax] = 1;
            dt[ax] = g.pitch / dv[ax];
            t_next[ax] = (lov[ax] + (idx[ax] + 1) * g.pitch - av[ax]) / dv[ax];
        } else if (dv[ax] < 0.0) {
            step[ax] = -1;
            dt[ax] = -g.pitch / dv[ax];
            t_next[ax] = (lov[ax] + idx[ax] * g.pitch - av[ax]) / dv[ax];
        } else {
            step[ax] = 0;
            dt[ax] = t_next[ax] = std::numeric_limits<double>::infinity();
        }
    }

    double t = t0;
    while (t < t1) {
        int ax = 0;
        if (t_next[1] < t_next[ax]) ax = 1;
        if (t_next[2] < t_next[ax]) ax = 2;
        const double t_stop = std::min(t_next[ax], t1);
        if (t_stop > t) f(idx[0], idx[1], idx[2], (t_stop - t) * len);
        if (t_next[ax] >= t1) break;
        t = t_next[ax];
        idx[ax] += step[ax];
        if (idx[ax] < 0 || idx[ax] >= nv[ax]) break;
        t_next[ax] += dt[ax];
    }
}

// Segment from the source through detector pixel (row, col), extended past
// the virtual detector plane far enough to exit the grid (the plane passes
// through the isocenter, so half the grid lies beyond it).
std::pair<Vec3, Vec3> pixel_ray(const ScanGeometry& geo, std::size_t view,
                                int row, int col, const VoxelGrid& grid);

// Line integral of the attenuation volume over the segment [a, b].
double ray_integral(const Volume& mu, const Vec3& a, const Vec3& b);

// Single-energy forward projection: p = integral of mu along each pixel ray.
Sinogram forward_project_mono(const Volume& mu, const ScanGeometry& geo);

// Polychromatic forward projection: per-ray path lengths are decomposed by
// material, then p = -ln sum_E w_E exp(-sum_m L_m mu_m(E)). Evaluated in a
// log-sum-exp form so heavily attenuated rays stay finite.
Sinogram forward_project_poly(const MaterialVolume& mv,
                              const ScanGeometry& geo, const Spectrum& spec);

// Quantum plus electronic noise: N ~ Poisson(i0 exp(-p)); surviving pixels
// get p' = -ln(N / i0) + Normal(0, sigma); starved pixels (N = 0) are set to
// the ln(i0) ceiling and flagged. Each pixel draws from its own generator
// seeded by (seed, view, row, col), so results do not depend on scheduling.
Sinogram apply_noise(const Sinogram& sino, double i0, double sigma,
                     uint64_t seed);

// Extracts the window of `sino` matching `target`: a subset of views and a
// contiguous detector window on the same pixel lattice. Pitches and radius
// must match and every target view/pixel must align with a source one
// (WindowOutOfRange otherwise).
Sinogram subsample(const Sinogram& sino, const ScanGeometry& target);

}  // namespace cbmar
