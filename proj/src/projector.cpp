// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/projector.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cbmar {

std::pair<Vec3, Vec3> pixel_ray(const ScanGeometry& geo, std::size_t view,
                                int row, int col, const VoxelGrid& grid) {
    const double beta = geo.angles.at(view);
    const Vec3 src = geo.source_position(beta);
    const Vec3 det = geo.detector_point(beta, geo.col_u(col), geo.row_v(row));
    // the source-to-plane distance along the ray's in-plane normal is exactly
    // the source radius, so stretching by reach/R covers the far grid half
    const double reach = 0.5 * grid.pitch *
                             std::sqrt(double(grid.nx) * grid.nx +
                                       double(grid.ny) * grid.ny +
                                       double(grid.nz) * grid.nz) +
                         grid.origin.norm() + grid.pitch;
    const double s = 1.0 + reach / geo.source_radius;
    return {src, src + (det - src) * s};
}

double ray_integral(const Volume& mu, const Vec3& a, const Vec3& b) {
    double total = 0.0;
    for_each_voxel_on_segment(mu.grid, a, b,
                              [&](int ix, int iy, int iz, double len) {
                                  total += mu.at(ix, iy, iz) * len;
                              });
    return total;
}

Sinogram forward_project_mono(const Volume& mu, const ScanGeometry& geo) {
    Sinogram sino(geo, SinogramKind::Mono);
    const int rows = geo.detector_rows, cols = geo.detector_cols;
    const auto n_views = static_cast<long>(geo.angles.size());
#pragma omp parallel for schedule(dynamic)
    for (long v = 0; v < n_views; ++v) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const auto [a, b] = pixel_ray(geo, v, r, c, mu.grid);
                sino.at(v, r, c) = ray_integral(mu, a, b);
            }
    }
    return sino;
}

Sinogram forward_project_poly(const MaterialVolume& mv,
                              const ScanGeometry& geo, const Spectrum& spec) {
    spec.validate();
    const auto& grid = mv.labels.grid;
    const int n_mat = mv.n_materials();
    const std::size_t n_bins = spec.energy_kev.size();

    // per-voxel compact material index and per-material spectral attenuation
    std::vector<int16_t> midx(grid.size());
    for (std::size_t i = 0; i < midx.size(); ++i)
        midx[i] = static_cast<int16_t>(mv.label_to_index[mv.labels.data[i]]);
    std::vector<double> mu_table(n_mat * n_bins);
    for (int m = 0; m < n_mat; ++m)
        for (std::size_t e = 0; e < n_bins; ++e)
            mu_table[m * n_bins + e] = mv.mu_of_index(m, spec.energy_kev[e]);

    Sinogram sino(geo, SinogramKind::Poly);
    const int rows = geo.detector_rows, cols = geo.detector_cols;
    const auto n_views = static_cast<long>(geo.angles.size());
#pragma omp parallel for schedule(dynamic)
    for (long v = 0; v < n_views; ++v) {
        std::vector<double> path(n_mat);
        std::vector<double> m_e(n_bins);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                std::fill(path.begin(), path.end(), 0.0);
                const auto [a, b] = pixel_ray(geo, v, r, c, grid);
                for_each_voxel_on_segment(
                    grid, a, b, [&](int ix, int iy, int iz, double len) {
                        path[midx[grid.index(ix, iy, iz)]] += len;
                    });
                double m_min = std::numeric_limits<double>::infinity();
                for (std::size_t e = 0; e < n_bins; ++e) {
                    double m = 0.0;
                    for (int mat = 0; mat < n_mat; ++mat)
                        m += path[mat] * mu_table[mat * n_bins + e];
                    m_e[e] = m;
                    m_min = std::min(m_min, m);
                }
                double acc = 0.0;
                for (std::size_t e = 0; e < n_bins; ++e)
                    acc += spec.weight[e] * std::exp(m_min - m_e[e]);
                sino.at(v, r, c) = m_min - std::log(acc);
            }
    }
    return sino;
}

Sinogram apply_noise(const Sinogram& sino, double i0, double sigma,
                     uint64_t seed) {
    if (i0 <= 0.0) throw DegenerateInput("photon count i0 must be positive");
    Sinogram out = sino;
    out.kind = SinogramKind::Noisy;
    out.starved.assign(out.data.size(), 0);
    const int rows = sino.rows(), cols = sino.cols();
    const auto n_views = static_cast<long>(sino.n_views());
    const double ceiling = std::log(i0);
#pragma omp parallel for schedule(dynamic)
    for (long v = 0; v < n_views; ++v) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                std::mt19937_64 rng(mix_seed(seed, v, r, c));
                const double lambda = i0 * std::exp(-sino.at(v, r, c));
                std::poisson_distribution<long long> poisson(lambda);
                const long long n = poisson(rng);
                const std::size_t i = out.index(v, r, c);
                if (n <= 0) {
                    out.data[i] = ceiling;
                    out.starved[i] = 1;
                } else {
                    double p = -std::log(static_cast<double>(n) / i0);
                    if (sigma > 0.0) {
                        std::normal_distribution<double> gauss(0.0, sigma);
                        p += gauss(rng);
                    }
                    out.data[i] = p;
                }
            }
    }
    return out;
}

namespace {

// Integral col/row/view mappings from a target geometry into a source one.
struct WindowMap {
    std::vector<std::size_t> view_of;
    int col0 = 0, row0 = 0;
};

int aligned_shift(double offset_delta, int n_src, int n_dst, double pitch,
                  const char* axis) {
    const double k = 0.5 * (n_src - n_dst) + offset_delta / pitch;
    const double rounded = std::round(k);
    if (std::fabs(k - rounded) > 1e-9)
        throw WindowOutOfRange(std::string("detector ") + axis +
                               " window is not on the source pixel lattice");
    const int shift = static_cast<int>(rounded);
    if (shift < 0 || shift + n_dst > n_src)
        throw WindowOutOfRange(std::string("detector ") + axis +
                               " window exceeds the source panel");
    return shift;
}

WindowMap map_window(const ScanGeometry& src, const ScanGeometry& dst) {
    if (src.pixel_pitch_u != dst.pixel_pitch_u ||
        src.pixel_pitch_v != dst.pixel_pitch_v)
        throw WindowOutOfRange("pixel pitch differs");
    if (src.source_radius != dst.source_radius)
        throw WindowOutOfRange("source radius differs");
    WindowMap m;
    m.col0 = aligned_shift(dst.detector_offset_u - src.detector_offset_u,
                           src.detector_cols, dst.detector_cols,
                           src.pixel_pitch_u, "u");
    m.row0 = aligned_shift(0.0, src.detector_rows, dst.detector_rows,
                           src.pixel_pitch_v, "v");
    m.view_of.reserve(dst.angles.size());
    std::size_t cursor = 0;
    for (double beta : dst.angles) {
        while (cursor < src.angles.size() &&
               src.angles[cursor] < beta - 1e-12)
            ++cursor;
        if (cursor >= src.angles.size() ||
            std::fabs(src.angles[cursor] - beta) > 1e-12)
            throw WindowOutOfRange("view angle not present in the source scan");
        m.view_of.push_back(cursor);
    }
    return m;
}

}  // namespace

Sinogram subsample(const Sinogram& sino, const ScanGeometry& target) {
    const WindowMap m = map_window(sino.geometry, target);
    Sinogram out(target, sino.kind);
    if (!sino.starved.empty()) out.starved.assign(out.data.size(), 0);
    for (std::size_t v = 0; v < target.angles.size(); ++v)
        for (int r = 0; r < target.detector_rows; ++r)
            for (int c = 0; c < target.detector_cols; ++c) {
                const std::size_t si =
                    sino.index(m.view_of[v], m.row0 + r, m.col0 + c);
                out.at(v, r, c) = sino.data[si];
                if (!sino.starved.empty())
                    out.starved[out.index(v, r, c)] = sino.starved[si];
            }
    return out;
}

}  // namespace cbmar
