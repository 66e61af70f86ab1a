// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/fdk.hpp"

#include <algorithm>
#include <cmath>

#include "cbmar/fft.hpp"

namespace cbmar {

double offset_weight(double u, double overlap_halfwidth) {
    const double d = overlap_halfwidth;
    if (d <= 0.0) throw DegenerateInput("overlap half-width must be positive");
    if (u <= -d) return 0.0;
    if (u >= d) return 1.0;
    // same curve as sin^2(pi (u+d) / (4 d)); this form makes w(u) + w(-u)
    // cancel exactly because sin is odd to the last ulp
    return 0.5 + 0.5 * std::sin(kPi * u / (2.0 * d));
}

Sinogram pad_truncation(const Sinogram& sino, int pad_cols) {
    if (pad_cols < 0) throw DegenerateInput("negative pad width");
    if (pad_cols == 0) return sino;
    const double off = sino.geometry.detector_offset_u;
    const int left = off >= 0.0 ? pad_cols : 0;
    const int right = off <= 0.0 ? pad_cols : 0;

    ScanGeometry g = sino.geometry;
    g.detector_cols += left + right;
    g.detector_offset_u += 0.5 * (right - left) * g.pixel_pitch_u;

    Sinogram out(g, sino.kind);
    if (!sino.starved.empty()) out.starved.assign(out.data.size(), 0);
    const int cols = sino.cols();
    for (std::size_t v = 0; v < sino.n_views(); ++v)
        for (int r = 0; r < sino.rows(); ++r)
            for (int c = 0; c < g.detector_cols; ++c) {
                const int src = std::clamp(c - left, 0, cols - 1);
                out.at(v, r, c) = sino.at(v, r, src);
                if (!sino.starved.empty())
                    out.starved[out.index(v, r, c)] =
                        sino.starved[sino.index(v, r, src)];
            }
    return out;
}

double ramp_kernel_sample(int n, double pitch_u) {
    if (n == 0) return 1.0 / (4.0 * pitch_u * pitch_u);
    if (n % 2 == 0) return 0.0;
    const double t = kPi * n * pitch_u;
    return -1.0 / (t * t);
}

std::vector<double> ramp_filter_direct(const std::vector<double>& row,
                                       double pitch_u) {
    const int n = static_cast<int>(row.size());
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += row[j] * ramp_kernel_sample(i - j, pitch_u);
        out[i] = pitch_u * acc;
    }
    return out;
}

std::vector<double> ramp_filter(const std::vector<double>& row, double pitch_u,
                                bool hann) {
    const std::size_t n = row.size();
    if (n < 2) throw DegenerateInput("ramp filter needs at least 2 samples");
    const std::size_t m = next_pow2(2 * n);

    std::vector<std::complex<double>> kern(m, 0.0), data(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        kern[i] = ramp_kernel_sample(static_cast<int>(i), pitch_u);
        data[i] = row[i];
    }
    for (std::size_t i = 1; i < n; ++i)
        kern[m - i] = ramp_kernel_sample(-static_cast<int>(i), pitch_u);

    fft_radix2(kern, false);
    fft_radix2(data, false);
    for (std::size_t i = 0; i < m; ++i) {
        data[i] *= kern[i];
        if (hann) data[i] *= 0.5 * (1.0 + std::cos(2.0 * kPi * i / m));
    }
    fft_radix2(data, true);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = pitch_u * data[i].real();
    return out;
}

namespace {

// Midpoint angular step around the circle (handles non-uniform view sets).
std::vector<double> view_weights(const std::vector<double>& angles) {
    const std::size_t n = angles.size();
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = 2.0 * kPi;
        return w;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double prev = k == 0 ? angles[n - 1] - 2.0 * kPi : angles[k - 1];
        const double next = k + 1 == n ? angles[0] + 2.0 * kPi : angles[k + 1];
        w[k] = 0.5 * (next - prev);
    }
    return w;
}

int auto_pad_cols(const Sinogram& sino, const VoxelGrid& grid) {
    const auto& g = sino.geometry;
    const Vec3 lo = grid.min_corner(), hi = grid.max_corner();
    const double r_xy = std::hypot(std::max(std::fabs(lo.x), std::fabs(hi.x)),
                                   std::max(std::fabs(lo.y), std::fabs(hi.y)));
    const double r = std::min(r_xy, 0.95 * g.source_radius);
    const double u_fov = g.source_radius * r /
                         std::sqrt(g.source_radius * g.source_radius - r * r);
    const double u_left = g.col_u(0) - 0.5 * g.pixel_pitch_u;
    const double u_right = g.col_u(g.detector_cols - 1) + 0.5 * g.pixel_pitch_u;
    const double need_left = -u_fov - u_left;    // >0: left side truncated
    const double need_right = u_fov - u_right;   // >0: right side truncated
    const double need = std::max({need_left, need_right, 0.0});
    return static_cast<int>(std::ceil(need / g.pixel_pitch_u));
}

}  // namespace

Volume fdk_reconstruct(const Sinogram& sino, const VoxelGrid& grid,
                       const FdkOptions& options) {
    const ScanGeometry& geo = sino.geometry;
    geo.validate();
    if (grid.nx < 1 || grid.ny < 1 || grid.nz < 1 || grid.pitch <= 0.0)
        throw DegenerateInput("invalid reconstruction grid");

    const double R = geo.source_radius;
    const double panel_half = 0.5 * geo.detector_cols * geo.pixel_pitch_u;
    const double overlap = panel_half - std::fabs(geo.detector_offset_u);
    RedundancyWeight mode = options.weight;
    if (mode == RedundancyWeight::Auto)
        mode = geo.detector_offset_u == 0.0 ? RedundancyWeight::Half
                                            : RedundancyWeight::Smooth;
    if (mode == RedundancyWeight::Smooth && overlap <= 0.0)
        throw DegenerateInput("detector offset leaves no overlap band");

    const int pad = options.pad_override >= 0 ? options.pad_override
                                              : auto_pad_cols(sino, grid);
    const Sinogram padded = pad_truncation(sino, pad);
    const ScanGeometry& pg = padded.geometry;
    const int cols = pg.detector_cols, rows = pg.detector_rows;
    const auto n_views = static_cast<long>(pg.angles.size());

    // per-row pipeline: redundancy weight, cone-beam cosine, ramp filter
    std::vector<double> filtered(padded.data.size());
    std::vector<double> u_of(cols), w_of(cols);
    for (int c = 0; c < cols; ++c) {
        u_of[c] = pg.col_u(c);
        w_of[c] = mode == RedundancyWeight::Half
                      ? 0.5
                      : offset_weight(u_of[c], overlap);
    }
#pragma omp parallel for schedule(dynamic)
    for (long v = 0; v < n_views; ++v) {
        std::vector<double> rowbuf(cols);
        for (int r = 0; r < rows; ++r) {
            const double vv = pg.row_v(r);
            for (int c = 0; c < cols; ++c) {
                const double cosw =
                    R / std::sqrt(R * R + u_of[c] * u_of[c] + vv * vv);
                rowbuf[c] = padded.at(v, r, c) * w_of[c] * cosw;
            }
            const std::vector<double> f =
                ramp_filter(rowbuf, pg.pixel_pitch_u, options.hann);
            std::copy(f.begin(), f.end(),
                      filtered.begin() + padded.index(v, r, 0));
        }
    }

    const std::vector<double> dbeta = view_weights(pg.angles);
    std::vector<double> cosb(n_views), sinb(n_views);
    for (long v = 0; v < n_views; ++v) {
        cosb[v] = std::cos(pg.angles[v]);
        sinb[v] = std::sin(pg.angles[v]);
    }

    Volume out(grid, 0.0);
    const double inv_pu = 1.0 / pg.pixel_pitch_u;
    const double inv_pv = 1.0 / pg.pixel_pitch_v;
    const double col_base = 0.5 * (cols - 1) - pg.detector_offset_u * inv_pu;
    const double row_base = 0.5 * (rows - 1);
#pragma omp parallel for schedule(dynamic)
    for (long iz = 0; iz < grid.nz; ++iz) {
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const Vec3 p = grid.voxel_center(ix, iy, static_cast<int>(iz));
                double acc = 0.0;
                for (long v = 0; v < n_views; ++v) {
                    const double U = R - p.x * sinb[v] + p.y * cosb[v];
                    if (U < 1e-6) continue;
                    const double s = R / U;
                    const double u = (p.x * cosb[v] + p.y * sinb[v]) * s;
                    const double vv = p.z * s;
                    const double cu = u * inv_pu + col_base;
                    const double rv = vv * inv_pv + row_base;
                    const int c0 = static_cast<int>(std::floor(cu));
                    const int r0 = static_cast<int>(std::floor(rv));
                    if (c0 < -1 || c0 > cols - 1 || r0 < -1 || r0 > rows - 1)
                        continue;
                    const double fc = cu - c0, fr = rv - r0;
                    auto sample = [&](int rr, int cc) -> double {
                        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols)
                            return 0.0;
                        return filtered[padded.index(v, rr, cc)];
                    };
                    const double interp =
                        (1.0 - fr) * ((1.0 - fc) * sample(r0, c0) +
                                      fc * sample(r0, c0 + 1)) +
                        fr * ((1.0 - fc) * sample(r0 + 1, c0) +
                              fc * sample(r0 + 1, c0 + 1));
                    acc += dbeta[v] * s * s * interp;
                }
                out.at(ix, iy, static_cast<int>(iz)) = options.scale * acc;
            }
    }
    return out;
}

}  // namespace cbmar
