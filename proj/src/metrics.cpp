// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cbmar {

double nmse(const Volume& x, const Volume& ref) {
    require_same_grid(x.grid, ref.grid, "nmse");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = double(x.data[i]) - double(ref.data[i]);
        num += d * d;
        den += double(ref.data[i]) * double(ref.data[i]);
    }
    if (den <= 0.0) throw ZeroReference("nmse reference volume is all zero");
    return num / den;
}

double psnr(const Volume& x, const Volume& ref, double peak) {
    require_same_grid(x.grid, ref.grid, "psnr");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = double(x.data[i]) - double(ref.data[i]);
        sum += d * d;
    }
    const double mse = sum / double(x.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(window);
    const double c = 0.5 * (window - 1);
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

double window_ssim(const double* x, const double* ref, int nx, int x0, int y0,
                   int wx, int wy, const std::vector<double>& kx,
                   const std::vector<double>& ky, double c1, double c2) {
    double mx = 0.0, mr = 0.0;
    for (int j = 0; j < wy; ++j)
        for (int i = 0; i < wx; ++i) {
            const double w = ky[j] * kx[i];
            mx += w * x[(y0 + j) * nx + (x0 + i)];
            mr += w * ref[(y0 + j) * nx + (x0 + i)];
        }
    double vx = 0.0, vr = 0.0, cov = 0.0;
    for (int j = 0; j < wy; ++j)
        for (int i = 0; i < wx; ++i) {
            const double w = ky[j] * kx[i];
            const double dx = x[(y0 + j) * nx + (x0 + i)] - mx;
            const double dr = ref[(y0 + j) * nx + (x0 + i)] - mr;
            vx += w * dx * dx;
            vr += w * dr * dr;
            cov += w * dx * dr;
        }
    return ((2.0 * mx * mr + c1) * (2.0 * cov + c2)) /
           ((mx * mx + mr * mr + c1) * (vx + vr + c2));
}

}  // namespace

double ssim_slice(const double* x, const double* ref, int nx, int ny,
                  const SsimParams& params) {
    double range = params.dynamic_range;
    if (range <= 0.0) {
        double lo = ref[0], hi = ref[0];
        for (int i = 0; i < nx * ny; ++i) {
            lo = std::min(lo, ref[i]);
            hi = std::max(hi, ref[i]);
        }
        range = std::max(hi - lo, 1e-12);
    }
    const double c1 = (params.k1 * range) * (params.k1 * range);
    const double c2 = (params.k2 * range) * (params.k2 * range);

    const int wx = std::min(params.window, nx);
    const int wy = std::min(params.window, ny);
    const auto kx = gaussian_kernel(wx, params.sigma);
    const auto ky = gaussian_kernel(wy, params.sigma);
    if (wx < params.window || wy < params.window) {
        return window_ssim(x, ref, nx, (nx - wx) / 2, (ny - wy) / 2, wx, wy,
                           kx, ky, c1, c2);
    }
    double sum = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + wy <= ny; ++y0)
        for (int x0 = 0; x0 + wx <= nx; ++x0) {
            sum += window_ssim(x, ref, nx, x0, y0, wx, wy, kx, ky, c1, c2);
            ++count;
        }
    return sum / count;
}

double ssim(const Volume& x, const Volume& ref, const SsimParams& params) {
    require_same_grid(x.grid, ref.grid, "ssim");
    SsimParams p = params;
    if (p.dynamic_range <= 0.0) {
        double lo = ref.data[0], hi = ref.data[0];
        for (double v : ref.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        p.dynamic_range = std::max(hi - lo, 1e-12);
    }
    const std::size_t slice = std::size_t(x.grid.nx) * x.grid.ny;
    double sum = 0.0;
    for (int z = 0; z < x.grid.nz; ++z)
        sum += ssim_slice(x.data.data() + z * slice,
                          ref.data.data() + z * slice, x.grid.nx, x.grid.ny,
                          p);
    return sum / x.grid.nz;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
    require_same_grid(a.grid, b.grid, "dice");
    std::size_t inter = 0, total = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        inter += (a.data[i] && b.data[i]);
        total += (a.data[i] != 0) + (b.data[i] != 0);
    }
    if (total == 0) return 1.0;
    return 2.0 * double(inter) / double(total);
}

}  // namespace cbmar
