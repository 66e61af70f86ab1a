// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cbmar/voxels.hpp"

namespace cbmar {

// ||x - ref||^2 / ||ref||^2; throws ZeroReference for an all-zero reference.
double nmse(const Volume& x, const Volume& ref);

// 10*log10(peak^2 / MSE); +infinity when the volumes are identical.
double psnr(const Volume& x, const Volume& ref, double peak);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    // dynamic range; <= 0 means "take max(ref) - min(ref)"
    double dynamic_range = 0.0;
};

// Mean local SSIM of one row-major slice over all fully interior windows.
// Slices smaller than the window fall back to a single centered window with
// a truncated, renormalized Gaussian.
double ssim_slice(const double* x, const double* ref, int nx, int ny,
                  const SsimParams& params = {});

// Slice-wise SSIM averaged over axial (z) slices.
double ssim(const Volume& x, const Volume& ref,
            const SsimParams& params = {});

// 2|a&b| / (|a|+|b|); two empty masks count as a perfect match.
double dice(const BinaryMask& a, const BinaryMask& b);

}  // namespace cbmar
