// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cbmar/projector.hpp"

namespace cbmar {

// Redundancy weight for an offset detector: smooth 0..1 transition across the
// overlap band |u| <= d (d = overlap half-width), constructed so that
// w(u) + w(-u) = 1 holds exactly in floating point.
double offset_weight(double u, double overlap_halfwidth);

// Extends every detector row on the truncated sides by replicating the edge
// sample. Which sides are truncated follows from the detector offset: a
// positive offset leaves the negative-u side short (and vice versa); a
// symmetric detector is padded on both sides. The returned sinogram's
// geometry is widened accordingly so column coordinates stay consistent.
Sinogram pad_truncation(const Sinogram& sino, int pad_cols);

// Band-limited ramp kernel sample h[n], n may be negative.
double ramp_kernel_sample(int n, double pitch_u);

// Ramp filtering of one detector row: out[i] = pitch_u * sum_j h[i-j] row[j],
// evaluated by zero-padded FFT convolution (exact linear convolution).
std::vector<double> ramp_filter(const std::vector<double>& row, double pitch_u,
                                bool hann = false);

// Direct O(N^2) evaluation of the same convolution; the reference the fast
// path is tested against (plain ramp only).
std::vector<double> ramp_filter_direct(const std::vector<double>& row,
                                       double pitch_u);

enum class RedundancyWeight {
    Auto,    // Half when the detector is symmetric, Smooth otherwise
    Half,    // constant 1/2 (classic full-scan weighting)
    Smooth,  // offset_weight profile over the overlap band
};

struct FdkOptions {
    bool hann = false;
    double scale = 1.0;  // global calibration factor on the output
    RedundancyWeight weight = RedundancyWeight::Auto;
    int pad_override = -1;  // >= 0 forces the truncation pad width
};

// Weighted FDK reconstruction: pad, redundancy-weight, cosine-weight, ramp
// filter per row, then backproject with bilinear detector interpolation and
// R^2/U^2 distance weighting.
Volume fdk_reconstruct(const Sinogram& sino, const VoxelGrid& grid,
                       const FdkOptions& options = {});

}  // namespace cbmar
