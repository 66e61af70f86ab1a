// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cbmar/fdk.hpp"
#include "cbmar/projector.hpp"

namespace cbmar {

// Binary mask over the sinogram domain marking samples whose rays cross
// metal.
struct MetalTrace {
    ScanGeometry geometry;
    std::vector<uint8_t> data;

    MetalTrace() = default;
    explicit MetalTrace(const ScanGeometry& g)
        : geometry(g),
          data(g.angles.size() * g.detector_rows * g.detector_cols, 0) {}

    std::size_t n_views() const { return geometry.angles.size(); }
    int rows() const { return geometry.detector_rows; }
    int cols() const { return geometry.detector_cols; }
    std::size_t index(std::size_t view, int row, int col) const {
        return (view * rows() + row) * cols() + col;
    }
    uint8_t& at(std::size_t view, int row, int col) {
        return data[index(view, row, col)];
    }
    uint8_t at(std::size_t view, int row, int col) const {
        return data[index(view, row, col)];
    }
};

// Voxels at or above the attenuation threshold, cleaned of connected
// components smaller than min_component voxels.
BinaryMask extract_metal_mask(const Volume& volume, double threshold = 0.3,
                              std::size_t min_component = 8);

// Sinogram samples whose metal path length exceeds 1e-6 mm.
MetalTrace metal_trace(const BinaryMask& metal, const ScanGeometry& geom);

// Replaces trace samples row by row with linear interpolation between the
// nearest valid flanking samples. Runs touching a detector edge reflect the
// row about that edge to recover the missing anchor. Rows that are entirely
// trace in one view borrow values from the nearest untraced views of the
// same detector cell; if a row is trace in every view the data is
// unrecoverable (AllTraceRow).
Sinogram li_inpaint(const Sinogram& sino, const MetalTrace& trace);

// Image-domain enhancement step: volume plus oral-scan surface prior in,
// volume out. Stands in for a trained enhancement model.
struct Enhancer {
    virtual ~Enhancer() = default;
    virtual std::string id() const = 0;
    virtual Volume apply(const Volume& x, const BinaryMask& oral_surface) const = 0;
};

struct IdentityEnhancer final : Enhancer {
    std::string id() const override { return "identity"; }
    Volume apply(const Volume& x, const BinaryMask&) const override {
        return x;
    }
};

// Classical baseline: extract metal from the input volume, trace it, inpaint
// the measured sinogram and reconstruct again.
class LiMarEnhancer final : public Enhancer {
  public:
    LiMarEnhancer(Sinogram measured, double metal_threshold = 0.3,
                  std::size_t min_component = 8, FdkOptions options = {})
        : measured_(std::move(measured)), threshold_(metal_threshold),
          min_component_(min_component), options_(options) {}

    std::string id() const override { return "li"; }
    Volume apply(const Volume& x, const BinaryMask& oral_surface) const override;

  private:
    Sinogram measured_;
    double threshold_;
    std::size_t min_component_;
    FdkOptions options_;
};

// Adapter for a user-provided executable, invoked as
//   command <input_volume> <input_oral_mask> <output_volume>
// with files in the toolkit volume format. Nonzero exit or missing output
// raises EnhancerFailed.
class ExternalEnhancer final : public Enhancer {
  public:
    explicit ExternalEnhancer(std::string command, std::string workdir = ".");

    std::string id() const override { return "external:" + command_; }
    Volume apply(const Volume& x, const BinaryMask& oral_surface) const override;

  private:
    std::string command_;
    std::string workdir_;
};

// Runs the enhancer after checking that the grids agree (GridMismatch).
Volume apply_enhancer(const Enhancer& e, const Volume& x,
                      const BinaryMask& oral_surface);

struct EnhancerScore {
    double l2 = 0.0;  // mean squared voxel error
    double ce = 0.0;  // binary cross-entropy of the softened tooth mask
};

// l2 term: mean of (output - reference)^2. ce term: the predicted tooth mask
// is softened to probabilities with a signed-distance sigmoid (temperature in
// voxels) and scored against the reference mask with binary cross-entropy.
EnhancerScore score_enhancer(const Volume& output, const Volume& reference,
                             const BinaryMask& tooth_pred,
                             const BinaryMask& tooth_ref,
                             double temperature_voxels = 1.0);

// Tooth-surface surrogate: attenuation band threshold, then the one-voxel
// boundary shell of the resulting mask.
BinaryMask tooth_surface_mask(const Volume& volume, double mu_lo,
                              double mu_hi);

}  // namespace cbmar
