// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/mar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "cbmar/io.hpp"

namespace cbmar {

BinaryMask extract_metal_mask(const Volume& volume, double threshold,
                              std::size_t min_component) {
    BinaryMask m(volume.grid, 0);
    for (std::size_t i = 0; i < volume.data.size(); ++i)
        m.data[i] = volume.data[i] >= threshold ? 1 : 0;
    return remove_small_components(m, min_component);
}

MetalTrace metal_trace(const BinaryMask& metal, const ScanGeometry& geom) {
    MetalTrace trace(geom);
    const int rows = geom.detector_rows, cols = geom.detector_cols;
    const auto n_views = static_cast<long>(geom.angles.size());
#pragma omp parallel for schedule(dynamic)
    for (long v = 0; v < n_views; ++v) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const auto [a, b] = pixel_ray(geom, v, r, c, metal.grid);
                double len = 0.0;
                for_each_voxel_on_segment(
                    metal.grid, a, b, [&](int ix, int iy, int iz, double l) {
                        if (metal.at(ix, iy, iz)) len += l;
                    });
                trace.at(v, r, c) = len > 1e-6 ? 1 : 0;
            }
    }
    return trace;
}

namespace {

// Linear fill of columns [i0, i1] between anchor values (a at i0-1, b at
// i1+1). A missing anchor (edge-touching run) is recovered by reflecting the
// row about that edge; the first valid reflected sample is the surviving
// anchor itself, so the interpolation degenerates to replicating it.
void fill_run(double* row, int i0, int i1, bool has_left, double a,
              bool has_right, double b) {
    if (!has_left && !has_right) return;
    if (!has_left) a = b;
    if (!has_right) b = a;
    const int gap = i1 - i0 + 2;
    for (int i = i0; i <= i1; ++i)
        row[i] = a + (b - a) * double(i - i0 + 1) / double(gap);
}

}  // namespace

Sinogram li_inpaint(const Sinogram& sino, const MetalTrace& trace) {
    if (sino.geometry.hash() != trace.geometry.hash())
        throw ShapeMismatch("sinogram and trace geometry differ");
    const int rows = sino.rows(), cols = sino.cols();
    const auto n_views = sino.n_views();

    // unrecoverable: a detector row covered by trace in every view
    for (int r = 0; r < rows; ++r) {
        bool all_views = true;
        for (std::size_t v = 0; v < n_views && all_views; ++v)
            for (int c = 0; c < cols; ++c)
                if (!trace.at(v, r, c)) {
                    all_views = false;
                    break;
                }
        if (all_views)
            throw AllTraceRow("detector row " + std::to_string(r) +
                              " is trace in every view");
    }

    Sinogram out = sino;
    std::vector<std::pair<std::size_t, int>> full_rows;
    for (std::size_t v = 0; v < n_views; ++v)
        for (int r = 0; r < rows; ++r) {
            int first_valid = -1;
            for (int c = 0; c < cols; ++c)
                if (!trace.at(v, r, c)) {
                    first_valid = c;
                    break;
                }
            if (first_valid < 0) {
                full_rows.emplace_back(v, r);
                continue;
            }
            double* row = &out.data[out.index(v, r, 0)];
            int c = 0;
            while (c < cols) {
                if (!trace.at(v, r, c)) {
                    ++c;
                    continue;
                }
                int end = c;
                while (end + 1 < cols && trace.at(v, r, end + 1)) ++end;
                const bool has_left = c > 0;
                const bool has_right = end + 1 < cols;
                fill_run(row, c, end, has_left, has_left ? row[c - 1] : 0.0,
                         has_right, has_right ? row[end + 1] : 0.0);
                c = end + 1;
            }
        }

    // rows fully covered in one view: interpolate each detector cell along
    // the view axis between the nearest untraced views (circularly)
    for (const auto& [v, r] : full_rows) {
        const auto nv = static_cast<long>(n_views);
        for (int c = 0; c < cols; ++c) {
            long back = 0, fwd = 0;
            for (back = 1; back < nv; ++back)
                if (!trace.at((v + n_views - back) % n_views, r, c)) break;
            for (fwd = 1; fwd < nv; ++fwd)
                if (!trace.at((v + fwd) % n_views, r, c)) break;
            if (back == nv && fwd == nv) continue;  // filled by the row pass below
            if (back == nv) {
                out.at(v, r, c) = sino.at((v + fwd) % n_views, r, c);
            } else if (fwd == nv) {
                out.at(v, r, c) = sino.at((v + n_views - back) % n_views, r, c);
            } else {
                const double a = sino.at((v + n_views - back) % n_views, r, c);
                const double b = sino.at((v + fwd) % n_views, r, c);
                out.at(v, r, c) =
                    a + (b - a) * double(back) / double(back + fwd);
            }
        }
        // cells traced in every view: fall back to row interpolation using
        // the view-interpolated values as anchors
        double* row = &out.data[out.index(v, r, 0)];
        auto cell_open = [&](int c) {
            for (std::size_t vv = 0; vv < n_views; ++vv)
                if (!trace.at(vv, r, c)) return true;
            return false;
        };
        int c = 0;
        while (c < cols) {
            if (cell_open(c)) {
                ++c;
                continue;
            }
            int end = c;
            while (end + 1 < cols && !cell_open(end + 1)) ++end;
            const bool has_left = c > 0;
            const bool has_right = end + 1 < cols;
            fill_run(row, c, end, has_left, has_left ? row[c - 1] : 0.0,
                     has_right, has_right ? row[end + 1] : 0.0);
            c = end + 1;
        }
    }

    // inpainted samples are estimates now, not starved measurements
    if (!out.starved.empty())
        for (std::size_t i = 0; i < out.data.size(); ++i)
            if (trace.data[i]) out.starved[i] = 0;
    return out;
}

Volume LiMarEnhancer::apply(const Volume& x, const BinaryMask&) const {
    const BinaryMask metal = extract_metal_mask(x, threshold_, min_component_);
    const MetalTrace trace = metal_trace(metal, measured_.geometry);
    const Sinogram fixed = li_inpaint(measured_, trace);
    return fdk_reconstruct(fixed, x.grid, options_);
}

ExternalEnhancer::ExternalEnhancer(std::string command, std::string workdir)
    : command_(std::move(command)), workdir_(std::move(workdir)) {}

Volume ExternalEnhancer::apply(const Volume& x,
                               const BinaryMask& oral_surface) const {
    namespace fs = std::filesystem;
    const fs::path dir(workdir_);
    std::error_code ec;
    fs::create_directories(dir, ec);
    const std::string in_vol = (dir / "enhancer_in.vol").string();
    const std::string in_oral = (dir / "enhancer_oral.mask").string();
    const std::string out_vol = (dir / "enhancer_out.vol").string();

    write_volume(x, in_vol);
    write_mask(oral_surface, in_oral);
    fs::remove(out_vol, ec);
    fs::remove(out_vol + ".raw", ec);

    const std::string cmdline =
        command_ + " \"" + in_vol + "\" \"" + in_oral + "\" \"" + out_vol + "\"";
    const int rc = std::system(cmdline.c_str());
    if (rc != 0)
        throw EnhancerFailed("command exited with status " +
                             std::to_string(rc) + ": " + command_);
    Volume out;
    try {
        out = read_volume(out_vol);
    } catch (const Error& e) {
        throw EnhancerFailed(std::string("output volume unreadable: ") +
                             e.what());
    }
    if (out.grid != x.grid)
        throw EnhancerFailed("output grid differs from input grid");
    return out;
}

Volume apply_enhancer(const Enhancer& e, const Volume& x,
                      const BinaryMask& oral_surface) {
    require_same_grid(x.grid, oral_surface.grid, "apply_enhancer");
    return e.apply(x, oral_surface);
}

EnhancerScore score_enhancer(const Volume& output, const Volume& reference,
                             const BinaryMask& tooth_pred,
                             const BinaryMask& tooth_ref,
                             double temperature_voxels) {
    require_same_grid(output.grid, reference.grid, "score_enhancer");
    require_same_grid(tooth_pred.grid, tooth_ref.grid, "score_enhancer");
    require_same_grid(output.grid, tooth_pred.grid, "score_enhancer");
    if (temperature_voxels <= 0.0)
        throw DegenerateInput("sigmoid temperature must be positive");

    EnhancerScore s;
    const std::size_t n = output.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = output.data[i] - reference.data[i];
        s.l2 += d * d;
    }
    s.l2 /= double(n);

    const std::vector<double> sd = signed_distance(tooth_pred);
    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double q = 1.0 / (1.0 + std::exp(-sd[i] / temperature_voxels));
        q = std::clamp(q, 1e-12, 1.0 - 1e-12);
        ce -= tooth_ref.data[i] ? std::log(q) : std::log1p(-q);
    }
    s.ce = ce / double(n);
    return s;
}

BinaryMask tooth_surface_mask(const Volume& volume, double mu_lo,
                              double mu_hi) {
    BinaryMask band(volume.grid, 0);
    for (std::size_t i = 0; i < volume.data.size(); ++i)
        band.data[i] =
            (volume.data[i] >= mu_lo && volume.data[i] <= mu_hi) ? 1 : 0;
    const BinaryMask inner = erode6(band, 1);
    for (std::size_t i = 0; i < band.data.size(); ++i)
        band.data[i] = band.data[i] && !inner.data[i];
    return band;
}

}  // namespace cbmar
