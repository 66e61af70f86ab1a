// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/voxels.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace cbmar {

void require_same_grid(const VoxelGrid& a, const VoxelGrid& b,
                       const char* what) {
    if (a != b) throw GridMismatch(what);
}

std::size_t count_set(const BinaryMask& m) {
    std::size_t n = 0;
    for (uint8_t v : m.data) n += (v != 0);
    return n;
}

namespace {

const int kFaceNbr[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                            {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};

}  // namespace

BinaryMask erode6(const BinaryMask& m, int iterations) {
    BinaryMask cur = m;
    for (int it = 0; it < iterations; ++it) {
        BinaryMask next(cur.grid, 0);
        const auto& g = cur.grid;
        for (int iz = 0; iz < g.nz; ++iz)
            for (int iy = 0; iy < g.ny; ++iy)
                for (int ix = 0; ix < g.nx; ++ix) {
                    if (!cur.at(ix, iy, iz)) continue;
                    bool keep = true;
                    for (const auto& d : kFaceNbr) {
                        int jx = ix + d[0], jy = iy + d[1], jz = iz + d[2];
                        if (!g.contains(jx, jy, jz) || !cur.at(jx, jy, jz)) {
                            keep = false;
                            break;
                        }
                    }
                    if (keep) next.at(ix, iy, iz) = 1;
                }
        cur = std::move(next);
    }
    return cur;
}

BinaryMask dilate6(const BinaryMask& m, int iterations) {
    BinaryMask cur = m;
    for (int it = 0; it < iterations; ++it) {
        BinaryMask next = cur;
        const auto& g = cur.grid;
        for (int iz = 0; iz < g.nz; ++iz)
            for (int iy = 0; iy < g.ny; ++iy)
                for (int ix = 0; ix < g.nx; ++ix) {
                    if (!cur.at(ix, iy, iz)) continue;
                    for (const auto& d : kFaceNbr) {
                        int jx = ix + d[0], jy = iy + d[1], jz = iz + d[2];
                        if (g.contains(jx, jy, jz)) next.at(jx, jy, jz) = 1;
                    }
                }
        cur = std::move(next);
    }
    return cur;
}

LabelVolume connected_components6(const BinaryMask& m,
                                  std::vector<std::size_t>* counts) {
    const auto& g = m.grid;
    LabelVolume labels(g, 0);
    std::vector<std::size_t> sizes(1, 0);
    int32_t next_label = 1;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < m.data.size(); ++start) {
        if (!m.data[start] || labels.data[start]) continue;
        int32_t lab = next_label++;
        std::size_t n = 0;
        stack.push_back(start);
        labels.data[start] = lab;
        while (!stack.empty()) {
            std::size_t cur = stack.back();
            stack.pop_back();
            ++n;
            int ix = static_cast<int>(cur % g.nx);
            int iy = static_cast<int>((cur / g.nx) % g.ny);
            int iz = static_cast<int>(cur / (static_cast<std::size_t>(g.nx) * g.ny));
            for (const auto& d : kFaceNbr) {
                int jx = ix + d[0], jy = iy + d[1], jz = iz + d[2];
                if (!g.contains(jx, jy, jz)) continue;
                std::size_t j = g.index(jx, jy, jz);
                if (m.data[j] && !labels.data[j]) {
                    labels.data[j] = lab;
                    stack.push_back(j);
                }
            }
        }
        sizes.push_back(n);
    }
    sizes[0] = m.data.size() - count_set(m);
    if (counts) *counts = sizes;
    return labels;
}

BinaryMask remove_small_components(const BinaryMask& m,
                                   std::size_t min_voxels) {
    std::vector<std::size_t> counts;
    LabelVolume labels = connected_components6(m, &counts);
    BinaryMask out(m.grid, 0);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        int32_t lab = labels.data[i];
        if (lab > 0 && counts[lab] >= min_voxels) out.data[i] = 1;
    }
    return out;
}

BinaryMask exterior_region(const BinaryMask& blocked) {
    const auto& g = blocked.grid;
    BinaryMask ext(g, 0);
    std::vector<std::size_t> stack;
    auto try_seed = [&](int ix, int iy, int iz) {
        std::size_t i = g.index(ix, iy, iz);
        if (!blocked.data[i] && !ext.data[i]) {
            ext.data[i] = 1;
            stack.push_back(i);
        }
    };
    for (int iz = 0; iz < g.nz; ++iz)
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                if (ix == 0 || iy == 0 || iz == 0 || ix == g.nx - 1 ||
                    iy == g.ny - 1 || iz == g.nz - 1)
                    try_seed(ix, iy, iz);
    while (!stack.empty()) {
        std::size_t cur = stack.back();
        stack.pop_back();
        int ix = static_cast<int>(cur % g.nx);
        int iy = static_cast<int>((cur / g.nx) % g.ny);
        int iz = static_cast<int>(cur / (static_cast<std::size_t>(g.nx) * g.ny));
        for (const auto& d : kFaceNbr) {
            int jx = ix + d[0], jy = iy + d[1], jz = iz + d[2];
            if (!g.contains(jx, jy, jz)) continue;
            std::size_t j = g.index(jx, jy, jz);
            if (!blocked.data[j] && !ext.data[j]) {
                ext.data[j] = 1;
                stack.push_back(j);
            }
        }
    }
    return ext;
}

BinaryMask fill_interior(const BinaryMask& shell) {
    BinaryMask ext = exterior_region(shell);
    BinaryMask out(shell.grid, 0);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = ext.data[i] ? 0 : 1;
    return out;
}

namespace {

// 1D squared-distance lower envelope (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& zbuf) {
    const int n = static_cast<int>(f.size());
    d.resize(n);
    v.resize(n);
    zbuf.resize(n + 1);
    int k = 0;
    v[0] = 0;
    zbuf[0] = -std::numeric_limits<double>::infinity();
    zbuf[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            int p = v[k];
            s = ((f[q] + q * double(q)) - (f[p] + p * double(p))) / (2.0 * (q - p));
            if (s <= zbuf[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        zbuf[k] = s;
        zbuf[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (zbuf[k + 1] < q) ++k;
        double dq = q - double(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

std::vector<double> squared_distance_to(const BinaryMask& m) {
    const auto& g = m.grid;
    const double kFar = 1e12;
    std::vector<double> dist(m.data.size());
    for (std::size_t i = 0; i < m.data.size(); ++i)
        dist[i] = m.data[i] ? 0.0 : kFar;

    std::vector<double> line, out;
    std::vector<int> v;
    std::vector<double> zbuf;

    // x pass
    line.resize(g.nx);
    for (int iz = 0; iz < g.nz; ++iz)
        for (int iy = 0; iy < g.ny; ++iy) {
            for (int ix = 0; ix < g.nx; ++ix) line[ix] = dist[g.index(ix, iy, iz)];
            edt_1d(line, out, v, zbuf);
            for (int ix = 0; ix < g.nx; ++ix) dist[g.index(ix, iy, iz)] = out[ix];
        }
    // y pass
    line.resize(g.ny);
    for (int iz = 0; iz < g.nz; ++iz)
        for (int ix = 0; ix < g.nx; ++ix) {
            for (int iy = 0; iy < g.ny; ++iy) line[iy] = dist[g.index(ix, iy, iz)];
            edt_1d(line, out, v, zbuf);
            for (int iy = 0; iy < g.ny; ++iy) dist[g.index(ix, iy, iz)] = out[iy];
        }
    // z pass
    line.resize(g.nz);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            for (int iz = 0; iz < g.nz; ++iz) line[iz] = dist[g.index(ix, iy, iz)];
            edt_1d(line, out, v, zbuf);
            for (int iz = 0; iz < g.nz; ++iz) dist[g.index(ix, iy, iz)] = out[iz];
        }
    return dist;
}

std::vector<double> signed_distance(const BinaryMask& m) {
    BinaryMask inv(m.grid, 0);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        inv.data[i] = m.data[i] ? 0 : 1;
    std::vector<double> to_set = squared_distance_to(m);
    std::vector<double> to_clear = squared_distance_to(inv);
    std::vector<double> sd(m.data.size());
    for (std::size_t i = 0; i < sd.size(); ++i)
        sd[i] = m.data[i] ? std::sqrt(to_clear[i]) : -std::sqrt(to_set[i]);
    return sd;
}

}  // namespace cbmar
