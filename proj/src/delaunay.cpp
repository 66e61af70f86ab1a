// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

namespace cbmar {

namespace {

// double-double arithmetic, enough precision to settle the predicate signs
// the plain double evaluation cannot
struct DD {
    double hi = 0.0, lo = 0.0;
};

inline DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DD quick_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline DD dd_add(const DD& a, const DD& b) {
    DD s = two_sum(a.hi, b.hi);
    return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline DD dd_sub(const DD& a, const DD& b) {
    return dd_add(a, {-b.hi, -b.lo});
}

inline DD dd_mul(const DD& a, const DD& b) {
    DD p = two_prod(a.hi, b.hi);
    return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline DD dd_diff(double a, double b) { return two_sum(a, -b); }  // exact

inline DD dd_det2(const DD& a, const DD& b, const DD& c, const DD& d) {
    return dd_sub(dd_mul(a, d), dd_mul(b, c));
}

inline DD dd_det3(const DD m[3][3]) {
    DD det = dd_mul(m[0][0], dd_det2(m[1][1], m[1][2], m[2][1], m[2][2]));
    det = dd_sub(det,
                 dd_mul(m[0][1], dd_det2(m[1][0], m[1][2], m[2][0], m[2][2])));
    return dd_add(
        det, dd_mul(m[0][2], dd_det2(m[1][0], m[1][1], m[2][0], m[2][1])));
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

constexpr double kDoubleFilter = 1e-13;
constexpr double kDdFilter = 1e-28;

}  // namespace

int sign_orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const double m[3][3] = {{b.x - a.x, b.y - a.y, b.z - a.z},
                            {c.x - a.x, c.y - a.y, c.z - a.z},
                            {d.x - a.x, d.y - a.y, d.z - a.z}};
    auto det2 = [](double p, double q, double r, double s) {
        return p * s - q * r;
    };
    const double det = m[0][0] * det2(m[1][1], m[1][2], m[2][1], m[2][2]) -
                       m[0][1] * det2(m[1][0], m[1][2], m[2][0], m[2][2]) +
                       m[0][2] * det2(m[1][0], m[1][1], m[2][0], m[2][1]);
    auto abs2 = [](double p, double q, double r, double s) {
        return std::fabs(p * s) + std::fabs(q * r);
    };
    const double bound =
        (std::fabs(m[0][0]) * abs2(m[1][1], m[1][2], m[2][1], m[2][2]) +
         std::fabs(m[0][1]) * abs2(m[1][0], m[1][2], m[2][0], m[2][2]) +
         std::fabs(m[0][2]) * abs2(m[1][0], m[1][1], m[2][0], m[2][1])) *
        kDoubleFilter;
    if (std::fabs(det) > bound) return sign_of(det);

    const double* av = &a.x;
    const double* rows[3] = {&b.x, &c.x, &d.x};
    DD dm[3][3];
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            dm[i][j] = dd_diff(rows[i][j], av[j]);
            scale = std::max(scale, std::fabs(dm[i][j].hi));
        }
    const DD dd = dd_det3(dm);
    if (std::fabs(dd.hi) > scale * scale * scale * kDdFilter)
        return sign_of(dd.hi);
    return 0;
}

int sign_insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                  const Vec3& p) {
    const Vec3* q[4] = {&a, &b, &c, &d};
    double r[4][3], w[4];
    for (int i = 0; i < 4; ++i) {
        r[i][0] = q[i]->x - p.x;
        r[i][1] = q[i]->y - p.y;
        r[i][2] = q[i]->z - p.z;
        w[i] = r[i][0] * r[i][0] + r[i][1] * r[i][1] + r[i][2] * r[i][2];
    }
    auto det3 = [&](int i0, int i1, int i2) {
        return r[i0][0] * (r[i1][1] * r[i2][2] - r[i1][2] * r[i2][1]) -
               r[i0][1] * (r[i1][0] * r[i2][2] - r[i1][2] * r[i2][0]) +
               r[i0][2] * (r[i1][0] * r[i2][1] - r[i1][1] * r[i2][0]);
    };
    auto abs3 = [&](int i0, int i1, int i2) {
        return std::fabs(r[i0][0]) * (std::fabs(r[i1][1] * r[i2][2]) +
                                      std::fabs(r[i1][2] * r[i2][1])) +
               std::fabs(r[i0][1]) * (std::fabs(r[i1][0] * r[i2][2]) +
                                      std::fabs(r[i1][2] * r[i2][0])) +
               std::fabs(r[i0][2]) * (std::fabs(r[i1][0] * r[i2][1]) +
                                      std::fabs(r[i1][1] * r[i2][0]));
    };
    const double det = -w[0] * det3(1, 2, 3) + w[1] * det3(0, 2, 3) -
                       w[2] * det3(0, 1, 3) + w[3] * det3(0, 1, 2);
    const double bound = (w[0] * abs3(1, 2, 3) + w[1] * abs3(0, 2, 3) +
                          w[2] * abs3(0, 1, 3) + w[3] * abs3(0, 1, 2)) *
                         kDoubleFilter;
    if (std::fabs(det) > bound) return sign_of(det);

    DD dr[4][3], dw[4];
    double scale = 0.0;
    const double* pv = &p.x;
    for (int i = 0; i < 4; ++i) {
        const double* qv = &q[i]->x;
        DD s{0.0, 0.0};
        for (int j = 0; j < 3; ++j) {
            dr[i][j] = dd_diff(qv[j], pv[j]);
            s = dd_add(s, dd_mul(dr[i][j], dr[i][j]));
            scale = std::max(scale, std::fabs(dr[i][j].hi));
        }
        dw[i] = s;
    }
    auto dd_minor = [&](int i0, int i1, int i2) {
        DD m[3][3];
        const int rows[3] = {i0, i1, i2};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = dr[rows[i]][j];
        return dd_det3(m);
    };
    DD dd = dd_mul({-1.0, 0.0}, dd_mul(dw[0], dd_minor(1, 2, 3)));
    dd = dd_add(dd, dd_mul(dw[1], dd_minor(0, 2, 3)));
    dd = dd_sub(dd, dd_mul(dw[2], dd_minor(0, 1, 3)));
    dd = dd_add(dd, dd_mul(dw[3], dd_minor(0, 1, 2)));
    const double s5 = scale * scale * scale * scale * scale;
    if (std::fabs(dd.hi) > s5 * kDdFilter) return sign_of(dd.hi);
    return 0;
}

namespace {

// Face opposite slot s of tet (v0..v3), ordered so its normal points away
// from the tet when the tet is positively oriented.
constexpr int kFaceOrder[4][3] = {{1, 2, 3}, {2, 0, 3}, {0, 1, 3}, {1, 0, 2}};

int slot_of(const Delaunay3::Tet& t, int neighbor_id) {
    for (int s = 0; s < 4; ++s)
        if (t.nbr[s] == neighbor_id) return s;
    return -1;
}

int inf_slot(const Delaunay3::Tet& t) {
    for (int s = 0; s < 4; ++s)
        if (t.v[s] < 0) return s;
    return -1;
}

uint64_t cloud_hash(const std::vector<Vec3>& pts) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h ^= bits;
        h *= 0x100000001b3ULL;
    };
    for (const auto& p : pts) {
        mix(p.x);
        mix(p.y);
        mix(p.z);
    }
    return h;
}

}  // namespace

bool Delaunay3::conflict(int tet, int pi) const {
    const Tet& t = tets_[tet];
    const Vec3& p = working_[pi];
    const int is = inf_slot(t);
    if (is < 0)
        return sign_insphere(working_[t.v[0]], working_[t.v[1]],
                             working_[t.v[2]], working_[t.v[3]], p) < 0;
    const Vec3& x = working_[t.v[kFaceOrder[is][0]]];
    const Vec3& y = working_[t.v[kFaceOrder[is][1]]];
    const Vec3& z = working_[t.v[kFaceOrder[is][2]]];
    const int s = sign_orient3d(x, y, z, p);
    if (s < 0) return true;
    if (s > 0) return false;
    // point on the hull-face plane: the infinite cell joins the conflict
    // region exactly when the finite cell behind the face does
    const int fin = t.nbr[is];
    if (fin < 0 || inf_slot(tets_[fin]) >= 0) return false;
    return conflict(fin, pi);
}

bool Delaunay3::locate_conflict(int pi, int& tet_out) const {
    int cur = last_tet_;
    if (cur < 0 || cur >= static_cast<int>(tets_.size()) || !tets_[cur].alive)
        cur = -1;
    if (cur >= 0) {
        const std::size_t limit = 4 * tets_.size() + 64;
        for (std::size_t step = 0; step < limit; ++step) {
            if (conflict(cur, pi)) {
                tet_out = cur;
                return true;
            }
            const Tet& t = tets_[cur];
            const int is = inf_slot(t);
            if (is >= 0) {
                cur = t.nbr[is];
                continue;
            }
            int next = -1;
            for (int k = 0; k < 4; ++k) {
                const int s = static_cast<int>((step + k) % 4);
                const Vec3& x = working_[t.v[kFaceOrder[s][0]]];
                const Vec3& y = working_[t.v[kFaceOrder[s][1]]];
                const Vec3& z = working_[t.v[kFaceOrder[s][2]]];
                if (sign_orient3d(x, y, z, working_[pi]) < 0) {
                    next = t.nbr[s];
                    break;
                }
            }
            if (next < 0) break;
            cur = next;
        }
    }
    // the walk got stuck (degenerate position); fall back to a full scan
    for (int i = 0; i < static_cast<int>(tets_.size()); ++i)
        if (tets_[i].alive && conflict(i, pi)) {
            tet_out = i;
            return true;
        }
    return false;
}

bool Delaunay3::insert_point(int pi) {
    int t0 = -1;
    if (!locate_conflict(pi, t0)) return false;

    // grow the conflict region by BFS
    if (mark_.size() < tets_.size()) mark_.resize(tets_.size(), 0);
    ++stamp_;
    std::vector<int> region{t0};
    mark_[t0] = stamp_;
    struct Boundary {
        int live;
        int slot;  // slot of the dead neighbor inside `live`
    };
    std::vector<Boundary> boundary;
    for (std::size_t i = 0; i < region.size(); ++i) {
        const int ti = region[i];
        for (int s = 0; s < 4; ++s) {
            const int n = tets_[ti].nbr[s];
            if (n < 0) return false;
            if (mark_[n] == stamp_) continue;
            if (conflict(n, pi)) {
                mark_[n] = stamp_;
                region.push_back(n);
            } else {
                const int back = slot_of(tets_[n], ti);
                if (back < 0) return false;
                boundary.push_back({n, back});
            }
        }
    }
    // a valid cavity is a topological ball with at least 4 boundary faces
    if (boundary.size() < 4) return false;

    std::vector<int> fresh;
    fresh.reserve(boundary.size());
    std::map<std::pair<int, int>, std::pair<int, int>> edge_glue;
    for (const Boundary& bf : boundary) {
        const int f[3] = {tets_[bf.live].v[kFaceOrder[bf.slot][0]],
                          tets_[bf.live].v[kFaceOrder[bf.slot][1]],
                          tets_[bf.live].v[kFaceOrder[bf.slot][2]]};
        if (f[0] >= 0 && f[1] >= 0 && f[2] >= 0) {
            if (sign_orient3d(working_[f[0]], working_[f[1]], working_[f[2]],
                              working_[pi]) <= 0)
                return false;  // flat cell, cavity unusable
        }
        const int id = static_cast<int>(tets_.size());
        tets_.push_back(Tet{{f[0], f[1], f[2], pi}, {-1, -1, -1, bf.live}, true});
        mark_.push_back(0);
        tets_[bf.live].nbr[bf.slot] = id;
        fresh.push_back(id);

        // glue the three faces that contain the new point via their opposite
        // edge; each edge appears in exactly two boundary faces
        const int edges[3][2] = {{f[1], f[2]}, {f[0], f[2]}, {f[0], f[1]}};
        for (int s = 0; s < 3; ++s) {
            std::pair<int, int> key{std::min(edges[s][0], edges[s][1]),
                                    std::max(edges[s][0], edges[s][1])};
            auto it = edge_glue.find(key);
            if (it == edge_glue.end()) {
                edge_glue.emplace(key, std::make_pair(id, s));
            } else {
                if (it->second.first < 0) return false;  // third occurrence
                tets_[id].nbr[s] = it->second.first;
                tets_[it->second.first].nbr[it->second.second] = id;
                it->second.first = -1;
            }
        }
    }
    for (const auto& kv : edge_glue)
        if (kv.second.first >= 0) return false;  // unmatched boundary edge
    for (int ti : region) tets_[ti].alive = false;
    last_tet_ = fresh.front();
    return true;
}

bool Delaunay3::validate() const {
    std::set<int> seen;
    for (int i = 0; i < static_cast<int>(tets_.size()); ++i) {
        const Tet& t = tets_[i];
        if (!t.alive) continue;
        for (int s = 0; s < 4; ++s) {
            if (t.v[s] >= 0) seen.insert(t.v[s]);
            const int n = t.nbr[s];
            if (n < 0 || n >= static_cast<int>(tets_.size()) ||
                !tets_[n].alive)
                return false;
            if (slot_of(tets_[n], i) < 0) return false;
        }
        const int is = inf_slot(t);
        if (is < 0) {
            if (sign_orient3d(working_[t.v[0]], working_[t.v[1]],
                              working_[t.v[2]], working_[t.v[3]]) <= 0)
                return false;
            // strict local Delaunay: no neighbor apex strictly inside
            for (int s = 0; s < 4; ++s) {
                const Tet& n = tets_[t.nbr[s]];
                const int apex = n.v[slot_of(n, i)];
                if (apex < 0) continue;
                if (sign_insphere(working_[t.v[0]], working_[t.v[1]],
                                  working_[t.v[2]], working_[t.v[3]],
                                  working_[apex]) < 0)
                    return false;
            }
        } else {
            // hull face must keep the interior on its positive side
            const Tet& fin = tets_[t.nbr[is]];
            if (inf_slot(fin) >= 0) return false;
            const int apex = fin.v[slot_of(fin, i)];
            if (apex < 0) return false;
            if (sign_orient3d(working_[t.v[kFaceOrder[is][0]]],
                              working_[t.v[kFaceOrder[is][1]]],
                              working_[t.v[kFaceOrder[is][2]]],
                              working_[apex]) < 0)
                return false;
        }
    }
    return seen.size() == working_.size();
}

bool Delaunay3::try_build(const std::vector<Vec3>& pts) {
    working_ = pts;
    tets_.clear();
    mark_.clear();
    stamp_ = 0;
    last_tet_ = 0;
    const int n = static_cast<int>(pts.size());
    if (n < 4) return false;

    // initial simplex: four affinely independent points
    double diag = 0.0;
    {
        Vec3 lo = pts[0], hi = pts[0];
        for (const auto& p : pts) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        diag = (hi - lo).norm();
    }
    if (diag == 0.0) return false;
    int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
    for (int j = 1; j < n && i1 < 0; ++j)
        if ((pts[j] - pts[i0]).norm2() > 0.0) i1 = j;
    if (i1 < 0) return false;
    const double area_tol = 1e-12 * diag * diag;
    for (int j = i1 + 1; j < n && i2 < 0; ++j)
        if ((pts[i1] - pts[i0]).cross(pts[j] - pts[i0]).norm() > area_tol)
            i2 = j;
    if (i2 < 0) return false;
    for (int j = 1; j < n && i3 < 0; ++j) {
        if (j == i1 || j == i2) continue;
        const int s = sign_orient3d(pts[i0], pts[i1], pts[i2], pts[j]);
        if (s == 0) continue;
        if (s < 0) std::swap(i1, i2);
        i3 = j;
    }
    if (i3 < 0) return false;

    tets_.push_back(Tet{{i0, i1, i2, i3}, {-1, -1, -1, -1}, true});
    for (int s = 0; s < 4; ++s) {
        const Tet& t0 = tets_[0];
        const int id = static_cast<int>(tets_.size());
        tets_.push_back(Tet{{t0.v[kFaceOrder[s][0]], t0.v[kFaceOrder[s][1]],
                             t0.v[kFaceOrder[s][2]], -1},
                            {-1, -1, -1, 0},
                            true});
        tets_[0].nbr[s] = id;
    }
    // glue the infinite cells to each other through their -1 faces
    std::map<std::pair<int, int>, std::pair<int, int>> glue;
    for (int i = 1; i <= 4; ++i)
        for (int s = 0; s < 3; ++s) {
            // face opposite slot s of tet i contains -1; key on its finite edge
            int e[2], k = 0;
            for (int m = 0; m < 3; ++m) {
                const int vv = tets_[i].v[kFaceOrder[s][m]];
                if (vv >= 0) e[k++] = vv;
            }
            if (k != 2) continue;
            std::pair<int, int> key{std::min(e[0], e[1]), std::max(e[0], e[1])};
            auto it = glue.find(key);
            if (it == glue.end()) {
                glue.emplace(key, std::make_pair(i, s));
            } else {
                tets_[i].nbr[s] = it->second.first;
                tets_[it->second.first].nbr[it->second.second] = i;
            }
        }
    mark_.assign(tets_.size(), 0);

    for (int j = 1; j < n; ++j) {
        if (j == i1 || j == i2 || j == i3) continue;
        if (!insert_point(j)) return false;
    }
    return validate();
}

Delaunay3 Delaunay3::build(const std::vector<Vec3>& points) {
    Delaunay3 d;
    d.points_ = points;
    if (d.try_build(points)) return d;

    Vec3 lo = points.empty() ? Vec3{} : points[0], hi = lo;
    for (const auto& p : points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const double diag = (hi - lo).norm();
    // jitter may break ties, never invent extent
    if (diag == 0.0)
        throw DegenerateInput("point cloud has zero extent");
    const uint64_t seed = cloud_hash(points);
    for (int attempt = 0; attempt < 3; ++attempt) {
        const double mag = 1e-7 * diag * std::pow(10.0, attempt);
        std::vector<Vec3> jittered(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto u = [&](int axis) {
                const uint64_t h = splitmix64(seed ^ (i * 3 + axis + 1) ^
                                              (uint64_t(attempt) << 56));
                return (double(h >> 11) * 0x1p-53 * 2.0 - 1.0) * mag;
            };
            jittered[i] = points[i] + Vec3{u(0), u(1), u(2)};
        }
        if (d.try_build(jittered)) {
            d.used_jitter_ = true;
            return d;
        }
    }
    throw DegenerateInput("point cloud defeats Delaunay construction");
}

std::vector<std::array<int, 3>> Delaunay3::finite_faces() const {
    std::vector<std::array<int, 3>> faces;
    for (const auto& t : tets_) {
        if (!t.alive || inf_slot(t) >= 0) continue;
        for (int s = 0; s < 4; ++s) {
            std::array<int, 3> f{t.v[kFaceOrder[s][0]], t.v[kFaceOrder[s][1]],
                                 t.v[kFaceOrder[s][2]]};
            std::sort(f.begin(), f.end());
            faces.push_back(f);
        }
    }
    std::sort(faces.begin(), faces.end());
    faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
    return faces;
}

std::vector<std::array<int, 4>> Delaunay3::finite_tets() const {
    std::vector<std::array<int, 4>> out;
    for (const auto& t : tets_) {
        if (!t.alive || inf_slot(t) >= 0) continue;
        out.push_back(t.v);
    }
    return out;
}

}  // namespace cbmar
