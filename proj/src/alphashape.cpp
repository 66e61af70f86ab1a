// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/alphashape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <map>
#include <set>

#include "cbmar/delaunay.hpp"

namespace cbmar {

PointCloud make_point_cloud(std::vector<Vec3> points) {
    for (const auto& p : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw DegenerateInput("point cloud contains non-finite coordinates");
    // key on the exact bit patterns; a hash digest could collide and would
    // silently drop a distinct point
    std::set<std::array<uint64_t, 3>> seen;
    auto key = [](const Vec3& p) {
        std::array<uint64_t, 3> k;
        std::memcpy(&k[0], &p.x, sizeof(double));
        std::memcpy(&k[1], &p.y, sizeof(double));
        std::memcpy(&k[2], &p.z, sizeof(double));
        return k;
    };
    PointCloud cloud;
    cloud.points.reserve(points.size());
    for (const auto& p : points)
        if (seen.insert(key(p)).second) cloud.points.push_back(p);
    return cloud;
}

namespace {

constexpr double kDegenerateAltitude = 1e-9;  // mm

// Relative band around radius^2 treated as "on the witness sphere". The
// ball is open, so a point on its boundary does not block exposure; without
// the band, grid-sampled clouds (voxel-center scans) lose every flat-face
// triangle to the fourth corner of each square, which lies exactly on the
// witness sphere of the other three.
constexpr double kBallTol = 1e-12;

// Uniform cell index over the cloud for range-limited emptiness queries.
class PointGridIndex {
  public:
    PointGridIndex(const std::vector<Vec3>& pts, double cell_hint)
        : pts_(pts) {
        lo_ = pts.empty() ? Vec3{} : pts[0];
        Vec3 hi = lo_;
        for (const auto& p : pts) {
            lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y),
                   std::min(lo_.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y),
                  std::max(hi.z, p.z)};
        }
        const Vec3 ext = hi - lo_;
        const double max_ext = std::max({ext.x, ext.y, ext.z, 1e-6});
        cell_ = std::max({cell_hint, max_ext / 48.0, 1e-9});
        nx_ = std::max(1, static_cast<int>(ext.x / cell_) + 1);
        ny_ = std::max(1, static_cast<int>(ext.y / cell_) + 1);
        nz_ = std::max(1, static_cast<int>(ext.z / cell_) + 1);
        cells_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);
        for (int i = 0; i < static_cast<int>(pts.size()); ++i)
            cells_[cell_of(pts[i])].push_back(i);
    }

    // any cloud point within distance^2 <= r2 of c, ignoring `skip`?
    bool any_within(const Vec3& c, double r, double r2, const int* skip,
                    int nskip) const {
        int i0, j0, k0, i1, j1, k1;
        range(c.x - r, c.x + r, nx_, lo_.x, i0, i1);
        range(c.y - r, c.y + r, ny_, lo_.y, j0, j1);
        range(c.z - r, c.z + r, nz_, lo_.z, k0, k1);
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    const auto& cell =
                        cells_[(static_cast<std::size_t>(k) * ny_ + j) * nx_ +
                               i];
                    for (int pi : cell) {
                        bool skipped = false;
                        for (int s = 0; s < nskip; ++s)
                            if (skip[s] == pi) {
                                skipped = true;
                                break;
                            }
                        if (skipped) continue;
                        if ((pts_[pi] - c).norm2() <= r2) return true;
                    }
                }
        return false;
    }

    // collect indices within distance r of c (inclusive), ignoring `skip`
    std::vector<int> gather(const Vec3& c, double r, const int* skip,
                            int nskip) const {
        std::vector<int> out;
        int i0, j0, k0, i1, j1, k1;
        range(c.x - r, c.x + r, nx_, lo_.x, i0, i1);
        range(c.y - r, c.y + r, ny_, lo_.y, j0, j1);
        range(c.z - r, c.z + r, nz_, lo_.z, k0, k1);
        const double r2 = r * r;
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    const auto& cell =
                        cells_[(static_cast<std::size_t>(k) * ny_ + j) * nx_ +
                               i];
                    for (int pi : cell) {
                        bool skipped = false;
                        for (int s = 0; s < nskip; ++s)
                            if (skip[s] == pi) skipped = true;
                        if (skipped) continue;
                        if ((pts_[pi] - c).norm2() <= r2) out.push_back(pi);
                    }
                }
        return out;
    }

  private:
    std::size_t cell_of(const Vec3& p) const {
        const int i = clampi(static_cast<int>((p.x - lo_.x) / cell_), nx_);
        const int j = clampi(static_cast<int>((p.y - lo_.y) / cell_), ny_);
        const int k = clampi(static_cast<int>((p.z - lo_.z) / cell_), nz_);
        return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
    }
    static int clampi(int v, int n) { return std::clamp(v, 0, n - 1); }
    void range(double lo, double hi, int n, double base, int& a,
               int& b) const {
        a = clampi(static_cast<int>(std::floor((lo - base) / cell_)), n);
        b = clampi(static_cast<int>(std::floor((hi - base) / cell_)), n);
    }

    const std::vector<Vec3>& pts_;
    Vec3 lo_;
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<int>> cells_;
};

// triangle test: -1 degenerate, 0 not exposed, 1 exposed (normal_out set
// toward an empty witness center)
int tri_exposed(const std::vector<Vec3>& pts, const PointGridIndex& idx,
                int i, int j, int k, double alpha, Vec3* normal_out) {
    const Vec3 a = pts[i], b = pts[j], c = pts[k];
    const Vec3 u = b - a, v = c - a, w = u.cross(v);
    const double wn = w.norm();
    const double lmax = std::max({u.norm(), v.norm(), (c - b).norm()});
    if (lmax <= 0.0 || wn / lmax < kDegenerateAltitude) return -1;
    const double wn2 = wn * wn;
    const Vec3 cc =
        a + (u.norm2() * v.cross(w) + v.norm2() * w.cross(u)) / (2.0 * wn2);
    const double rc2 = (cc - a).norm2();
    const double h2 = alpha * alpha - rc2;
    if (h2 < 0.0) return 0;
    const Vec3 nhat = w / wn;
    const double h = std::sqrt(h2);
    const double r2 = alpha * alpha * (1.0 - kBallTol);
    const double r = alpha;
    const int skip[3] = {i, j, k};
    if (!idx.any_within(cc + h * nhat, r, r2, skip, 3)) {
        if (normal_out) *normal_out = nhat;
        return 1;
    }
    if (!idx.any_within(cc - h * nhat, r, r2, skip, 3)) {
        if (normal_out) *normal_out = -1.0 * nhat;
        return 1;
    }
    return 0;
}

// edge test via exact decomposition of the center circle into forbidden arcs
int pair_exposed(const std::vector<Vec3>& pts, const PointGridIndex& idx,
                 int i, int j, double alpha) {
    const Vec3 a = pts[i], b = pts[j];
    const Vec3 ab = b - a;
    const double len = ab.norm();
    if (len < kDegenerateAltitude) return -1;
    const double h2 = alpha * alpha - 0.25 * len * len;
    if (h2 < 0.0) return 0;
    const double h = std::sqrt(h2);
    const Vec3 m = 0.5 * (a + b);
    const Vec3 axis = ab / len;
    Vec3 e1 = axis.cross(std::fabs(axis.x) < 0.9 ? Vec3{1, 0, 0}
                                                 : Vec3{0, 1, 0});
    e1 = e1 / e1.norm();
    const Vec3 e2 = axis.cross(e1);

    const int skip[2] = {i, j};
    const auto near = idx.gather(m, alpha + h + 1e-12, skip, 2);
    struct Arc {
        double lo, hi;
    };
    std::vector<Arc> arcs;
    const double a2tol = alpha * alpha * (1.0 - kBallTol);
    for (int q : near) {
        const Vec3 rel = pts[q] - m;
        const double D = h2 + rel.norm2() - alpha * alpha;
        const double B = 2.0 * h * rel.dot(e1);
        const double C = 2.0 * h * rel.dot(e2);
        const double R = std::hypot(B, C);
        if (D > R) continue;   // never violating
        if (D <= -R) return 0;  // violating at every angle
        const double phi_q = std::atan2(C, B);
        const double wid = std::acos(std::clamp(D / R, -1.0, 1.0));
        double lo = phi_q - wid, hi = phi_q + wid;
        // normalize into [0, 2pi), splitting wrap-around arcs
        const double tau = 2.0 * kPi;
        lo = std::fmod(lo + 2.0 * tau, tau);
        hi = std::fmod(hi + 2.0 * tau, tau);
        if (lo <= hi) {
            arcs.push_back({lo, hi});
        } else {
            arcs.push_back({lo, tau});
            arcs.push_back({0.0, hi});
        }
    }
    auto empty_at = [&](double phi) {
        const Vec3 c = m + h * (std::cos(phi) * e1 + std::sin(phi) * e2);
        return !idx.any_within(c, alpha, a2tol, skip, 2);
    };
    if (arcs.empty()) return empty_at(0.0) ? 1 : 0;
    std::sort(arcs.begin(), arcs.end(),
              [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
    // sweep merged coverage, probing the midpoint of every gap
    double cover = 0.0;
    if (arcs[0].lo > 0.0 && empty_at(0.5 * arcs[0].lo)) return 1;
    for (const Arc& arc : arcs) {
        if (arc.lo > cover && empty_at(0.5 * (cover + arc.lo))) return 1;
        cover = std::max(cover, arc.hi);
    }
    const double tau = 2.0 * kPi;
    if (cover < tau && empty_at(0.5 * (cover + tau))) return 1;
    return 0;
}

const std::vector<Vec3>& icosphere_directions() {
    static const std::vector<Vec3> dirs = [] {
        const double g = (1.0 + std::sqrt(5.0)) / 2.0;
        std::vector<Vec3> verts = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0},
                                   {1, -g, 0}, {0, -1, g}, {0, 1, g},
                                   {0, -1, -g}, {0, 1, -g}, {g, 0, -1},
                                   {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
        for (auto& v : verts) v = v / v.norm();
        std::vector<std::array<int, 3>> faces = {
            {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
            {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
            {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
            {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
        for (int level = 0; level < 2; ++level) {
            std::map<std::pair<int, int>, int> midpoint;
            auto mid = [&](int p, int q) {
                const auto key = std::minmax(p, q);
                auto it = midpoint.find(key);
                if (it != midpoint.end()) return it->second;
                Vec3 v = verts[p] + verts[q];
                v = v / v.norm();
                verts.push_back(v);
                const int id = static_cast<int>(verts.size()) - 1;
                midpoint.emplace(key, id);
                return id;
            };
            std::vector<std::array<int, 3>> next;
            next.reserve(faces.size() * 4);
            for (const auto& f : faces) {
                const int m01 = mid(f[0], f[1]), m12 = mid(f[1], f[2]),
                          m02 = mid(f[0], f[2]);
                next.push_back({f[0], m01, m02});
                next.push_back({f[1], m12, m01});
                next.push_back({f[2], m02, m12});
                next.push_back({m01, m12, m02});
            }
            faces = std::move(next);
        }
        return verts;
    }();
    return dirs;
}

// vertex test: sampled directions plus analytic cap-intersection refinement
int vertex_exposed(const std::vector<Vec3>& pts, const PointGridIndex& idx,
                   int i, double alpha) {
    const Vec3 p = pts[i];
    const int skip[1] = {i};
    const double a2tol = alpha * alpha * (1.0 - kBallTol);
    auto empty_dir = [&](const Vec3& d) {
        return !idx.any_within(p + alpha * d, alpha, a2tol, skip, 1);
    };
    for (const Vec3& d : icosphere_directions())
        if (empty_dir(d)) return 1;

    // forbidden directions form caps d.u_q > t_q; probe cap antipodes and
    // pairwise cap-circle intersections nudged into the free side
    const auto near = idx.gather(p, 2.0 * alpha, skip, 1);
    struct Cap {
        Vec3 u;
        double t;
    };
    std::vector<Cap> caps;
    for (int q : near) {
        const Vec3 d = pts[q] - p;
        const double len = d.norm();
        if (len < kDegenerateAltitude) continue;
        caps.push_back({d / len, len / (2.0 * alpha)});
    }
    for (const Cap& cap : caps)
        if (empty_dir(-1.0 * cap.u)) return 1;
    for (std::size_t x = 0; x < caps.size(); ++x)
        for (std::size_t y = x + 1; y < caps.size(); ++y) {
            const Vec3 u1 = caps[x].u, u2 = caps[y].u;
            const double c = u1.dot(u2), det = 1.0 - c * c;
            if (det < 1e-18) continue;
            const double t1 = caps[x].t, t2 = caps[y].t;
            const double px = (t1 - c * t2) / det, py = (t2 - c * t1) / det;
            const double z2 =
                1.0 - (px * px + py * py + 2.0 * px * py * c);
            if (z2 < 0.0) continue;
            Vec3 n = u1.cross(u2);
            n = n / n.norm();
            const double z = std::sqrt(z2);
            for (double sgn : {1.0, -1.0}) {
                Vec3 d = px * u1 + py * u2 + sgn * z * n;
                d = d - 1e-4 * (u1 + u2);
                d = d / d.norm();
                if (empty_dir(d)) return 1;
            }
        }
    return 0;
}

// Witness-side normals are ambiguous wherever both candidate balls are
// empty (hollow shells with a wide cavity expose faces from the inside
// too). Downstream extension and trimming need geometric outward: make
// windings consistent across shared manifold edges, then pick each
// component's global sign so its divergence-theorem volume is positive.
void orient_outward(AlphaBoundary& b, const std::vector<Vec3>& pts) {
    std::vector<int> tris;
    for (std::size_t s = 0; s < b.simplices.size(); ++s)
        if (b.simplices[s].n == 3) tris.push_back(static_cast<int>(s));
    if (tris.empty()) return;

    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const auto& v = b.simplices[tris[t]].v;
        for (int e = 0; e < 3; ++e) {
            const auto key = std::minmax(v[e], v[(e + 1) % 3]);
            edge_tris[key].push_back(static_cast<int>(t));
        }
    }
    auto traverses = [&](int t, int a, int c) {
        const auto& v = b.simplices[tris[t]].v;
        for (int e = 0; e < 3; ++e)
            if (v[e] == a && v[(e + 1) % 3] == c) return true;
        return false;
    };

    std::vector<int> comp(tris.size(), -1);
    int n_comp = 0;
    for (std::size_t seed = 0; seed < tris.size(); ++seed) {
        if (comp[seed] >= 0) continue;
        comp[seed] = n_comp;
        std::vector<int> stack{static_cast<int>(seed)};
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            const auto& v = b.simplices[tris[t]].v;
            for (int e = 0; e < 3; ++e) {
                const int a = v[e], c = v[(e + 1) % 3];
                const auto& inc = edge_tris[std::minmax(a, c)];
                if (inc.size() != 2) continue;  // hole or pinch: no vote
                const int other = inc[0] == t ? inc[1] : inc[0];
                if (comp[other] >= 0) continue;
                // the neighbour must traverse the shared edge backwards
                if (traverses(other, a, c)) {
                    auto& w = b.simplices[tris[other]].v;
                    std::swap(w[1], w[2]);
                }
                comp[other] = n_comp;
                stack.push_back(other);
            }
        }
        ++n_comp;
    }

    std::vector<double> vol(n_comp, 0.0);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const auto& v = b.simplices[tris[t]].v;
        vol[comp[t]] += pts[v[0]].dot(pts[v[1]].cross(pts[v[2]])) / 6.0;
    }
    for (std::size_t t = 0; t < tris.size(); ++t) {
        auto& s = b.simplices[tris[t]];
        if (vol[comp[t]] < 0.0) std::swap(s.v[1], s.v[2]);
        const Vec3 n =
            (pts[s.v[1]] - pts[s.v[0]]).cross(pts[s.v[2]] - pts[s.v[0]]);
        const double len = n.norm();
        if (len > 0.0) s.normal = n / len;
    }
}

}  // namespace

bool alpha_exposed(const std::vector<int>& simplex, const PointCloud& cloud,
                   double alpha) {
    if (simplex.empty() || simplex.size() > 3)
        throw DegenerateSimplex("simplex must hold 1 to 3 vertices");
    PointGridIndex idx(cloud.points, alpha);
    int r = 0;
    if (simplex.size() == 3)
        r = tri_exposed(cloud.points, idx, simplex[0], simplex[1], simplex[2],
                        alpha, nullptr);
    else if (simplex.size() == 2)
        r = pair_exposed(cloud.points, idx, simplex[0], simplex[1], alpha);
    else
        r = vertex_exposed(cloud.points, idx, simplex[0], alpha);
    if (r < 0)
        throw DegenerateSimplex("collinear or coincident vertex tuple");
    return r == 1;
}

AlphaBoundary alpha_shape_boundary(const PointCloud& cloud, double alpha) {
    const int n = static_cast<int>(cloud.points.size());
    if (n < 4) throw TooFewPoints("alpha shape needs at least 4 points");
    const Delaunay3 dt = Delaunay3::build(cloud.points);
    const auto faces = dt.finite_faces();
    const PointGridIndex idx(cloud.points, alpha);

    std::vector<int> keep(faces.size(), 0);
    std::vector<Vec3> normals(faces.size());
#pragma omp parallel for schedule(dynamic, 32)
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(faces.size());
         ++f) {
        keep[f] = tri_exposed(cloud.points, idx, faces[f][0], faces[f][1],
                              faces[f][2], alpha, &normals[f]) == 1;
    }
    AlphaBoundary out;
    for (std::size_t f = 0; f < faces.size(); ++f)
        if (keep[f])
            out.simplices.push_back(
                {{faces[f][0], faces[f][1], faces[f][2]}, 3, normals[f]});
    orient_outward(out, cloud.points);
    return out;
}

AlphaBoundary alpha_shape_boundary_brute(const PointCloud& cloud,
                                         double alpha) {
    const int n = static_cast<int>(cloud.points.size());
    if (n > 200)
        throw Error("brute-force alpha boundary limited to 200 points");
    const PointGridIndex idx(cloud.points, alpha);
    AlphaBoundary out;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                Vec3 normal;
                if (tri_exposed(cloud.points, idx, i, j, k, alpha, &normal) ==
                    1)
                    out.simplices.push_back({{i, j, k}, 3, normal});
            }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (pair_exposed(cloud.points, idx, i, j, alpha) == 1)
                out.simplices.push_back({{i, j, -1}, 2, Vec3{}});
    for (int i = 0; i < n; ++i)
        if (vertex_exposed(cloud.points, idx, i, alpha) == 1)
            out.simplices.push_back({{i, -1, -1}, 1, Vec3{}});
    orient_outward(out, cloud.points);
    return out;
}

ExtendedShape extend_shape(const AlphaBoundary& boundary,
                           const PointCloud& cloud, double distance) {
    std::vector<Vec3> sum(cloud.points.size(), Vec3{});
    std::vector<int> refs(cloud.points.size(), 0);
    for (const auto& s : boundary.simplices) {
        if (s.n != 3) continue;
        for (int m = 0; m < 3; ++m) {
            sum[s.v[m]] += s.normal;
            refs[s.v[m]] += 1;
        }
    }
    ExtendedShape ext;
    ext.cloud.points = cloud.points;
    ext.boundary = boundary;
    int skipped = 0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (refs[i] == 0) continue;
        const double len = sum[i].norm();
        if (len < 1e-9) {
            ++skipped;
            continue;
        }
        ext.cloud.points[i] += (distance / len) * sum[i];
    }
    if (skipped > 0)
        std::cerr << "extend_shape: " << skipped
                  << " vertex normals cancelled; vertices left in place\n";
    return ext;
}

namespace {

// triangle/axis-aligned-box overlap via separating axes
bool tri_box_overlap(const Vec3& center, double half, const Vec3& ta,
                     const Vec3& tb, const Vec3& tc) {
    const Vec3 v0 = ta - center, v1 = tb - center, v2 = tc - center;
    auto axis_test = [&](const Vec3& axis) {
        const double p0 = v0.dot(axis), p1 = v1.dot(axis), p2 = v2.dot(axis);
        const double lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
        const double rad = half * (std::fabs(axis.x) + std::fabs(axis.y) +
                                   std::fabs(axis.z));
        return lo <= rad && hi >= -rad;
    };
    // box face normals
    if (std::min({v0.x, v1.x, v2.x}) > half ||
        std::max({v0.x, v1.x, v2.x}) < -half)
        return false;
    if (std::min({v0.y, v1.y, v2.y}) > half ||
        std::max({v0.y, v1.y, v2.y}) < -half)
        return false;
    if (std::min({v0.z, v1.z, v2.z}) > half ||
        std::max({v0.z, v1.z, v2.z}) < -half)
        return false;
    const Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;
    const Vec3 units[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (const Vec3& e : {e0, e1, e2})
        for (const Vec3& u : units)
            if (!axis_test(e.cross(u))) return false;
    return axis_test(e0.cross(e1));  // triangle plane
}

// closest point on triangle abc to p (barycentric region walk)
Vec3 closest_on_tri(const Vec3& p, const Vec3& a, const Vec3& b,
                    const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + (vb * denom) * ab + (vc * denom) * ac;
}

// coarse cell index over face bounding boxes for nearest-face queries
class FaceGrid {
  public:
    FaceGrid(const AlphaBoundary& boundary, const PointCloud& cloud,
             const VoxelGrid& grid)
        : boundary_(boundary), cloud_(cloud) {
        cell_ = 2.0 * grid.pitch;
        lo_ = grid.min_corner();
        const Vec3 ext = grid.max_corner() - lo_;
        nx_ = std::max(1, static_cast<int>(ext.x / cell_) + 1);
        ny_ = std::max(1, static_cast<int>(ext.y / cell_) + 1);
        nz_ = std::max(1, static_cast<int>(ext.z / cell_) + 1);
        cells_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);
        for (int f = 0; f < static_cast<int>(boundary.simplices.size());
             ++f) {
            const auto& s = boundary.simplices[f];
            if (s.n != 3) continue;
            Vec3 flo = cloud.points[s.v[0]], fhi = flo;
            for (int m = 1; m < 3; ++m) {
                const Vec3& q = cloud.points[s.v[m]];
                flo = {std::min(flo.x, q.x), std::min(flo.y, q.y),
                       std::min(flo.z, q.z)};
                fhi = {std::max(fhi.x, q.x), std::max(fhi.y, q.y),
                       std::max(fhi.z, q.z)};
            }
            int a[3], b[3];
            span(flo, a);
            span(fhi, b);
            for (int z = a[2]; z <= b[2]; ++z)
                for (int y = a[1]; y <= b[1]; ++y)
                    for (int x = a[0]; x <= b[0]; ++x)
                        cells_[(static_cast<std::size_t>(z) * ny_ + y) * nx_ +
                               x]
                            .push_back(f);
        }
    }

    // signed offset of p along the outward normal of the nearest face within
    // `radius`; returns false when no triangle is that close
    bool signed_offset(const Vec3& p, double radius, double& signed_out) const {
        int a[3], b[3];
        span({p.x - radius, p.y - radius, p.z - radius}, a);
        span({p.x + radius, p.y + radius, p.z + radius}, b);
        double best = radius * radius;
        bool found = false;
        for (int z = a[2]; z <= b[2]; ++z)
            for (int y = a[1]; y <= b[1]; ++y)
                for (int x = a[0]; x <= b[0]; ++x)
                    for (int f :
                         cells_[(static_cast<std::size_t>(z) * ny_ + y) * nx_ +
                                x]) {
                        const auto& s = boundary_.simplices[f];
                        const Vec3 cp = closest_on_tri(
                            p, cloud_.points[s.v[0]], cloud_.points[s.v[1]],
                            cloud_.points[s.v[2]]);
                        const double d2 = (p - cp).norm2();
                        if (d2 < best) {
                            best = d2;
                            signed_out = (p - cp).dot(s.normal);
                            found = true;
                        }
                    }
        return found;
    }

  private:
    void span(const Vec3& p, int* out) const {
        out[0] = std::clamp(static_cast<int>((p.x - lo_.x) / cell_), 0,
                            nx_ - 1);
        out[1] = std::clamp(static_cast<int>((p.y - lo_.y) / cell_), 0,
                            ny_ - 1);
        out[2] = std::clamp(static_cast<int>((p.z - lo_.z) / cell_), 0,
                            nz_ - 1);
    }
    const AlphaBoundary& boundary_;
    const PointCloud& cloud_;
    Vec3 lo_;
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<int>> cells_;
};

void mark_voxel(BinaryMask& mask, const Vec3& p) {
    const VoxelGrid& g = mask.grid;
    const int ix = static_cast<int>(
        std::lround((p.x - g.origin.x) / g.pitch + 0.5 * (g.nx - 1)));
    const int iy = static_cast<int>(
        std::lround((p.y - g.origin.y) / g.pitch + 0.5 * (g.ny - 1)));
    const int iz = static_cast<int>(
        std::lround((p.z - g.origin.z) / g.pitch + 0.5 * (g.nz - 1)));
    if (g.contains(ix, iy, iz)) mask.data[g.index(ix, iy, iz)] = 1;
}

BinaryMask flood_exterior(const BinaryMask& shell) {
    const VoxelGrid& g = shell.grid;
    BinaryMask ext(g);
    std::vector<std::size_t> stack;
    auto push = [&](int x, int y, int z) {
        if (!g.contains(x, y, z)) return;
        const std::size_t id = g.index(x, y, z);
        if (ext.data[id] || shell.data[id]) return;
        ext.data[id] = 1;
        stack.push_back(id);
    };
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x)
                if (x == 0 || y == 0 || z == 0 || x == g.nx - 1 ||
                    y == g.ny - 1 || z == g.nz - 1)
                    push(x, y, z);
    while (!stack.empty()) {
        const std::size_t id = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(id % g.nx);
        const int y = static_cast<int>((id / g.nx) % g.ny);
        const int z = static_cast<int>(id / (static_cast<std::size_t>(g.nx) *
                                             g.ny));
        push(x - 1, y, z);
        push(x + 1, y, z);
        push(x, y - 1, z);
        push(x, y + 1, z);
        push(x, y, z - 1);
        push(x, y, z + 1);
    }
    return ext;
}

}  // namespace

BinaryMask voxelize_shape(const AlphaBoundary& boundary,
                          const PointCloud& cloud, const VoxelGrid& grid) {
    BinaryMask shell(grid);
    const double half = 0.5 * grid.pitch * (1.0 + 1e-9);
    auto idx_range = [&](double lo, double hi, int n, double base, int& a,
                         int& b) {
        a = std::clamp(static_cast<int>(std::floor(
                           (lo - base) / grid.pitch + 0.5 * (n - 1) - 0.5)),
                       0, n - 1);
        b = std::clamp(static_cast<int>(std::ceil(
                           (hi - base) / grid.pitch + 0.5 * (n - 1) + 0.5)),
                       0, n - 1);
    };
    for (const auto& s : boundary.simplices) {
        if (s.n == 1) {
            mark_voxel(shell, cloud.points[s.v[0]]);
            continue;
        }
        if (s.n == 2) {
            const Vec3 a = cloud.points[s.v[0]], b = cloud.points[s.v[1]];
            const double len = (b - a).norm();
            const int steps =
                std::max(1, static_cast<int>(len / (0.25 * grid.pitch)) + 1);
            for (int t = 0; t <= steps; ++t)
                mark_voxel(shell, a + (static_cast<double>(t) / steps) *
                                          (b - a));
            continue;
        }
        const Vec3 ta = cloud.points[s.v[0]], tb = cloud.points[s.v[1]],
                   tc = cloud.points[s.v[2]];
        int x0, x1, y0, y1, z0, z1;
        idx_range(std::min({ta.x, tb.x, tc.x}), std::max({ta.x, tb.x, tc.x}),
                  grid.nx, grid.origin.x, x0, x1);
        idx_range(std::min({ta.y, tb.y, tc.y}), std::max({ta.y, tb.y, tc.y}),
                  grid.ny, grid.origin.y, y0, y1);
        idx_range(std::min({ta.z, tb.z, tc.z}), std::max({ta.z, tb.z, tc.z}),
                  grid.nz, grid.origin.z, z0, z1);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    if (tri_box_overlap(grid.voxel_center(x, y, z), half, ta,
                                        tb, tc))
                        shell.data[grid.index(x, y, z)] = 1;
    }

    const double leak_fraction = 0.95;
    BinaryMask ext = flood_exterior(shell);
    bool closed = count_set(ext) <= leak_fraction * grid.size();
    bool used_closing = false;
    if (!closed) {
        shell = dilate6(shell, 1);
        ext = flood_exterior(shell);
        closed = count_set(ext) <= leak_fraction * grid.size();
        used_closing = true;
    }
    if (!closed)
        throw OpenSurface("boundary leaks after morphological closing");
    BinaryMask mask(grid);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] = ext.data[i] ? 0 : 1;
    if (used_closing) mask = erode6(mask, 1);

    // the conservative shell overfills by up to half a voxel; trim mask
    // voxels whose center sits on the outer side of the nearest face
    const FaceGrid nearest(boundary, cloud, grid);
    const double reach = grid.pitch * 1.8;
#pragma omp parallel for schedule(static)
    for (int z = 0; z < grid.nz; ++z)
        for (int y = 0; y < grid.ny; ++y)
            for (int x = 0; x < grid.nx; ++x) {
                const std::size_t id = grid.index(x, y, z);
                if (!mask.data[id]) continue;
                double off = 0.0;
                if (nearest.signed_offset(grid.voxel_center(x, y, z), reach,
                                          off) &&
                    off > 1e-9)
                    mask.data[id] = 0;
            }
    return mask;
}

BinaryMask build_weight_region(const BinaryMask& oral_surface,
                               const BinaryMask& alpha_mask) {
    require_same_grid(oral_surface.grid, alpha_mask.grid, "build_weight_region");
    const BinaryMask filled = fill_interior(oral_surface);
    BinaryMask out(alpha_mask.grid);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = alpha_mask.data[i] && !filled.data[i];
    return out;
}

BinaryMask weighted_threshold(const Volume& volume, const BinaryMask& region,
                              double tau) {
    require_same_grid(volume.grid, region.grid, "weighted_threshold");
    BinaryMask out(volume.grid);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (volume.data[i] >= tau) && !region.data[i];
    return out;
}

}  // namespace cbmar
