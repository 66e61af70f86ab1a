// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cbmar/core.hpp"

namespace cbmar {

// Sign of det[b-a; c-a; d-a]: +1 when d lies on the positive side of the
// plane through a,b,c (normal (b-a)x(c-a)), -1 opposite, 0 coplanar.
// Evaluated in double with a running error bound; near-zero results are
// re-evaluated in double-double arithmetic.
int sign_orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

// Sign of the insphere determinant for the positively oriented tetrahedron
// (a,b,c,d): -1 when p is strictly inside the circumsphere, +1 strictly
// outside, 0 on the sphere. Same filtered evaluation strategy.
int sign_insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                  const Vec3& p);

// Incremental Delaunay tetrahedralization with an infinite vertex (index -1)
// closing the convex hull. Inputs that defeat the incremental construction
// (cospherical or cogrid degeneracies) are retried with a deterministic
// hash-seeded jitter; vertex indices always refer to the original points.
class Delaunay3 {
  public:
    struct Tet {
        std::array<int, 4> v;    // vertex indices, -1 = infinite vertex
        std::array<int, 4> nbr;  // tet opposite v[i]
        bool alive = true;
    };

    static Delaunay3 build(const std::vector<Vec3>& points);

    const std::vector<Vec3>& points() const { return points_; }
    const std::vector<Tet>& tets() const { return tets_; }
    bool used_jitter() const { return used_jitter_; }

    // Unique vertex triples appearing as faces of finite tetrahedra
    // (includes every convex-hull facet); sorted ascending per triple.
    std::vector<std::array<int, 3>> finite_faces() const;
    std::vector<std::array<int, 4>> finite_tets() const;

  private:
    bool try_build(const std::vector<Vec3>& pts);
    bool insert_point(int pi);
    bool locate_conflict(int pi, int& tet_out) const;
    bool conflict(int tet, int pi) const;
    bool validate() const;

    std::vector<Vec3> points_;   // original coordinates
    std::vector<Vec3> working_;  // jittered copy used for topology
    std::vector<Tet> tets_;
    mutable std::vector<uint32_t> mark_;
    mutable uint32_t stamp_ = 0;
    int last_tet_ = 0;
    bool used_jitter_ = false;
};

}  // namespace cbmar
