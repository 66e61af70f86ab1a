// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cbmar {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const { double n = norm(); return {x / n, y / n, z / n}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Base class for all toolkit errors; specific conditions get their own type
// so callers can catch what they can actually handle.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define CBMAR_ERROR(Name)                                                     \
    struct Name final : Error {                                              \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {}   \
    }

CBMAR_ERROR(GridMismatch);
CBMAR_ERROR(SingularProjection);
CBMAR_ERROR(UnknownMaterial);
CBMAR_ERROR(UnmappedLabel);
CBMAR_ERROR(NonNormalizedSpectrum);
CBMAR_ERROR(OutOfGrid);
CBMAR_ERROR(ToothNotFound);
CBMAR_ERROR(ToothTooSmall);
CBMAR_ERROR(EmptyDentition);
CBMAR_ERROR(GeometryMismatch);
CBMAR_ERROR(WindowOutOfRange);
CBMAR_ERROR(AllTraceRow);
CBMAR_ERROR(ShapeMismatch);
CBMAR_ERROR(DegenerateSimplex);
CBMAR_ERROR(DegenerateInput);
CBMAR_ERROR(TooFewPoints);
CBMAR_ERROR(AlphaTooSmall);
CBMAR_ERROR(OpenSurface);
CBMAR_ERROR(ZeroReference);
CBMAR_ERROR(EnhancerFailed);
CBMAR_ERROR(IoError);
CBMAR_ERROR(ConfigError);

#undef CBMAR_ERROR

// splitmix64; used to derive independent per-element seeds so that noise
// generation is reproducible regardless of loop scheduling.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace cbmar
