#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rvmret {

/// Cartesian 3-vector used for positions, momenta, directions and field values.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

inline bool is_finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Row-major 3x3 matrix; rows index the output component.
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 apply(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

/// Electromagnetic field at one space-time point, F = (E, B).
struct FieldValue {
    Vec3 E;
    Vec3 B;

    FieldValue& operator+=(const FieldValue& o) {
        E += o.E;
        B += o.B;
        return *this;
    }
    FieldValue& operator-=(const FieldValue& o) {
        E -= o.E;
        B -= o.B;
        return *this;
    }
    FieldValue& operator*=(double s) {
        E *= s;
        B *= s;
        return *this;
    }
};

inline FieldValue operator+(FieldValue a, const FieldValue& b) { return a += b; }
inline FieldValue operator-(FieldValue a, const FieldValue& b) { return a -= b; }
inline FieldValue operator*(double s, FieldValue a) { return a *= s; }

/// Euclidean norm of the six-component vector (E, B).
inline double magnitude(const FieldValue& f) { return std::sqrt(norm2(f.E) + norm2(f.B)); }

inline bool is_finite(const FieldValue& f) { return is_finite(f.E) && is_finite(f.B); }

/// Phase-space point (x, p).
struct PhasePoint {
    Vec3 x;
    Vec3 p;
};

}  // namespace rvmret
