#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <ostream>

namespace rfmap {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Real 3-vector (metres or unit directions).
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3& o) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec3{};
}
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Any unit vector orthogonal to `v` (v must be non-zero).
inline Vec3 any_orthogonal(const Vec3& v) {
    const Vec3 a = std::abs(v.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return normalized(cross(v, a));
}

/// Angle between two non-zero vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

/// Mirror point `p` across the plane through `q` with unit normal `n`.
inline Vec3 mirror_point(const Vec3& p, const Vec3& q, const Vec3& n) {
    return p - n * (2.0 * dot(p - q, n));
}

/// Reflect direction `d` about the plane with unit normal `n`.
inline Vec3 reflect_dir(const Vec3& d, const Vec3& n) { return d - n * (2.0 * dot(d, n)); }

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

/// Complex 3-vector: the electric field phasor (V/m).
struct CVec3 {
    cdouble x{}, y{}, z{};

    constexpr CVec3() = default;
    constexpr CVec3(cdouble x_, cdouble y_, cdouble z_) : x(x_), y(y_), z(z_) {}
    constexpr explicit CVec3(const Vec3& v) : x(v.x), y(v.y), z(v.z) {}

    CVec3 operator+(const CVec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    CVec3 operator-(const CVec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    CVec3 operator*(cdouble s) const { return {x * s, y * s, z * s}; }
    CVec3 operator/(cdouble s) const { return {x / s, y / s, z / s}; }
    CVec3& operator+=(const CVec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    CVec3& operator*=(cdouble s) { x *= s; y *= s; z *= s; return *this; }

    bool operator==(const CVec3& o) const = default;
};

inline CVec3 operator*(cdouble s, const CVec3& v) { return v * s; }
inline CVec3 operator*(const Vec3& v, cdouble s) { return {v.x * s, v.y * s, v.z * s}; }

/// Projection of a complex field on a real direction (no conjugation).
inline cdouble dot(const CVec3& e, const Vec3& u) { return e.x * u.x + e.y * u.y + e.z * u.z; }
inline double norm_sq(const CVec3& e) { return std::norm(e.x) + std::norm(e.y) + std::norm(e.z); }
inline double norm(const CVec3& e) { return std::sqrt(norm_sq(e)); }

}  // namespace rfmap
