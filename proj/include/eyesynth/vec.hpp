// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

namespace eyesynth {

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double length() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    bool operator==(const Vec3&) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
inline Vec3 reflect(const Vec3& d, const Vec3& n) { return d - n * (2.0 * dot(d, n)); }

/// Angle between two (not necessarily unit) vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(length(cross(a, b)), dot(a, b));
}

/// Row-major 3x3 matrix.
struct Mat3 {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 identity() { return {}; }
    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        Mat3 out;
        const Vec3 rows[3] = {r0, r1, r2};
        for (int i = 0; i < 3; ++i) {
            out.m[i][0] = rows[i].x;
            out.m[i][1] = rows[i].y;
            out.m[i][2] = rows[i].z;
        }
        return out;
    }
    static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        return from_rows(c0, c1, c2).transposed();
    }
    static Mat3 rotation_x(double rad) {
        const double c = std::cos(rad), s = std::sin(rad);
        return from_rows({1, 0, 0}, {0, c, -s}, {0, s, c});
    }
    static Mat3 rotation_y(double rad) {
        const double c = std::cos(rad), s = std::sin(rad);
        return from_rows({c, 0, s}, {0, 1, 0}, {-s, 0, c});
    }
    static Mat3 rotation_z(double rad) {
        const double c = std::cos(rad), s = std::sin(rad);
        return from_rows({c, -s, 0}, {s, c, 0}, {0, 0, 1});
    }

    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 column(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

    Mat3 transposed() const {
        Mat3 t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t.m[i][j] = m[j][i];
        return t;
    }
    Vec3 operator*(const Vec3& v) const { return {dot(row(0), v), dot(row(1), v), dot(row(2), v)}; }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                r.m[i][j] = 0.0;
                for (int k = 0; k < 3; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
            }
        return r;
    }
    double determinant() const { return dot(row(0), cross(row(1), row(2))); }
};

/// Rigid transform p' = rotation * p + translation.
struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    Vec3 apply_point(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_vector(const Vec3& v) const { return rotation * v; }
    RigidTransform inverse() const {
        const Mat3 rt = rotation.transposed();
        return {rt, -(rt * translation)};
    }
    RigidTransform operator*(const RigidTransform& o) const {
        return {rotation * o.rotation, rotation * o.translation + translation};
    }
};

}  // namespace eyesynth
