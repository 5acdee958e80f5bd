// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace nerfcast {

template <typename T>
struct Vec3 {
    T x{}, y{}, z{};

    constexpr T& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr const T& operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(T s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }

    template <typename U>
    constexpr Vec3<U> cast() const { return {static_cast<U>(x), static_cast<U>(y), static_cast<U>(z)}; }
};

template <typename T>
constexpr Vec3<T> operator*(T s, const Vec3<T>& v) { return v * s; }

template <typename T>
constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <typename T>
constexpr Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
T norm(const Vec3<T>& v) { return std::sqrt(dot(v, v)); }

template <typename T>
Vec3<T> normalized(const Vec3<T>& v) { return v / norm(v); }

template <typename T>
constexpr Vec3<T> cwise_mul(const Vec3<T>& a, const Vec3<T>& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

template <typename T>
constexpr Vec3<T> cwise_min(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}

template <typename T>
constexpr Vec3<T> cwise_max(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

// Column-major 3x3 matrix. columns[i] is the i-th column.
template <typename T>
struct Mat3 {
    std::array<Vec3<T>, 3> col{};

    static constexpr Mat3 identity() {
        return {{Vec3<T>{1, 0, 0}, Vec3<T>{0, 1, 0}, Vec3<T>{0, 0, 1}}};
    }

    constexpr Vec3<T> operator*(const Vec3<T>& v) const {
        return col[0] * v.x + col[1] * v.y + col[2] * v.z;
    }

    constexpr Mat3 transposed() const {
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m.col[i][j] = col[j][i];
        return m;
    }

    constexpr T operator()(std::size_t row, std::size_t c) const { return col[c][row]; }
    constexpr void set(std::size_t row, std::size_t c, T v) { col[c][row] = v; }

    template <typename U>
    constexpr Mat3<U> cast() const {
        Mat3<U> m;
        for (int i = 0; i < 3; ++i) m.col[i] = col[i].template cast<U>();
        return m;
    }
};

template <typename T>
constexpr Mat3<T> matmul(const Mat3<T>& a, const Mat3<T>& b) {
    Mat3<T> m;
    for (int i = 0; i < 3; ++i) m.col[i] = a * b.col[i];
    return m;
}

// Max |R^T R - I| entry, used to validate rotation matrices.
template <typename T>
T orthonormality_error(const Mat3<T>& r) {
    Mat3<T> g = matmul(r.transposed(), r);
    T err = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            T want = (i == j) ? T(1) : T(0);
            T e = std::abs(g(i, j) - want);
            if (e > err) err = e;
        }
    return err;
}

using Vec3f = Vec3<float>;
using Vec3d = Vec3<double>;
using Mat3f = Mat3<float>;
using Mat3d = Mat3<double>;

}  // namespace nerfcast
