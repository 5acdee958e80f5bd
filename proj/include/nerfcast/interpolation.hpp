// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "nerfcast/errors.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

// Standard trilinear blend of 8 corner values. Corner order is x-fastest:
// c000 c100 c010 c110 c001 c101 c011 c111.
template <typename T>
T trilerp(std::span<const T> corners, const Vec3<T>& frac) {
    const T fx = frac.x, fy = frac.y, fz = frac.z;
    const T c00 = corners[0] * (1 - fx) + corners[1] * fx;
    const T c10 = corners[2] * (1 - fx) + corners[3] * fx;
    const T c01 = corners[4] * (1 - fx) + corners[5] * fx;
    const T c11 = corners[6] * (1 - fx) + corners[7] * fx;
    const T c0 = c00 * (1 - fy) + c10 * fy;
    const T c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

// Interpolation weights of the 8 corners, same order as trilerp().
template <typename T>
void trilerp_weights(const Vec3<T>& frac, T w[8]) {
    const T fx = frac.x, fy = frac.y, fz = frac.z;
    const T gx = 1 - fx, gy = 1 - fy, gz = 1 - fz;
    w[0] = gx * gy * gz;
    w[1] = fx * gy * gz;
    w[2] = gx * fy * gz;
    w[3] = fx * fy * gz;
    w[4] = gx * gy * fz;
    w[5] = fx * gy * fz;
    w[6] = gx * fy * fz;
    w[7] = fx * fy * fz;
}

// 1-D stencil over a vertex grid with n vertices spanning [0, n-1] in grid
// units. Clamps to the grid so edge queries extend constantly.
template <typename T>
void axis_stencil(T u, int n, int& i0, int& i1, T& f) {
    if (n <= 1) {
        i0 = i1 = 0;
        f = 0;
        return;
    }
    u = std::clamp(u, T(0), static_cast<T>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(u)), n - 2);
    i1 = i0 + 1;
    f = u - static_cast<T>(i0);
}

// Full 3-D stencil: 8 flat indices into an x-fastest array of nx*ny*nz
// vertices plus their trilinear weights.
template <typename T>
struct GridStencil {
    std::size_t idx[8];
    T w[8];
};

template <typename T>
GridStencil<T> grid_stencil(const Vec3<T>& u, int nx, int ny, int nz) {
    int x0, x1, y0, y1, z0, z1;
    Vec3<T> f;
    axis_stencil(u.x, nx, x0, x1, f.x);
    axis_stencil(u.y, ny, y0, y1, f.y);
    axis_stencil(u.z, nz, z0, z1, f.z);
    GridStencil<T> s;
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
    const std::size_t bx0 = static_cast<std::size_t>(x0) * sx, bx1 = static_cast<std::size_t>(x1) * sx;
    const std::size_t by0 = static_cast<std::size_t>(y0) * sy, by1 = static_cast<std::size_t>(y1) * sy;
    const std::size_t bz0 = static_cast<std::size_t>(z0) * sz, bz1 = static_cast<std::size_t>(z1) * sz;
    s.idx[0] = bx0 + by0 + bz0;
    s.idx[1] = bx1 + by0 + bz0;
    s.idx[2] = bx0 + by1 + bz0;
    s.idx[3] = bx1 + by1 + bz0;
    s.idx[4] = bx0 + by0 + bz1;
    s.idx[5] = bx1 + by0 + bz1;
    s.idx[6] = bx0 + by1 + bz1;
    s.idx[7] = bx1 + by1 + bz1;
    trilerp_weights(f, s.w);
    return s;
}

}  // namespace nerfcast
