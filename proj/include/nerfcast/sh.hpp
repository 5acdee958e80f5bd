// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>

#include "nerfcast/errors.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

constexpr int sh_coeff_count(int lmax) { return (lmax + 1) * (lmax + 1); }

// Real spherical harmonics basis, hardcoded up to degree 3, in the usual
// (l, m) order with the normalization constants of the real basis.
template <typename T>
void sh_basis(const Vec3<T>& d, int lmax, std::span<T> out) {
    if (lmax < 0 || lmax > 3) throw InputError("sh_basis: lmax must be in [0, 3]");
    const T x = d.x, y = d.y, z = d.z;
    out[0] = static_cast<T>(0.28209479177387814);
    if (lmax < 1) return;
    out[1] = static_cast<T>(-0.48860251190291987) * y;
    out[2] = static_cast<T>(0.48860251190291987) * z;
    out[3] = static_cast<T>(-0.48860251190291987) * x;
    if (lmax < 2) return;
    const T xx = x * x, yy = y * y, zz = z * z;
    out[4] = static_cast<T>(1.0925484305920792) * x * y;
    out[5] = static_cast<T>(-1.0925484305920792) * y * z;
    out[6] = static_cast<T>(0.31539156525252005) * (3 * zz - 1);
    out[7] = static_cast<T>(-1.0925484305920792) * x * z;
    out[8] = static_cast<T>(0.5462742152960396) * (xx - yy);
    if (lmax < 3) return;
    out[9] = static_cast<T>(-0.5900435899266435) * y * (3 * xx - yy);
    out[10] = static_cast<T>(2.890611442640554) * x * y * z;
    out[11] = static_cast<T>(-0.4570457994644658) * y * (4 * zz - xx - yy);
    out[12] = static_cast<T>(0.3731763325901154) * z * (2 * zz - 3 * xx - 3 * yy);
    out[13] = static_cast<T>(-0.4570457994644658) * x * (4 * zz - xx - yy);
    out[14] = static_cast<T>(1.445305721320277) * z * (xx - yy);
    out[15] = static_cast<T>(-0.5900435899266435) * x * (xx - 3 * yy);
}

template <typename T>
T sigmoid(T x) {
    if (x >= 0) return 1 / (1 + std::exp(-x));
    T e = std::exp(x);
    return e / (1 + e);
}

// Color from SH coefficients: c = sigmoid(sum_lm k_lm Y_lm(d)), per channel.
// `coeffs` is channel-major: [r_0..r_{n-1}, g_0.., b_0..] with n = (lmax+1)^2.
template <typename T>
Vec3<T> sh_eval(std::span<const T> coeffs, const Vec3<T>& d, int lmax) {
    const int n = sh_coeff_count(lmax);
    if (static_cast<int>(coeffs.size()) != 3 * n)
        throw InputError("sh_eval: expected 3*(lmax+1)^2 coefficients");
    T basis[16];
    sh_basis(d, lmax, std::span<T>(basis, static_cast<std::size_t>(n)));
    Vec3<T> c;
    for (int ch = 0; ch < 3; ++ch) {
        T acc = 0;
        for (int i = 0; i < n; ++i) acc += coeffs[static_cast<std::size_t>(ch * n + i)] * basis[i];
        c[static_cast<std::size_t>(ch)] = sigmoid(acc);
    }
    return c;
}

// dL/d(coeffs) given dL/d(color); returns nothing else since the basis has
// no parameters. dL_dcoeffs must be 3*(lmax+1)^2 long and is accumulated into.
template <typename T>
void sh_eval_backward(std::span<const T> coeffs, const Vec3<T>& d, int lmax,
                      const Vec3<T>& dL_dcolor, std::span<T> dL_dcoeffs) {
    const int n = sh_coeff_count(lmax);
    T basis[16];
    sh_basis(d, lmax, std::span<T>(basis, static_cast<std::size_t>(n)));
    for (int ch = 0; ch < 3; ++ch) {
        T acc = 0;
        for (int i = 0; i < n; ++i) acc += coeffs[static_cast<std::size_t>(ch * n + i)] * basis[i];
        const T s = sigmoid(acc);
        const T g = dL_dcolor[static_cast<std::size_t>(ch)] * s * (1 - s);
        for (int i = 0; i < n; ++i) dL_dcoeffs[static_cast<std::size_t>(ch * n + i)] += g * basis[i];
    }
}

}  // namespace nerfcast
