// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>

#include "nerfcast/param_store.hpp"
#include "nerfcast/rng.hpp"

namespace nerfcast {

// y = W x + b with W row-major (out x in). The simd pragma licenses the
// reduction reorder; results are deterministic for a given build.
template <typename T>
void linear_forward(std::span<const T> w, std::span<const T> b, std::span<const T> x,
                    std::span<T> y, int in, int out) {
    const T* __restrict xp = x.data();
    for (int o = 0; o < out; ++o) {
        const T* __restrict row = w.data() + static_cast<std::size_t>(o) * in;
        T acc = b.empty() ? T(0) : b[static_cast<std::size_t>(o)];
#pragma omp simd reduction(+ : acc)
        for (int i = 0; i < in; ++i) acc += row[i] * xp[i];
        y[static_cast<std::size_t>(o)] = acc;
    }
}

// Accumulates dW += dy x^T, db += dy and dx += W^T dy. Any of dw/db/dx may be
// empty to skip that output.
template <typename T>
void linear_backward(std::span<const T> w, std::span<const T> x, std::span<const T> dy,
                     std::span<T> dw, std::span<T> db, std::span<T> dx, int in, int out) {
    const T* __restrict xp = x.data();
    T* __restrict dxp = dx.data();
    for (int o = 0; o < out; ++o) {
        const T g = dy[static_cast<std::size_t>(o)];
        if (!db.empty()) db[static_cast<std::size_t>(o)] += g;
        const T* __restrict wrow = w.data() + static_cast<std::size_t>(o) * in;
        if (!dw.empty()) {
            T* __restrict dwrow = dw.data() + static_cast<std::size_t>(o) * in;
#pragma omp simd
            for (int i = 0; i < in; ++i) dwrow[i] += g * xp[i];
        }
        if (!dx.empty()) {
#pragma omp simd
            for (int i = 0; i < in; ++i) dxp[i] += g * wrow[i];
        }
    }
}

// Kaiming-uniform initialization, the usual default for ReLU stacks.
template <typename T>
void init_linear(std::span<T> w, std::span<T> b, int in, int /*out*/, Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(in));
    for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
    const float bbound = 1.0f / std::sqrt(static_cast<float>(in));
    for (auto& v : b) v = static_cast<T>(rng.uniform(-bbound, bbound));
}

}  // namespace nerfcast
