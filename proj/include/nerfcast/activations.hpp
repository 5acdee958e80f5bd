// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace nerfcast {

template <typename T>
T sigmoid_act(T x) {
    if (x >= 0) return 1 / (1 + std::exp(-x));
    T e = std::exp(x);
    return e / (1 + e);
}

// Density activation for MLP / VM / hash decoders: softplus shifted left by 1
// so a zero pre-activation maps to a small positive density.
template <typename T>
T shifted_softplus(T x) {
    T z = x - 1;
    if (z > 20) return z;  // avoids exp overflow; exact to T precision
    return std::log1p(std::exp(z));
}

template <typename T>
T shifted_softplus_grad(T x) {
    return sigmoid_act(x - 1);
}

template <typename T>
T relu(T x) {
    return x > 0 ? x : 0;
}

}  // namespace nerfcast
