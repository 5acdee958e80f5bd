// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace nerfcast {

struct EncodingConfig {
    int n_freq = 0;
    bool include_input = true;

    int output_dim(int input_dim) const {
        return input_dim * ((include_input ? 1 : 0) + 2 * n_freq);
    }
};

// Frequency (sin/cos) encoding. Per input component p emits
// (sin(2^k pi p), cos(2^k pi p)) for k = 0..n_freq-1, with the raw input
// prepended when include_input is set. Higher octaves come from the
// double-angle recursion, which costs two trig calls per component instead
// of 2*n_freq.
template <typename T>
void positional_encode(std::span<const T> input, const EncodingConfig& cfg, std::span<T> out) {
    std::size_t o = 0;
    if (cfg.include_input)
        for (T p : input) out[o++] = p;
    for (T p : input) {
        const T arg = static_cast<T>(M_PI) * p;
        T s = std::sin(arg);
        T c = std::cos(arg);
        for (int k = 0; k < cfg.n_freq; ++k) {
            out[o++] = s;
            out[o++] = c;
            const T s2 = 2 * s * c;
            c = (c - s) * (c + s);
            s = s2;
        }
    }
}

template <typename T>
std::vector<T> positional_encode(std::span<const T> input, const EncodingConfig& cfg) {
    std::vector<T> out(cfg.output_dim(static_cast<int>(input.size())));
    positional_encode(input, cfg, std::span<T>(out));
    return out;
}

// No parameters, so backward only chains dL/d(input) when needed. Training
// never differentiates w.r.t. sample positions or view directions, so this
// exists for completeness and testing.
template <typename T>
void positional_encode_backward(std::span<const T> input, const EncodingConfig& cfg,
                                std::span<const T> dL_dout, std::span<T> dL_din) {
    std::size_t o = 0;
    for (std::size_t i = 0; i < input.size(); ++i) dL_din[i] = 0;
    if (cfg.include_input)
        for (std::size_t i = 0; i < input.size(); ++i) dL_din[i] += dL_dout[o++];
    for (std::size_t i = 0; i < input.size(); ++i) {
        T arg = static_cast<T>(M_PI) * input[i];
        T scale = static_cast<T>(M_PI);
        for (int k = 0; k < cfg.n_freq; ++k) {
            dL_din[i] += dL_dout[o++] * scale * std::cos(arg);
            dL_din[i] -= dL_dout[o++] * scale * std::sin(arg);
            arg *= 2;
            scale *= 2;
        }
    }
}

}  // namespace nerfcast
