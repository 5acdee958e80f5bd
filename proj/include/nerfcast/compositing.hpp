// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/instrumentation.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

template <typename T>
struct RenderOutput {
    Vec3<T> rgb{};
    std::vector<T> weights;  // w_i = T_i * (1 - exp(-sigma_i * delta_i))
    T t_end{1};              // residual transmittance past the last sample
    T depth{0};              // weight-averaged t, diagnostic only
};

// Alpha-compositing quadrature along one ray. Transmittance uses the prefix
// sum T_i = exp(-sum_{j<i} sigma_j * delta_j), so sum(w_i) + t_end == 1.
// Accumulation runs in double regardless of T to keep that identity tight.
template <typename T>
RenderOutput<T> composite(std::span<const T> sigmas, std::span<const Vec3<T>> colors,
                          std::span<const T> deltas, bool white_background = false,
                          std::span<const T> ts = {}) {
    const std::size_t n = sigmas.size();
    if (n == 0 || colors.size() != n || deltas.size() != n)
        throw InputError("composite: sigma/color/delta arrays must be equal nonzero length");
    instr::composite_calls.fetch_add(1, std::memory_order_relaxed);

    RenderOutput<T> out;
    out.weights.resize(n);
    double trans = 1.0;
    double r = 0, g = 0, b = 0, depth = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sigma = static_cast<double>(sigmas[i]);
        const double delta = static_cast<double>(deltas[i]);
        if (!(sigma >= 0) || !(delta >= 0))
            throw InputError("composite: sigma and delta must be >= 0 and finite");
        if (!std::isfinite(static_cast<double>(colors[i].x)) ||
            !std::isfinite(static_cast<double>(colors[i].y)) ||
            !std::isfinite(static_cast<double>(colors[i].z)))
            throw InputError("composite: non-finite color");
        const double alpha = -std::expm1(-sigma * delta);  // 1 - exp(-sigma*delta)
        const double w = trans * alpha;
        out.weights[i] = static_cast<T>(w);
        r += w * static_cast<double>(colors[i].x);
        g += w * static_cast<double>(colors[i].y);
        b += w * static_cast<double>(colors[i].z);
        if (!ts.empty()) depth += w * static_cast<double>(ts[i]);
        trans *= std::exp(-sigma * delta);
    }
    out.t_end = static_cast<T>(trans);
    if (white_background) {
        r += trans;
        g += trans;
        b += trans;
    }
    out.rgb = {static_cast<T>(r), static_cast<T>(g), static_cast<T>(b)};
    out.depth = static_cast<T>(depth);
    return out;
}

// Backward pass of composite(): given dL/d(rgb), produce per-sample
// dL/d(sigma_i) and dL/d(color_i). Uses the closed form
//   dL/dsigma_i = delta_i * (T_{i+1} * g_i - S_i - [white] * gw * T_end),
// where g_j = dL/dC . c_j and S_i = sum_{j>i} w_j g_j.
template <typename T>
void composite_backward(std::span<const T> sigmas, std::span<const Vec3<T>> colors,
                        std::span<const T> deltas, const Vec3<T>& dL_drgb,
                        bool white_background, std::span<T> dL_dsigma,
                        std::span<Vec3<T>> dL_dcolor) {
    const std::size_t n = sigmas.size();
    std::vector<double> trans(n + 1);
    std::vector<double> w(n);
    trans[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sd = static_cast<double>(sigmas[i]) * static_cast<double>(deltas[i]);
        const double alpha = -std::expm1(-sd);
        w[i] = trans[i] * alpha;
        trans[i + 1] = trans[i] * std::exp(-sd);
    }
    const double gw = static_cast<double>(dL_drgb.x) + static_cast<double>(dL_drgb.y) +
                      static_cast<double>(dL_drgb.z);
    double suffix = 0.0;  // sum_{j>i} w_j g_j, built back to front
    for (std::size_t k = n; k-- > 0;) {
        const double gk = static_cast<double>(dL_drgb.x) * static_cast<double>(colors[k].x) +
                          static_cast<double>(dL_drgb.y) * static_cast<double>(colors[k].y) +
                          static_cast<double>(dL_drgb.z) * static_cast<double>(colors[k].z);
        double ds = trans[k + 1] * gk - suffix;
        if (white_background) ds -= gw * trans[n];
        dL_dsigma[k] = static_cast<T>(static_cast<double>(deltas[k]) * ds);
        dL_dcolor[k] = dL_drgb * static_cast<T>(w[k]);
        suffix += w[k] * gk;
    }
}

}  // namespace nerfcast
