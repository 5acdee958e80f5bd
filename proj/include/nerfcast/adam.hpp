// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "nerfcast/param_store.hpp"

namespace nerfcast {

struct AdamConfig {
    float lr = 0.02f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Bias-corrected Adam over the trainable segments of a ParamStore.
template <typename T>
struct AdamState {
    AdamConfig cfg;
    ParamStore<T> m;
    ParamStore<T> v;
    uint64_t step = 0;

    AdamState() = default;
    AdamState(const ParamStore<T>& param_layout, const AdamConfig& c)
        : cfg(c), m(param_layout.zeros_like()), v(param_layout.zeros_like()) {}

    void reset() {
        m.fill(T(0));
        v.fill(T(0));
        step = 0;
    }

    // One update. `lr_scale` lets callers apply a schedule without touching
    // the stored base rate.
    void update(ParamStore<T>& p, const ParamStore<T>& grads, float lr_scale = 1.0f) {
        p.check_congruent(grads);
        p.check_congruent(m);
        ++step;
        const T b1 = static_cast<T>(cfg.beta1);
        const T b2 = static_cast<T>(cfg.beta2);
        const T bc1 = 1 - std::pow(b1, static_cast<T>(step));
        const T bc2 = 1 - std::pow(b2, static_cast<T>(step));
        const T lr = static_cast<T>(cfg.lr) * static_cast<T>(lr_scale);
        const T eps = static_cast<T>(cfg.eps);
        for (std::size_t s = 0; s < p.segments.size(); ++s) {
            if (!p.segments[s].trainable) continue;
            auto& pd = p.segments[s].data;
            const auto& gd = grads.segments[s].data;
            auto& md = m.segments[s].data;
            auto& vd = v.segments[s].data;
            for (std::size_t i = 0; i < pd.size(); ++i) {
                const T g = gd[i];
                md[i] = b1 * md[i] + (1 - b1) * g;
                vd[i] = b2 * vd[i] + (1 - b2) * g * g;
                const T mhat = md[i] / bc1;
                const T vhat = vd[i] / bc2;
                pd[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
};

}  // namespace nerfcast
