// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "nerfcast/camera.hpp"
#include "nerfcast/errors.hpp"
#include "nerfcast/rng.hpp"

namespace nerfcast {

enum class SampleMode { Midpoint, Jittered };

// Stratified sample points along one ray. t values are strictly increasing;
// delta[i] = t[i+1] - t[i] with the last spacing clamped to the far plane.
struct SampleSet {
    std::vector<float> t;
    std::vector<float> delta;
    std::vector<Vec3f> pos;
};

inline SampleSet stratify_samples(const Ray& ray, int n, SampleMode mode, Rng& rng) {
    if (n < 1) throw InputError("stratify_samples: n must be >= 1");
    if (!(ray.t_near < ray.t_far)) throw InputError("stratify_samples: need t_near < t_far");
    SampleSet s;
    s.t.resize(n);
    s.delta.resize(n);
    s.pos.resize(n);
    const float span = ray.t_far - ray.t_near;
    const float bin = span / static_cast<float>(n);
    for (int i = 0; i < n; ++i) {
        float frac = (mode == SampleMode::Midpoint) ? 0.5f : rng.uniform();
        s.t[i] = ray.t_near + (static_cast<float>(i) + frac) * bin;
    }
    for (int i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
    s.delta[n - 1] = ray.t_far - s.t[n - 1];
    for (int i = 0; i < n; ++i) s.pos[i] = ray.origin + ray.dir * s.t[i];
    return s;
}

}  // namespace nerfcast
