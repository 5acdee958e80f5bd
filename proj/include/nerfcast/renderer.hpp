// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "nerfcast/camera.hpp"
#include "nerfcast/compositing.hpp"
#include "nerfcast/field_model.hpp"
#include "nerfcast/image.hpp"
#include "nerfcast/sampling.hpp"
#include "nerfcast/scene.hpp"

namespace nerfcast {

struct RenderOptions {
    int samples_per_ray = 48;
    bool white_background = false;
    SampleMode mode = SampleMode::Midpoint;
    uint64_t seed = 0;  // only used in jittered mode
};

// Any density/color field: (position, direction) -> (sigma, rgb).
using QueryFn = std::function<void(const Vec3f&, const Vec3f&, float&, Vec3f&)>;

QueryFn query_fn(const FieldModel<float>& field);
QueryFn query_fn(const ProceduralScene& scene);

// Quadrature along one ray against the scene box. Returns background (or
// white) when the ray misses the box entirely.
RenderOutput<float> render_ray(const QueryFn& q, const Ray& ray, const RenderOptions& opt,
                               const Vec3f& box_lo, const Vec3f& box_hi, Rng& rng);

// Full image render, row-parallel, deterministic in midpoint mode.
Image render_image(const QueryFn& q, const CameraPose& pose, const RenderOptions& opt,
                   const Vec3f& box_lo = {-1, -1, -1}, const Vec3f& box_hi = {1, 1, 1});

}  // namespace nerfcast
