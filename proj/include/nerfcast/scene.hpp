// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

// Analytic density/color field used as exact ground truth for teacher
// training and for the acceptance scenes. Geometry is a list of constant-
// density primitives; color may be a checker pattern and/or view-tinted.
struct Primitive {
    enum class Kind { Sphere, Box } kind = Kind::Sphere;
    Vec3f center{0, 0, 0};
    Vec3f half{0.5f, 0.5f, 0.5f};  // sphere radius in half.x
    float density = 80.0f;
    Vec3f color{0.7f, 0.7f, 0.7f};
    Vec3f color2{0, 0, 0};      // second checker color
    float checker = 0.0f;       // checker cells per scene unit; 0 = solid
    float tint = 0.0f;          // view-dependent brightness coefficient
    Vec3f tint_axis{0, 0, 1};

    bool contains(const Vec3f& x) const {
        const Vec3f d = x - center;
        if (kind == Kind::Sphere) return dot(d, d) <= half.x * half.x;
        return std::abs(d.x) <= half.x && std::abs(d.y) <= half.y && std::abs(d.z) <= half.z;
    }

    float volume() const {
        if (kind == Kind::Sphere)
            return 4.18879020478639098f * half.x * half.x * half.x;  // 4/3 pi r^3
        return 8.0f * half.x * half.y * half.z;
    }

    // Signed distance, negative inside. Used by tests to probe boundaries.
    float signed_distance(const Vec3f& x) const {
        const Vec3f d = x - center;
        if (kind == Kind::Sphere) return norm(d) - half.x;
        const Vec3f q{std::abs(d.x) - half.x, std::abs(d.y) - half.y, std::abs(d.z) - half.z};
        const Vec3f mx = cwise_max(q, Vec3f{0, 0, 0});
        const float outside = norm(mx);
        const float inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0f);
        return outside + inside;
    }

    // Does the ray segment [t0, t1] pass through this primitive?
    bool intersects_segment(const Vec3f& o, const Vec3f& dir, float t0, float t1) const;
};

struct ProceduralScene {
    std::vector<Primitive> primitives;
    Vec3f background{0, 0, 0};
    Vec3f bounds_lo{-1, -1, -1};
    Vec3f bounds_hi{1, 1, 1};

    void validate() const;

    // Density and color at a point for a view direction. The innermost
    // (smallest-volume) containing primitive wins.
    void query(const Vec3f& x, const Vec3f& d, float& sigma, Vec3f& color) const;
};

// Built-in scene names ("tri-sphere", "tri-sphere-dense", "half-texture",
// "empty", "single-sphere") or a path to a scene JSON file.
ProceduralScene make_scene(const std::string& name_or_path);

// Scene description as JSON text (round-trips through make_scene).
std::string scene_to_json(const ProceduralScene& scene);

}  // namespace nerfcast
