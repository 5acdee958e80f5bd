// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

// Pinhole camera. `rotation` maps camera coordinates to world coordinates
// (camera looks along its local -Z, +X right, +Y up — the usual synthetic
// dataset convention).
struct CameraPose {
    Mat3f rotation = Mat3f::identity();
    Vec3f translation{0, 0, 0};
    float focal = 1.0f;       // pixels
    float cx = 0.5f, cy = 0.5f;  // principal point, pixels
    int width = 1, height = 1;

    void validate() const {
        if (focal <= 0) throw InputError("CameraPose: focal must be > 0");
        if (width < 1 || height < 1) throw InputError("CameraPose: image size must be >= 1x1");
        if (orthonormality_error(rotation) > 1e-5f)
            throw InputError("CameraPose: rotation is not orthonormal");
    }
};

struct Ray {
    Vec3f origin{};
    Vec3f dir{};  // unit length
    float t_near = 0.0f;
    float t_far = 1.0f;
};

// Ray through the continuous pixel coordinate (u, v). Pixel centers are at
// half-integers; passing (cx, cy) yields the optical axis exactly.
inline Ray pixel_ray(const CameraPose& pose, float u, float v) {
    Vec3f d_cam{(u - pose.cx) / pose.focal, -(v - pose.cy) / pose.focal, -1.0f};
    Ray r;
    r.origin = pose.translation;
    r.dir = normalized(pose.rotation * d_cam);
    return r;
}

// One ray per requested pixel coordinate. Coordinates outside [0,w]x[0,h]
// are rejected.
inline std::vector<Ray> generate_rays(const CameraPose& pose,
                                      const std::vector<std::pair<float, float>>& pixels) {
    pose.validate();
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (const auto& [u, v] : pixels) {
        if (u < 0 || u > static_cast<float>(pose.width) || v < 0 || v > static_cast<float>(pose.height))
            throw InputError("generate_rays: pixel outside image bounds");
        rays.push_back(pixel_ray(pose, u, v));
    }
    return rays;
}

// Pose at `position` looking at `target`, `up` breaking the roll ambiguity.
inline CameraPose look_at(const Vec3f& position, const Vec3f& target, const Vec3f& up,
                          float focal, int width, int height) {
    Vec3f fwd = normalized(target - position);
    Vec3f right = cross(fwd, up);
    float rn = norm(right);
    if (rn < 1e-6f) {
        // Looking straight along `up`; pick an arbitrary perpendicular.
        right = cross(fwd, Vec3f{1, 0, 0});
        rn = norm(right);
        if (rn < 1e-6f) { right = cross(fwd, Vec3f{0, 1, 0}); rn = norm(right); }
    }
    right = right / rn;
    Vec3f cam_up = cross(right, fwd);
    CameraPose pose;
    pose.rotation = Mat3f{{right, cam_up, -fwd}};  // camera -Z points at target
    pose.translation = position;
    pose.focal = focal;
    pose.width = width;
    pose.height = height;
    pose.cx = 0.5f * static_cast<float>(width);
    pose.cy = 0.5f * static_cast<float>(height);
    return pose;
}

// Intersection of a ray with an axis-aligned box; false when the ray misses.
inline bool ray_box(const Vec3f& origin, const Vec3f& dir, const Vec3f& lo, const Vec3f& hi,
                    float& t0, float& t1) {
    t0 = 0.0f;
    t1 = 1e30f;
    for (int a = 0; a < 3; ++a) {
        float d = dir[a];
        if (std::abs(d) < 1e-12f) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) return false;
            continue;
        }
        float inv = 1.0f / d;
        float ta = (lo[a] - origin[a]) * inv;
        float tb = (hi[a] - origin[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace nerfcast
