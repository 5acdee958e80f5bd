// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "nerfcast/camera.hpp"
#include "nerfcast/errors.hpp"
#include "nerfcast/rng.hpp"

namespace nerfcast {

enum class PoseLayout { Sphere, Hemisphere, JitterOfTrain };

inline PoseLayout pose_layout_from_name(const std::string& s) {
    if (s == "sphere") return PoseLayout::Sphere;
    if (s == "hemisphere") return PoseLayout::Hemisphere;
    if (s == "jitter-of-train") return PoseLayout::JitterOfTrain;
    throw InputError("unknown pose layout '" + s + "'");
}

// Synthetic look-at poses aimed at the scene center. Distillation consumes
// only these (plus the teacher); it never reads dataset images. Elevation is
// non-negative in hemisphere mode. jitter-of-train perturbs the provided base
// poses instead of sampling fresh ones.
inline std::vector<CameraPose> generate_pseudo_poses(
    int n, PoseLayout layout, float radius_min, float radius_max, float fov_deg, int width,
    int height, Rng& rng, const Vec3f& center = {0, 0, 0},
    const std::vector<CameraPose>& base_poses = {}) {
    if (n < 1) throw InputError("generate_pseudo_poses: n must be >= 1");
    const float focal =
        0.5f * static_cast<float>(width) / std::tan(0.5f * fov_deg * 3.14159265358979323846f / 180.0f);
    std::vector<CameraPose> poses;
    poses.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (layout == PoseLayout::JitterOfTrain) {
            if (base_poses.empty())
                throw InputError("jitter-of-train layout requires base poses");
            CameraPose p = base_poses[static_cast<std::size_t>(i) % base_poses.size()];
            Vec3f pos = p.translation;
            for (int a = 0; a < 3; ++a)
                pos[static_cast<std::size_t>(a)] += 0.05f * (rng.uniform() * 2 - 1);
            poses.push_back(look_at(pos, center, Vec3f{0, 0, 1}, p.focal, p.width, p.height));
            continue;
        }
        const float az = rng.uniform(0.0f, 2.0f * 3.14159265358979323846f);
        const float el_max = 1.25f;  // ~72 degrees; avoids degenerate top-down poses
        const float el = (layout == PoseLayout::Hemisphere) ? rng.uniform(0.0f, el_max)
                                                            : rng.uniform(-el_max, el_max);
        const float r = rng.uniform(radius_min, radius_max);
        const Vec3f pos = center + Vec3f{r * std::cos(el) * std::cos(az),
                                         r * std::cos(el) * std::sin(az), r * std::sin(el)};
        poses.push_back(look_at(pos, center, Vec3f{0, 0, 1}, focal, width, height));
    }
    return poses;
}

}  // namespace nerfcast
