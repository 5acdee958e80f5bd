// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "nerfcast/camera.hpp"
#include "nerfcast/image.hpp"

namespace nerfcast {

struct Dataset {
    std::vector<CameraPose> poses;
    std::vector<Image> images;
    std::string split = "train";
};

// Loads the standard synthetic-scene layout: a transforms JSON manifest with
// per-frame 4x4 camera-to-world matrices plus image files. A raw .f32 dump
// next to a frame's PNG is preferred when present (exact values). Alpha is
// composited over white.
Dataset load_dataset(const std::string& dir, const std::string& split = "train");

// Writes transforms_<split>.json plus PNG and raw f32 images per frame.
void save_dataset(const std::string& dir, const Dataset& ds);

}  // namespace nerfcast
