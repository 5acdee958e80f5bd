// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

// Float RGB image, interleaved, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // 3 * width * height

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0.0f) {}

    float* pixel(int x, int y) {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    const float* pixel(int x, int y) const {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    void set_pixel(int x, int y, const Vec3f& c) {
        float* p = pixel(x, y);
        p[0] = c.x;
        p[1] = c.y;
        p[2] = c.z;
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// 8-bit PNG IO (RGB; grayscale accepted on read). Quantizes on write.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);
void write_png_gray(const std::string& path, const std::vector<float>& values, int w, int h);

// Raw little-endian f32 planar dump: all R, then G, then B. Bit-exact
// round-trip companion to the quantized PNG.
void write_raw_f32(const std::string& path, const Image& img);
Image read_raw_f32(const std::string& path, int width, int height);

}  // namespace nerfcast
