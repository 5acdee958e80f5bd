// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nerfcast/image.hpp"

namespace nerfcast {

// Peak signal-to-noise ratio in dB for [0,1] images; returns +infinity for
// identical images.
double psnr(const Image& a, const Image& b);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
// averaged over valid window positions and channels. Images must be at least
// 11x11.
double ssim(const Image& a, const Image& b);

}  // namespace nerfcast
