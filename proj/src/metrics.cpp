// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include "nerfcast/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace nerfcast {

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw InputError("psnr: image dimensions differ");
    if (a.data.empty()) throw InputError("psnr: empty image");
    double mse = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {
constexpr int kWin = 11;

const std::vector<double>& gaussian_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> g(kWin * kWin);
        const double sigma = 1.5;
        double sum = 0;
        for (int y = 0; y < kWin; ++y)
            for (int x = 0; x < kWin; ++x) {
                const double dx = x - kWin / 2, dy = y - kWin / 2;
                const double v = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
                g[static_cast<std::size_t>(y * kWin + x)] = v;
                sum += v;
            }
        for (auto& v : g) v /= sum;
        return g;
    }();
    return k;
}
}  // namespace

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw InputError("ssim: image dimensions differ");
    if (a.width < kWin || a.height < kWin)
        throw InputError("ssim: image smaller than the 11x11 window");
    const auto& kern = gaussian_kernel();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    std::size_t count = 0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y + kWin <= a.height; ++y) {
            for (int x = 0; x + kWin <= a.width; ++x) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int wy = 0; wy < kWin; ++wy)
                    for (int wx = 0; wx < kWin; ++wx) {
                        const double w = kern[static_cast<std::size_t>(wy * kWin + wx)];
                        const double va = a.pixel(x + wx, y + wy)[ch];
                        const double vb = b.pixel(x + wx, y + wy)[ch];
                        mx += w * va;
                        my += w * vb;
                        mxx += w * va * va;
                        myy += w * vb * vb;
                        mxy += w * va * vb;
                    }
                const double sx = mxx - mx * mx;
                const double sy = myy - my * my;
                const double sxy = mxy - mx * my;
                const double v = ((2 * mx * my + c1) * (2 * sxy + c2)) /
                                 ((mx * mx + my * my + c1) * (sx + sy + c2));
                total += v;
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace nerfcast
