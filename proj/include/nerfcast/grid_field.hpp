// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "nerfcast/activations.hpp"
#include "nerfcast/field_common.hpp"
#include "nerfcast/instrumentation.hpp"
#include "nerfcast/interpolation.hpp"
#include "nerfcast/param_store.hpp"
#include "nerfcast/sh.hpp"

namespace nerfcast {

struct GridConfig {
    int resolution = 128;  // cells per axis; values live at cell centers
    int sh_degree = 2;

    void validate() const {
        if (resolution < 1) throw InputError("grid: resolution must be >= 1");
        if (sh_degree < 0 || sh_degree > 3) throw InputError("grid: sh_degree must be in [0,3]");
    }
    int sh_per_channel() const { return sh_coeff_count(sh_degree); }
};

// Explicit density + spherical-harmonics grid. The decoder is the identity on
// density and an SH evaluation on color, so phi1 already carries everything.
// Density activation is a plain ReLU clamp on the interpolated value. An
// occupancy mask gates density reads and gradients; cleared voxels read as
// empty space.
template <typename T>
class GridField {
public:
    GridConfig cfg;
    FieldBounds<T> bounds;
    ParamStore<T> params;

    GridField() = default;
    explicit GridField(const GridConfig& c, uint64_t seed = 0) : cfg(c) {
        cfg.validate();
        const auto r = static_cast<std::size_t>(cfg.resolution);
        const auto n = r * r * r;
        params.add("grid.sigma", {r, r, r});
        params.add("grid.sh", {n, static_cast<std::size_t>(3 * cfg.sh_per_channel())});
        params.add("grid.mask", {r, r, r}, /*trainable=*/false);
        init(seed);
    }

    void init(uint64_t /*seed*/) {
        // Small positive density so ReLU gradients flow from the start; SH at
        // zero renders mid-gray.
        for (auto& v : params.at("grid.sigma").data) v = T(0.1);
        for (auto& v : params.at("grid.sh").data) v = T(0);
        for (auto& v : params.at("grid.mask").data) v = T(1);
    }

    int phi1_dim() const { return 1 + 3 * cfg.sh_per_channel(); }
    std::size_t cache_size() const { return 0; }  // backward recomputes the stencil

    void phi1(const Vec3<T>& x, const Vec3<T>& /*d*/, std::span<T> feature,
              T* /*cache*/ = nullptr) const {
        std::fill(feature.begin(), feature.end(), T(0));
        if (!bounds.contains(x)) return;
        const auto st = stencil_at(x);
        const auto& sig = params.segments[0].data;
        const auto& sh = params.segments[1].data;
        const auto& mask = params.segments[2].data;
        const int nc = 3 * cfg.sh_per_channel();
        T s = 0;
        for (int j = 0; j < 8; ++j) {
            const std::size_t c = st.idx[j];
            s += st.w[j] * sig[c] * mask[c];
            const T* coeff = sh.data() + c * static_cast<std::size_t>(nc);
            for (int k = 0; k < nc; ++k) feature[static_cast<std::size_t>(1 + k)] += st.w[j] * coeff[k];
        }
        feature[0] = relu(s);
    }

    PointSample<T> phi2(std::span<const T> feature, const Vec3<T>& d,
                        T* /*cache*/ = nullptr) const {
        if (static_cast<int>(feature.size()) != phi1_dim())
            throw InputError("grid phi2: feature length mismatch");
        instr::phi2_evals.fetch_add(1, std::memory_order_relaxed);
        PointSample<T> out;
        out.sigma = feature[0];
        out.color = sh_eval<T>(feature.subspan(1), d, cfg.sh_degree);
        return out;
    }

    PointSample<T> query(const Vec3<T>& x, const Vec3<T>& d, std::span<T> feature_out = {},
                         T* cache = nullptr) const {
        auto feat = detail::tls_span<T>(0, static_cast<std::size_t>(phi1_dim()));
        phi1(x, d, feat, cache);
        if (!feature_out.empty()) std::copy(feat.begin(), feat.end(), feature_out.begin());
        if (!bounds.contains(x)) return PointSample<T>{};
        return phi2(feat, d, cache);
    }

    void backward(const Vec3<T>& x, const Vec3<T>& d, const T* /*cache*/, const PointGrad<T>& g,
                  ParamStore<T>& grads) const {
        if (!bounds.contains(x)) return;
        // Recompute the interpolated feature (cheap) for the SH chain rule.
        auto feat = detail::tls_span<T>(2, static_cast<std::size_t>(phi1_dim()));
        phi1(x, d, feat);
        auto dfeat = detail::tls_zeros<T>(3, static_cast<std::size_t>(phi1_dim()));
        sh_eval_backward<T>(std::span<const T>(feat).subspan(1), d, cfg.sh_degree, g.dcolor,
                            dfeat.subspan(1));
        dfeat[0] = g.dsigma;
        if (!g.dfeature.empty())
            for (int k = 0; k < phi1_dim(); ++k)
                dfeat[static_cast<std::size_t>(k)] += g.dfeature[static_cast<std::size_t>(k)];
        scatter_phi1(x, feat[0], dfeat, grads);
    }

    void phi1_backward(const Vec3<T>& x, const Vec3<T>& d, const T* /*cache*/,
                       std::span<const T> dfeature, ParamStore<T>& grads) const {
        if (!bounds.contains(x)) return;
        auto feat = detail::tls_span<T>(2, static_cast<std::size_t>(phi1_dim()));
        phi1(x, d, feat);
        scatter_phi1(x, feat[0], dfeature, grads);
    }

    // Zero density and clear occupancy for every cell whose center lies in the
    // world-space box. SH coefficients are left untouched. Returns the number
    // of cells affected.
    std::size_t erase_region(const Vec3<T>& box_lo, const Vec3<T>& box_hi) {
        auto& sig = params.at("grid.sigma").data;
        auto& mask = params.at("grid.mask").data;
        const int r = cfg.resolution;
        std::size_t hits = 0;
        for (int z = 0; z < r; ++z)
            for (int y = 0; y < r; ++y)
                for (int x = 0; x < r; ++x) {
                    const Vec3<T> c = cell_center(x, y, z);
                    if (c.x >= box_lo.x && c.x <= box_hi.x && c.y >= box_lo.y && c.y <= box_hi.y &&
                        c.z >= box_lo.z && c.z <= box_hi.z) {
                        const std::size_t i = flat(x, y, z);
                        sig[i] = 0;
                        mask[i] = 0;
                        ++hits;
                    }
                }
        return hits;
    }

    Vec3<T> cell_center(int x, int y, int z) const {
        const T r = static_cast<T>(cfg.resolution);
        Vec3<T> u{(static_cast<T>(x) + T(0.5)) / r, (static_cast<T>(y) + T(0.5)) / r,
                  (static_cast<T>(z) + T(0.5)) / r};
        return {bounds.lo.x + u.x * (bounds.hi.x - bounds.lo.x),
                bounds.lo.y + u.y * (bounds.hi.y - bounds.lo.y),
                bounds.lo.z + u.z * (bounds.hi.z - bounds.lo.z)};
    }

    std::size_t flat(int x, int y, int z) const {
        const auto r = static_cast<std::size_t>(cfg.resolution);
        return static_cast<std::size_t>(x) + r * (static_cast<std::size_t>(y) + r * static_cast<std::size_t>(z));
    }

private:
    GridStencil<T> stencil_at(const Vec3<T>& x) const {
        const Vec3<T> u01 = bounds.to_unit(x);
        const T r = static_cast<T>(cfg.resolution);
        // Cell-center convention: center i sits at (i + 0.5) / resolution.
        const Vec3<T> u{u01.x * r - T(0.5), u01.y * r - T(0.5), u01.z * r - T(0.5)};
        return grid_stencil(u, cfg.resolution, cfg.resolution, cfg.resolution);
    }

    void scatter_phi1(const Vec3<T>& x, T sigma_interp_post, std::span<const T> dfeat,
                      ParamStore<T>& grads) const {
        const auto st = stencil_at(x);
        const auto& mask = params.segments[2].data;
        auto& dsig = grads.segments[0].data;
        auto& dsh = grads.segments[1].data;
        const int nc = 3 * cfg.sh_per_channel();
        // ReLU on the interpolated density: zero grad when it clamped.
        const T dsig_interp = (sigma_interp_post > 0) ? dfeat[0] : T(0);
        for (int j = 0; j < 8; ++j) {
            const std::size_t c = st.idx[j];
            dsig[c] += dsig_interp * st.w[j] * mask[c];
            T* dcoeff = dsh.data() + c * static_cast<std::size_t>(nc);
            for (int k = 0; k < nc; ++k) dcoeff[k] += dfeat[static_cast<std::size_t>(1 + k)] * st.w[j];
        }
    }
};

}  // namespace nerfcast
