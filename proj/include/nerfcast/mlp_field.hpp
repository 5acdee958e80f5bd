// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "nerfcast/activations.hpp"
#include "nerfcast/encoding.hpp"
#include "nerfcast/field_common.hpp"
#include "nerfcast/instrumentation.hpp"
#include "nerfcast/linear.hpp"
#include "nerfcast/param_store.hpp"

namespace nerfcast {

struct MlpConfig {
    int depth = 8;          // density trunk layers
    int width = 256;
    int split_k = 4;        // encoder = first split_k trunk layers
    int bottleneck = 256;   // pre-color linear, no activation
    int color_hidden = 128;
    EncodingConfig enc_x{10, true};
    EncodingConfig enc_d{4, true};

    void validate() const {
        if (depth < 2) throw InputError("mlp: depth must be >= 2");
        if (split_k < 1 || split_k >= depth)
            throw InputError("mlp: split index must satisfy 1 <= K < depth");
        if (width < 1 || bottleneck < 1 || color_hidden < 1)
            throw InputError("mlp: layer widths must be >= 1");
    }
};

// Coordinate MLP with a view-conditioned color head. The view direction is
// injected after the density trunk, so the encoder output depends on position
// only. Trunk activations are ReLU; density is shifted-softplus; color is
// sigmoid.
template <typename T>
class MlpField {
public:
    MlpConfig cfg;
    FieldBounds<T> bounds;
    ParamStore<T> params;

    MlpField() = default;
    explicit MlpField(const MlpConfig& c, uint64_t seed = 0) : cfg(c) {
        cfg.validate();
        const int ex = cfg.enc_x.output_dim(3);
        const int ed = cfg.enc_d.output_dim(3);
        for (int l = 0; l < cfg.depth; ++l) {
            const int in = (l == 0) ? ex : cfg.width;
            params.add("trunk." + std::to_string(l) + ".w",
                       {static_cast<std::size_t>(cfg.width), static_cast<std::size_t>(in)});
            params.add("trunk." + std::to_string(l) + ".b", {static_cast<std::size_t>(cfg.width)});
        }
        params.add("sigma.w", {1, static_cast<std::size_t>(cfg.width)});
        params.add("sigma.b", {1});
        params.add("bottleneck.w",
                   {static_cast<std::size_t>(cfg.bottleneck), static_cast<std::size_t>(cfg.width)});
        params.add("bottleneck.b", {static_cast<std::size_t>(cfg.bottleneck)});
        params.add("color.0.w", {static_cast<std::size_t>(cfg.color_hidden),
                                 static_cast<std::size_t>(cfg.bottleneck + ed)});
        params.add("color.0.b", {static_cast<std::size_t>(cfg.color_hidden)});
        params.add("color.1.w", {3, static_cast<std::size_t>(cfg.color_hidden)});
        params.add("color.1.b", {3});
        init(seed);
    }

    void init(uint64_t seed) {
        Rng rng(seed, 11);
        const int ex = cfg.enc_x.output_dim(3);
        const int ed = cfg.enc_d.output_dim(3);
        auto s = [&](const char* n) { return std::span<T>(params.at(n).data); };
        for (int l = 0; l < cfg.depth; ++l) {
            const int in = (l == 0) ? ex : cfg.width;
            init_linear<T>(params.at("trunk." + std::to_string(l) + ".w").data,
                           params.at("trunk." + std::to_string(l) + ".b").data, in, cfg.width, rng);
        }
        init_linear<T>(s("sigma.w"), s("sigma.b"), cfg.width, 1, rng);
        init_linear<T>(s("bottleneck.w"), s("bottleneck.b"), cfg.width, cfg.bottleneck, rng);
        init_linear<T>(s("color.0.w"), s("color.0.b"), cfg.bottleneck + ed, cfg.color_hidden, rng);
        init_linear<T>(s("color.1.w"), s("color.1.b"), cfg.color_hidden, 3, rng);
    }

    int phi1_dim() const { return cfg.width; }

    // Cache layout: [flag, a_0 (ex), a_1..a_depth (depth*width), u (bneck),
    //                enc_d (ed), hc (color_hidden), rgb_raw (3), sigma_raw (1)]
    std::size_t cache_size() const {
        return 1 + static_cast<std::size_t>(cfg.enc_x.output_dim(3)) +
               static_cast<std::size_t>(cfg.depth) * cfg.width + cfg.bottleneck +
               cfg.enc_d.output_dim(3) + cfg.color_hidden + 4;
    }

    void phi1(const Vec3<T>& x, const Vec3<T>& /*d*/, std::span<T> feature,
              T* cache = nullptr) const {
        const int ex = cfg.enc_x.output_dim(3);
        std::fill(feature.begin(), feature.end(), T(0));
        if (!bounds.contains(x)) {
            if (cache) cache[0] = 0;
            return;
        }
        if (!cache)
            cache = detail::tls_span<T>(2, 1 + static_cast<std::size_t>(ex) +
                                               static_cast<std::size_t>(cfg.split_k) * cfg.width)
                        .data();
        cache[0] = 1;
        T* a0 = cache + 1;
        const Vec3<T> xs = bounds.to_sym(x);
        const T xin[3] = {xs.x, xs.y, xs.z};
        positional_encode<T>(std::span<const T>(xin, 3), cfg.enc_x,
                             std::span<T>(a0, static_cast<std::size_t>(ex)));
        const T* prev = a0;
        int prev_dim = ex;
        for (int l = 0; l < cfg.split_k; ++l) {
            T* out = cache + 1 + ex + static_cast<std::size_t>(l) * cfg.width;
            linear_forward<T>(wseg(2 * l), wseg(2 * l + 1), std::span<const T>(prev, prev_dim),
                              std::span<T>(out, static_cast<std::size_t>(cfg.width)), prev_dim,
                              cfg.width);
            for (int i = 0; i < cfg.width; ++i) out[i] = relu(out[i]);
            prev = out;
            prev_dim = cfg.width;
        }
        std::copy(prev, prev + cfg.width, feature.begin());
    }

    PointSample<T> phi2(std::span<const T> feature, const Vec3<T>& d, T* cache = nullptr) const {
        if (static_cast<int>(feature.size()) != cfg.width)
            throw InputError("mlp phi2: feature length mismatch");
        instr::phi2_evals.fetch_add(1, std::memory_order_relaxed);
        const int ex = cfg.enc_x.output_dim(3);
        const int ed = cfg.enc_d.output_dim(3);
        if (!cache) {
            cache = detail::tls_span<T>(3, cache_size()).data();
            cache[0] = 1;
        }
        T* a = cache + 1 + ex;
        T* seam = a + static_cast<std::size_t>(cfg.split_k - 1) * cfg.width;
        if (seam != feature.data()) std::copy(feature.begin(), feature.end(), seam);
        const T* prev = seam;
        for (int l = cfg.split_k; l < cfg.depth; ++l) {
            T* out = a + static_cast<std::size_t>(l) * cfg.width;
            linear_forward<T>(wseg(2 * l), wseg(2 * l + 1), std::span<const T>(prev, cfg.width),
                              std::span<T>(out, static_cast<std::size_t>(cfg.width)), cfg.width,
                              cfg.width);
            for (int i = 0; i < cfg.width; ++i) out[i] = relu(out[i]);
            prev = out;
        }
        T* u = a + static_cast<std::size_t>(cfg.depth) * cfg.width;
        T* encd = u + cfg.bottleneck;
        T* hc = encd + ed;
        T* rgb_raw = hc + cfg.color_hidden;
        T* sigma_raw = rgb_raw + 3;

        linear_forward<T>(cseg(i_sigma_), cseg(i_sigma_ + 1), std::span<const T>(prev, cfg.width),
                          std::span<T>(sigma_raw, 1), cfg.width, 1);
        linear_forward<T>(cseg(i_bneck_), cseg(i_bneck_ + 1), std::span<const T>(prev, cfg.width),
                          std::span<T>(u, static_cast<std::size_t>(cfg.bottleneck)), cfg.width,
                          cfg.bottleneck);
        const T din[3] = {d.x, d.y, d.z};
        positional_encode<T>(std::span<const T>(din, 3), cfg.enc_d,
                             std::span<T>(encd, static_cast<std::size_t>(ed)));
        // color.0 consumes [u; enc_d], adjacent in the cache.
        linear_forward<T>(cseg(i_c0_), cseg(i_c0_ + 1),
                          std::span<const T>(u, static_cast<std::size_t>(cfg.bottleneck + ed)),
                          std::span<T>(hc, static_cast<std::size_t>(cfg.color_hidden)),
                          cfg.bottleneck + ed, cfg.color_hidden);
        for (int i = 0; i < cfg.color_hidden; ++i) hc[i] = relu(hc[i]);
        linear_forward<T>(cseg(i_c1_), cseg(i_c1_ + 1),
                          std::span<const T>(hc, static_cast<std::size_t>(cfg.color_hidden)),
                          std::span<T>(rgb_raw, 3), cfg.color_hidden, 3);
        PointSample<T> out;
        out.sigma = shifted_softplus(*sigma_raw);
        out.color = {sigmoid_act(rgb_raw[0]), sigmoid_act(rgb_raw[1]), sigmoid_act(rgb_raw[2])};
        return out;
    }

    PointSample<T> query(const Vec3<T>& x, const Vec3<T>& d, std::span<T> feature_out = {},
                         T* cache = nullptr) const {
        if (!cache) cache = detail::tls_span<T>(1, cache_size()).data();
        auto feat = detail::tls_span<T>(0, static_cast<std::size_t>(cfg.width));
        phi1(x, d, feat, cache);
        if (!feature_out.empty()) std::copy(feat.begin(), feat.end(), feature_out.begin());
        if (cache[0] == T(0)) return PointSample<T>{};  // outside the domain
        return phi2(feat, d, cache);
    }

    // Backward through phi2 and phi1 using the cache from query(). dfeature
    // (if present) is injected at the encoder/decoder seam.
    void backward(const Vec3<T>& /*x*/, const Vec3<T>& /*d*/, const T* cache,
                  const PointGrad<T>& g, ParamStore<T>& grads) const {
        if (cache[0] == T(0)) return;
        const int ex = cfg.enc_x.output_dim(3);
        const int ed = cfg.enc_d.output_dim(3);
        const T* a = cache + 1 + ex;
        const T* u = a + static_cast<std::size_t>(cfg.depth) * cfg.width;
        const T* encd = u + cfg.bottleneck;
        const T* hc = encd + ed;
        const T* rgb_raw = hc + cfg.color_hidden;
        const T* sigma_raw = rgb_raw + 3;

        auto dh = detail::tls_zeros<T>(4, static_cast<std::size_t>(cfg.width));
        auto dswap = detail::tls_span<T>(5, static_cast<std::size_t>(cfg.width));

        // Color head.
        T drgb[3];
        for (int i = 0; i < 3; ++i) {
            const T s = sigmoid_act(rgb_raw[i]);
            drgb[i] = g.dcolor[static_cast<std::size_t>(i)] * s * (1 - s);
        }
        auto dhc = detail::tls_zeros<T>(6, static_cast<std::size_t>(cfg.color_hidden));
        linear_backward<T>(cseg(i_c1_), std::span<const T>(hc, static_cast<std::size_t>(cfg.color_hidden)),
                           std::span<const T>(drgb, 3), grads.segments[i_c1_].data,
                           grads.segments[i_c1_ + 1].data, dhc, cfg.color_hidden, 3);
        for (int i = 0; i < cfg.color_hidden; ++i)
            if (hc[i] <= 0) dhc[static_cast<std::size_t>(i)] = 0;
        auto dued = detail::tls_zeros<T>(7, static_cast<std::size_t>(cfg.bottleneck + ed));
        linear_backward<T>(cseg(i_c0_),
                           std::span<const T>(u, static_cast<std::size_t>(cfg.bottleneck + ed)),
                           dhc, grads.segments[i_c0_].data, grads.segments[i_c0_ + 1].data, dued,
                           cfg.bottleneck + ed, cfg.color_hidden);
        // Bottleneck (no activation) back to the trunk output.
        const T* hlast = a + static_cast<std::size_t>(cfg.depth - 1) * cfg.width;
        linear_backward<T>(cseg(i_bneck_), std::span<const T>(hlast, static_cast<std::size_t>(cfg.width)),
                           std::span<const T>(dued.data(), static_cast<std::size_t>(cfg.bottleneck)),
                           grads.segments[i_bneck_].data, grads.segments[i_bneck_ + 1].data, dh,
                           cfg.width, cfg.bottleneck);
        // Density head.
        const T dsr = g.dsigma * shifted_softplus_grad(*sigma_raw);
        linear_backward<T>(cseg(i_sigma_), std::span<const T>(hlast, static_cast<std::size_t>(cfg.width)),
                           std::span<const T>(&dsr, 1), grads.segments[i_sigma_].data,
                           grads.segments[i_sigma_ + 1].data, dh, cfg.width, 1);
        backprop_trunk(cfg.depth - 1, a, ex, dh, dswap, g.dfeature, grads);
    }

    void phi1_backward(const Vec3<T>& /*x*/, const Vec3<T>& /*d*/, const T* cache,
                       std::span<const T> dfeature, ParamStore<T>& grads) const {
        if (cache[0] == T(0)) return;
        const int ex = cfg.enc_x.output_dim(3);
        const T* a = cache + 1 + ex;
        auto dh = detail::tls_zeros<T>(4, static_cast<std::size_t>(cfg.width));
        auto dswap = detail::tls_span<T>(5, static_cast<std::size_t>(cfg.width));
        backprop_trunk(cfg.split_k - 1, a, ex, dh, dswap, dfeature, grads);
    }

private:
    // Segment order fixed by the constructor: trunk pairs first, then
    // sigma/bottleneck/color pairs. Indices are layout-stable across copies.
    std::size_t wlayer_base_ = 0;
    std::size_t i_sigma_ = 0, i_bneck_ = 0, i_c0_ = 0, i_c1_ = 0;
    bool bound_ = false;

    void bind() const {
        auto* self = const_cast<MlpField*>(this);
        self->wlayer_base_ = 0;
        const std::size_t nt = static_cast<std::size_t>(cfg.depth) * 2;
        self->i_sigma_ = nt;
        self->i_bneck_ = nt + 2;
        self->i_c0_ = nt + 4;
        self->i_c1_ = nt + 6;
        self->bound_ = true;
    }

    std::span<const T> wseg(std::size_t i) const {
        if (!bound_) bind();
        return params.segments[wlayer_base_ + i].data;
    }
    std::span<const T> cseg(std::size_t i) const {
        if (!bound_) bind();
        return params.segments[i].data;
    }

    void backprop_trunk(int top, const T* a, int ex, std::span<T> dh, std::span<T> dswap,
                        std::span<const T> dfeature, ParamStore<T>& grads) const {
        for (int l = top; l >= 0; --l) {
            if (l + 1 == cfg.split_k && !dfeature.empty())
                for (int i = 0; i < cfg.width; ++i)
                    dh[static_cast<std::size_t>(i)] += dfeature[static_cast<std::size_t>(i)];
            const T* out = a + static_cast<std::size_t>(l) * cfg.width;
            for (int i = 0; i < cfg.width; ++i)
                if (out[i] <= 0) dh[static_cast<std::size_t>(i)] = 0;  // ReLU mask
            const int in_dim = (l == 0) ? ex : cfg.width;
            const T* in = (l == 0) ? (a - ex) : (a + static_cast<std::size_t>(l - 1) * cfg.width);
            std::span<T> dx;
            if (l > 0) {
                std::fill(dswap.begin(), dswap.end(), T(0));
                dx = dswap;
            }
            linear_backward<T>(wseg(2 * static_cast<std::size_t>(l)),
                               std::span<const T>(in, static_cast<std::size_t>(in_dim)), dh,
                               grads.segments[2 * static_cast<std::size_t>(l)].data,
                               grads.segments[2 * static_cast<std::size_t>(l) + 1].data, dx, in_dim,
                               cfg.width);
            if (l > 0) std::swap(dh, dswap);
        }
    }
};

}  // namespace nerfcast
