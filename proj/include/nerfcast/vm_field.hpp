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
#include "nerfcast/interpolation.hpp"
#include "nerfcast/linear.hpp"
#include "nerfcast/param_store.hpp"

namespace nerfcast {

struct VmConfig {
    int resolution = 128;   // vertices per axis for vectors and matrices
    int rank_density = 48;  // total components, split evenly across 3 groups
    int rank_feature = 48;
    int feature_dim = 27;   // mixed feature width fed to the color decoder
    int hidden = 64;
    EncodingConfig enc_d{2, true};

    void validate() const {
        if (resolution < 2) throw InputError("vm: resolution must be >= 2");
        if (rank_density < 3 || rank_density % 3 != 0)
            throw InputError("vm: rank_density must be a positive multiple of 3");
        if (rank_feature < 3 || rank_feature % 3 != 0)
            throw InputError("vm: rank_feature must be a positive multiple of 3");
        if (feature_dim < 1 || hidden < 1) throw InputError("vm: widths must be >= 1");
    }
};

// Vector-matrix factorized field: one rank-decomposed tensor for density and
// one for appearance features. Each group g pairs a vector along axis g with
// a matrix over the remaining two axes; reconstructed entries are the sums of
// the per-group vector x matrix products. The encoder output is the raw
// density scalar plus the stacked appearance components; the decoder applies
// the density activation and a learned linear mix ahead of the color MLP.
template <typename T>
class VmField {
public:
    VmConfig cfg;
    FieldBounds<T> bounds;
    ParamStore<T> params;

    VmField() = default;
    explicit VmField(const VmConfig& c, uint64_t seed = 0) : cfg(c) {
        cfg.validate();
        const auto res = static_cast<std::size_t>(cfg.resolution);
        const auto rd = static_cast<std::size_t>(cfg.rank_density / 3);
        const auto rf = static_cast<std::size_t>(cfg.rank_feature / 3);
        for (int g = 0; g < 3; ++g) {
            params.add("vm.den.v" + std::to_string(g), {rd, res});
            params.add("vm.den.m" + std::to_string(g), {rd, res, res});
        }
        for (int g = 0; g < 3; ++g) {
            params.add("vm.app.v" + std::to_string(g), {rf, res});
            params.add("vm.app.m" + std::to_string(g), {rf, res, res});
        }
        params.add("vm.mix.w", {static_cast<std::size_t>(cfg.feature_dim),
                                static_cast<std::size_t>(cfg.rank_feature)});
        const int ed = cfg.enc_d.output_dim(3);
        params.add("vm.color.0.w", {static_cast<std::size_t>(cfg.hidden),
                                    static_cast<std::size_t>(cfg.feature_dim + ed)});
        params.add("vm.color.0.b", {static_cast<std::size_t>(cfg.hidden)});
        params.add("vm.color.1.w", {3, static_cast<std::size_t>(cfg.hidden)});
        params.add("vm.color.1.b", {3});
        init(seed);
    }

    void init(uint64_t seed) {
        Rng rng(seed, 23);
        for (int g = 0; g < 3; ++g) {
            for (auto& v : params.segments[static_cast<std::size_t>(2 * g)].data)
                v = static_cast<T>(0.1f * rng.normal());
            for (auto& v : params.segments[static_cast<std::size_t>(2 * g + 1)].data)
                v = static_cast<T>(0.1f * rng.normal());
            for (auto& v : params.segments[static_cast<std::size_t>(6 + 2 * g)].data)
                v = static_cast<T>(0.1f * rng.normal());
            for (auto& v : params.segments[static_cast<std::size_t>(6 + 2 * g + 1)].data)
                v = static_cast<T>(0.1f * rng.normal());
        }
        const int ed = cfg.enc_d.output_dim(3);
        init_linear<T>(params.at("vm.mix.w").data, {}, cfg.rank_feature, cfg.feature_dim, rng);
        init_linear<T>(params.at("vm.color.0.w").data, params.at("vm.color.0.b").data,
                       cfg.feature_dim + ed, cfg.hidden, rng);
        init_linear<T>(params.at("vm.color.1.w").data, params.at("vm.color.1.b").data, cfg.hidden,
                       3, rng);
    }

    int phi1_dim() const { return 1 + cfg.rank_feature; }

    // Cache layout: [flag, sigma_raw, stack(RF), mixed(F), enc_d, hc, rgb_raw(3)]
    std::size_t cache_size() const {
        return static_cast<std::size_t>(2 + cfg.rank_feature + cfg.feature_dim +
                                        cfg.enc_d.output_dim(3) + cfg.hidden + 3);
    }

    void phi1(const Vec3<T>& x, const Vec3<T>& /*d*/, std::span<T> feature,
              T* cache = nullptr) const {
        std::fill(feature.begin(), feature.end(), T(0));
        if (!bounds.contains(x)) {
            if (cache) cache[0] = 0;
            return;
        }
        if (cache) cache[0] = 1;
        const Axes ax = axes_at(x);
        const int rd = cfg.rank_density / 3;
        const int rf = cfg.rank_feature / 3;
        T sigma_raw = 0;
        for (int g = 0; g < 3; ++g) {
            const auto& vseg = params.segments[static_cast<std::size_t>(2 * g)].data;
            const auto& mseg = params.segments[static_cast<std::size_t>(2 * g + 1)].data;
            for (int r = 0; r < rd; ++r) sigma_raw += component(ax, g, vseg, mseg, r);
            const auto& vsega = params.segments[static_cast<std::size_t>(6 + 2 * g)].data;
            const auto& msega = params.segments[static_cast<std::size_t>(6 + 2 * g + 1)].data;
            for (int r = 0; r < rf; ++r)
                feature[static_cast<std::size_t>(1 + g * rf + r)] =
                    component(ax, g, vsega, msega, r);
        }
        feature[0] = sigma_raw;
        if (cache) {
            cache[1] = sigma_raw;
            std::copy(feature.begin() + 1, feature.end(), cache + 2);
        }
    }

    PointSample<T> phi2(std::span<const T> feature, const Vec3<T>& d, T* cache = nullptr) const {
        if (static_cast<int>(feature.size()) != phi1_dim())
            throw InputError("vm phi2: feature length mismatch");
        instr::phi2_evals.fetch_add(1, std::memory_order_relaxed);
        const int ed = cfg.enc_d.output_dim(3);
        if (!cache) {
            cache = detail::tls_span<T>(3, cache_size()).data();
            cache[0] = 1;
            cache[1] = feature[0];
            std::copy(feature.begin() + 1, feature.end(), cache + 2);
        }
        T* mixed = cache + 2 + cfg.rank_feature;
        T* encd = mixed + cfg.feature_dim;
        T* hc = encd + ed;
        T* rgb_raw = hc + cfg.hidden;
        linear_forward<T>(params.segments[i_mix_].data, {}, feature.subspan(1),
                          std::span<T>(mixed, static_cast<std::size_t>(cfg.feature_dim)),
                          cfg.rank_feature, cfg.feature_dim);
        const T din[3] = {d.x, d.y, d.z};
        positional_encode<T>(std::span<const T>(din, 3), cfg.enc_d,
                             std::span<T>(encd, static_cast<std::size_t>(ed)));
        linear_forward<T>(params.segments[i_mix_ + 1].data, params.segments[i_mix_ + 2].data,
                          std::span<const T>(mixed, static_cast<std::size_t>(cfg.feature_dim + ed)),
                          std::span<T>(hc, static_cast<std::size_t>(cfg.hidden)),
                          cfg.feature_dim + ed, cfg.hidden);
        for (int i = 0; i < cfg.hidden; ++i) hc[i] = relu(hc[i]);
        linear_forward<T>(params.segments[i_mix_ + 3].data, params.segments[i_mix_ + 4].data,
                          std::span<const T>(hc, static_cast<std::size_t>(cfg.hidden)),
                          std::span<T>(rgb_raw, 3), cfg.hidden, 3);
        PointSample<T> out;
        out.sigma = shifted_softplus(feature[0]);
        out.color = {sigmoid_act(rgb_raw[0]), sigmoid_act(rgb_raw[1]), sigmoid_act(rgb_raw[2])};
        return out;
    }

    PointSample<T> query(const Vec3<T>& x, const Vec3<T>& d, std::span<T> feature_out = {},
                         T* cache = nullptr) const {
        if (!cache) cache = detail::tls_span<T>(1, cache_size()).data();
        auto feat = detail::tls_span<T>(0, static_cast<std::size_t>(phi1_dim()));
        phi1(x, d, feat, cache);
        if (!feature_out.empty()) std::copy(feat.begin(), feat.end(), feature_out.begin());
        if (cache[0] == T(0)) return PointSample<T>{};
        return phi2(feat, d, cache);
    }

    void backward(const Vec3<T>& x, const Vec3<T>& /*d*/, const T* cache, const PointGrad<T>& g,
                  ParamStore<T>& grads) const {
        if (cache[0] == T(0)) return;
        const int ed = cfg.enc_d.output_dim(3);
        const T sigma_raw = cache[1];
        const T* stack = cache + 2;
        const T* mixed = stack + cfg.rank_feature;
        const T* encd = mixed + cfg.feature_dim;
        const T* hc = encd + ed;
        const T* rgb_raw = hc + cfg.hidden;

        T drgb[3];
        for (int i = 0; i < 3; ++i) {
            const T s = sigmoid_act(rgb_raw[i]);
            drgb[i] = g.dcolor[static_cast<std::size_t>(i)] * s * (1 - s);
        }
        auto dhc = detail::tls_zeros<T>(6, static_cast<std::size_t>(cfg.hidden));
        linear_backward<T>(params.segments[i_mix_ + 3].data,
                           std::span<const T>(hc, static_cast<std::size_t>(cfg.hidden)),
                           std::span<const T>(drgb, 3), grads.segments[i_mix_ + 3].data,
                           grads.segments[i_mix_ + 4].data, dhc, cfg.hidden, 3);
        for (int i = 0; i < cfg.hidden; ++i)
            if (hc[i] <= 0) dhc[static_cast<std::size_t>(i)] = 0;
        auto dmixed = detail::tls_zeros<T>(8, static_cast<std::size_t>(cfg.feature_dim + ed));
        linear_backward<T>(params.segments[i_mix_ + 1].data,
                           std::span<const T>(mixed, static_cast<std::size_t>(cfg.feature_dim + ed)),
                           dhc, grads.segments[i_mix_ + 1].data, grads.segments[i_mix_ + 2].data,
                           dmixed, cfg.feature_dim + ed, cfg.hidden);
        auto dstack = detail::tls_zeros<T>(9, static_cast<std::size_t>(cfg.rank_feature));
        linear_backward<T>(params.segments[i_mix_].data,
                           std::span<const T>(stack, static_cast<std::size_t>(cfg.rank_feature)),
                           std::span<const T>(dmixed.data(), static_cast<std::size_t>(cfg.feature_dim)),
                           grads.segments[i_mix_].data, {}, dstack, cfg.rank_feature,
                           cfg.feature_dim);
        T dsigma_raw = g.dsigma * shifted_softplus_grad(sigma_raw);
        if (!g.dfeature.empty()) {
            dsigma_raw += g.dfeature[0];
            for (int k = 0; k < cfg.rank_feature; ++k)
                dstack[static_cast<std::size_t>(k)] += g.dfeature[static_cast<std::size_t>(1 + k)];
        }
        scatter_factors(x, dsigma_raw, dstack, grads);
    }

    void phi1_backward(const Vec3<T>& x, const Vec3<T>& /*d*/, const T* cache,
                       std::span<const T> dfeature, ParamStore<T>& grads) const {
        if (cache[0] == T(0)) return;
        scatter_factors(x, dfeature[0], dfeature.subspan(1), grads);
    }

    // Reconstructed tensor entry at a continuous unit-box coordinate, density
    // plus stacked appearance components. Exposed for the dense outer-product
    // equivalence tests.
    T reconstruct_density(const Vec3<T>& u01) const {
        Axes ax = axes_from_unit(u01);
        const int rd = cfg.rank_density / 3;
        T s = 0;
        for (int gi = 0; gi < 3; ++gi) {
            const auto& vseg = params.segments[static_cast<std::size_t>(2 * gi)].data;
            const auto& mseg = params.segments[static_cast<std::size_t>(2 * gi + 1)].data;
            for (int r = 0; r < rd; ++r) s += component(ax, gi, vseg, mseg, r);
        }
        return s;
    }

private:
    // Segment order: den v/m x3 (0..5), app v/m x3 (6..11), mix, color.0.w/b,
    // color.1.w/b (12..16).
    static constexpr std::size_t i_mix_ = 12;

    struct Axes {
        int i0[3], i1[3];
        T f[3];
    };

    Axes axes_from_unit(const Vec3<T>& u01) const {
        Axes ax;
        for (int a = 0; a < 3; ++a)
            axis_stencil(u01[static_cast<std::size_t>(a)] * static_cast<T>(cfg.resolution - 1),
                         cfg.resolution, ax.i0[a], ax.i1[a], ax.f[a]);
        return ax;
    }
    Axes axes_at(const Vec3<T>& x) const { return axes_from_unit(bounds.to_unit(x)); }

    static void matrix_axes(int g, int& b, int& c) {
        switch (g) {
            case 0: b = 1; c = 2; break;
            case 1: b = 0; c = 2; break;
            default: b = 0; c = 1; break;
        }
    }

    T component(const Axes& ax, int g, const std::vector<T>& vseg, const std::vector<T>& mseg,
                int r) const {
        const auto res = static_cast<std::size_t>(cfg.resolution);
        int b, c;
        matrix_axes(g, b, c);
        const T* v = vseg.data() + static_cast<std::size_t>(r) * res;
        const T vlerp = v[ax.i0[g]] * (1 - ax.f[g]) + v[ax.i1[g]] * ax.f[g];
        const T* m = mseg.data() + static_cast<std::size_t>(r) * res * res;
        const T m00 = m[static_cast<std::size_t>(ax.i0[c]) * res + static_cast<std::size_t>(ax.i0[b])];
        const T m10 = m[static_cast<std::size_t>(ax.i0[c]) * res + static_cast<std::size_t>(ax.i1[b])];
        const T m01 = m[static_cast<std::size_t>(ax.i1[c]) * res + static_cast<std::size_t>(ax.i0[b])];
        const T m11 = m[static_cast<std::size_t>(ax.i1[c]) * res + static_cast<std::size_t>(ax.i1[b])];
        const T fb = ax.f[b], fc = ax.f[c];
        const T mlerp = (m00 * (1 - fb) + m10 * fb) * (1 - fc) + (m01 * (1 - fb) + m11 * fb) * fc;
        return vlerp * mlerp;
    }

    void scatter_component(const Axes& ax, int g, const std::vector<T>& vseg,
                           const std::vector<T>& mseg, std::vector<T>& dv, std::vector<T>& dm,
                           int r, T dval) const {
        const auto res = static_cast<std::size_t>(cfg.resolution);
        int b, c;
        matrix_axes(g, b, c);
        const T* v = vseg.data() + static_cast<std::size_t>(r) * res;
        const T vlerp = v[ax.i0[g]] * (1 - ax.f[g]) + v[ax.i1[g]] * ax.f[g];
        const T* m = mseg.data() + static_cast<std::size_t>(r) * res * res;
        const std::size_t i00 = static_cast<std::size_t>(ax.i0[c]) * res + static_cast<std::size_t>(ax.i0[b]);
        const std::size_t i10 = static_cast<std::size_t>(ax.i0[c]) * res + static_cast<std::size_t>(ax.i1[b]);
        const std::size_t i01 = static_cast<std::size_t>(ax.i1[c]) * res + static_cast<std::size_t>(ax.i0[b]);
        const std::size_t i11 = static_cast<std::size_t>(ax.i1[c]) * res + static_cast<std::size_t>(ax.i1[b]);
        const T fb = ax.f[b], fc = ax.f[c];
        const T mlerp = (m[i00] * (1 - fb) + m[i10] * fb) * (1 - fc) +
                        (m[i01] * (1 - fb) + m[i11] * fb) * fc;
        // d(vlerp)
        T* dvp = dv.data() + static_cast<std::size_t>(r) * res;
        dvp[ax.i0[g]] += dval * mlerp * (1 - ax.f[g]);
        dvp[ax.i1[g]] += dval * mlerp * ax.f[g];
        // d(mlerp)
        T* dmp = dm.data() + static_cast<std::size_t>(r) * res * res;
        const T dm_all = dval * vlerp;
        dmp[i00] += dm_all * (1 - fb) * (1 - fc);
        dmp[i10] += dm_all * fb * (1 - fc);
        dmp[i01] += dm_all * (1 - fb) * fc;
        dmp[i11] += dm_all * fb * fc;
    }

    void scatter_factors(const Vec3<T>& x, T dsigma_raw, std::span<const T> dstack,
                         ParamStore<T>& grads) const {
        const Axes ax = axes_at(x);
        const int rd = cfg.rank_density / 3;
        const int rf = cfg.rank_feature / 3;
        for (int g = 0; g < 3; ++g) {
            const auto& vseg = params.segments[static_cast<std::size_t>(2 * g)].data;
            const auto& mseg = params.segments[static_cast<std::size_t>(2 * g + 1)].data;
            auto& dv = grads.segments[static_cast<std::size_t>(2 * g)].data;
            auto& dm = grads.segments[static_cast<std::size_t>(2 * g + 1)].data;
            if (dsigma_raw != T(0))
                for (int r = 0; r < rd; ++r)
                    scatter_component(ax, g, vseg, mseg, dv, dm, r, dsigma_raw);
            const auto& vsega = params.segments[static_cast<std::size_t>(6 + 2 * g)].data;
            const auto& msega = params.segments[static_cast<std::size_t>(6 + 2 * g + 1)].data;
            auto& dva = grads.segments[static_cast<std::size_t>(6 + 2 * g)].data;
            auto& dma = grads.segments[static_cast<std::size_t>(6 + 2 * g + 1)].data;
            for (int r = 0; r < rf; ++r) {
                const T dval = dstack[static_cast<std::size_t>(g * rf + r)];
                if (dval != T(0)) scatter_component(ax, g, vsega, msega, dva, dma, r, dval);
            }
        }
    }
};

}  // namespace nerfcast
