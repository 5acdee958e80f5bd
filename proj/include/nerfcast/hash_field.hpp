// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
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

struct HashConfig {
    int levels = 14;
    int coarsest = 16;
    int finest = 2048;            // 2048 x scene half-extent at default bounds
    uint32_t table_size = 1u << 19;
    int features_per_level = 2;
    std::array<uint64_t, 3> primes{1ULL, 2654435761ULL, 805459861ULL};
    int hidden = 64;              // decoder hidden width
    int geo_features = 15;        // latent passed from density to color branch
    EncodingConfig enc_d{4, true};

    void validate() const {
        if (levels < 1) throw InputError("hash: levels must be >= 1");
        if (coarsest < 1 || finest < coarsest)
            throw InputError("hash: need 1 <= coarsest <= finest");
        if ((table_size & (table_size - 1)) != 0 || table_size == 0)
            throw InputError("hash: table_size must be a power of two");
        if (features_per_level < 1) throw InputError("hash: features_per_level must be >= 1");
        if (hidden < 1 || geo_features < 0) throw InputError("hash: bad decoder widths");
    }

    // Geometric level resolutions, strictly increasing.
    std::vector<int> level_resolutions() const {
        std::vector<int> res(static_cast<std::size_t>(levels));
        if (levels == 1) {
            res[0] = coarsest;
            return res;
        }
        const double b = std::exp((std::log(static_cast<double>(finest)) -
                                   std::log(static_cast<double>(coarsest))) /
                                  static_cast<double>(levels - 1));
        int prev = 0;
        for (int l = 0; l < levels; ++l) {
            int r = static_cast<int>(std::floor(static_cast<double>(coarsest) * std::pow(b, l)));
            if (r <= prev) r = prev + 1;
            res[static_cast<std::size_t>(l)] = r;
            prev = r;
        }
        return res;
    }
};

// Spatial hash of an integer grid vertex: XOR of prime-multiplied coordinates
// (wrapping 64-bit products) reduced mod the table size, which must be a
// power of two.
inline uint64_t hash_index(uint64_t x, uint64_t y, uint64_t z,
                           const std::array<uint64_t, 3>& primes, uint64_t table_size) {
    const uint64_t h = (x * primes[0]) ^ (y * primes[1]) ^ (z * primes[2]);
    return h & (table_size - 1);
}

// Multi-resolution hash encoding over L levels with a small MLP decoder.
// Levels whose dense vertex grid fits in the table are indexed directly
// (collision-free); finer levels hash. The encoder output is the
// concatenation of the L trilinearly interpolated feature vectors.
template <typename T>
class HashField {
public:
    HashConfig cfg;
    FieldBounds<T> bounds;
    ParamStore<T> params;

    HashField() = default;
    explicit HashField(const HashConfig& c, uint64_t seed = 0) : cfg(c) {
        cfg.validate();
        res_ = cfg.level_resolutions();
        const auto f = static_cast<std::size_t>(cfg.features_per_level);
        for (int l = 0; l < cfg.levels; ++l) {
            const uint64_t dense = dense_vertex_count(res_[static_cast<std::size_t>(l)]);
            const std::size_t slots =
                static_cast<std::size_t>(std::min<uint64_t>(dense, cfg.table_size));
            params.add("hash.table" + std::to_string(l), {slots, f});
        }
        const int fdim = phi1_dim();
        const int ed = cfg.enc_d.output_dim(3);
        params.add("hash.den.0.w",
                   {static_cast<std::size_t>(cfg.hidden), static_cast<std::size_t>(fdim)});
        params.add("hash.den.0.b", {static_cast<std::size_t>(cfg.hidden)});
        params.add("hash.den.1.w", {static_cast<std::size_t>(1 + cfg.geo_features),
                                    static_cast<std::size_t>(cfg.hidden)});
        params.add("hash.den.1.b", {static_cast<std::size_t>(1 + cfg.geo_features)});
        params.add("hash.color.0.w", {static_cast<std::size_t>(cfg.hidden),
                                      static_cast<std::size_t>(cfg.geo_features + ed)});
        params.add("hash.color.0.b", {static_cast<std::size_t>(cfg.hidden)});
        params.add("hash.color.1.w", {3, static_cast<std::size_t>(cfg.hidden)});
        params.add("hash.color.1.b", {3});
        init(seed);
    }

    void init(uint64_t seed) {
        Rng rng(seed, 37);
        for (int l = 0; l < cfg.levels; ++l)
            for (auto& v : params.segments[static_cast<std::size_t>(l)].data)
                v = static_cast<T>(rng.uniform(-1e-4f, 1e-4f));
        const int fdim = phi1_dim();
        const int ed = cfg.enc_d.output_dim(3);
        const auto base = static_cast<std::size_t>(cfg.levels);
        init_linear<T>(params.segments[base].data, params.segments[base + 1].data, fdim,
                       cfg.hidden, rng);
        init_linear<T>(params.segments[base + 2].data, params.segments[base + 3].data, cfg.hidden,
                       1 + cfg.geo_features, rng);
        init_linear<T>(params.segments[base + 4].data, params.segments[base + 5].data,
                       cfg.geo_features + ed, cfg.hidden, rng);
        init_linear<T>(params.segments[base + 6].data, params.segments[base + 7].data, cfg.hidden,
                       3, rng);
    }

    int phi1_dim() const { return cfg.levels * cfg.features_per_level; }

    // Cache layout: [flag, feature(L*F), hd(hidden), den_raw(1+geo),
    //                enc_d, hc(hidden), rgb_raw(3)]
    std::size_t cache_size() const {
        return static_cast<std::size_t>(1 + phi1_dim() + cfg.hidden + 1 + cfg.geo_features +
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
        const Vec3<T> u01 = bounds.to_unit(x);
        const int f = cfg.features_per_level;
        for (int l = 0; l < cfg.levels; ++l) {
            const auto& table = params.segments[static_cast<std::size_t>(l)].data;
            std::size_t slots[8];
            T w[8];
            level_stencil(u01, l, slots, w);
            T* out = feature.data() + static_cast<std::size_t>(l) * f;
            for (int j = 0; j < 8; ++j) {
                const T* entry = table.data() + slots[j] * static_cast<std::size_t>(f);
                for (int k = 0; k < f; ++k) out[k] += w[j] * entry[k];
            }
        }
        if (cache) std::copy(feature.begin(), feature.end(), cache + 1);
    }

    PointSample<T> phi2(std::span<const T> feature, const Vec3<T>& d, T* cache = nullptr) const {
        if (static_cast<int>(feature.size()) != phi1_dim())
            throw InputError("hash phi2: feature length mismatch");
        instr::phi2_evals.fetch_add(1, std::memory_order_relaxed);
        const int ed = cfg.enc_d.output_dim(3);
        const int fdim = phi1_dim();
        if (!cache) {
            cache = detail::tls_span<T>(3, cache_size()).data();
            cache[0] = 1;
            std::copy(feature.begin(), feature.end(), cache + 1);
        }
        T* hd = cache + 1 + fdim;
        T* den_raw = hd + cfg.hidden;
        T* encd = den_raw + 1 + cfg.geo_features;
        T* hc = encd + ed;
        T* rgb_raw = hc + cfg.hidden;
        const auto base = static_cast<std::size_t>(cfg.levels);
        linear_forward<T>(params.segments[base].data, params.segments[base + 1].data, feature,
                          std::span<T>(hd, static_cast<std::size_t>(cfg.hidden)), fdim, cfg.hidden);
        for (int i = 0; i < cfg.hidden; ++i) hd[i] = relu(hd[i]);
        linear_forward<T>(params.segments[base + 2].data, params.segments[base + 3].data,
                          std::span<const T>(hd, static_cast<std::size_t>(cfg.hidden)),
                          std::span<T>(den_raw, static_cast<std::size_t>(1 + cfg.geo_features)),
                          cfg.hidden, 1 + cfg.geo_features);
        const T din[3] = {d.x, d.y, d.z};
        positional_encode<T>(std::span<const T>(din, 3), cfg.enc_d,
                             std::span<T>(encd, static_cast<std::size_t>(ed)));
        // color.0 consumes [geo; enc_d]; geo follows sigma_raw in the cache.
        linear_forward<T>(params.segments[base + 4].data, params.segments[base + 5].data,
                          std::span<const T>(den_raw + 1,
                                             static_cast<std::size_t>(cfg.geo_features + ed)),
                          std::span<T>(hc, static_cast<std::size_t>(cfg.hidden)),
                          cfg.geo_features + ed, cfg.hidden);
        for (int i = 0; i < cfg.hidden; ++i) hc[i] = relu(hc[i]);
        linear_forward<T>(params.segments[base + 6].data, params.segments[base + 7].data,
                          std::span<const T>(hc, static_cast<std::size_t>(cfg.hidden)),
                          std::span<T>(rgb_raw, 3), cfg.hidden, 3);
        PointSample<T> out;
        out.sigma = shifted_softplus(den_raw[0]);
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
        const int fdim = phi1_dim();
        const T* feature = cache + 1;
        const T* hd = feature + fdim;
        const T* den_raw = hd + cfg.hidden;
        const T* encd = den_raw + 1 + cfg.geo_features;
        const T* hc = encd + ed;
        const T* rgb_raw = hc + cfg.hidden;
        const auto base = static_cast<std::size_t>(cfg.levels);

        T drgb[3];
        for (int i = 0; i < 3; ++i) {
            const T s = sigmoid_act(rgb_raw[i]);
            drgb[i] = g.dcolor[static_cast<std::size_t>(i)] * s * (1 - s);
        }
        auto dhc = detail::tls_zeros<T>(6, static_cast<std::size_t>(cfg.hidden));
        linear_backward<T>(params.segments[base + 6].data,
                           std::span<const T>(hc, static_cast<std::size_t>(cfg.hidden)),
                           std::span<const T>(drgb, 3), grads.segments[base + 6].data,
                           grads.segments[base + 7].data, dhc, cfg.hidden, 3);
        for (int i = 0; i < cfg.hidden; ++i)
            if (hc[i] <= 0) dhc[static_cast<std::size_t>(i)] = 0;
        auto dgeoed = detail::tls_zeros<T>(7, static_cast<std::size_t>(cfg.geo_features + ed));
        linear_backward<T>(params.segments[base + 4].data,
                           std::span<const T>(den_raw + 1,
                                              static_cast<std::size_t>(cfg.geo_features + ed)),
                           dhc, grads.segments[base + 4].data, grads.segments[base + 5].data,
                           dgeoed, cfg.geo_features + ed, cfg.hidden);
        // Density branch output gradient: [dsigma_raw, dgeo].
        auto dden = detail::tls_zeros<T>(10, static_cast<std::size_t>(1 + cfg.geo_features));
        dden[0] = g.dsigma * shifted_softplus_grad(den_raw[0]);
        for (int i = 0; i < cfg.geo_features; ++i)
            dden[static_cast<std::size_t>(1 + i)] = dgeoed[static_cast<std::size_t>(i)];
        auto dhd = detail::tls_zeros<T>(11, static_cast<std::size_t>(cfg.hidden));
        linear_backward<T>(params.segments[base + 2].data,
                           std::span<const T>(hd, static_cast<std::size_t>(cfg.hidden)), dden,
                           grads.segments[base + 2].data, grads.segments[base + 3].data, dhd,
                           cfg.hidden, 1 + cfg.geo_features);
        for (int i = 0; i < cfg.hidden; ++i)
            if (hd[i] <= 0) dhd[static_cast<std::size_t>(i)] = 0;
        auto dfeat = detail::tls_zeros<T>(12, static_cast<std::size_t>(fdim));
        linear_backward<T>(params.segments[base].data,
                           std::span<const T>(feature, static_cast<std::size_t>(fdim)), dhd,
                           grads.segments[base].data, grads.segments[base + 1].data, dfeat, fdim,
                           cfg.hidden);
        if (!g.dfeature.empty())
            for (int k = 0; k < fdim; ++k)
                dfeat[static_cast<std::size_t>(k)] += g.dfeature[static_cast<std::size_t>(k)];
        scatter_tables(x, dfeat, grads);
    }

    void phi1_backward(const Vec3<T>& x, const Vec3<T>& /*d*/, const T* cache,
                       std::span<const T> dfeature, ParamStore<T>& grads) const {
        if (cache[0] == T(0)) return;
        scatter_tables(x, dfeature, grads);
    }

    const std::vector<int>& level_resolutions() const { return res_; }

    // Slot of an integer vertex at one level: direct for dense levels, hashed
    // otherwise.
    std::size_t vertex_slot(int l, uint64_t vx, uint64_t vy, uint64_t vz) const {
        const int r = res_[static_cast<std::size_t>(l)];
        const uint64_t n = static_cast<uint64_t>(r) + 1;
        if (n * n * n <= cfg.table_size) return static_cast<std::size_t>(vx + n * (vy + n * vz));
        return static_cast<std::size_t>(hash_index(vx, vy, vz, cfg.primes, cfg.table_size));
    }

private:
    std::vector<int> res_;

    static uint64_t dense_vertex_count(int r) {
        const uint64_t n = static_cast<uint64_t>(r) + 1;
        return n * n * n;
    }

    void level_stencil(const Vec3<T>& u01, int l, std::size_t slots[8], T w[8]) const {
        const int r = res_[static_cast<std::size_t>(l)];
        Vec3<T> u{u01.x * static_cast<T>(r), u01.y * static_cast<T>(r),
                  u01.z * static_cast<T>(r)};
        int x0, x1, y0, y1, z0, z1;
        Vec3<T> fr;
        axis_stencil(u.x, r + 1, x0, x1, fr.x);
        axis_stencil(u.y, r + 1, y0, y1, fr.y);
        axis_stencil(u.z, r + 1, z0, z1, fr.z);
        const int xs[2] = {x0, x1}, ys[2] = {y0, y1}, zs[2] = {z0, z1};
        int j = 0;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx, ++j)
                    slots[j] = vertex_slot(l, static_cast<uint64_t>(xs[dx]),
                                           static_cast<uint64_t>(ys[dy]),
                                           static_cast<uint64_t>(zs[dz]));
        trilerp_weights(fr, w);
    }

    void scatter_tables(const Vec3<T>& x, std::span<const T> dfeat, ParamStore<T>& grads) const {
        const Vec3<T> u01 = bounds.to_unit(x);
        const int f = cfg.features_per_level;
        for (int l = 0; l < cfg.levels; ++l) {
            std::size_t slots[8];
            T w[8];
            level_stencil(u01, l, slots, w);
            auto& dtab = grads.segments[static_cast<std::size_t>(l)].data;
            const T* df = dfeat.data() + static_cast<std::size_t>(l) * f;
            for (int j = 0; j < 8; ++j) {
                T* d = dtab.data() + slots[j] * static_cast<std::size_t>(f);
                for (int k = 0; k < f; ++k) d[k] += w[j] * df[k];
            }
        }
    }
};

}  // namespace nerfcast
