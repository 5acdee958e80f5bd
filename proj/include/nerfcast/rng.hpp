// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace nerfcast {

// PCG32 (Melissa O'Neill's pcg32_random_r). One independent stream per
// (seed, stream) pair so parallel batches stay reproducible.
class Rng {
public:
    explicit Rng(uint64_t seed = 0x853c49e6748fea9bULL, uint64_t stream = 1) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Uniform in [0, 1).
    float uniform() { return static_cast<float>(next_u32() >> 8) * 0x1p-24f; }
    double uniform_double() { return static_cast<double>(next_u32() >> 8) * 0x1p-24; }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint32_t uniform_int(uint32_t n) {
        // Lemire's bounded rejection method.
        uint64_t m = static_cast<uint64_t>(next_u32()) * n;
        uint32_t l = static_cast<uint32_t>(m);
        if (l < n) {
            uint32_t t = (-n) % n;
            while (l < t) {
                m = static_cast<uint64_t>(next_u32()) * n;
                l = static_cast<uint32_t>(m);
            }
        }
        return static_cast<uint32_t>(m >> 32);
    }

    // Standard normal via Box-Muller (one value per call, no caching so the
    // stream position stays predictable).
    float normal() {
        float u1 = uniform();
        float u2 = uniform();
        if (u1 < 1e-12f) u1 = 1e-12f;
        return std::sqrt(-2.0f * std::log(u1)) * std::cos(6.28318530717958647692f * u2);
    }

private:
    uint64_t state_;
    uint64_t inc_;
};

// 64-bit mixer used to derive child seeds deterministically.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL + b * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace nerfcast
