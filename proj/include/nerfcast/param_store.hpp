// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nerfcast/errors.hpp"

namespace nerfcast {

// Named, shaped, flat parameter segments. Segment order is fixed at
// construction and shared between parameters, gradients and optimizer
// moments, so buffers can be merged index-for-index.
template <typename T>
struct ParamStore {
    struct Segment {
        std::string name;
        std::vector<std::size_t> shape;
        std::vector<T> data;
        bool trainable = true;

        std::size_t size() const { return data.size(); }
    };

    std::vector<Segment> segments;

    Segment& add(std::string name, std::vector<std::size_t> shape, bool trainable = true) {
        std::size_t n = 1;
        for (std::size_t s : shape) n *= s;
        for (const auto& seg : segments)
            if (seg.name == name) throw InputError("ParamStore: duplicate segment " + name);
        segments.push_back({std::move(name), std::move(shape), std::vector<T>(n, T(0)), trainable});
        return segments.back();
    }

    Segment& at(std::string_view name) {
        for (auto& seg : segments)
            if (seg.name == name) return seg;
        throw InputError("ParamStore: no segment named " + std::string(name));
    }
    const Segment& at(std::string_view name) const {
        for (const auto& seg : segments)
            if (seg.name == name) return seg;
        throw InputError("ParamStore: no segment named " + std::string(name));
    }

    bool has(std::string_view name) const {
        for (const auto& seg : segments)
            if (seg.name == name) return true;
        return false;
    }

    std::size_t total_size(bool trainable_only = false) const {
        std::size_t n = 0;
        for (const auto& seg : segments)
            if (!trainable_only || seg.trainable) n += seg.size();
        return n;
    }

    // Zero-filled store with identical layout (gradient / moment buffers).
    ParamStore<T> zeros_like() const {
        ParamStore<T> z;
        z.segments.reserve(segments.size());
        for (const auto& seg : segments)
            z.segments.push_back({seg.name, seg.shape, std::vector<T>(seg.size(), T(0)), seg.trainable});
        return z;
    }

    void fill(T v) {
        for (auto& seg : segments)
            for (auto& x : seg.data) x = v;
    }

    void add_scaled(const ParamStore<T>& other, T scale) {
        check_congruent(other);
        for (std::size_t s = 0; s < segments.size(); ++s)
            for (std::size_t i = 0; i < segments[s].data.size(); ++i)
                segments[s].data[i] += scale * other.segments[s].data[i];
    }

    void check_congruent(const ParamStore<T>& other) const {
        if (other.segments.size() != segments.size())
            throw InputError("ParamStore: segment count mismatch");
        for (std::size_t s = 0; s < segments.size(); ++s)
            if (segments[s].name != other.segments[s].name ||
                segments[s].data.size() != other.segments[s].data.size())
                throw InputError("ParamStore: segment layout mismatch at " + segments[s].name);
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        out.segments.reserve(segments.size());
        for (const auto& seg : segments) {
            typename ParamStore<U>::Segment s;
            s.name = seg.name;
            s.shape = seg.shape;
            s.trainable = seg.trainable;
            s.data.reserve(seg.data.size());
            for (T v : seg.data) s.data.push_back(static_cast<U>(v));
            out.segments.push_back(std::move(s));
        }
        return out;
    }
};

// FNV-1a over the raw bytes of every segment, in segment order. Used to
// assert teacher immutability across a distillation run.
template <typename T>
uint64_t param_checksum(const ParamStore<T>& p) {
    uint64_t h = 1469598103934665603ULL;
    auto eat = [&h](const void* ptr, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(ptr);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& seg : p.segments) {
        eat(seg.name.data(), seg.name.size());
        eat(seg.data.data(), seg.data.size() * sizeof(T));
    }
    return h;
}

}  // namespace nerfcast
