// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

enum class ArchTag { Mlp, Grid, Vm, Hash };

namespace detail {

// Reusable per-thread scratch. Point-rate query/backward paths would
// otherwise allocate; slots keep concurrently live buffers apart.
template <typename T>
std::span<T> tls_span(int slot, std::size_t n) {
    static thread_local std::vector<T> bufs[16];
    auto& b = bufs[slot];
    if (b.size() < n) b.resize(n);
    return std::span<T>(b.data(), n);
}

template <typename T>
std::span<T> tls_zeros(int slot, std::size_t n) {
    auto s = tls_span<T>(slot, n);
    std::fill(s.begin(), s.end(), T(0));
    return s;
}

}  // namespace detail

inline const char* arch_name(ArchTag t) {
    switch (t) {
        case ArchTag::Mlp: return "mlp";
        case ArchTag::Grid: return "grid";
        case ArchTag::Vm: return "vm";
        case ArchTag::Hash: return "hash";
    }
    return "?";
}

inline ArchTag arch_from_name(const std::string& s) {
    if (s == "mlp") return ArchTag::Mlp;
    if (s == "grid") return ArchTag::Grid;
    if (s == "vm") return ArchTag::Vm;
    if (s == "hash") return ArchTag::Hash;
    throw InputError("unknown architecture '" + s + "' (expected mlp|grid|vm|hash)");
}

// Result of a full field query at one point.
template <typename T>
struct PointSample {
    T sigma{};       // post-activation, >= 0
    Vec3<T> color{};  // in [0,1]^3
};

// Upstream gradients entering a field's backward pass at one point.
template <typename T>
struct PointGrad {
    T dsigma{};                    // w.r.t. activated sigma
    Vec3<T> dcolor{};              // w.r.t. activated color
    std::span<const T> dfeature;   // w.r.t. the phi1 output (may be empty)
};

// Axis-aligned field domain. Queries outside are treated as empty space.
template <typename T>
struct FieldBounds {
    Vec3<T> lo{-1, -1, -1};
    Vec3<T> hi{1, 1, 1};

    bool contains(const Vec3<T>& x) const {
        return x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y && x.z >= lo.z &&
               x.z <= hi.z;
    }

    // Normalized coordinate in [0,1]^3.
    Vec3<T> to_unit(const Vec3<T>& x) const {
        return {(x.x - lo.x) / (hi.x - lo.x), (x.y - lo.y) / (hi.y - lo.y),
                (x.z - lo.z) / (hi.z - lo.z)};
    }

    // Normalized coordinate in [-1,1]^3 (MLP encoder input).
    Vec3<T> to_sym(const Vec3<T>& x) const {
        Vec3<T> u = to_unit(x);
        return {2 * u.x - 1, 2 * u.y - 1, 2 * u.z - 1};
    }

    template <typename U>
    FieldBounds<U> cast() const {
        return {lo.template cast<U>(), hi.template cast<U>()};
    }
};

}  // namespace nerfcast
