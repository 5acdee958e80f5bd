// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <variant>

#include "nerfcast/grid_field.hpp"
#include "nerfcast/hash_field.hpp"
#include "nerfcast/mlp_field.hpp"
#include "nerfcast/vm_field.hpp"

namespace nerfcast {

template <typename T>
using FieldModel = std::variant<MlpField<T>, GridField<T>, VmField<T>, HashField<T>>;

template <typename T>
ArchTag arch_tag(const FieldModel<T>& f) {
    return static_cast<ArchTag>(f.index());
}

template <typename T>
int phi1_dim(const FieldModel<T>& f) {
    return std::visit([](const auto& a) { return a.phi1_dim(); }, f);
}

template <typename T>
std::size_t cache_size(const FieldModel<T>& f) {
    return std::visit([](const auto& a) { return a.cache_size(); }, f);
}

template <typename T>
ParamStore<T>& params(FieldModel<T>& f) {
    return std::visit([](auto& a) -> ParamStore<T>& { return a.params; }, f);
}

template <typename T>
const ParamStore<T>& params(const FieldModel<T>& f) {
    return std::visit([](const auto& a) -> const ParamStore<T>& { return a.params; }, f);
}

template <typename T>
FieldBounds<T>& field_bounds(FieldModel<T>& f) {
    return std::visit([](auto& a) -> FieldBounds<T>& { return a.bounds; }, f);
}

template <typename T>
PointSample<T> query(const FieldModel<T>& f, const Vec3<T>& x, const Vec3<T>& d,
                     std::span<T> feature_out = {}, T* cache = nullptr) {
    return std::visit([&](const auto& a) { return a.query(x, d, feature_out, cache); }, f);
}

template <typename T>
void query_phi1(const FieldModel<T>& f, const Vec3<T>& x, const Vec3<T>& d, std::span<T> feature,
                T* cache = nullptr) {
    std::visit([&](const auto& a) { a.phi1(x, d, feature, cache); }, f);
}

template <typename T>
PointSample<T> query_phi2(const FieldModel<T>& f, std::span<const T> feature, const Vec3<T>& d,
                          T* cache = nullptr) {
    return std::visit([&](const auto& a) { return a.phi2(feature, d, cache); }, f);
}

template <typename T>
void backward(const FieldModel<T>& f, const Vec3<T>& x, const Vec3<T>& d, const T* cache,
              const PointGrad<T>& g, ParamStore<T>& grads) {
    std::visit([&](const auto& a) { a.backward(x, d, cache, g, grads); }, f);
}

template <typename T>
void phi1_backward(const FieldModel<T>& f, const Vec3<T>& x, const Vec3<T>& d, const T* cache,
                   std::span<const T> dfeature, ParamStore<T>& grads) {
    std::visit([&](const auto& a) { a.phi1_backward(x, d, cache, dfeature, grads); }, f);
}

// Regularization applies only to the explicit representations.
template <typename T>
bool has_regularizer(const FieldModel<T>& f) {
    return arch_tag(f) == ArchTag::Grid || arch_tag(f) == ArchTag::Vm;
}

// Rebuild the same field at a different scalar precision (used by the
// finite-difference harness, which runs in double).
template <typename U, typename T>
FieldModel<U> cast_field(const FieldModel<T>& f) {
    return std::visit(
        [](const auto& a) -> FieldModel<U> {
            using Arch = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<Arch, MlpField<T>>) {
                MlpField<U> out(a.cfg, 0);
                out.bounds = a.bounds.template cast<U>();
                out.params = a.params.template cast<U>();
                return out;
            } else if constexpr (std::is_same_v<Arch, GridField<T>>) {
                GridField<U> out(a.cfg, 0);
                out.bounds = a.bounds.template cast<U>();
                out.params = a.params.template cast<U>();
                return out;
            } else if constexpr (std::is_same_v<Arch, VmField<T>>) {
                VmField<U> out(a.cfg, 0);
                out.bounds = a.bounds.template cast<U>();
                out.params = a.params.template cast<U>();
                return out;
            } else {
                HashField<U> out(a.cfg, 0);
                out.bounds = a.bounds.template cast<U>();
                out.params = a.params.template cast<U>();
                return out;
            }
        },
        f);
}

}  // namespace nerfcast
