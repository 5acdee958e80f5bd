// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/linear.hpp"
#include "nerfcast/param_store.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

// Weights of the distillation objective: feature (volume-aligned), density,
// color, rendered RGB, and regularization.
struct LossWeights {
    float w_feature = 2e-3f;
    float w_density = 2e-3f;
    float w_color = 2e-3f;
    float w_rgb = 1.0f;
    float w_reg = 1.0f;

    void validate() const {
        if (w_feature < 0 || w_density < 0 || w_color < 0 || w_rgb < 0 || w_reg < 0)
            throw InputError("loss weights must be >= 0");
    }
};

// Per-term values for one step; inactive terms stay at zero.
struct LossParts {
    double feature = 0, density = 0, color = 0, rgb = 0, reg = 0;
};

inline double total_loss(const LossParts& p, const LossWeights& w) {
    const double terms[5] = {p.feature, p.density, p.color, p.rgb, p.reg};
    const char* names[5] = {"feature", "density", "color", "rgb", "reg"};
    double total = 0;
    const double ws[5] = {w.w_feature, w.w_density, w.w_color, w.w_rgb, w.w_reg};
    for (int i = 0; i < 5; ++i) {
        if (std::isnan(terms[i]))
            throw TrainError(std::string("total_loss: NaN in ") + names[i] + " term");
        total += ws[i] * terms[i];
    }
    return total;
}

// Density MSE with both sides clamped to [a, b]. The gradient w.r.t. the
// student is zero wherever the student value saturated the clamp.
template <typename T>
T clipped_density_loss(std::span<const T> sigma_teacher, std::span<const T> sigma_student, T a,
                       T b, std::span<T> dL_dsigma_student = {}) {
    if (!(a < b)) throw InputError("clipped_density_loss: need a < b");
    if (sigma_teacher.size() != sigma_student.size())
        throw InputError("clipped_density_loss: length mismatch");
    const std::size_t n = sigma_teacher.size();
    if (n == 0) return T(0);
    double acc = 0;
    const T inv_n = T(1) / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T ct = std::clamp(sigma_teacher[i], a, b);
        const T cs = std::clamp(sigma_student[i], a, b);
        const T diff = cs - ct;
        acc += static_cast<double>(diff) * static_cast<double>(diff);
        if (!dL_dsigma_student.empty()) {
            const bool live = sigma_student[i] >= a && sigma_student[i] <= b;
            dL_dsigma_student[i] = live ? 2 * diff * inv_n : T(0);
        }
    }
    return static_cast<T>(acc * static_cast<double>(inv_n));
}

// Plain MSE over per-point colors; gradient is w.r.t. the student colors.
template <typename T>
T color_loss(std::span<const Vec3<T>> c_teacher, std::span<const Vec3<T>> c_student,
             std::span<Vec3<T>> dL_dc_student = {}) {
    if (c_teacher.size() != c_student.size()) throw InputError("color_loss: length mismatch");
    const std::size_t n = c_teacher.size();
    if (n == 0) return T(0);
    double acc = 0;
    const T scale = T(2) / (T(3) * static_cast<T>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3<T> d = c_student[i] - c_teacher[i];
        acc += static_cast<double>(dot(d, d));
        if (!dL_dc_student.empty()) dL_dc_student[i] = d * scale;
    }
    return static_cast<T>(acc / (3.0 * static_cast<double>(n)));
}

// Mean squared difference of axis-neighbor values, summed over axes, for a
// grid-shaped array (any rank >= 1; `dims` is x-fastest).
template <typename T>
T tv_loss(std::span<const T> values, std::span<const std::size_t> dims,
          std::span<T> dL_dvalues = {}, T grad_scale = T(1)) {
    if (dims.empty()) throw InputError("tv_loss: rank must be >= 1");
    std::size_t total = 1;
    for (std::size_t d : dims) total *= d;
    if (total != values.size()) throw InputError("tv_loss: dims do not match value count");
    double loss = 0;
    std::vector<std::size_t> stride(dims.size());
    std::size_t s = 1;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        stride[a] = s;
        s *= dims[a];
    }
    for (std::size_t a = 0; a < dims.size(); ++a) {
        if (dims[a] < 2) continue;
        const std::size_t pairs = total / dims[a] * (dims[a] - 1);
        const T inv = T(1) / static_cast<T>(pairs);
        double axis_acc = 0;
        for (std::size_t i = 0; i < total; ++i) {
            const std::size_t coord = (i / stride[a]) % dims[a];
            if (coord + 1 == dims[a]) continue;
            const std::size_t j = i + stride[a];
            const T d = values[j] - values[i];
            axis_acc += static_cast<double>(d) * static_cast<double>(d);
            if (!dL_dvalues.empty()) {
                dL_dvalues[j] += grad_scale * 2 * d * inv;
                dL_dvalues[i] -= grad_scale * 2 * d * inv;
            }
        }
        loss += axis_acc / static_cast<double>(pairs);
    }
    return static_cast<T>(loss);
}

// Mean absolute value (L1 sparsity) of density parameters.
template <typename T>
T l1_sparsity(std::span<const T> values, std::span<T> dL_dvalues = {}, T grad_scale = T(1)) {
    if (values.empty()) return T(0);
    double acc = 0;
    const T inv = T(1) / static_cast<T>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += std::abs(static_cast<double>(values[i]));
        if (!dL_dvalues.empty())
            dL_dvalues[i] += grad_scale * (values[i] > 0 ? inv : (values[i] < 0 ? -inv : T(0)));
    }
    return static_cast<T>(acc * static_cast<double>(inv));
}

// Bias-free linear adapter mapping student features into the teacher's
// feature space for the volume-aligned loss. Identity (and parameter-free)
// when the dimensions already agree. Trained jointly with the student and
// discarded afterwards.
template <typename T>
struct FeatureAdapter {
    int in_dim = 0;
    int out_dim = 0;
    ParamStore<T> params;  // empty when identity

    FeatureAdapter() = default;
    FeatureAdapter(int student_dim, int teacher_dim, uint64_t seed)
        : in_dim(student_dim), out_dim(teacher_dim) {
        if (!identity()) {
            params.add("adapter.w", {static_cast<std::size_t>(out_dim),
                                     static_cast<std::size_t>(in_dim)});
            Rng rng(seed, 41);
            init_linear<T>(params.at("adapter.w").data, {}, in_dim, out_dim, rng);
        }
    }

    bool identity() const { return in_dim == out_dim; }

    void apply(std::span<const T> v_student, std::span<T> out) const {
        if (identity()) {
            std::copy(v_student.begin(), v_student.end(), out.begin());
            return;
        }
        linear_forward<T>(params.segments[0].data, {}, v_student, out, in_dim, out_dim);
    }

    // Accumulates the adapter gradient (when requested) and dL/d(v_student).
    void backward(std::span<const T> v_student, std::span<const T> dL_dout,
                  ParamStore<T>* adapter_grads, std::span<T> dL_dv_student) const {
        if (identity()) {
            if (!dL_dv_student.empty())
                for (std::size_t i = 0; i < dL_dout.size(); ++i) dL_dv_student[i] += dL_dout[i];
            return;
        }
        std::span<T> dw =
            adapter_grads ? std::span<T>(adapter_grads->segments[0].data) : std::span<T>{};
        linear_backward<T>(params.segments[0].data, v_student, dL_dout, dw, {}, dL_dv_student,
                           in_dim, out_dim);
    }
};

// MSE between teacher features and adapted student features over a batch of
// points laid out row-major (n_points x dim).
template <typename T>
T volume_aligned_loss(std::span<const T> v_teacher, std::span<const T> v_student,
                      const FeatureAdapter<T>& adapter, std::size_t n_points,
                      ParamStore<T>* adapter_grads = nullptr,
                      std::span<T> dL_dv_student = {}) {
    if (n_points == 0) return T(0);
    const std::size_t td = static_cast<std::size_t>(adapter.out_dim);
    const std::size_t sd = static_cast<std::size_t>(adapter.in_dim);
    if (v_teacher.size() != n_points * td || v_student.size() != n_points * sd)
        throw InputError("volume_aligned_loss: feature array sizes do not match dims");
    double acc = 0;
    std::vector<T> u(td);
    std::vector<T> du(td);
    const T scale = T(2) / (static_cast<T>(n_points) * static_cast<T>(td));
    for (std::size_t p = 0; p < n_points; ++p) {
        auto vs = v_student.subspan(p * sd, sd);
        adapter.apply(vs, u);
        double row = 0;
        for (std::size_t k = 0; k < td; ++k) {
            const T d = u[k] - v_teacher[p * td + k];
            row += static_cast<double>(d) * static_cast<double>(d);
            du[k] = d * scale;
        }
        acc += row;
        if (adapter_grads || !dL_dv_student.empty())
            adapter.backward(vs, du, adapter_grads,
                             dL_dv_student.empty() ? std::span<T>{}
                                                   : dL_dv_student.subspan(p * sd, sd));
    }
    return static_cast<T>(acc / (static_cast<double>(n_points) * static_cast<double>(td)));
}

}  // namespace nerfcast
