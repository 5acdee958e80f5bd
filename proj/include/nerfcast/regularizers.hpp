// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nerfcast/field_model.hpp"
#include "nerfcast/losses.hpp"

namespace nerfcast {

struct RegWeights {
    float tv = 1e-4f;
    float l1 = 1e-5f;
};

// Architecture-dependent regularization term: total variation plus L1
// sparsity on the density parameters of the explicit representations
// (grid and VM factors). MLP and hash fields have no regularizer.
// Gradients (scaled by outer_scale, the reg weight in the total loss) are
// accumulated into `grads` when given.
template <typename T>
T field_regularizer(const FieldModel<T>& f, const RegWeights& rw, T outer_scale = T(1),
                    ParamStore<T>* grads = nullptr) {
    const T wtv = static_cast<T>(rw.tv);
    const T wl1 = static_cast<T>(rw.l1);
    if (const auto* g = std::get_if<GridField<T>>(&f)) {
        const auto& seg = g->params.segments[0];  // grid.sigma
        std::span<T> dsig =
            grads ? std::span<T>(grads->segments[0].data) : std::span<T>{};
        const std::size_t r = seg.shape[0];
        const std::size_t dims[3] = {r, r, r};
        const T tv = tv_loss<T>(seg.data, std::span<const std::size_t>(dims, 3), dsig,
                                outer_scale * wtv);
        const T l1 = l1_sparsity<T>(seg.data, dsig, outer_scale * wl1);
        return wtv * tv + wl1 * l1;
    }
    if (const auto* v = std::get_if<VmField<T>>(&f)) {
        // Density factors live in segments 0..5: (v, m) per axis group. TV is
        // applied per rank component along the spatial axes only, summed.
        T tv_total = 0, l1_total = 0;
        const int rd = v->cfg.rank_density / 3;
        const auto res = static_cast<std::size_t>(v->cfg.resolution);
        for (int gi = 0; gi < 6; ++gi) {
            const auto& seg = v->params.segments[static_cast<std::size_t>(gi)];
            const bool is_matrix = (gi % 2) == 1;
            const std::size_t per = is_matrix ? res * res : res;
            for (int rr = 0; rr < rd; ++rr) {
                auto vals = std::span<const T>(seg.data).subspan(static_cast<std::size_t>(rr) * per, per);
                std::span<T> dv =
                    grads ? std::span<T>(grads->segments[static_cast<std::size_t>(gi)].data)
                                .subspan(static_cast<std::size_t>(rr) * per, per)
                          : std::span<T>{};
                const std::size_t dims2[2] = {res, res};
                const std::size_t dims1[1] = {res};
                tv_total += tv_loss<T>(vals,
                                       is_matrix ? std::span<const std::size_t>(dims2, 2)
                                                 : std::span<const std::size_t>(dims1, 1),
                                       dv, outer_scale * wtv);
                l1_total += l1_sparsity<T>(vals, dv, outer_scale * wl1);
            }
        }
        return wtv * tv_total + wl1 * l1_total;
    }
    return T(0);
}

}  // namespace nerfcast
