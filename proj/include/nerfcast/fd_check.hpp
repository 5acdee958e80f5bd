// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nerfcast/compositing.hpp"
#include "nerfcast/field_model.hpp"
#include "nerfcast/losses.hpp"
#include "nerfcast/regularizers.hpp"
#include "nerfcast/rng.hpp"

namespace nerfcast {

enum class LossTerm { Feature, Density, Color, Rgb, Reg };

inline const char* loss_term_name(LossTerm t) {
    switch (t) {
        case LossTerm::Feature: return "feature";
        case LossTerm::Density: return "density";
        case LossTerm::Color: return "color";
        case LossTerm::Rgb: return "rgb";
        case LossTerm::Reg: return "reg";
    }
    return "?";
}

struct FdOptions {
    int n_rays = 8;
    int spp = 8;
    int n_params = 256;
    double h = 4e-3;
    uint64_t seed = 0;
    double clip_min = 0.0;
    double clip_max = 100.0;
    int teacher_dim = 0;  // feature term: target dim; 0 = student dim (identity adapter)
    RegWeights reg;
};

struct FdParamError {
    std::string segment;
    std::size_t index = 0;
    double analytic = 0;
    double central = 0;
    double rel_error = 0;
};

struct FdReport {
    LossTerm term = LossTerm::Rgb;
    double max_rel_error = 0;
    FdParamError worst;
    int n_checked = 0;
    int n_zero_consistent = 0;  // both sides below the dead threshold
    int n_kink_skipped = 0;     // central difference straddled a non-smooth point

    std::string text() const {
        std::ostringstream o;
        o << "term=" << loss_term_name(term) << " checked=" << n_checked
          << " zero_consistent=" << n_zero_consistent << " kink_skipped=" << n_kink_skipped
          << " max_rel_error=" << max_rel_error;
        if (!worst.segment.empty())
            o << " worst=" << worst.segment << "[" << worst.index << "]"
              << " analytic=" << worst.analytic << " central=" << worst.central;
        return o.str();
    }
};

namespace fd_detail {

// Frozen random batch: rays through the field box with midpoint samples and
// synthetic targets. Targets are independent of the field so gradients are
// generically nonzero.
struct FdBatch {
    int n_rays = 0, spp = 0;
    std::vector<Vec3<double>> dirs;    // per ray
    std::vector<Vec3<double>> pos;     // per point
    std::vector<double> deltas;        // per point
    std::vector<double> sigma_t;       // per point
    std::vector<Vec3<double>> color_t; // per point
    std::vector<double> feat_t;        // per point x teacher_dim
    std::vector<Vec3<double>> rgb_t;   // per ray
    int teacher_dim = 0;
};

inline FdBatch make_batch(const FieldModel<double>& field, const FdOptions& opt, int sdim) {
    FdBatch b;
    b.n_rays = opt.n_rays;
    b.spp = opt.spp;
    b.teacher_dim = opt.teacher_dim > 0 ? opt.teacher_dim : sdim;
    Rng rng(mix_seed(opt.seed, 0xfdULL), 19);
    const FieldBounds<double> bounds =
        std::visit([](const auto& a) { return a.bounds; }, field);
    const Vec3<double> lo = bounds.lo;
    const Vec3<double> hi = bounds.hi;
    const Vec3<double> c = (lo + hi) * 0.5;
    const double radius = 0.5 * norm(hi - lo);
    for (int r = 0; r < opt.n_rays; ++r) {
        const double az = rng.uniform_double() * 2 * M_PI;
        const double el = (rng.uniform_double() - 0.5) * 2.4;
        const Vec3<double> origin =
            c + Vec3<double>{1.8 * radius * std::cos(el) * std::cos(az),
                             1.8 * radius * std::cos(el) * std::sin(az),
                             1.8 * radius * std::sin(el)};
        Vec3<double> target{c.x + (rng.uniform_double() - 0.5) * 0.5 * radius,
                            c.y + (rng.uniform_double() - 0.5) * 0.5 * radius,
                            c.z + (rng.uniform_double() - 0.5) * 0.5 * radius};
        const Vec3<double> dir = normalized(target - origin);
        b.dirs.push_back(dir);
        // Span a segment guaranteed to lie in the box around the center.
        const double t_mid = dot(c - origin, dir);
        const double half = 0.35 * radius;
        const double t0 = t_mid - half, t1 = t_mid + half;
        const double bin = (t1 - t0) / opt.spp;
        for (int i = 0; i < opt.spp; ++i) {
            const double t = t0 + (i + 0.5) * bin;
            b.pos.push_back(origin + dir * t);
            b.deltas.push_back(bin);
        }
        b.rgb_t.push_back({rng.uniform_double(), rng.uniform_double(), rng.uniform_double()});
    }
    const std::size_t n_pts = b.pos.size();
    b.sigma_t.resize(n_pts);
    b.color_t.resize(n_pts);
    b.feat_t.resize(n_pts * static_cast<std::size_t>(b.teacher_dim));
    for (std::size_t k = 0; k < n_pts; ++k) {
        b.sigma_t[k] = rng.uniform_double() * 150.0;  // straddles the clip bound
        b.color_t[k] = {rng.uniform_double(), rng.uniform_double(), rng.uniform_double()};
    }
    for (auto& v : b.feat_t) v = (rng.uniform_double() - 0.5);
    return b;
}

// Loss of one term given the current parameters (forward only).
inline double eval_term(const FieldModel<double>& field, const FeatureAdapter<double>& adapter,
                        const FdBatch& b, LossTerm term, const FdOptions& opt) {
    if (term == LossTerm::Reg)
        return static_cast<double>(field_regularizer<double>(field, opt.reg));
    const std::size_t n_pts = b.pos.size();
    const int sdim = phi1_dim(field);
    std::vector<double> sig(n_pts);
    std::vector<Vec3<double>> col(n_pts);
    std::vector<double> feat;
    if (term == LossTerm::Feature) feat.resize(n_pts * static_cast<std::size_t>(sdim));
    std::vector<double> fbuf(static_cast<std::size_t>(sdim));
    for (std::size_t k = 0; k < n_pts; ++k) {
        const Vec3<double> dir = b.dirs[k / static_cast<std::size_t>(b.spp)];
        if (term == LossTerm::Feature) {
            query_phi1(field, b.pos[k], dir, std::span<double>(fbuf));
            std::copy(fbuf.begin(), fbuf.end(),
                      feat.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(sdim)));
        } else {
            const auto s = query(field, b.pos[k], dir);
            sig[k] = s.sigma;
            col[k] = s.color;
        }
    }
    switch (term) {
        case LossTerm::Feature:
            return volume_aligned_loss<double>(b.feat_t, feat, adapter, n_pts);
        case LossTerm::Density:
            return clipped_density_loss<double>(b.sigma_t, sig, opt.clip_min, opt.clip_max);
        case LossTerm::Color:
            return color_loss<double>(b.color_t, col);
        case LossTerm::Rgb: {
            double acc = 0;
            for (int r = 0; r < b.n_rays; ++r) {
                const std::size_t base = static_cast<std::size_t>(r) * b.spp;
                const auto out = composite<double>(
                    std::span<const double>(sig).subspan(base, static_cast<std::size_t>(b.spp)),
                    std::span<const Vec3<double>>(col).subspan(base, static_cast<std::size_t>(b.spp)),
                    std::span<const double>(b.deltas).subspan(base, static_cast<std::size_t>(b.spp)));
                const Vec3<double> d = out.rgb - b.rgb_t[static_cast<std::size_t>(r)];
                acc += dot(d, d);
            }
            return acc / (3.0 * b.n_rays);
        }
        default: return 0;
    }
}

// Analytic gradient of one term via the hand-derived backward passes.
inline void analytic_grads(const FieldModel<double>& field, const FeatureAdapter<double>& adapter,
                           const FdBatch& b, LossTerm term, const FdOptions& opt,
                           ParamStore<double>& grads, ParamStore<double>* adapter_grads) {
    if (term == LossTerm::Reg) {
        field_regularizer<double>(field, opt.reg, 1.0, &grads);
        return;
    }
    const std::size_t n_pts = b.pos.size();
    const int sdim = phi1_dim(field);
    const std::size_t cache_n = std::max<std::size_t>(1, cache_size(field));
    std::vector<double> sig(n_pts);
    std::vector<Vec3<double>> col(n_pts);
    std::vector<double> feat(n_pts * static_cast<std::size_t>(sdim));
    std::vector<double> dsig(n_pts, 0.0);
    std::vector<Vec3<double>> dcol(n_pts);
    std::vector<double> dfeat;
    std::vector<double> fbuf(static_cast<std::size_t>(sdim));
    // Forward (no caches yet; pass 2 recomputes with caches).
    for (std::size_t k = 0; k < n_pts; ++k) {
        const Vec3<double> dir = b.dirs[k / static_cast<std::size_t>(b.spp)];
        if (term == LossTerm::Feature) {
            query_phi1(field, b.pos[k], dir, std::span<double>(fbuf));
            std::copy(fbuf.begin(), fbuf.end(),
                      feat.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(sdim)));
        } else {
            const auto s = query(field, b.pos[k], dir);
            sig[k] = s.sigma;
            col[k] = s.color;
        }
    }
    switch (term) {
        case LossTerm::Feature:
            dfeat.assign(n_pts * static_cast<std::size_t>(sdim), 0.0);
            volume_aligned_loss<double>(b.feat_t, feat, adapter, n_pts, adapter_grads,
                                        dfeat);
            break;
        case LossTerm::Density:
            clipped_density_loss<double>(b.sigma_t, sig, opt.clip_min, opt.clip_max,
                                         std::span<double>(dsig));
            break;
        case LossTerm::Color:
            color_loss<double>(b.color_t, col, std::span<Vec3<double>>(dcol));
            break;
        case LossTerm::Rgb:
            for (int r = 0; r < b.n_rays; ++r) {
                const std::size_t base = static_cast<std::size_t>(r) * b.spp;
                auto sg = std::span<const double>(sig).subspan(base, static_cast<std::size_t>(b.spp));
                auto cl = std::span<const Vec3<double>>(col).subspan(base,
                                                                     static_cast<std::size_t>(b.spp));
                auto dl = std::span<const double>(b.deltas).subspan(base,
                                                                    static_cast<std::size_t>(b.spp));
                const auto out = composite<double>(sg, cl, dl);
                const Vec3<double> dL_drgb =
                    (out.rgb - b.rgb_t[static_cast<std::size_t>(r)]) * (2.0 / (3.0 * b.n_rays));
                composite_backward<double>(sg, cl, dl, dL_drgb, false,
                                           std::span<double>(dsig).subspan(base,
                                                                           static_cast<std::size_t>(b.spp)),
                                           std::span<Vec3<double>>(dcol).subspan(
                                               base, static_cast<std::size_t>(b.spp)));
            }
            break;
        default: break;
    }
    std::vector<double> cache(cache_n);
    for (std::size_t k = 0; k < n_pts; ++k) {
        const Vec3<double> dir = b.dirs[k / static_cast<std::size_t>(b.spp)];
        if (term == LossTerm::Feature) {
            query_phi1(field, b.pos[k], dir, std::span<double>(fbuf), cache.data());
            phi1_backward(field, b.pos[k], dir, cache.data(),
                          std::span<const double>(dfeat).subspan(
                              k * static_cast<std::size_t>(sdim), static_cast<std::size_t>(sdim)),
                          grads);
        } else {
            query(field, b.pos[k], dir, {}, cache.data());
            PointGrad<double> g{dsig[k], dcol[k], {}};
            backward(field, b.pos[k], dir, cache.data(), g, grads);
        }
    }
}

}  // namespace fd_detail

// Central-difference verification of the analytic gradients. Each parameter
// is probed at steps h and h/2 and the two quotients are Richardson-combined;
// parameters where the quotients disagree (the difference straddles a
// ReLU/clip kink, where central differences are invalid) are skipped, and
// parameters whose gradients sit below the finite-difference resolution
// (cancellation noise ~ eps*|L|/h) are reported as zero-consistent rather
// than compared. `tamper`, when set, mutates the analytic gradient before
// comparison (used by the sabotage-detection test).
inline FdReport fd_check(const FieldModel<double>& field_in, LossTerm term, const FdOptions& opt,
                         const std::function<void(ParamStore<double>&)>& tamper = {}) {
    using namespace fd_detail;
    FieldModel<double> field = field_in;  // perturbed in place during FD
    FdReport rep;
    rep.term = term;
    const int sdim = phi1_dim(field);
    FeatureAdapter<double> adapter(sdim, opt.teacher_dim > 0 ? opt.teacher_dim : sdim,
                                   mix_seed(opt.seed, 0xadULL));
    const FdBatch batch = make_batch(field, opt, sdim);

    ParamStore<double> grads = params(field).zeros_like();
    ParamStore<double> adapter_grads = adapter.params.zeros_like();
    analytic_grads(field, adapter, batch, term, opt, grads,
                   adapter.identity() ? nullptr : &adapter_grads);
    if (tamper) tamper(grads);

    // Candidate parameters: trainable student segments, plus the adapter for
    // the feature term.
    struct Slot {
        bool in_adapter;
        std::size_t seg, idx;
    };
    std::vector<Slot> candidates;
    {
        Rng rng(mix_seed(opt.seed, 0x5e1ec7ULL), 29);
        const auto& ps = params(field);
        std::vector<std::size_t> seg_ids;
        for (std::size_t s = 0; s < ps.segments.size(); ++s)
            if (ps.segments[s].trainable && !ps.segments[s].data.empty()) seg_ids.push_back(s);
        const int budget = opt.n_params * 4;
        for (int i = 0; i < budget; ++i) {
            const std::size_t s = seg_ids[rng.uniform_int(static_cast<uint32_t>(seg_ids.size()))];
            const std::size_t n = ps.segments[s].data.size();
            candidates.push_back({false, s, rng.uniform_int(static_cast<uint32_t>(n))});
        }
        if (term == LossTerm::Feature && !adapter.identity()) {
            for (int i = 0; i < opt.n_params / 4; ++i) {
                const std::size_t n = adapter.params.segments[0].data.size();
                candidates.push_back({true, 0, rng.uniform_int(static_cast<uint32_t>(n))});
            }
        }
    }

    auto eval = [&](void) {
        return eval_term(field, adapter, batch, term, opt);
    };
    auto probe = [&](double* slot, double h, double& central, double& second) {
        const double old = *slot;
        *slot = old + h;
        const double lp = eval();
        *slot = old - h;
        const double lm = eval();
        *slot = old;
        central = (lp - lm) / (2 * h);
        second = lp + lm;  // minus 2*L0, filled in by the caller
    };

    // FD resolution: subtractive cancellation leaves ~eps * |L| / h of noise
    // in each quotient. Gradients below ~100x that cannot be certified.
    const double loss0 = eval();
    const double loss_scale = std::max(std::abs(loss0), 1e-3);
    const double fd_floor =
        100.0 * 64.0 * std::numeric_limits<double>::epsilon() * loss_scale / opt.h;

    for (const Slot& c : candidates) {
        if (rep.n_checked >= opt.n_params) break;
        double* slot = c.in_adapter ? &adapter.params.segments[c.seg].data[c.idx]
                                    : &params(field).segments[c.seg].data[c.idx];
        const double analytic = c.in_adapter ? adapter_grads.segments[c.seg].data[c.idx]
                                             : grads.segments[c.seg].data[c.idx];
        double c1, c2, s1, s2;
        probe(slot, opt.h, c1, s1);
        probe(slot, opt.h / 2, c2, s2);
        if (std::abs(c1 - c2) > 1e-3 * std::max({std::abs(c1), std::abs(c2), fd_floor})) {
            ++rep.n_kink_skipped;  // non-differentiable crossing, FD invalid here
            continue;
        }
        // Second differences scale like h^2 when smooth but like h across a
        // ReLU/clip kink, so mismatched curvature estimates flag crossings
        // that sit too close to the expansion point for the test above.
        const double curv1 = (s1 - 2 * loss0) / (opt.h * opt.h);
        const double curv2 = (s2 - 2 * loss0) / (opt.h * opt.h / 4);
        const double curv_noise =
            64.0 * std::numeric_limits<double>::epsilon() * loss_scale / (opt.h * opt.h / 4);
        if (std::abs(curv1 - curv2) >
            0.05 * std::max({std::abs(curv1), std::abs(curv2), 100.0 * curv_noise})) {
            ++rep.n_kink_skipped;
            continue;
        }
        ++rep.n_checked;
        const double central = (4.0 * c2 - c1) / 3.0;  // cancels the h^2 term
        const double floor = std::max(1e-9, fd_floor);
        if (std::abs(analytic) < floor && std::abs(central) < floor) {
            ++rep.n_zero_consistent;
            continue;
        }
        const double rel = std::abs(analytic - central) / (std::abs(central) + 1e-12);
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst.segment = c.in_adapter ? std::string("adapter.w")
                                             : params(field).segments[c.seg].name;
            rep.worst.index = c.idx;
            rep.worst.analytic = analytic;
            rep.worst.central = central;
        }
    }
    return rep;
}

// Applicable loss terms for an architecture (grid pairs skip the feature
// term; only explicit representations carry regularizers).
inline std::vector<LossTerm> applicable_terms(ArchTag tag) {
    std::vector<LossTerm> terms;
    if (tag != ArchTag::Grid) terms.push_back(LossTerm::Feature);
    terms.push_back(LossTerm::Density);
    terms.push_back(LossTerm::Color);
    terms.push_back(LossTerm::Rgb);
    if (tag == ArchTag::Grid || tag == ArchTag::Vm) terms.push_back(LossTerm::Reg);
    return terms;
}

}  // namespace nerfcast
