// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

// The shared training engine behind teacher fitting, distillation and
// fine-tuning. One step runs three phases:
//   pass 1 (parallel over rays): sample points, evaluate targets and the
//     student, composite when the RGB loss is active;
//   middle (single thread): point selection, loss values, upstream gradients;
//   pass 2 (parallel over rays): student re-forward with caches and the
//     hand-derived backward into per-worker gradient buffers, merged in
//     worker order.
// Single-threaded runs are bitwise deterministic; multi-threaded runs are
// deterministic for a fixed thread count.

#include "nerfcast/distill.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "nerfcast/active_learning.hpp"
#include "nerfcast/adam.hpp"
#include "nerfcast/metrics.hpp"
#include "nerfcast/parallel.hpp"
#include "nerfcast/pseudo_poses.hpp"
#include "nerfcast/renderer.hpp"

namespace nerfcast {

namespace fs = std::filesystem;

StagePlan StagePlan::from_config(const RunConfig& cfg, bool feature_active) {
    StagePlan plan;
    if (!cfg.stage_wise) return plan;  // everything is stage 3
    // Without an encoder-alignment term there is nothing to train in stage 1,
    // so it folds into stage 2.
    plan.stage1_end = feature_active ? cfg.stage1_steps : 0;
    plan.stage2_end = plan.stage1_end + cfg.stage2_steps;
    return plan;
}

namespace {

struct TrainRay {
    Vec3f origin;
    Vec3f dir;
    float t0 = 0, t1 = 0;
    int pose = -1;
    int16_t px = 0, py = 0;
    Vec3f target_rgb{};  // dataset mode only
};

enum class TargetMode { FieldTeacher, SceneOracle, DatasetPixels };

struct LossFlags {
    bool feature = false;
    bool density = false;
    bool color = false;
    bool rgb = true;
    bool reg = false;
};

double now_sec() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

class Engine {
public:
    TargetMode mode;
    const FieldModel<float>* teacher = nullptr;
    const ProceduralScene* scene = nullptr;
    const Dataset* dataset = nullptr;
    FieldModel<float>* student = nullptr;
    RunConfig cfg;
    LossFlags flags;
    std::string out_dir;
    AlDumpOptions al_dump;
    int total_steps = 0;

    DistillResult run() {
        cfg.validate();
        if (cfg.threads > 0) set_thread_count(cfg.threads);
        const int workers = thread_count();
        DistillResult result;
        if (teacher) result.teacher_checksum_before = param_checksum(params(*teacher));

        const bool pair_has_grid =
            (teacher && arch_tag(*teacher) == ArchTag::Grid) ||
            arch_tag(*student) == ArchTag::Grid;
        const bool feature_active = flags.feature && teacher && !pair_has_grid;
        const bool reg_active = flags.reg && has_regularizer(*student);
        const StagePlan plan = StagePlan::from_config(cfg, feature_active);
        const int spp = cfg.samples_per_ray;

        // Feature adapter (student dim -> teacher dim), trained jointly,
        // never saved.
        FeatureAdapter<float> adapter;
        std::optional<AdamState<float>> adapter_adam;
        int tdim = 0, sdim = 0;
        if (feature_active) {
            tdim = phi1_dim(*teacher);
            sdim = phi1_dim(*student);
            adapter = FeatureAdapter<float>(sdim, tdim, mix_seed(cfg.seed, 0xadULL));
            if (!adapter.identity())
                adapter_adam.emplace(adapter.params,
                                     AdamConfig{cfg.arch_lr(arch_tag(*student)), 0.9f, 0.999f,
                                                1e-8f});
        }

        // Memory estimate for the per-step arrays; sequential execution with a
        // smaller batch is the remedy when it does not fit.
        {
            const std::size_t pts = static_cast<std::size_t>(cfg.batch_rays + 64) * spp;
            std::size_t bytes = pts * (2 * sizeof(float) + 2 * sizeof(Vec3f) + 28);
            if (feature_active) bytes += pts * static_cast<std::size_t>(tdim + 2 * sdim) * 4;
            if (bytes > (3ULL << 30))
                throw TrainError(
                    "training batch would need " + std::to_string(bytes >> 20) +
                    " MiB; reduce batch_rays or samples_per_ray and run sequentially");
        }

        AdamState<float> adam(params(*student),
                              AdamConfig{cfg.arch_lr(arch_tag(*student)), 0.9f, 0.999f, 1e-8f});
        std::vector<ParamStore<float>> grad_bufs;
        grad_bufs.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) grad_bufs.push_back(params(*student).zeros_like());

        // Active-learning stores.
        const std::size_t n_sr =
            static_cast<std::size_t>(std::floor(cfg.al_ray_fraction * cfg.batch_rays));
        const std::size_t n_cp = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(cfg.al_pose_fraction * cfg.poses_per_epoch)));
        ActiveSet<TrainRay> tsr(n_sr);
        ActiveSet<CameraPose> tcp(n_cp);

        // Validation poses, fixed for the whole run.
        std::vector<CameraPose> val_poses;
        if (cfg.val_poses > 0 && mode != TargetMode::DatasetPixels) {
            Rng vrng(mix_seed(cfg.seed, 0x7a1ULL), 3);
            val_poses = generate_pseudo_poses(cfg.val_poses, pose_layout_from_name(cfg.pose_layout),
                                              cfg.pose_radius_min, cfg.pose_radius_max,
                                              cfg.pose_fov_deg, cfg.val_resolution,
                                              cfg.val_resolution, vrng);
        }

        // Epoch state.
        std::vector<CameraPose> epoch_poses;
        std::vector<std::array<int32_t, 3>> pool;  // (pose, px, py)
        std::size_t pool_cursor = 0;
        int epoch = 0;

        const Vec3f box_lo = field_bounds(*student).lo;
        const Vec3f box_hi = field_bounds(*student).hi;

        auto rebuild_epoch = [&](bool al_active) {
            epoch_poses.clear();
            if (mode == TargetMode::DatasetPixels) {
                epoch_poses = dataset->poses;
            } else {
                Rng prng(mix_seed(cfg.seed, 0x9000ULL + static_cast<uint64_t>(epoch)), 7);
                epoch_poses = generate_pseudo_poses(
                    cfg.poses_per_epoch, pose_layout_from_name(cfg.pose_layout),
                    cfg.pose_radius_min, cfg.pose_radius_max, cfg.pose_fov_deg,
                    cfg.pseudo_resolution, cfg.pseudo_resolution, prng);
                if (al_active && !tcp.empty()) {
                    Rng srng(mix_seed(cfg.seed, 0xc0ULL + static_cast<uint64_t>(epoch)), 9);
                    for (auto& p : tcp.random_select(n_cp, srng)) epoch_poses.push_back(p);
                }
            }
            pool.clear();
            for (std::size_t pi = 0; pi < epoch_poses.size(); ++pi) {
                const auto& pose = epoch_poses[pi];
                for (int y = 0; y < pose.height; ++y)
                    for (int x = 0; x < pose.width; ++x)
                        pool.push_back({static_cast<int32_t>(pi), x, y});
            }
            Rng shuffle_rng(mix_seed(cfg.seed, 0x5501ULL + static_cast<uint64_t>(epoch)), 11);
            for (std::size_t i = pool.size(); i > 1; --i)
                std::swap(pool[i - 1], pool[shuffle_rng.uniform_int(static_cast<uint32_t>(i))]);
            pool_cursor = 0;
        };

        // Per-step arrays (sized below once the batch is known).
        std::vector<TrainRay> rays;
        std::vector<Vec3f> pos;
        std::vector<float> ts, deltas;
        std::vector<float> sig_t, sig_s;
        std::vector<Vec3f> col_t, col_s;
        std::vector<float> feat_t, feat_s;
        std::vector<float> w_t, w_s;
        std::vector<Vec3f> rgb_t, rgb_s;
        std::vector<float> dsig;
        std::vector<Vec3f> dcol;
        std::vector<float> dfeat;
        std::vector<float> point_cache;  // per-point forward caches for pass 2
        const std::size_t cache_floats = cache_size(*student);

        double ema = 0, density_ema = 0;
        bool ema_init = false;
        double ema_first = 0;
        double stage1_time = 0, full_time = 0;
        int stage1_steps_run = 0, full_steps_run = 0;
        std::vector<double> last_val;

        std::ofstream trace_csv;
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            trace_csv.open(fs::path(out_dir) / "trace.csv");
            trace_csv << "step,loss_feature,loss_density,loss_color,loss_rgb,loss_reg,total,"
                         "val_psnr\n";
            std::ofstream manifest(fs::path(out_dir) / "config.txt");
            manifest << "# run manifest (reproducible snapshot)\n";
            if (teacher) manifest << "# teacher_arch = " << arch_name(arch_tag(*teacher)) << "\n";
            manifest << "# student_arch = " << arch_name(arch_tag(*student)) << "\n";
            manifest << serialize_config(cfg);
        }

        result.trace.reserve(static_cast<std::size_t>(total_steps));

        int prev_stage = 0;
        for (int step = 0; step < total_steps; ++step) {
            const int stage = plan.stage_of(step);
            if (stage != prev_stage && prev_stage != 0) {
                // The objective changes discontinuously between stages; stale
                // second moments would throttle the new terms' gradients.
                adam.reset();
                if (adapter_adam) adapter_adam->reset();
            }
            prev_stage = stage;
            const bool al_active = cfg.active_learning && stage == 3 &&
                                   mode != TargetMode::DatasetPixels;
            const double t_step0 = now_sec();
            if (pool_cursor >= pool.size()) {
                rebuild_epoch(al_active);
                if (pool.empty()) throw TrainError("training pool is empty");
                ++epoch;
            }

            // ---- batch assembly ----
            rays.clear();
            const std::size_t take =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_rays),
                                      pool.size() - pool_cursor);
            for (std::size_t i = 0; i < take; ++i) {
                const auto& e = pool[pool_cursor + i];
                const auto& pose = epoch_poses[static_cast<std::size_t>(e[0])];
                const Ray r = pixel_ray(pose, static_cast<float>(e[1]) + 0.5f,
                                        static_cast<float>(e[2]) + 0.5f);
                TrainRay tr;
                tr.origin = r.origin;
                tr.dir = r.dir;
                tr.pose = e[0];
                tr.px = static_cast<int16_t>(e[1]);
                tr.py = static_cast<int16_t>(e[2]);
                if (!ray_box(tr.origin, tr.dir, box_lo, box_hi, tr.t0, tr.t1) ||
                    tr.t1 <= tr.t0 + 1e-6f)
                    continue;  // never intersects the scene: contributes nothing
                tr.t0 = std::max(tr.t0, 1e-4f);
                if (mode == TargetMode::DatasetPixels) {
                    const float* p = dataset->images[static_cast<std::size_t>(e[0])].pixel(
                        e[1], e[2]);
                    tr.target_rgb = {p[0], p[1], p[2]};
                }
                rays.push_back(tr);
            }
            pool_cursor += take;
            if (al_active && cfg.al_select_rays && !tsr.empty()) {
                Rng rrng(mix_seed(cfg.seed, 0xe000ULL + static_cast<uint64_t>(step)), 13);
                for (auto& rr : tsr.random_select(n_sr, rrng)) rays.push_back(rr);
            }
            if (rays.empty()) continue;

            const std::size_t n_rays = rays.size();
            const std::size_t n_pts = n_rays * static_cast<std::size_t>(spp);
            pos.resize(n_pts);
            ts.resize(n_pts);
            deltas.resize(n_pts);
            sig_s.resize(n_pts);
            col_s.resize(n_pts);
            const bool want_points = stage >= 2 || mode == TargetMode::SceneOracle;
            const bool want_rgb = stage == 3 && flags.rgb;
            sig_t.resize(n_pts);
            col_t.resize(n_pts);
            if (feature_active) {
                feat_t.resize(n_pts * static_cast<std::size_t>(tdim));
                feat_s.resize(n_pts * static_cast<std::size_t>(sdim));
            }
            if (want_rgb) {
                w_t.assign(n_pts, 0.0f);
                w_s.assign(n_pts, 0.0f);
                rgb_t.resize(n_rays);
                rgb_s.resize(n_rays);
            }
            // Keeping the forward caches lets pass 2 start straight at the
            // backward pass instead of re-evaluating the student.
            const bool keep_caches = cache_floats > 0 &&
                                     n_pts * cache_floats * sizeof(float) <= (256ULL << 20);
            if (keep_caches) point_cache.resize(n_pts * cache_floats);
            auto cache_at = [&](std::size_t k) -> float* {
                return keep_caches ? point_cache.data() + k * cache_floats : nullptr;
            };

            // ---- pass 1: sampling + forward evaluation ----
            const uint64_t step_seed = mix_seed(cfg.seed, 0xabc000ULL + static_cast<uint64_t>(step));
            parallel_chunks(n_rays, workers, [&](int, std::size_t rb, std::size_t re) {
                std::vector<float> tfeat(feature_active ? static_cast<std::size_t>(tdim) : 0);
                std::vector<float> sfeat(feature_active ? static_cast<std::size_t>(sdim) : 0);
                for (std::size_t ri = rb; ri < re; ++ri) {
                    const TrainRay& tr = rays[ri];
                    Ray ray{tr.origin, tr.dir, tr.t0, tr.t1};
                    Rng rng(step_seed, 100 + ri);
                    const SampleSet samples = stratify_samples(ray, spp, cfg.sampling(), rng);
                    const std::size_t base = ri * static_cast<std::size_t>(spp);
                    std::copy(samples.t.begin(), samples.t.end(), ts.begin() + base);
                    std::copy(samples.delta.begin(), samples.delta.end(), deltas.begin() + base);
                    std::copy(samples.pos.begin(), samples.pos.end(), pos.begin() + base);
                    for (int i = 0; i < spp; ++i) {
                        const std::size_t k = base + static_cast<std::size_t>(i);
                        // target side
                        if (mode == TargetMode::SceneOracle) {
                            scene->query(pos[k], tr.dir, sig_t[k], col_t[k]);
                        } else if (mode == TargetMode::FieldTeacher) {
                            if (stage == 1) {
                                query_phi1(*teacher, pos[k], tr.dir,
                                           std::span<float>(tfeat));
                            } else {
                                const auto smp =
                                    query(*teacher, pos[k], tr.dir,
                                          feature_active ? std::span<float>(tfeat)
                                                         : std::span<float>{});
                                sig_t[k] = smp.sigma;
                                col_t[k] = smp.color;
                            }
                            if (feature_active)
                                std::copy(tfeat.begin(), tfeat.end(),
                                          feat_t.begin() + static_cast<std::ptrdiff_t>(
                                                               k * static_cast<std::size_t>(tdim)));
                        }
                        // student side
                        if (stage == 1) {
                            query_phi1(*student, pos[k], tr.dir, std::span<float>(sfeat),
                                       cache_at(k));
                            sig_s[k] = 0;
                            col_s[k] = {};
                        } else {
                            const auto smp = query(*student, pos[k], tr.dir,
                                                   feature_active ? std::span<float>(sfeat)
                                                                  : std::span<float>{},
                                                   cache_at(k));
                            sig_s[k] = smp.sigma;
                            col_s[k] = smp.color;
                        }
                        if (feature_active)
                            std::copy(sfeat.begin(), sfeat.end(),
                                      feat_s.begin() + static_cast<std::ptrdiff_t>(
                                                           k * static_cast<std::size_t>(sdim)));
                    }
                    if (want_rgb) {
                        auto sg = std::span<const float>(sig_s).subspan(base, spp);
                        auto cl = std::span<const Vec3f>(col_s).subspan(base, spp);
                        auto dl = std::span<const float>(deltas).subspan(base, spp);
                        const auto outs = composite<float>(sg, cl, dl, cfg.white_background);
                        rgb_s[ri] = outs.rgb;
                        std::copy(outs.weights.begin(), outs.weights.end(), w_s.begin() + base);
                        if (mode == TargetMode::DatasetPixels) {
                            rgb_t[ri] = rays[ri].target_rgb;
                        } else {
                            auto sgt = std::span<const float>(sig_t).subspan(base, spp);
                            auto clt = std::span<const Vec3f>(col_t).subspan(base, spp);
                            const auto outt = composite<float>(sgt, clt, dl, cfg.white_background);
                            rgb_t[ri] = outt.rgb;
                            std::copy(outt.weights.begin(), outt.weights.end(),
                                      w_t.begin() + base);
                        }
                    }
                }
            });

            // ---- middle: selection, losses, upstream gradients ----
            for (std::size_t k = 0; k < n_pts && want_points; ++k) {
                if (!std::isfinite(sig_s[k]) || !std::isfinite(col_s[k].x) ||
                    !std::isfinite(col_s[k].y) || !std::isfinite(col_s[k].z))
                    throw TrainError("NaN in student forward pass at step " +
                                     std::to_string(step));
            }

            std::vector<uint8_t> mask;
            if (al_active && cfg.al_select_points && cfg.al_point_fraction < 1.0f && want_rgb &&
                (flags.density || flags.color)) {
                const auto n_sp = static_cast<std::size_t>(
                    std::floor(cfg.al_point_fraction * static_cast<float>(n_pts)));
                mask = select_points(w_t, w_s, n_sp);
            }

            dsig.assign(n_pts, 0.0f);
            dcol.assign(n_pts, Vec3f{});
            if (feature_active) dfeat.assign(n_pts * static_cast<std::size_t>(sdim), 0.0f);

            LossParts parts;

            // Volume-aligned feature loss, all points, adapter trained jointly.
            ParamStore<float> adapter_grads;
            if (feature_active && stage >= 1) {
                adapter_grads = adapter.params.zeros_like();
                parts.feature = volume_aligned_loss<float>(
                    feat_t, feat_s, adapter, n_pts,
                    adapter.identity() ? nullptr : &adapter_grads, dfeat);
                // Upstream gradients carry the loss weight.
                for (auto& v : dfeat) v *= cfg.weights.w_feature;
                for (auto& seg : adapter_grads.segments)
                    for (auto& v : seg.data) v *= cfg.weights.w_feature;
            }

            // Point losses on the (optionally) selected subset.
            if (stage >= 2 && want_points && (flags.density || flags.color)) {
                std::vector<std::size_t> sel;
                sel.reserve(n_pts);
                for (std::size_t k = 0; k < n_pts; ++k)
                    if (mask.empty() || mask[k]) sel.push_back(k);
                if (!sel.empty()) {
                    if (flags.density) {
                        std::vector<float> st(sel.size()), ss(sel.size()), g(sel.size());
                        for (std::size_t i = 0; i < sel.size(); ++i) {
                            st[i] = sig_t[sel[i]];
                            ss[i] = sig_s[sel[i]];
                        }
                        const float a = cfg.clip_density ? cfg.clip_min : -3e38f;
                        const float b = cfg.clip_density ? cfg.clip_max : 3e38f;
                        parts.density = clipped_density_loss<float>(st, ss, a, b, g);
                        for (std::size_t i = 0; i < sel.size(); ++i)
                            dsig[sel[i]] += cfg.weights.w_density * g[i];
                    }
                    if (flags.color) {
                        std::vector<Vec3f> ct(sel.size()), cs(sel.size()), g(sel.size());
                        for (std::size_t i = 0; i < sel.size(); ++i) {
                            ct[i] = col_t[sel[i]];
                            cs[i] = col_s[sel[i]];
                        }
                        parts.color = color_loss<float>(ct, cs, g);
                        for (std::size_t i = 0; i < sel.size(); ++i)
                            dcol[sel[i]] += g[i] * cfg.weights.w_color;
                    }
                }
            }

            // Rendered RGB loss through the compositor.
            if (want_rgb) {
                double acc = 0;
                const float scale =
                    cfg.weights.w_rgb * 2.0f / (3.0f * static_cast<float>(n_rays));
                for (std::size_t ri = 0; ri < n_rays; ++ri) {
                    const Vec3f diff = rgb_s[ri] - rgb_t[ri];
                    acc += static_cast<double>(dot(diff, diff));
                    const Vec3f dL_drgb = diff * scale;
                    const std::size_t base = ri * static_cast<std::size_t>(spp);
                    composite_backward<float>(
                        std::span<const float>(sig_s).subspan(base, spp),
                        std::span<const Vec3f>(col_s).subspan(base, spp),
                        std::span<const float>(deltas).subspan(base, spp), dL_drgb,
                        cfg.white_background,
                        std::span<float>(dsig).subspan(base, spp),
                        std::span<Vec3f>(dcol).subspan(base, spp));
                }
                parts.rgb = acc / (3.0 * static_cast<double>(n_rays));
            }

            // ---- pass 2: student backward ----
            parallel_chunks(n_rays, workers, [&](int worker, std::size_t rb, std::size_t re) {
                ParamStore<float>& gbuf = grad_bufs[static_cast<std::size_t>(worker)];
                std::vector<float> cache(std::max<std::size_t>(1, cache_floats));
                std::vector<float> sfeat(static_cast<std::size_t>(phi1_dim(*student)));
                for (std::size_t ri = rb; ri < re; ++ri) {
                    const TrainRay& tr = rays[ri];
                    const std::size_t base = ri * static_cast<std::size_t>(spp);
                    for (int i = 0; i < spp; ++i) {
                        const std::size_t k = base + static_cast<std::size_t>(i);
                        std::span<const float> dft;
                        if (feature_active)
                            dft = std::span<const float>(dfeat).subspan(
                                k * static_cast<std::size_t>(sdim),
                                static_cast<std::size_t>(sdim));
                        float* cptr = cache_at(k);
                        if (stage == 1) {
                            if (dft.empty()) continue;
                            if (!cptr) {
                                cptr = cache.data();
                                query_phi1(*student, pos[k], tr.dir, std::span<float>(sfeat),
                                           cptr);
                            }
                            phi1_backward(*student, pos[k], tr.dir, cptr, dft, gbuf);
                        } else {
                            if (dsig[k] == 0.0f && dcol[k].x == 0.0f && dcol[k].y == 0.0f &&
                                dcol[k].z == 0.0f && dft.empty())
                                continue;
                            if (!cptr) {
                                cptr = cache.data();
                                query(*student, pos[k], tr.dir, {}, cptr);
                            }
                            PointGrad<float> g{dsig[k], dcol[k], dft};
                            backward(*student, pos[k], tr.dir, cptr, g, gbuf);
                        }
                    }
                }
            });
            for (int w = 1; w < workers; ++w) grad_bufs[0].add_scaled(grad_bufs[static_cast<std::size_t>(w)], 1.0f);

            // Regularizers on the merged gradient.
            if (reg_active)
                parts.reg = static_cast<double>(field_regularizer<float>(
                    *student, cfg.reg, cfg.weights.w_reg, &grad_bufs[0]));

            const double total = total_loss(parts, cfg.weights);

            // ---- update ----
            const float lr_scale =
                (cfg.lr_decay == 1.0f)
                    ? 1.0f
                    : std::pow(cfg.lr_decay,
                               static_cast<float>(step) / static_cast<float>(total_steps));
            adam.update(params(*student), grad_bufs[0], lr_scale);
            if (feature_active && !adapter.identity() && stage >= 1) {
                adapter_grads.check_congruent(adapter.params);
                adapter_adam->update(adapter.params, adapter_grads, lr_scale);
            }
            for (int w = 0; w < workers; ++w) grad_bufs[static_cast<std::size_t>(w)].fill(0.0f);

            // ---- active-learning stores ----
            if (al_active && cfg.al_select_rays && want_rgb && n_sr > 0) {
                const auto hard = select_rays(rgb_t, rgb_s, n_sr);
                for (std::size_t i : hard) tsr.insert(rays[i]);
            }

            // ---- bookkeeping ----
            const double alpha = 2.0 / (200.0 + 1.0);
            if (!ema_init) {
                ema = total;
                density_ema = parts.density;
                ema_init = true;
            } else {
                ema += alpha * (total - ema);
                density_ema += alpha * (parts.density - density_ema);
            }
            if (step == std::min(199, total_steps - 1)) ema_first = ema;

            TraceRow row;
            row.step = step;
            row.loss_feature = parts.feature;
            row.loss_density = parts.density;
            row.loss_color = parts.color;
            row.loss_rgb = parts.rgb;
            row.loss_reg = parts.reg;
            row.total = total;

            // Validation renders composite, so they only run once stage 3 is
            // reached (stage gating keeps earlier phases render-free).
            const bool last_step = step + 1 == total_steps;
            if (stage == 3 && !val_poses.empty() &&
                (last_step || (cfg.val_every > 0 && (step + 1) % cfg.val_every == 0))) {
                last_val = validate(val_poses, box_lo, box_hi);
                double mean = 0;
                for (double v : last_val) mean += v;
                row.val_psnr = mean / static_cast<double>(last_val.size());
            }
            result.trace.push_back(row);
            if (trace_csv.is_open()) {
                trace_csv << row.step << ',' << row.loss_feature << ',' << row.loss_density << ','
                          << row.loss_color << ',' << row.loss_rgb << ',' << row.loss_reg << ','
                          << row.total << ',';
                if (row.val_psnr >= 0) trace_csv << row.val_psnr;
                trace_csv << '\n';
            }

            const double dt = now_sec() - t_step0;
            if (stage == 1) {
                stage1_time += dt;
                ++stage1_steps_run;
            } else if (stage == 3) {
                full_time += dt;
                ++full_steps_run;
            }

            // End-of-epoch pose selection (quarter-resolution renders).
            if (al_active && cfg.al_select_poses && pool_cursor >= pool.size() &&
                !epoch_poses.empty() && mode == TargetMode::FieldTeacher) {
                update_tcp(tcp, epoch_poses, box_lo, box_hi);
            }
        }

        if (!al_dump.dir.empty()) dump_al_state(tsr, box_lo, box_hi);

        result.final_val_psnr = last_val;
        if (!last_val.empty()) {
            result.val_psnr_mean =
                std::accumulate(last_val.begin(), last_val.end(), 0.0) /
                static_cast<double>(last_val.size());
            result.val_psnr_min = *std::min_element(last_val.begin(), last_val.end());
        }
        if (stage1_steps_run > 0 && stage1_time > 0)
            result.stage1_steps_per_sec = stage1_steps_run / stage1_time;
        if (full_steps_run > 0 && full_time > 0)
            result.full_steps_per_sec = full_steps_run / full_time;
        result.loss_ema_first = ema_first != 0 ? ema_first : ema;
        result.loss_ema_last = ema;
        result.density_loss_ema_last = density_ema;
        if (teacher) result.teacher_checksum_after = param_checksum(params(*teacher));
        return result;
    }

private:
    std::vector<double> validate(const std::vector<CameraPose>& poses, const Vec3f& lo,
                                 const Vec3f& hi) const {
        RenderOptions opt;
        opt.samples_per_ray = cfg.samples_per_ray;
        opt.white_background = cfg.white_background;
        std::vector<double> psnrs;
        psnrs.reserve(poses.size());
        const QueryFn student_q = query_fn(*student);
        for (const auto& pose : poses) {
            const Image img_s = render_image(student_q, pose, opt, lo, hi);
            Image img_ref;
            if (mode == TargetMode::FieldTeacher) {
                img_ref = render_image(query_fn(*teacher), pose, opt, lo, hi);
            } else {
                img_ref = render_image(query_fn(*scene), pose, opt, lo, hi);
            }
            double v = psnr(img_s, img_ref);
            if (std::isinf(v)) v = 99.0;  // identical renders
            psnrs.push_back(v);
        }
        return psnrs;
    }

    void update_tcp(ActiveSet<CameraPose>& tcp, const std::vector<CameraPose>& poses,
                    const Vec3f& lo, const Vec3f& hi) const {
        RenderOptions opt;
        opt.samples_per_ray = cfg.samples_per_ray;
        opt.white_background = cfg.white_background;
        std::vector<float> losses;
        losses.reserve(poses.size());
        const QueryFn tq = query_fn(*teacher);
        const QueryFn sq = query_fn(*student);
        for (const auto& pose : poses) {
            CameraPose quarter = pose;
            quarter.width = std::max(1, pose.width / 4);
            quarter.height = std::max(1, pose.height / 4);
            quarter.focal = pose.focal * static_cast<float>(quarter.width) /
                            static_cast<float>(pose.width);
            quarter.cx = 0.5f * static_cast<float>(quarter.width);
            quarter.cy = 0.5f * static_cast<float>(quarter.height);
            const Image it = render_image(tq, quarter, opt, lo, hi);
            const Image is = render_image(sq, quarter, opt, lo, hi);
            double mse = 0;
            for (std::size_t i = 0; i < it.data.size(); ++i) {
                const double d = static_cast<double>(it.data[i]) - is.data[i];
                mse += d * d;
            }
            losses.push_back(static_cast<float>(mse / static_cast<double>(it.data.size())));
        }
        const auto top = select_poses(losses, std::min(tcp.capacity(), losses.size()));
        for (std::size_t i : top) tcp.insert(poses[i]);
    }

    void dump_al_state(const ActiveSet<TrainRay>& tsr, const Vec3f& lo, const Vec3f& hi) const {
        fs::create_directories(al_dump.dir);
        // Hard-ray pixel coordinates plus a heatmap per pose.
        std::ofstream rays_csv(fs::path(al_dump.dir) / "tsr_rays.csv");
        rays_csv << "pose,px,py,ox,oy,oz,dx,dy,dz,t0,t1\n";
        std::vector<float> heat(static_cast<std::size_t>(cfg.pseudo_resolution) *
                                    cfg.pseudo_resolution,
                                0.0f);
        for (std::size_t i = 0; i < tsr.size(); ++i) {
            const TrainRay& r = tsr[i];
            rays_csv << r.pose << ',' << r.px << ',' << r.py << ',' << r.origin.x << ','
                     << r.origin.y << ',' << r.origin.z << ',' << r.dir.x << ',' << r.dir.y << ','
                     << r.dir.z << ',' << r.t0 << ',' << r.t1 << '\n';
            if (r.px >= 0 && r.px < cfg.pseudo_resolution && r.py >= 0 &&
                r.py < cfg.pseudo_resolution)
                heat[static_cast<std::size_t>(r.py) * cfg.pseudo_resolution + r.px] += 1.0f;
        }
        float mx = 1e-6f;
        for (float v : heat) mx = std::max(mx, v);
        for (auto& v : heat) v /= mx;
        write_png_gray((fs::path(al_dump.dir) / "tsr_heatmap.png").string(), heat,
                       cfg.pseudo_resolution, cfg.pseudo_resolution);
        // Per-ray compositing-weight profiles for the first few stored rays.
        std::ofstream prof(fs::path(al_dump.dir) / "tsr_weight_profiles.csv");
        prof << "ray,sample,t,w_teacher,w_student\n";
        RenderOptions opt;
        opt.samples_per_ray = cfg.samples_per_ray;
        Rng rng(cfg.seed, 17);
        for (std::size_t i = 0; i < std::min<std::size_t>(tsr.size(), 8); ++i) {
            const TrainRay& r = tsr[i];
            Ray ray{r.origin, r.dir, r.t0, r.t1};
            const auto wt = render_ray(query_fn(*teacher), ray, opt, lo, hi, rng);
            const auto ws = render_ray(query_fn(*student), ray, opt, lo, hi, rng);
            for (std::size_t s = 0; s < wt.weights.size(); ++s)
                prof << i << ',' << s << ',' << (r.t0 + (r.t1 - r.t0) * (s + 0.5f) / wt.weights.size())
                     << ',' << wt.weights[s] << ',' << ws.weights[s] << '\n';
        }
    }
};

TeacherResult to_teacher_result(const DistillResult& r) {
    TeacherResult t;
    t.trace = r.trace;
    t.final_val_psnr = r.val_psnr_mean;
    return t;
}

}  // namespace

DistillResult distill(const FieldModel<float>& teacher, FieldModel<float>& student,
                      const RunConfig& cfg, const std::string& out_dir,
                      const AlDumpOptions& al_dump) {
    Engine e;
    e.mode = TargetMode::FieldTeacher;
    e.teacher = &teacher;
    e.student = &student;
    e.cfg = cfg;
    e.out_dir = out_dir;
    e.al_dump = al_dump;
    e.total_steps = cfg.total_steps;
    e.flags.feature = cfg.use_feature;
    e.flags.density = cfg.use_density;
    e.flags.color = cfg.use_color;
    e.flags.rgb = cfg.use_rgb;
    e.flags.reg = true;
    return e.run();
}

TeacherResult train_teacher(const ProceduralScene& scene, FieldModel<float>& field,
                            const RunConfig& cfg, const std::string& out_dir,
                            bool point_supervision) {
    Engine e;
    e.mode = TargetMode::SceneOracle;
    e.scene = &scene;
    e.student = &field;
    e.cfg = cfg;
    e.cfg.stage_wise = false;        // no encoder to align against
    e.cfg.active_learning = false;
    e.out_dir = out_dir;
    e.total_steps = cfg.total_steps;
    e.flags.feature = false;
    e.flags.density = point_supervision;
    e.flags.color = point_supervision;
    e.flags.rgb = true;
    e.flags.reg = true;
    return to_teacher_result(e.run());
}

TeacherResult finetune(FieldModel<float>& field, const Dataset& ds, const RunConfig& cfg,
                       int steps, const std::string& out_dir) {
    if (ds.poses.empty()) throw InputError("finetune: dataset has no frames");
    Engine e;
    e.mode = TargetMode::DatasetPixels;
    e.dataset = &ds;
    e.student = &field;
    e.cfg = cfg;
    e.cfg.stage_wise = false;
    e.cfg.active_learning = false;
    e.out_dir = out_dir;
    e.total_steps = steps > 0 ? steps : cfg.total_steps;
    e.flags.feature = false;
    e.flags.density = false;
    e.flags.color = false;
    e.flags.rgb = true;
    e.flags.reg = true;
    return to_teacher_result(e.run());
}

}  // namespace nerfcast
