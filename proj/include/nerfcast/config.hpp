// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "nerfcast/field_model.hpp"
#include "nerfcast/losses.hpp"
#include "nerfcast/regularizers.hpp"
#include "nerfcast/sampling.hpp"

namespace nerfcast {

// Full run configuration. The defaults reproduce the reference training
// setup; `apply_desk_preset` shrinks everything to laptop scale. Files use a
// flat `key = value` format with '#' comments; unknown keys are rejected.
struct RunConfig {
    uint64_t seed = 0;
    int threads = 0;  // 0 = all hardware threads
    std::string scene = "tri-sphere";

    // Architecture hyperparameters.
    MlpConfig mlp;
    GridConfig grid;
    VmConfig vm;
    HashConfig hash;

    // Optimization.
    int total_steps = 20000;
    int stage1_steps = 3000;
    int stage2_steps = 5000;
    int batch_rays = 4096;
    int samples_per_ray = 48;
    float lr = 0.02f;
    float lr_decay = 1.0f;  // final/initial learning-rate ratio over the run
    // Per-architecture multipliers on the base rate. The pure MLP needs a
    // cooler rate than the table/grid representations.
    float lr_scale_mlp = 0.1f;
    float lr_scale_grid = 1.0f;
    float lr_scale_vm = 1.0f;
    float lr_scale_hash = 1.0f;

    float arch_lr(ArchTag tag) const {
        switch (tag) {
            case ArchTag::Mlp: return lr * lr_scale_mlp;
            case ArchTag::Grid: return lr * lr_scale_grid;
            case ArchTag::Vm: return lr * lr_scale_vm;
            case ArchTag::Hash: return lr * lr_scale_hash;
        }
        return lr;
    }

    // Loss weights and the density clip range.
    LossWeights weights;
    RegWeights reg;
    float clip_min = 0.0f;
    float clip_max = 100.0f;

    // Loss/stage toggles (ablation switches).
    bool use_feature = true;
    bool use_density = true;
    bool use_color = true;
    bool use_rgb = true;
    bool stage_wise = true;
    bool clip_density = true;

    // Active learning. The three levels can be ablated independently; the
    // master switch gates them all.
    bool active_learning = true;
    bool al_select_poses = true;
    bool al_select_rays = true;
    bool al_select_points = true;
    float al_ray_fraction = 0.10f;
    float al_point_fraction = 0.30f;
    float al_pose_fraction = 0.10f;

    // Pseudo-pose generation and validation.
    int poses_per_epoch = 100;
    int pseudo_resolution = 48;
    std::string pose_layout = "sphere";  // sphere | hemisphere | jitter-of-train
    float pose_radius_min = 2.6f;
    float pose_radius_max = 3.4f;
    float pose_fov_deg = 50.0f;
    int val_poses = 8;
    int val_resolution = 32;
    int val_every = 500;

    std::string sample_mode = "midpoint";  // midpoint | jittered
    bool white_background = false;

    SampleMode sampling() const {
        if (sample_mode == "midpoint") return SampleMode::Midpoint;
        if (sample_mode == "jittered") return SampleMode::Jittered;
        throw InputError("config: sample_mode must be midpoint or jittered");
    }

    void validate() const;

    // Laptop-scale preset used by the acceptance runs and examples.
    void apply_desk_preset();
};

// Parse on top of `base`, so presets and files layer.
RunConfig parse_config_text(const std::string& text, const RunConfig& base = RunConfig{});
RunConfig load_config(const std::string& path, const RunConfig& base = RunConfig{});

// Canonical snapshot: every key in fixed order. parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& c);

FieldModel<float> make_field(ArchTag tag, const RunConfig& cfg, uint64_t seed);

}  // namespace nerfcast
