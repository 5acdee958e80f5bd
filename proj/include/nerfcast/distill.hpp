// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nerfcast/config.hpp"
#include "nerfcast/dataset.hpp"
#include "nerfcast/field_model.hpp"
#include "nerfcast/scene.hpp"

namespace nerfcast {

// Which losses forward through what, per training phase:
//   stage 1: encoder alignment only (no decoder, no compositing)
//   stage 2: adds point density/color supervision through the decoder
//   stage 3: adds rendered RGB + regularizers; active learning joins here
struct StagePlan {
    int stage1_end = 0;
    int stage2_end = 0;

    static StagePlan from_config(const RunConfig& cfg, bool feature_active);
    int stage_of(int step) const {
        if (step < stage1_end) return 1;
        if (step < stage2_end) return 2;
        return 3;
    }
};

struct TraceRow {
    int step = 0;
    double loss_feature = 0, loss_density = 0, loss_color = 0, loss_rgb = 0, loss_reg = 0;
    double total = 0;
    double val_psnr = -1;  // student-vs-teacher validation; -1 when not evaluated
};

struct DistillResult {
    std::vector<TraceRow> trace;
    std::vector<double> final_val_psnr;  // per validation pose
    double val_psnr_mean = 0;
    double val_psnr_min = 0;
    // Measured step throughput (steps/s) per phase; 0 when a phase never ran.
    double stage1_steps_per_sec = 0;
    double full_steps_per_sec = 0;
    uint64_t teacher_checksum_before = 0;
    uint64_t teacher_checksum_after = 0;
    double loss_ema_first = 0;  // 200-step EMA of the total loss, early vs late
    double loss_ema_last = 0;
    double density_loss_ema_last = 0;
};

// Optional diagnostics dump of the active-learning state (pose indices,
// ray heatmaps, point-weight profiles).
struct AlDumpOptions {
    std::string dir;
};

// Runs the staged distillation of `teacher` into `student` using only
// teacher renders at synthetic poses (no dataset access by construction).
// Traces are written to out_dir when set (trace.csv + config.txt).
DistillResult distill(const FieldModel<float>& teacher, FieldModel<float>& student,
                      const RunConfig& cfg, const std::string& out_dir = "",
                      const AlDumpOptions& al_dump = {});

struct TeacherResult {
    std::vector<TraceRow> trace;
    double final_val_psnr = 0;  // vs analytic-scene renders at held-out poses
};

// Trains a field against the analytic scene: pixel supervision (rendered-ray
// RGB targets) by default, optionally adding point-wise density/color
// supervision.
TeacherResult train_teacher(const ProceduralScene& scene, FieldModel<float>& field,
                            const RunConfig& cfg, const std::string& out_dir = "",
                            bool point_supervision = false);

// Post-distillation fine-tuning against real dataset images (RGB loss only,
// fresh optimizer state).
TeacherResult finetune(FieldModel<float>& field, const Dataset& ds, const RunConfig& cfg,
                       int steps, const std::string& out_dir = "");

}  // namespace nerfcast
