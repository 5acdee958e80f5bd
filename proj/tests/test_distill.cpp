// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "nerfcast/distill.hpp"
#include "nerfcast/instrumentation.hpp"
#include "nerfcast/parallel.hpp"

using namespace nerfcast;

namespace {

RunConfig fast_cfg() {
    RunConfig c;
    c.apply_desk_preset();
    c.threads = 1;
    c.total_steps = 60;
    c.stage1_steps = 20;
    c.stage2_steps = 20;
    c.batch_rays = 64;
    c.samples_per_ray = 16;
    c.poses_per_epoch = 4;
    c.pseudo_resolution = 12;
    c.val_poses = 2;
    c.val_resolution = 16;
    c.val_every = 0;  // only the final validation
    c.hash.levels = 4;
    c.hash.coarsest = 2;
    c.hash.finest = 16;
    c.hash.table_size = 1u << 10;
    c.hash.hidden = 8;
    c.hash.geo_features = 3;
    c.vm.resolution = 8;
    c.vm.rank_density = 6;
    c.vm.rank_feature = 6;
    c.vm.feature_dim = 4;
    c.vm.hidden = 8;
    c.mlp.depth = 3;
    c.mlp.width = 16;
    c.mlp.split_k = 2;
    c.mlp.bottleneck = 8;
    c.mlp.color_hidden = 8;
    c.grid.resolution = 8;
    return c;
}

}  // namespace

TEST_CASE("self-distillation of an identical student is a fixed point") {
    RunConfig cfg = fast_cfg();
    cfg.stage_wise = false;  // all losses from step 0
    cfg.active_learning = false;
    FieldModel<float> teacher = make_field(ArchTag::Hash, cfg, 42);
    FieldModel<float> student = teacher;  // exact copy
    const auto res = distill(teacher, student, cfg);
    REQUIRE(!res.trace.empty());
    CHECK(res.trace.front().total < 1e-8);
    CHECK(res.val_psnr_min > 60.0);
    CHECK(res.teacher_checksum_before == res.teacher_checksum_after);
}

TEST_CASE("grid-to-grid distillation converges on a one-cell scene") {
    RunConfig cfg = fast_cfg();
    cfg.total_steps = 500;
    cfg.stage_wise = false;
    cfg.active_learning = false;
    cfg.use_feature = false;  // grid pair: no encoder alignment
    cfg.grid.resolution = 1;
    cfg.val_poses = 0;
    // A pure point-supervision setup: the density term dominates and the
    // rate decays so the scalar settles.
    cfg.use_rgb = false;
    cfg.weights.w_density = 1.0f;
    cfg.lr = 0.08f;
    cfg.lr_decay = 0.005f;
    GridField<float> teacher_grid(cfg.grid, 0);
    teacher_grid.params.at("grid.sigma").data[0] = 2.0f;
    teacher_grid.params.at("grid.sh").data[3] = 0.8f;
    FieldModel<float> teacher = teacher_grid;
    FieldModel<float> student = GridField<float>(cfg.grid, 1);
    distill(teacher, student, cfg);
    const auto& sg = std::get<GridField<float>>(student);
    CHECK(std::abs(sg.params.at("grid.sigma").data[0] - 2.0f) < 1e-3f);
}

TEST_CASE("stage gating: no decoder or compositor work before stage 3") {
    RunConfig cfg = fast_cfg();
    cfg.total_steps = 20;  // stage 1 only
    cfg.stage1_steps = 20;
    cfg.stage2_steps = 0;
    cfg.val_poses = 0;
    FieldModel<float> teacher = make_field(ArchTag::Hash, cfg, 1);
    FieldModel<float> student = make_field(ArchTag::Vm, cfg, 2);

    instr::reset();
    distill(teacher, student, cfg);
    CHECK(instr::phi2_evals.load() == 0);
    CHECK(instr::composite_calls.load() == 0);

    // Stage 2 evaluates the decoder but still never composites.
    RunConfig cfg2 = fast_cfg();
    cfg2.total_steps = 30;
    cfg2.stage1_steps = 10;
    cfg2.stage2_steps = 20;
    cfg2.val_poses = 0;
    FieldModel<float> student2 = make_field(ArchTag::Vm, cfg2, 3);
    instr::reset();
    distill(teacher, student2, cfg2);
    CHECK(instr::phi2_evals.load() > 0);
    CHECK(instr::composite_calls.load() == 0);
    instr::reset();
}

TEST_CASE("teacher parameters are immutable across distillation") {
    RunConfig cfg = fast_cfg();
    FieldModel<float> teacher = make_field(ArchTag::Vm, cfg, 9);
    const uint64_t before = param_checksum(params(teacher));
    FieldModel<float> student = make_field(ArchTag::Hash, cfg, 10);
    const auto res = distill(teacher, student, cfg);
    CHECK(param_checksum(params(teacher)) == before);
    CHECK(res.teacher_checksum_before == before);
    CHECK(res.teacher_checksum_after == before);
}

TEST_CASE("single-threaded distillation traces are bitwise reproducible") {
    RunConfig cfg = fast_cfg();
    FieldModel<float> teacher = make_field(ArchTag::Hash, cfg, 4);
    FieldModel<float> s1 = make_field(ArchTag::Vm, cfg, 5);
    FieldModel<float> s2 = make_field(ArchTag::Vm, cfg, 5);
    const auto r1 = distill(teacher, s1, cfg);
    const auto r2 = distill(teacher, s2, cfg);
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (std::size_t i = 0; i < r1.trace.size(); ++i) {
        CHECK(r1.trace[i].total == r2.trace[i].total);
        CHECK(r1.trace[i].loss_rgb == r2.trace[i].loss_rgb);
    }
    CHECK(param_checksum(params(s1)) == param_checksum(params(s2)));
}

TEST_CASE("grid pairs skip the encoder-alignment term entirely") {
    RunConfig cfg = fast_cfg();
    cfg.total_steps = 30;
    cfg.stage1_steps = 10;
    cfg.stage2_steps = 10;
    cfg.val_poses = 0;
    FieldModel<float> teacher = make_field(ArchTag::Grid, cfg, 6);
    FieldModel<float> student = make_field(ArchTag::Hash, cfg, 7);
    const auto res = distill(teacher, student, cfg);
    for (const auto& row : res.trace) CHECK(row.loss_feature == 0.0);
    // Stage 1 folds away, so the very first step already carries point losses.
    CHECK(res.trace.front().loss_density + res.trace.front().loss_color > 0.0);
}

TEST_CASE("config stage validation rejects oversubscribed stages") {
    RunConfig cfg = fast_cfg();
    cfg.total_steps = 30;
    cfg.stage1_steps = 20;
    cfg.stage2_steps = 20;
    CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("distillation never opens dataset files (interface-level isolation)") {
    // The engine receives only a teacher model and synthetic poses; the only
    // dataset-capable entry point is finetune(), which takes a Dataset
    // explicitly. This is a compile-time property of the API; assert the
    // signature shapes here so a regression shows up in review.
    static_assert(std::is_invocable_v<decltype(distill), const FieldModel<float>&,
                                      FieldModel<float>&, const RunConfig&, const std::string&,
                                      const AlDumpOptions&>);
    CHECK(true);
}
