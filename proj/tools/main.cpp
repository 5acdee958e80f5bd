// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

// nerfcast command line: teacher training, architecture distillation,
// rendering, evaluation, geometry edits, fine-tuning and gradient checks.
// Exit codes: 0 ok, 2 usage/config, 3 runtime failure, 4 checkpoint/IO.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nerfcast/checkpoint.hpp"
#include "nerfcast/config.hpp"
#include "nerfcast/dataset.hpp"
#include "nerfcast/distill.hpp"
#include "nerfcast/fd_check.hpp"
#include "nerfcast/metrics.hpp"
#include "nerfcast/parallel.hpp"
#include "nerfcast/renderer.hpp"
#include "nerfcast/scene.hpp"

namespace {

using namespace nerfcast;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    int threads = -1;
    int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "run configuration file (key = value lines)");
    cmd->add_option("--preset", o.preset, "config preset: full (default) or desk")
        ->check(CLI::IsMember({"full", "desk"}));
    cmd->add_option("--threads", o.threads, "worker threads (1 = bitwise deterministic)");
    cmd->add_option("--seed", o.seed, "rng seed");
}

RunConfig resolve_config(const CommonOpts& o) {
    RunConfig cfg;
    if (o.preset == "desk") cfg.apply_desk_preset();
    if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);  // file keys win
    if (o.threads >= 0) cfg.threads = o.threads;
    if (o.seed >= 0) cfg.seed = static_cast<uint64_t>(o.seed);
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    return cfg;
}

std::vector<float> parse_floats(const std::string& csv, std::size_t expect, const char* what) {
    std::vector<float> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stof(tok));
    if (out.size() != expect)
        throw InputError(std::string(what) + ": expected " + std::to_string(expect) +
                         " comma-separated numbers");
    return out;
}

CameraPose pose_from_spherical(float az_deg, float el_deg, float radius, float fov_deg, int w,
                               int h) {
    const float az = az_deg * 3.14159265358979323846f / 180.0f;
    const float el = el_deg * 3.14159265358979323846f / 180.0f;
    const Vec3f pos{radius * std::cos(el) * std::cos(az), radius * std::cos(el) * std::sin(az),
                    radius * std::sin(el)};
    const float focal = 0.5f * static_cast<float>(w) /
                        std::tan(0.5f * fov_deg * 3.14159265358979323846f / 180.0f);
    return look_at(pos, {0, 0, 0}, {0, 0, 1}, focal, w, h);
}

int run(int argc, char** argv) {
    CLI::App app{"radiance field distillation engine"};
    app.require_subcommand(1);

    // train-teacher
    auto* tt = app.add_subcommand("train-teacher", "train a field against an analytic scene");
    CommonOpts tt_common;
    std::string tt_scene = "tri-sphere", tt_arch, tt_out, tt_trace, tt_supervision = "pixel";
    int tt_steps = -1;
    tt->add_option("--scene", tt_scene, "scene name or scene json path");
    tt->add_option("--arch", tt_arch, "architecture: mlp|grid|vm|hash")->required();
    tt->add_option("--steps", tt_steps, "training steps (overrides config)");
    tt->add_option("--out", tt_out, "output checkpoint path")->required();
    tt->add_option("--trace", tt_trace, "directory for trace.csv + config snapshot");
    tt->add_option("--supervision", tt_supervision, "pixel (rendered rays) or point (adds sigma/color)")
        ->check(CLI::IsMember({"pixel", "point"}));
    add_common(tt, tt_common);

    // distill
    auto* ds = app.add_subcommand("distill", "convert a trained field into another architecture");
    CommonOpts ds_common;
    std::string ds_teacher, ds_student_arch, ds_out, ds_trace, ds_al_dump;
    int ds_steps = -1;
    bool ds_no_al = false, ds_no_stage = false, ds_no_clip = false;
    std::vector<std::string> ds_no_loss;
    ds->add_option("--teacher", ds_teacher, "teacher checkpoint")->required();
    ds->add_option("--student-arch", ds_student_arch, "student architecture: mlp|grid|vm|hash")
        ->required();
    ds->add_option("--steps", ds_steps, "distillation steps (overrides config)");
    ds->add_option("--out", ds_out, "output student checkpoint")->required();
    ds->add_option("--trace", ds_trace, "directory for trace.csv + config snapshot");
    ds->add_option("--al-dump", ds_al_dump, "directory for active-learning diagnostics");
    ds->add_flag("--no-al", ds_no_al, "disable the three-level active learning");
    ds->add_flag("--no-stage-wise", ds_no_stage, "disable staged (block-wise) distillation");
    ds->add_flag("--no-clip", ds_no_clip, "disable the density range constraint");
    ds->add_option("--no-loss", ds_no_loss, "drop a loss term: feature|density|color|rgb")
        ->check(CLI::IsMember({"feature", "density", "color", "rgb"}));
    add_common(ds, ds_common);

    // render
    auto* rd = app.add_subcommand("render", "render a checkpoint at a given pose");
    std::string rd_ckpt, rd_pose = "45,30,3.0", rd_res = "128x128", rd_out, rd_raw;
    float rd_fov = 50.0f;
    int rd_spp = 48;
    bool rd_white = false;
    int rd_threads = -1;
    rd->add_option("--ckpt", rd_ckpt, "checkpoint path")->required();
    rd->add_option("--pose", rd_pose, "azimuth_deg,elevation_deg,radius look-at pose");
    rd->add_option("--res", rd_res, "image size WxH");
    rd->add_option("--fov", rd_fov, "horizontal field of view, degrees");
    rd->add_option("--spp", rd_spp, "samples per ray");
    rd->add_flag("--white-bg", rd_white, "composite over a white background");
    rd->add_option("--out", rd_out, "output png path")->required();
    rd->add_option("--raw", rd_raw, "also write a raw f32 planar dump");
    rd->add_option("--threads", rd_threads, "worker threads");

    // eval
    auto* ev = app.add_subcommand("eval", "psnr/ssim of a checkpoint against a dataset");
    std::string ev_ckpt, ev_dataset, ev_out, ev_split = "test";
    int ev_spp = 48, ev_threads = -1;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--dataset", ev_dataset, "dataset directory (transforms json + images)")
        ->required();
    ev->add_option("--split", ev_split, "dataset split to evaluate");
    ev->add_option("--out", ev_out, "output csv path")->required();
    ev->add_option("--spp", ev_spp, "samples per ray");
    ev->add_option("--threads", ev_threads, "worker threads");

    // edit erase
    auto* ed = app.add_subcommand("edit", "geometry edits on explicit-grid checkpoints");
    auto* ed_erase = ed->add_subcommand("erase", "zero density inside an axis-aligned box");
    std::string ed_ckpt, ed_box, ed_out;
    ed_erase->add_option("--ckpt", ed_ckpt, "grid checkpoint path")->required();
    ed_erase->add_option("--box", ed_box, "x0,y0,z0,x1,y1,z1 world-space box")->required();
    ed_erase->add_option("--out", ed_out, "output checkpoint path")->required();
    ed->require_subcommand(1);

    // finetune
    auto* ft = app.add_subcommand("finetune", "continue training on real dataset images");
    CommonOpts ft_common;
    std::string ft_ckpt, ft_dataset, ft_out, ft_trace, ft_split = "train";
    int ft_steps = 1000;
    ft->add_option("--ckpt", ft_ckpt, "input checkpoint")->required();
    ft->add_option("--dataset", ft_dataset, "dataset directory")->required();
    ft->add_option("--split", ft_split, "dataset split");
    ft->add_option("--steps", ft_steps, "fine-tuning steps");
    ft->add_option("--out", ft_out, "output checkpoint")->required();
    ft->add_option("--trace", ft_trace, "directory for trace.csv");
    add_common(ft, ft_common);

    // fd-check
    auto* fd = app.add_subcommand("fd-check", "finite-difference gradient verification");
    std::string fd_ckpt, fd_out;
    int fd_samples = 256;
    double fd_h = 1e-3;
    int64_t fd_seed = 0;
    fd->add_option("--ckpt", fd_ckpt, "checkpoint path")->required();
    fd->add_option("--samples", fd_samples, "parameters sampled per loss term");
    fd->add_option("--step-size", fd_h, "central-difference step");
    fd->add_option("--seed", fd_seed, "rng seed");
    fd->add_option("--out", fd_out, "write the report here as well as stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (tt->parsed()) {
        RunConfig cfg = resolve_config(tt_common);
        if (tt_steps > 0) cfg.total_steps = tt_steps;
        cfg.scene = tt_scene;
        cfg.stage_wise = false;  // staging applies to distillation only
        cfg.validate();
        const ProceduralScene scene = make_scene(tt_scene);
        FieldModel<float> field = make_field(arch_from_name(tt_arch), cfg, cfg.seed);
        const auto res = train_teacher(scene, field, cfg, tt_trace, tt_supervision == "point");
        CheckpointMeta meta;
        meta.steps = static_cast<uint64_t>(cfg.total_steps);
        meta.seed = cfg.seed;
        meta.config_snapshot = serialize_config(cfg);
        save_checkpoint(field, tt_out, meta);
        std::printf("teacher %s trained on %s: val psnr %.2f dB -> %s\n", tt_arch.c_str(),
                    tt_scene.c_str(), res.final_val_psnr, tt_out.c_str());
        return 0;
    }

    if (ds->parsed()) {
        RunConfig cfg = resolve_config(ds_common);
        if (ds_steps > 0) cfg.total_steps = ds_steps;
        if (ds_no_al) cfg.active_learning = false;
        if (ds_no_stage) cfg.stage_wise = false;
        if (ds_no_clip) cfg.clip_density = false;
        for (const auto& term : ds_no_loss) {
            if (term == "feature") cfg.use_feature = false;
            if (term == "density") cfg.use_density = false;
            if (term == "color") cfg.use_color = false;
            if (term == "rgb") cfg.use_rgb = false;
        }
        cfg.validate();
        const FieldModel<float> teacher = load_checkpoint(ds_teacher);
        FieldModel<float> student =
            make_field(arch_from_name(ds_student_arch), cfg, mix_seed(cfg.seed, 0x57ULL));
        AlDumpOptions dump;
        dump.dir = ds_al_dump;
        const auto res = distill(teacher, student, cfg, ds_trace, dump);
        CheckpointMeta meta;
        meta.steps = static_cast<uint64_t>(cfg.total_steps);
        meta.seed = cfg.seed;
        meta.config_snapshot = serialize_config(cfg);
        save_checkpoint(student, ds_out, meta);
        std::printf("distilled %s -> %s: val psnr vs teacher %.2f dB (min %.2f) -> %s\n",
                    ds_teacher.c_str(), ds_student_arch.c_str(), res.val_psnr_mean,
                    res.val_psnr_min, ds_out.c_str());
        return 0;
    }

    if (rd->parsed()) {
        if (rd_threads > 0) set_thread_count(rd_threads);
        const FieldModel<float> field = load_checkpoint(rd_ckpt);
        const auto pose_vals = parse_floats(rd_pose, 3, "--pose");
        int w = 0, h = 0;
        if (std::sscanf(rd_res.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1)
            throw InputError("--res: expected WxH");
        const CameraPose pose =
            pose_from_spherical(pose_vals[0], pose_vals[1], pose_vals[2], rd_fov, w, h);
        RenderOptions opt;
        opt.samples_per_ray = rd_spp;
        opt.white_background = rd_white;
        const auto& bounds = std::visit([](const auto& a) { return a.bounds; }, field);
        const Image img = render_image(query_fn(field), pose, opt, bounds.lo, bounds.hi);
        write_png(rd_out, img);
        if (!rd_raw.empty()) write_raw_f32(rd_raw, img);
        std::printf("rendered %dx%d -> %s\n", w, h, rd_out.c_str());
        return 0;
    }

    if (ev->parsed()) {
        if (ev_threads > 0) set_thread_count(ev_threads);
        const FieldModel<float> field = load_checkpoint(ev_ckpt);
        const Dataset data = load_dataset(ev_dataset, ev_split);
        if (data.poses.empty()) throw InputError("eval: dataset split has no frames");
        RenderOptions opt;
        opt.samples_per_ray = ev_spp;
        const auto& bounds = std::visit([](const auto& a) { return a.bounds; }, field);
        std::ofstream csv(ev_out);
        if (!csv) throw IoError("eval: cannot write " + ev_out);
        csv << "image,psnr,ssim\n";
        double psnr_sum = 0, ssim_sum = 0;
        for (std::size_t i = 0; i < data.poses.size(); ++i) {
            const Image img = render_image(query_fn(field), data.poses[i], opt, bounds.lo, bounds.hi);
            const double p = psnr(img, data.images[i]);
            const double s = ssim(img, data.images[i]);
            psnr_sum += p;
            ssim_sum += s;
            csv << i << ',' << p << ',' << s << '\n';
        }
        const auto n = static_cast<double>(data.poses.size());
        csv << "mean," << psnr_sum / n << ',' << ssim_sum / n << '\n';
        std::printf("eval %zu images: mean psnr %.2f dB, mean ssim %.4f -> %s\n",
                    data.poses.size(), psnr_sum / n, ssim_sum / n, ev_out.c_str());
        return 0;
    }

    if (ed->parsed()) {
        FieldModel<float> field = load_checkpoint(ed_ckpt);
        auto* grid = std::get_if<GridField<float>>(&field);
        if (!grid) throw InputError("edit erase: checkpoint is not an explicit grid");
        const auto b = parse_floats(ed_box, 6, "--box");
        const Vec3f lo{std::min(b[0], b[3]), std::min(b[1], b[4]), std::min(b[2], b[5])};
        const Vec3f hi{std::max(b[0], b[3]), std::max(b[1], b[4]), std::max(b[2], b[5])};
        const std::size_t n = grid->erase_region(lo, hi);
        if (n == 0)
            std::fprintf(stderr, "warning: erase box does not cover any grid cell centers\n");
        save_checkpoint(field, ed_out);
        std::printf("erased %zu cells -> %s\n", n, ed_out.c_str());
        return 0;
    }

    if (ft->parsed()) {
        RunConfig cfg = resolve_config(ft_common);
        cfg.validate();
        FieldModel<float> field = load_checkpoint(ft_ckpt);
        const Dataset data = load_dataset(ft_dataset, ft_split);
        const auto res = finetune(field, data, cfg, ft_steps, ft_trace);
        CheckpointMeta meta;
        meta.steps = static_cast<uint64_t>(ft_steps);
        meta.seed = cfg.seed;
        meta.config_snapshot = serialize_config(cfg);
        save_checkpoint(field, ft_out, meta);
        std::printf("finetuned %d steps -> %s\n", ft_steps, ft_out.c_str());
        (void)res;
        return 0;
    }

    if (fd->parsed()) {
        const FieldModel<float> field32 = load_checkpoint(fd_ckpt);
        const FieldModel<double> field = cast_field<double>(field32);
        FdOptions opt;
        opt.n_params = fd_samples;
        opt.h = fd_h;
        opt.seed = static_cast<uint64_t>(fd_seed);
        std::ostringstream report;
        report << "gradient verification: " << arch_name(arch_tag(field32)) << " checkpoint "
               << fd_ckpt << "\n";
        double worst = 0;
        for (const LossTerm term : applicable_terms(arch_tag(field32))) {
            const FdReport r = fd_check(field, term, opt);
            report << "  " << r.text() << "\n";
            worst = std::max(worst, r.max_rel_error);
        }
        report << "overall max relative error: " << worst << (worst < 1e-5 ? " (PASS)" : " (FAIL)")
               << "\n";
        std::cout << report.str();
        if (!fd_out.empty()) {
            std::ofstream f(fd_out);
            f << report.str();
        }
        return worst < 1e-5 ? 0 : 3;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const TrainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
