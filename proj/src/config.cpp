// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include "nerfcast/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nerfcast {

void RunConfig::validate() const {
    if (total_steps < 1) throw InputError("config: total_steps must be >= 1");
    if (stage1_steps < 0 || stage2_steps < 0)
        throw InputError("config: stage step counts must be >= 0");
    if (stage_wise && stage1_steps + stage2_steps > total_steps)
        throw InputError("config: stage1_steps + stage2_steps must be <= total_steps");
    if (batch_rays < 1 || samples_per_ray < 1)
        throw InputError("config: batch_rays and samples_per_ray must be >= 1");
    if (!(clip_min < clip_max)) throw InputError("config: need clip_min < clip_max");
    auto frac = [](float f) { return f >= 0.0f && f <= 1.0f; };
    if (!frac(al_ray_fraction) || !frac(al_point_fraction) || !frac(al_pose_fraction))
        throw InputError("config: active-learning fractions must be in [0,1]");
    if (poses_per_epoch < 1 || pseudo_resolution < 1 || val_poses < 0 || val_resolution < 1)
        throw InputError("config: pose/validation counts must be positive");
    if (pose_layout != "sphere" && pose_layout != "hemisphere" && pose_layout != "jitter-of-train")
        throw InputError("config: pose_layout must be sphere|hemisphere|jitter-of-train");
    if (lr <= 0 || lr_decay <= 0) throw InputError("config: lr and lr_decay must be > 0");
    if (lr_scale_mlp <= 0 || lr_scale_grid <= 0 || lr_scale_vm <= 0 || lr_scale_hash <= 0)
        throw InputError("config: lr scales must be > 0");
    weights.validate();
    sampling();
    mlp.validate();
    grid.validate();
    vm.validate();
    hash.validate();
}

void RunConfig::apply_desk_preset() {
    mlp.depth = 4;
    mlp.width = 64;
    mlp.split_k = 2;
    mlp.bottleneck = 32;
    mlp.color_hidden = 32;
    mlp.enc_x.n_freq = 6;
    mlp.enc_d.n_freq = 3;
    grid.resolution = 48;
    vm.resolution = 48;
    vm.rank_density = 24;
    vm.rank_feature = 24;
    vm.feature_dim = 12;
    vm.hidden = 32;
    hash.levels = 8;
    hash.coarsest = 4;
    hash.finest = 96;
    hash.table_size = 1u << 15;
    hash.hidden = 32;
    hash.geo_features = 7;
    total_steps = 2000;
    stage1_steps = 300;
    stage2_steps = 500;
    batch_rays = 512;
    samples_per_ray = 40;
    poses_per_epoch = 40;
    pseudo_resolution = 40;
    val_poses = 8;
    val_resolution = 24;
    val_every = 500;
}

namespace {

struct KeyBinding {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_num(const std::string& v, const std::string& key);

template <>
int parse_num<int>(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw InputError("config: bad integer for " + key + ": '" + v + "'");
    }
}

template <>
uint64_t parse_num<uint64_t>(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw InputError("config: bad integer for " + key + ": '" + v + "'");
    }
}

template <>
float parse_num<float>(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const float r = std::stof(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw InputError("config: bad number for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InputError("config: bad boolean for " + key + ": '" + v + "'");
}

std::string fmt_float(float f) {
    std::ostringstream o;
    o.precision(9);
    o << f;
    return o.str();
}

#define NUM_KEY(name, field, type)                                                       \
    {name,                                                                               \
     {[](RunConfig& c, const std::string& v) { c.field = parse_num<type>(v, name); },    \
      [](const RunConfig& c) { return std::to_string(c.field); }}}
#define FLT_KEY(name, field)                                                             \
    {name,                                                                               \
     {[](RunConfig& c, const std::string& v) { c.field = parse_num<float>(v, name); },   \
      [](const RunConfig& c) { return fmt_float(c.field); }}}
#define BOOL_KEY(name, field)                                                            \
    {name,                                                                               \
     {[](RunConfig& c, const std::string& v) { c.field = parse_bool(v, name); },         \
      [](const RunConfig& c) { return c.field ? "true" : "false"; }}}
#define STR_KEY(name, field)                                                             \
    {name,                                                                               \
     {[](RunConfig& c, const std::string& v) { c.field = v; },                           \
      [](const RunConfig& c) { return c.field; }}}

const std::map<std::string, KeyBinding>& key_table() {
    static const std::map<std::string, KeyBinding> table = {
        NUM_KEY("seed", seed, uint64_t),
        NUM_KEY("threads", threads, int),
        STR_KEY("scene", scene),
        NUM_KEY("mlp.depth", mlp.depth, int),
        NUM_KEY("mlp.width", mlp.width, int),
        NUM_KEY("mlp.split_k", mlp.split_k, int),
        NUM_KEY("mlp.bottleneck", mlp.bottleneck, int),
        NUM_KEY("mlp.color_hidden", mlp.color_hidden, int),
        NUM_KEY("mlp.enc_x_freq", mlp.enc_x.n_freq, int),
        NUM_KEY("mlp.enc_d_freq", mlp.enc_d.n_freq, int),
        NUM_KEY("grid.resolution", grid.resolution, int),
        NUM_KEY("grid.sh_degree", grid.sh_degree, int),
        NUM_KEY("vm.resolution", vm.resolution, int),
        NUM_KEY("vm.rank_density", vm.rank_density, int),
        NUM_KEY("vm.rank_feature", vm.rank_feature, int),
        NUM_KEY("vm.feature_dim", vm.feature_dim, int),
        NUM_KEY("vm.hidden", vm.hidden, int),
        NUM_KEY("vm.enc_d_freq", vm.enc_d.n_freq, int),
        NUM_KEY("hash.levels", hash.levels, int),
        NUM_KEY("hash.coarsest", hash.coarsest, int),
        NUM_KEY("hash.finest", hash.finest, int),
        {"hash.log2_table_size",
         {[](RunConfig& c, const std::string& v) {
              const int b = parse_num<int>(v, "hash.log2_table_size");
              if (b < 1 || b > 30) throw InputError("config: hash.log2_table_size out of range");
              c.hash.table_size = 1u << b;
          },
          [](const RunConfig& c) {
              int b = 0;
              while ((1u << b) < c.hash.table_size) ++b;
              return std::to_string(b);
          }}},
        NUM_KEY("hash.features_per_level", hash.features_per_level, int),
        NUM_KEY("hash.hidden", hash.hidden, int),
        NUM_KEY("hash.geo_features", hash.geo_features, int),
        NUM_KEY("hash.enc_d_freq", hash.enc_d.n_freq, int),
        NUM_KEY("total_steps", total_steps, int),
        NUM_KEY("stage1_steps", stage1_steps, int),
        NUM_KEY("stage2_steps", stage2_steps, int),
        NUM_KEY("batch_rays", batch_rays, int),
        NUM_KEY("samples_per_ray", samples_per_ray, int),
        FLT_KEY("lr", lr),
        FLT_KEY("lr_decay", lr_decay),
        FLT_KEY("lr_scale_mlp", lr_scale_mlp),
        FLT_KEY("lr_scale_grid", lr_scale_grid),
        FLT_KEY("lr_scale_vm", lr_scale_vm),
        FLT_KEY("lr_scale_hash", lr_scale_hash),
        FLT_KEY("w_feature", weights.w_feature),
        FLT_KEY("w_density", weights.w_density),
        FLT_KEY("w_color", weights.w_color),
        FLT_KEY("w_rgb", weights.w_rgb),
        FLT_KEY("w_reg", weights.w_reg),
        FLT_KEY("reg_tv", reg.tv),
        FLT_KEY("reg_l1", reg.l1),
        FLT_KEY("clip_min", clip_min),
        FLT_KEY("clip_max", clip_max),
        BOOL_KEY("use_feature", use_feature),
        BOOL_KEY("use_density", use_density),
        BOOL_KEY("use_color", use_color),
        BOOL_KEY("use_rgb", use_rgb),
        BOOL_KEY("stage_wise", stage_wise),
        BOOL_KEY("clip_density", clip_density),
        BOOL_KEY("active_learning", active_learning),
        BOOL_KEY("al_select_poses", al_select_poses),
        BOOL_KEY("al_select_rays", al_select_rays),
        BOOL_KEY("al_select_points", al_select_points),
        FLT_KEY("al_ray_fraction", al_ray_fraction),
        FLT_KEY("al_point_fraction", al_point_fraction),
        FLT_KEY("al_pose_fraction", al_pose_fraction),
        NUM_KEY("poses_per_epoch", poses_per_epoch, int),
        NUM_KEY("pseudo_resolution", pseudo_resolution, int),
        STR_KEY("pose_layout", pose_layout),
        FLT_KEY("pose_radius_min", pose_radius_min),
        FLT_KEY("pose_radius_max", pose_radius_max),
        FLT_KEY("pose_fov_deg", pose_fov_deg),
        NUM_KEY("val_poses", val_poses, int),
        NUM_KEY("val_resolution", val_resolution, int),
        NUM_KEY("val_every", val_every, int),
        STR_KEY("sample_mode", sample_mode),
        BOOL_KEY("white_background", white_background),
    };
    return table;
}

#undef NUM_KEY
#undef FLT_KEY
#undef BOOL_KEY
#undef STR_KEY

}  // namespace

RunConfig parse_config_text(const std::string& text, const RunConfig& base) {
    RunConfig c = base;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = key_table().find(key);
        if (it == key_table().end())
            throw InputError("config: unknown key '" + key + "' (line " + std::to_string(lineno) +
                             ")");
        it->second.set(c, value);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
    std::ifstream f(path);
    if (!f) throw InputError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), base);
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    for (const auto& [key, binding] : key_table()) out << key << " = " << binding.get(c) << "\n";
    return out.str();
}

FieldModel<float> make_field(ArchTag tag, const RunConfig& cfg, uint64_t seed) {
    switch (tag) {
        case ArchTag::Mlp: return MlpField<float>(cfg.mlp, seed);
        case ArchTag::Grid: return GridField<float>(cfg.grid, seed);
        case ArchTag::Vm: return VmField<float>(cfg.vm, seed);
        case ArchTag::Hash: return HashField<float>(cfg.hash, seed);
    }
    throw InputError("make_field: bad architecture tag");
}

}  // namespace nerfcast
