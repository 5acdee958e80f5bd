// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include "nerfcast/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace nerfcast {

namespace fs = std::filesystem;
using nlohmann::json;

Dataset load_dataset(const std::string& dir, const std::string& split) {
    const fs::path root(dir);
    fs::path manifest = root / ("transforms_" + split + ".json");
    if (!fs::exists(manifest)) manifest = root / "transforms.json";
    if (!fs::exists(manifest)) throw IoError("dataset: no transforms manifest in " + dir);
    std::ifstream f(manifest);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw IoError("dataset: manifest parse error in " + manifest.string() + ": " + e.what());
    }
    Dataset ds;
    ds.split = split;
    const double angle_x = j.at("camera_angle_x").get<double>();
    if (!j.contains("frames") || j.at("frames").empty()) {
        std::fprintf(stderr, "warning: dataset manifest %s has no frames\n",
                     manifest.string().c_str());
        return ds;
    }
    for (const auto& frame : j.at("frames")) {
        const auto& m = frame.at("transform_matrix");
        CameraPose pose;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                pose.rotation.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                                  m.at(r).at(c).get<float>());
        pose.translation = {m.at(0).at(3).get<float>(), m.at(1).at(3).get<float>(),
                            m.at(2).at(3).get<float>()};
        const std::string rel = frame.at("file_path").get<std::string>();
        const fs::path base = root / rel;
        const fs::path png = base.string() + ".png";
        const fs::path raw = base.string() + ".f32";
        Image img;
        if (fs::exists(raw) && frame.contains("width") && frame.contains("height")) {
            img = read_raw_f32(raw.string(), frame.at("width").get<int>(),
                               frame.at("height").get<int>());
        } else if (fs::exists(png)) {
            img = read_png(png.string());
        } else {
            throw IoError("dataset: missing image file " + png.string());
        }
        pose.width = img.width;
        pose.height = img.height;
        pose.focal = 0.5f * static_cast<float>(img.width) /
                     std::tan(0.5f * static_cast<float>(angle_x));
        pose.cx = 0.5f * static_cast<float>(img.width);
        pose.cy = 0.5f * static_cast<float>(img.height);
        if (!ds.images.empty() &&
            (img.width != ds.images.front().width || img.height != ds.images.front().height))
            throw IoError("dataset: images have mixed dimensions in " + dir);
        ds.poses.push_back(pose);
        ds.images.push_back(std::move(img));
    }
    return ds;
}

void save_dataset(const std::string& dir, const Dataset& ds) {
    const fs::path root(dir);
    fs::create_directories(root);
    json j;
    if (ds.poses.empty()) {
        j["camera_angle_x"] = 0.6911;
    } else {
        const auto& p0 = ds.poses.front();
        j["camera_angle_x"] = 2.0 * std::atan(0.5 * p0.width / static_cast<double>(p0.focal));
    }
    j["frames"] = json::array();
    for (std::size_t i = 0; i < ds.poses.size(); ++i) {
        const auto& p = ds.poses[i];
        char name[32];
        std::snprintf(name, sizeof(name), "r_%03zu", i);
        json frame;
        frame["file_path"] = std::string("./") + name;
        frame["width"] = p.width;
        frame["height"] = p.height;
        json m = json::array();
        for (int r = 0; r < 3; ++r) {
            json row = json::array();
            for (int c = 0; c < 3; ++c)
                row.push_back(static_cast<double>(p.rotation(static_cast<std::size_t>(r),
                                                             static_cast<std::size_t>(c))));
            row.push_back(static_cast<double>(p.translation[static_cast<std::size_t>(r)]));
            m.push_back(row);
        }
        m.push_back(json::array({0.0, 0.0, 0.0, 1.0}));
        frame["transform_matrix"] = m;
        j["frames"].push_back(frame);
        write_png((root / (std::string(name) + ".png")).string(), ds.images[i]);
        write_raw_f32((root / (std::string(name) + ".f32")).string(), ds.images[i]);
    }
    std::ofstream out(root / ("transforms_" + ds.split + ".json"));
    if (!out) throw IoError("dataset: cannot write manifest in " + dir);
    out << j.dump(2) << "\n";
}

}  // namespace nerfcast
