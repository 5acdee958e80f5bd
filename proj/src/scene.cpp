// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include "nerfcast/scene.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace nerfcast {

using nlohmann::json;

bool Primitive::intersects_segment(const Vec3f& o, const Vec3f& dir, float t0, float t1) const {
    if (kind == Kind::Sphere) {
        const Vec3f oc = o - center;
        const float b = dot(oc, dir);
        const float c = dot(oc, oc) - half.x * half.x;
        const float disc = b * b - c;
        if (disc < 0) return false;
        const float s = std::sqrt(disc);
        const float ta = -b - s, tb = -b + s;
        return tb >= t0 && ta <= t1;
    }
    float lo = t0, hi = t1;
    for (int a = 0; a < 3; ++a) {
        const float d = dir[static_cast<std::size_t>(a)];
        const float mn = center[static_cast<std::size_t>(a)] - half[static_cast<std::size_t>(a)];
        const float mx = center[static_cast<std::size_t>(a)] + half[static_cast<std::size_t>(a)];
        if (std::abs(d) < 1e-12f) {
            if (o[static_cast<std::size_t>(a)] < mn || o[static_cast<std::size_t>(a)] > mx)
                return false;
            continue;
        }
        float ta = (mn - o[static_cast<std::size_t>(a)]) / d;
        float tb = (mx - o[static_cast<std::size_t>(a)]) / d;
        if (ta > tb) std::swap(ta, tb);
        lo = std::max(lo, ta);
        hi = std::min(hi, tb);
        if (lo > hi) return false;
    }
    return true;
}

void ProceduralScene::validate() const {
    for (const auto& p : primitives) {
        if (p.density < 0) throw InputError("scene: primitive density must be >= 0");
        for (int c = 0; c < 3; ++c) {
            if (p.color[static_cast<std::size_t>(c)] < 0 || p.color[static_cast<std::size_t>(c)] > 1)
                throw InputError("scene: primitive color must be in [0,1]");
        }
        const Vec3f ext = (p.kind == Primitive::Kind::Sphere)
                              ? Vec3f{p.half.x, p.half.x, p.half.x}
                              : p.half;
        for (int a = 0; a < 3; ++a) {
            if (p.center[static_cast<std::size_t>(a)] - ext[static_cast<std::size_t>(a)] <
                    bounds_lo[static_cast<std::size_t>(a)] ||
                p.center[static_cast<std::size_t>(a)] + ext[static_cast<std::size_t>(a)] >
                    bounds_hi[static_cast<std::size_t>(a)])
                throw InputError("scene: primitive extends outside the scene bounds");
        }
    }
}

void ProceduralScene::query(const Vec3f& x, const Vec3f& d, float& sigma, Vec3f& color) const {
    const Primitive* best = nullptr;
    for (const auto& p : primitives) {
        if (!p.contains(x)) continue;
        if (!best || p.volume() < best->volume()) best = &p;
    }
    if (!best) {
        sigma = 0.0f;
        color = background;
        return;
    }
    sigma = best->density;
    Vec3f c = best->color;
    if (best->checker > 0) {
        const float k = best->checker;
        const int parity = (static_cast<int>(std::floor(k * x.x)) +
                            static_cast<int>(std::floor(k * x.y)) +
                            static_cast<int>(std::floor(k * x.z))) & 1;
        if (parity) c = best->color2;
    }
    if (best->tint != 0.0f) {
        const float t = 0.5f * (1.0f + dot(d, best->tint_axis)) * best->tint;
        c += Vec3f{t, t, t};
    }
    color = cwise_min(cwise_max(c, Vec3f{0, 0, 0}), Vec3f{1, 1, 1});
}

namespace {

Vec3f vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw InputError("scene json: expected a 3-array");
    return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

json vec_to(const Vec3f& v) { return json::array({v.x, v.y, v.z}); }

ProceduralScene scene_from_json(const json& j) {
    ProceduralScene s;
    if (j.contains("background")) s.background = vec_from(j.at("background"));
    for (const auto& pj : j.at("primitives")) {
        Primitive p;
        const std::string kind = pj.at("type").get<std::string>();
        if (kind == "sphere") {
            p.kind = Primitive::Kind::Sphere;
            const float r = pj.at("radius").get<float>();
            p.half = {r, r, r};
        } else if (kind == "box") {
            p.kind = Primitive::Kind::Box;
            p.half = vec_from(pj.at("half"));
        } else {
            throw InputError("scene json: unknown primitive type " + kind);
        }
        p.center = vec_from(pj.at("center"));
        if (pj.contains("density")) p.density = pj.at("density").get<float>();
        if (pj.contains("color")) p.color = vec_from(pj.at("color"));
        if (pj.contains("color2")) p.color2 = vec_from(pj.at("color2"));
        if (pj.contains("checker")) p.checker = pj.at("checker").get<float>();
        if (pj.contains("tint")) p.tint = pj.at("tint").get<float>();
        if (pj.contains("tint_axis")) p.tint_axis = normalized(vec_from(pj.at("tint_axis")));
        s.primitives.push_back(p);
    }
    s.validate();
    return s;
}

ProceduralScene tri_sphere(float density) {
    ProceduralScene s;
    Primitive a;
    a.kind = Primitive::Kind::Sphere;
    a.center = {-0.45f, -0.35f, 0.0f};
    a.half = {0.4f, 0.4f, 0.4f};
    a.density = density;
    a.color = {0.9f, 0.25f, 0.2f};
    Primitive b;
    b.kind = Primitive::Kind::Sphere;
    b.center = {0.5f, -0.3f, 0.15f};
    b.half = {0.35f, 0.35f, 0.35f};
    b.density = density;
    b.color = {0.2f, 0.45f, 0.9f};
    b.tint = 0.6f;  // view-dependent: exercises direction decoding
    b.tint_axis = {0, 0, 1};
    Primitive c;
    c.kind = Primitive::Kind::Sphere;
    c.center = {0.0f, 0.45f, -0.2f};
    c.half = {0.3f, 0.3f, 0.3f};
    c.density = density;
    c.color = {0.25f, 0.85f, 0.3f};
    Primitive box;
    box.kind = Primitive::Kind::Box;
    box.center = {0.0f, -0.15f, -0.45f};
    box.half = {0.55f, 0.12f, 0.12f};
    box.density = density;
    box.color = {0.85f, 0.75f, 0.25f};
    s.primitives = {a, b, c, box};
    return s;
}

}  // namespace

ProceduralScene make_scene(const std::string& name_or_path) {
    if (name_or_path == "empty") return ProceduralScene{};
    if (name_or_path == "tri-sphere") return tri_sphere(80.0f);
    if (name_or_path == "tri-sphere-dense") return tri_sphere(500.0f);
    if (name_or_path == "single-sphere") {
        ProceduralScene s;
        Primitive p;
        p.kind = Primitive::Kind::Sphere;
        p.center = {0, 0, 0};
        p.half = {0.5f, 0.5f, 0.5f};
        p.density = 80.0f;
        p.color = {0.9f, 0.9f, 0.9f};
        s.primitives = {p};
        return s;
    }
    if (name_or_path == "half-texture") {
        // Textured slab on the +x side, nothing on the -x side. The checker
        // frequency is high relative to the render resolution, so ray losses
        // concentrate there.
        ProceduralScene s;
        Primitive p;
        p.kind = Primitive::Kind::Box;
        p.center = {0.5f, 0.0f, 0.0f};
        p.half = {0.45f, 0.8f, 0.25f};
        p.density = 80.0f;
        p.color = {0.95f, 0.95f, 0.95f};
        p.color2 = {0.05f, 0.05f, 0.05f};
        p.checker = 8.0f;
        s.primitives = {p};
        return s;
    }
    std::ifstream f(name_or_path);
    if (!f) throw InputError("unknown scene name and unreadable scene file: " + name_or_path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw InputError("scene json parse error in " + name_or_path + ": " + e.what());
    }
    return scene_from_json(j);
}

std::string scene_to_json(const ProceduralScene& scene) {
    json j;
    j["background"] = vec_to(scene.background);
    j["primitives"] = json::array();
    for (const auto& p : scene.primitives) {
        json pj;
        if (p.kind == Primitive::Kind::Sphere) {
            pj["type"] = "sphere";
            pj["radius"] = p.half.x;
        } else {
            pj["type"] = "box";
            pj["half"] = vec_to(p.half);
        }
        pj["center"] = vec_to(p.center);
        pj["density"] = p.density;
        pj["color"] = vec_to(p.color);
        if (p.checker > 0) {
            pj["color2"] = vec_to(p.color2);
            pj["checker"] = p.checker;
        }
        if (p.tint != 0) {
            pj["tint"] = p.tint;
            pj["tint_axis"] = vec_to(p.tint_axis);
        }
        j["primitives"].push_back(pj);
    }
    return j.dump(2);
}

}  // namespace nerfcast
