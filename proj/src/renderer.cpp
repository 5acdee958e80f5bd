// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include "nerfcast/renderer.hpp"

#include <thread>

#include "nerfcast/parallel.hpp"

namespace nerfcast {

namespace {
int g_threads = static_cast<int>(std::thread::hardware_concurrency());
}

int thread_count() { return g_threads > 0 ? g_threads : 1; }
void set_thread_count(int n) { g_threads = n > 0 ? n : 1; }

QueryFn query_fn(const FieldModel<float>& field) {
    return [&field](const Vec3f& x, const Vec3f& d, float& sigma, Vec3f& color) {
        const PointSample<float> s = query(field, x, d);
        sigma = s.sigma;
        color = s.color;
    };
}

QueryFn query_fn(const ProceduralScene& scene) {
    return [&scene](const Vec3f& x, const Vec3f& d, float& sigma, Vec3f& color) {
        scene.query(x, d, sigma, color);
    };
}

RenderOutput<float> render_ray(const QueryFn& q, const Ray& ray, const RenderOptions& opt,
                               const Vec3f& box_lo, const Vec3f& box_hi, Rng& rng) {
    float t0, t1;
    if (!ray_box(ray.origin, ray.dir, box_lo, box_hi, t0, t1) || t1 <= t0 + 1e-6f) {
        RenderOutput<float> miss;
        miss.t_end = 1.0f;
        if (opt.white_background) miss.rgb = {1, 1, 1};
        return miss;
    }
    Ray r = ray;
    r.t_near = std::max(t0, 1e-4f);
    r.t_far = t1;
    const SampleSet s = stratify_samples(r, opt.samples_per_ray, opt.mode, rng);
    const int n = opt.samples_per_ray;
    std::vector<float> sigmas(static_cast<std::size_t>(n));
    std::vector<Vec3f> colors(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        q(s.pos[static_cast<std::size_t>(i)], r.dir, sigmas[static_cast<std::size_t>(i)],
          colors[static_cast<std::size_t>(i)]);
    return composite<float>(sigmas, colors, s.delta, opt.white_background, s.t);
}

Image render_image(const QueryFn& q, const CameraPose& pose, const RenderOptions& opt,
                   const Vec3f& box_lo, const Vec3f& box_hi) {
    Image img(pose.width, pose.height);
    parallel_chunks(static_cast<std::size_t>(pose.height), thread_count(),
                    [&](int /*worker*/, std::size_t y0, std::size_t y1) {
                        for (std::size_t y = y0; y < y1; ++y) {
                            // Per-row stream so rows are seed-stable regardless
                            // of the number of workers.
                            Rng rng(mix_seed(opt.seed, 0x7261795fULL + y), 5);
                            for (int x = 0; x < pose.width; ++x) {
                                const Ray ray = pixel_ray(pose, static_cast<float>(x) + 0.5f,
                                                          static_cast<float>(y) + 0.5f);
                                const auto out = render_ray(q, ray, opt, box_lo, box_hi, rng);
                                img.set_pixel(x, static_cast<int>(y), out.rgb);
                            }
                        }
                    });
    return img;
}

}  // namespace nerfcast
