// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings for the core operations: compositing, encodings, field
// queries, selectors, metrics, rendering and checkpoint IO. Training runs
// stay in the CLI; this module is for inspection, scripting and testing.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nerfcast/active_learning.hpp"
#include "nerfcast/checkpoint.hpp"
#include "nerfcast/compositing.hpp"
#include "nerfcast/config.hpp"
#include "nerfcast/encoding.hpp"
#include "nerfcast/interpolation.hpp"
#include "nerfcast/metrics.hpp"
#include "nerfcast/parallel.hpp"
#include "nerfcast/renderer.hpp"
#include "nerfcast/scene.hpp"
#include "nerfcast/sh.hpp"

namespace py = pybind11;
using namespace nerfcast;

namespace {

// Opaque handle so the stl variant caster does not try to unpack the model.
struct PyField {
    FieldModel<float> model;
};

Vec3f to_vec3(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
    if (a.size() != 3) throw InputError("expected a 3-vector");
    const float* p = a.data();
    return {p[0], p[1], p[2]};
}

std::vector<float> to_floats(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
    return {a.data(), a.data() + a.size()};
}

py::array_t<float> image_to_array(const Image& img) {
    py::array_t<float> out({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

Image array_to_image(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw InputError("expected an HxWx3 array");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

CameraPose make_pose(float azimuth_deg, float elevation_deg, float radius, float fov_deg,
                     int width, int height) {
    const float az = azimuth_deg * 3.14159265358979323846f / 180.0f;
    const float el = elevation_deg * 3.14159265358979323846f / 180.0f;
    const Vec3f pos{radius * std::cos(el) * std::cos(az), radius * std::cos(el) * std::sin(az),
                    radius * std::sin(el)};
    const float focal = 0.5f * static_cast<float>(width) /
                        std::tan(0.5f * fov_deg * 3.14159265358979323846f / 180.0f);
    return look_at(pos, {0, 0, 0}, {0, 0, 1}, focal, width, height);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "radiance field distillation core operations";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<TrainError>(m, "TrainError", PyExc_RuntimeError);

    m.def(
        "composite",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> sigmas,
           py::array_t<float, py::array::c_style | py::array::forcecast> colors,
           py::array_t<float, py::array::c_style | py::array::forcecast> deltas,
           bool white_background) {
            const auto s = to_floats(sigmas);
            const auto d = to_floats(deltas);
            if (colors.ndim() != 2 || colors.shape(1) != 3)
                throw InputError("composite: colors must be Nx3");
            std::vector<Vec3f> c(static_cast<std::size_t>(colors.shape(0)));
            for (std::size_t i = 0; i < c.size(); ++i)
                c[i] = {colors.data()[3 * i], colors.data()[3 * i + 1], colors.data()[3 * i + 2]};
            const auto out = composite<float>(s, c, d, white_background);
            py::dict r;
            r["rgb"] = py::make_tuple(out.rgb.x, out.rgb.y, out.rgb.z);
            r["weights"] = py::array_t<float>(static_cast<py::ssize_t>(out.weights.size()),
                                              out.weights.data());
            r["t_end"] = out.t_end;
            return r;
        },
        py::arg("sigmas"), py::arg("colors"), py::arg("deltas"),
        py::arg("white_background") = false,
        "Volume-rendering quadrature along one ray; returns rgb, per-sample weights and "
        "the residual transmittance.");

    m.def(
        "positional_encode",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> values, int n_freq,
           bool include_input) {
            const auto v = to_floats(values);
            EncodingConfig cfg{n_freq, include_input};
            const auto out = positional_encode<float>(v, cfg);
            return py::array_t<float>(static_cast<py::ssize_t>(out.size()), out.data());
        },
        py::arg("values"), py::arg("n_freq"), py::arg("include_input") = true);

    m.def(
        "sh_eval",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> coeffs,
           py::array_t<float, py::array::c_style | py::array::forcecast> direction, int lmax) {
            const auto c = to_floats(coeffs);
            const auto out = sh_eval<float>(c, to_vec3(direction), lmax);
            return py::make_tuple(out.x, out.y, out.z);
        },
        py::arg("coeffs"), py::arg("direction"), py::arg("lmax") = 2,
        "Sigmoid(SH inner product) per channel; coeffs are channel-major, 3*(lmax+1)^2 long.");

    m.def(
        "hash_index",
        [](uint64_t x, uint64_t y, uint64_t z, uint64_t table_size,
           std::array<uint64_t, 3> primes) {
            if (table_size == 0 || (table_size & (table_size - 1)) != 0)
                throw InputError("hash_index: table_size must be a power of two");
            return hash_index(x, y, z, primes, table_size);
        },
        py::arg("x"), py::arg("y"), py::arg("z"), py::arg("table_size"),
        py::arg("primes") = std::array<uint64_t, 3>{1ULL, 2654435761ULL, 805459861ULL});

    m.def(
        "trilinear",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> corners,
           py::array_t<float, py::array::c_style | py::array::forcecast> frac) {
            const auto c = to_floats(corners);
            if (c.size() != 8) throw InputError("trilinear: need 8 corner values");
            return trilerp<float>(c, to_vec3(frac));
        },
        py::arg("corners"), py::arg("frac"));

    m.def(
        "psnr",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> a,
           py::array_t<float, py::array::c_style | py::array::forcecast> b) {
            return psnr(array_to_image(a), array_to_image(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "ssim",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> a,
           py::array_t<float, py::array::c_style | py::array::forcecast> b) {
            return ssim(array_to_image(a), array_to_image(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "select_poses",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> losses, std::size_t n) {
            return select_poses(to_floats(losses), n);
        },
        py::arg("losses"), py::arg("n"));
    m.def(
        "select_rays",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> rgb_t,
           py::array_t<float, py::array::c_style | py::array::forcecast> rgb_s, std::size_t n) {
            if (rgb_t.ndim() != 2 || rgb_t.shape(1) != 3 || rgb_s.ndim() != 2 ||
                rgb_s.shape(1) != 3)
                throw InputError("select_rays: expected Nx3 arrays");
            std::vector<Vec3f> t(static_cast<std::size_t>(rgb_t.shape(0)));
            std::vector<Vec3f> s(static_cast<std::size_t>(rgb_s.shape(0)));
            for (std::size_t i = 0; i < t.size(); ++i)
                t[i] = {rgb_t.data()[3 * i], rgb_t.data()[3 * i + 1], rgb_t.data()[3 * i + 2]};
            for (std::size_t i = 0; i < s.size(); ++i)
                s[i] = {rgb_s.data()[3 * i], rgb_s.data()[3 * i + 1], rgb_s.data()[3 * i + 2]};
            return select_rays(t, s, n);
        },
        py::arg("rgb_teacher"), py::arg("rgb_student"), py::arg("n"));
    m.def(
        "select_points",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> w_t,
           py::array_t<float, py::array::c_style | py::array::forcecast> w_s, std::size_t n) {
            const auto mask = select_points(to_floats(w_t), to_floats(w_s), n);
            py::array_t<bool> out(static_cast<py::ssize_t>(mask.size()));
            for (std::size_t i = 0; i < mask.size(); ++i) out.mutable_data()[i] = mask[i] != 0;
            return out;
        },
        py::arg("w_teacher"), py::arg("w_student"), py::arg("n"));

    py::class_<ProceduralScene>(m, "Scene")
        .def_static("load", &make_scene, py::arg("name_or_path"))
        .def("query",
             [](const ProceduralScene& s,
                py::array_t<float, py::array::c_style | py::array::forcecast> x,
                py::array_t<float, py::array::c_style | py::array::forcecast> d) {
                 float sigma;
                 Vec3f color;
                 s.query(to_vec3(x), to_vec3(d), sigma, color);
                 return py::make_tuple(sigma, py::make_tuple(color.x, color.y, color.z));
             })
        .def("render", [](const ProceduralScene& s, float az, float el, float radius, int width,
                          int height, int spp, float fov) {
            RenderOptions opt;
            opt.samples_per_ray = spp;
            const auto pose = make_pose(az, el, radius, fov, width, height);
            return image_to_array(render_image(query_fn(s), pose, opt, s.bounds_lo, s.bounds_hi));
        }, py::arg("azimuth_deg"), py::arg("elevation_deg"), py::arg("radius"),
           py::arg("width") = 64, py::arg("height") = 64, py::arg("spp") = 48,
           py::arg("fov_deg") = 50.0f);

    py::class_<PyField>(m, "Field")
        .def_static(
            "load", [](const std::string& path) { return PyField{load_checkpoint(path)}; },
            py::arg("path"))
        .def_property_readonly(
            "arch",
            [](const PyField& f) { return std::string(arch_name(arch_tag(f.model))); })
        .def("query",
             [](const PyField& f,
                py::array_t<float, py::array::c_style | py::array::forcecast> x,
                py::array_t<float, py::array::c_style | py::array::forcecast> d) {
                 const auto s = query(f.model, to_vec3(x), to_vec3(d));
                 return py::make_tuple(s.sigma, py::make_tuple(s.color.x, s.color.y, s.color.z));
             })
        .def("query_phi1",
             [](const PyField& f,
                py::array_t<float, py::array::c_style | py::array::forcecast> x,
                py::array_t<float, py::array::c_style | py::array::forcecast> d) {
                 std::vector<float> feat(static_cast<std::size_t>(phi1_dim(f.model)));
                 query_phi1(f.model, to_vec3(x), to_vec3(d), std::span<float>(feat));
                 return py::array_t<float>(static_cast<py::ssize_t>(feat.size()), feat.data());
             })
        .def("query_phi2",
             [](const PyField& f,
                py::array_t<float, py::array::c_style | py::array::forcecast> feature,
                py::array_t<float, py::array::c_style | py::array::forcecast> d) {
                 const auto feat = to_floats(feature);
                 const auto s = query_phi2(f.model, std::span<const float>(feat), to_vec3(d));
                 return py::make_tuple(s.sigma, py::make_tuple(s.color.x, s.color.y, s.color.z));
             })
        .def("render", [](const PyField& f, float az, float el, float radius, int width,
                          int height, int spp, float fov) {
            RenderOptions opt;
            opt.samples_per_ray = spp;
            const auto pose = make_pose(az, el, radius, fov, width, height);
            const auto& bounds = std::visit([](const auto& a) { return a.bounds; }, f.model);
            return image_to_array(render_image(query_fn(f.model), pose, opt, bounds.lo, bounds.hi));
        }, py::arg("azimuth_deg"), py::arg("elevation_deg"), py::arg("radius"),
           py::arg("width") = 64, py::arg("height") = 64, py::arg("spp") = 48,
           py::arg("fov_deg") = 50.0f);

    m.def("set_threads", &set_thread_count, py::arg("n"));
}
