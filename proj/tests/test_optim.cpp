// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "nerfcast/adam.hpp"
#include "nerfcast/losses.hpp"
#include "nerfcast/rng.hpp"

using namespace nerfcast;

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    ParamStore<float> p;
    p.add("w", {4});
    p.at("w").data = {1.0f, -2.0f, 3.0f, 0.5f};
    AdamState<float> adam(p, {});
    const auto g = p.zeros_like();
    adam.update(p, g);
    CHECK(adam.step == 1);
    CHECK(p.at("w").data == std::vector<float>{1.0f, -2.0f, 3.0f, 0.5f});
}

TEST_CASE("adam: first step moves by about -lr * sign(g)") {
    ParamStore<float> p;
    p.add("w", {3});
    p.at("w").data = {0.0f, 0.0f, 0.0f};
    AdamConfig cfg;
    cfg.lr = 0.02f;
    AdamState<float> adam(p, cfg);
    auto g = p.zeros_like();
    g.at("w").data = {0.3f, -5.0f, 1e-3f};
    adam.update(p, g);
    for (int i = 0; i < 3; ++i) {
        const float got = p.at("w").data[static_cast<std::size_t>(i)];
        const float want =
            -0.02f * (g.at("w").data[static_cast<std::size_t>(i)] > 0 ? 1.0f : -1.0f);
        CHECK(got == doctest::Approx(want).epsilon(1e-3));
    }
}

TEST_CASE("adam converges on a scalar quadratic") {
    // f(w) = (w-3)^2 from w=0 with the default rate.
    ParamStore<float> p;
    p.add("w", {1});
    p.at("w").data = {0.0f};
    AdamState<float> adam(p, {});
    auto g = p.zeros_like();
    float prev = 0.0f;
    bool monotone = true;
    for (int i = 0; i < 100; ++i) {
        const float w = p.at("w").data[0];
        g.at("w").data[0] = 2.0f * (w - 3.0f);
        adam.update(p, g);
        if (p.at("w").data[0] < prev - 1e-6f) monotone = false;
        prev = p.at("w").data[0];
    }
    CHECK(monotone);
    CHECK(std::abs(p.at("w").data[0] - 3.0f) < 3.0f);
    CHECK(p.at("w").data[0] > 1.0f);
}

TEST_CASE("adam update is invariant to segment ordering") {
    ParamStore<float> a;
    a.add("first", {2});
    a.add("second", {2});
    a.at("first").data = {1.0f, 2.0f};
    a.at("second").data = {3.0f, 4.0f};
    ParamStore<float> b;
    b.add("second", {2});
    b.add("first", {2});
    b.at("second").data = {3.0f, 4.0f};
    b.at("first").data = {1.0f, 2.0f};
    AdamState<float> adam_a(a, {});
    AdamState<float> adam_b(b, {});
    auto ga = a.zeros_like();
    auto gb = b.zeros_like();
    ga.at("first").data = {0.5f, -0.25f};
    ga.at("second").data = {1.5f, 0.75f};
    gb.at("first").data = {0.5f, -0.25f};
    gb.at("second").data = {1.5f, 0.75f};
    for (int i = 0; i < 5; ++i) {
        adam_a.update(a, ga);
        adam_b.update(b, gb);
    }
    CHECK(a.at("first").data == b.at("first").data);
    CHECK(a.at("second").data == b.at("second").data);
}

TEST_CASE("adam skips non-trainable segments and rejects shape mismatches") {
    ParamStore<float> p;
    p.add("w", {2});
    p.add("mask", {2}, /*trainable=*/false);
    p.at("mask").data = {1.0f, 1.0f};
    AdamState<float> adam(p, {});
    auto g = p.zeros_like();
    g.at("w").data = {1.0f, 1.0f};
    g.at("mask").data = {9.0f, 9.0f};
    adam.update(p, g);
    CHECK(p.at("mask").data == std::vector<float>{1.0f, 1.0f});

    ParamStore<float> other;
    other.add("w", {3});
    CHECK_THROWS_AS(adam.update(p, other.zeros_like()), InputError);
}

TEST_CASE("tv loss closed forms and the naive-loop oracle") {
    SUBCASE("constant grid is zero") {
        std::vector<float> v(27, 3.5f);
        const std::size_t dims[3] = {3, 3, 3};
        CHECK(tv_loss<float>(v, std::span<const std::size_t>(dims, 3)) == 0.0f);
    }
    SUBCASE("1-d ramp has unit mean squared difference") {
        std::vector<float> v = {0, 1, 2, 3};
        const std::size_t dims[1] = {4};
        CHECK(tv_loss<float>(v, std::span<const std::size_t>(dims, 1)) == doctest::Approx(1.0f));
    }
    SUBCASE("random 3-d grid matches a double-loop oracle") {
        Rng rng(3);
        const std::size_t nx = 5, ny = 4, nz = 3;
        std::vector<float> v(nx * ny * nz);
        for (auto& x : v) x = rng.uniform(-2.0f, 2.0f);
        const std::size_t dims[3] = {nx, ny, nz};
        const float got = tv_loss<float>(v, std::span<const std::size_t>(dims, 3));
        auto at = [&](std::size_t x, std::size_t y, std::size_t z) {
            return static_cast<double>(v[x + nx * (y + ny * z)]);
        };
        double ax = 0, ay = 0, az = 0;
        for (std::size_t z = 0; z < nz; ++z)
            for (std::size_t y = 0; y < ny; ++y)
                for (std::size_t x = 0; x < nx; ++x) {
                    if (x + 1 < nx) ax += std::pow(at(x + 1, y, z) - at(x, y, z), 2);
                    if (y + 1 < ny) ay += std::pow(at(x, y + 1, z) - at(x, y, z), 2);
                    if (z + 1 < nz) az += std::pow(at(x, y, z + 1) - at(x, y, z), 2);
                }
        const double want = ax / ((nx - 1) * ny * nz) + ay / (nx * (ny - 1) * nz) +
                            az / (nx * ny * (nz - 1));
        CHECK(got == doctest::Approx(want).epsilon(1e-5));
    }
}

TEST_CASE("tv loss gradient matches finite differences") {
    Rng rng(17);
    std::vector<float> v(24);
    for (auto& x : v) x = rng.uniform(-1.0f, 1.0f);
    const std::size_t dims[3] = {4, 3, 2};
    std::vector<float> grad(v.size(), 0.0f);
    tv_loss<float>(v, std::span<const std::size_t>(dims, 3), std::span<float>(grad));
    for (std::size_t i = 0; i < v.size(); i += 5) {
        const float h = 1e-3f;
        auto vp = v;
        vp[i] += h;
        auto vm = v;
        vm[i] -= h;
        const float fd = (tv_loss<float>(vp, std::span<const std::size_t>(dims, 3)) -
                          tv_loss<float>(vm, std::span<const std::size_t>(dims, 3))) /
                         (2 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-2));
    }
}

TEST_CASE("l1 sparsity closed forms and the naive oracle") {
    std::vector<float> zeros(10, 0.0f);
    CHECK(l1_sparsity<float>(zeros) == 0.0f);
    std::vector<float> pm = {-1.0f, 1.0f};
    CHECK(l1_sparsity<float>(pm) == doctest::Approx(1.0f));
    Rng rng(8);
    std::vector<float> v(100);
    for (auto& x : v) x = rng.uniform(-3.0f, 3.0f);
    double want = 0;
    for (float x : v) want += std::abs(static_cast<double>(x));
    want /= static_cast<double>(v.size());
    CHECK(l1_sparsity<float>(v) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("regularizers are non-negative for arbitrary inputs") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<float> v(30);
        for (auto& x : v) x = rng.uniform(-2.0f, 2.0f);
        const std::size_t dims[2] = {6, 5};
        CHECK(tv_loss<float>(v, std::span<const std::size_t>(dims, 2)) >= 0.0f);
        CHECK(l1_sparsity<float>(v) >= 0.0f);
    }
}
