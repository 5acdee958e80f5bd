// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "nerfcast/encoding.hpp"
#include "nerfcast/interpolation.hpp"
#include "nerfcast/rng.hpp"
#include "nerfcast/sh.hpp"

using namespace nerfcast;

TEST_CASE("positional encoding closed-form cases") {
    const float zero[1] = {0.0f};
    const auto e0 = positional_encode<float>(std::span<const float>(zero, 1), {2, false});
    REQUIRE(e0.size() == 4);
    CHECK(e0[0] == doctest::Approx(0.0f));
    CHECK(e0[1] == doctest::Approx(1.0f));
    CHECK(e0[2] == doctest::Approx(0.0f));
    CHECK(e0[3] == doctest::Approx(1.0f));

    const float half[1] = {0.5f};
    const auto e1 = positional_encode<float>(std::span<const float>(half, 1), {1, false});
    REQUIRE(e1.size() == 2);
    CHECK(e1[0] == doctest::Approx(1.0f));                // sin(pi/2)
    CHECK(e1[1] == doctest::Approx(0.0f).epsilon(1e-6));  // cos(pi/2)
}

TEST_CASE("positional encoding output length matches the standard layout") {
    EncodingConfig cfg{10, true};
    CHECK(cfg.output_dim(3) == 63);
    const float v[3] = {0.1f, -0.4f, 0.9f};
    CHECK(positional_encode<float>(std::span<const float>(v, 3), cfg).size() == 63);
}

TEST_CASE("double-angle octaves match direct trig evaluation") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const float p = rng.uniform(-1.5f, 1.5f);
        const float in[1] = {p};
        const auto enc = positional_encode<float>(std::span<const float>(in, 1), {8, false});
        for (int k = 0; k < 8; ++k) {
            const double arg = std::pow(2.0, k) * M_PI * static_cast<double>(p);
            CHECK(enc[static_cast<std::size_t>(2 * k)] ==
                  doctest::Approx(std::sin(arg)).epsilon(2e-4));
            CHECK(enc[static_cast<std::size_t>(2 * k + 1)] ==
                  doctest::Approx(std::cos(arg)).epsilon(2e-4));
        }
    }
}

TEST_CASE("sh_eval: zero coefficients give mid-gray") {
    std::vector<float> coeffs(27, 0.0f);
    const auto c = sh_eval<float>(coeffs, normalized(Vec3f{0.3f, -0.5f, 0.8f}), 2);
    CHECK(c.x == doctest::Approx(0.5f));
    CHECK(c.y == doctest::Approx(0.5f));
    CHECK(c.z == doctest::Approx(0.5f));
}

TEST_CASE("sh_eval: unit dc coefficient matches the direct formula") {
    // S(Y00) with Y00 = 1/(2 sqrt(pi)) = 0.2820948, computed independently.
    std::vector<float> c0(3, 1.0f);  // lmax = 0
    const auto c = sh_eval<float>(c0, Vec3f{0, 0, 1}, 0);
    CHECK(c.x == doctest::Approx(0.5701f).epsilon(1e-3));
    const double want = 1.0 / (1.0 + std::exp(-0.28209479177387814));
    CHECK(c.x == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("sh_eval: dc-only colors are view independent") {
    std::vector<float> coeffs(27, 0.0f);
    coeffs[0] = 0.7f;   // r dc
    coeffs[9] = -0.2f;  // g dc
    coeffs[18] = 1.3f;  // b dc
    Rng rng(2);
    Vec3f first{};
    for (int i = 0; i < 20; ++i) {
        const Vec3f d =
            normalized(Vec3f{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const auto c = sh_eval<float>(coeffs, d, 2);
        if (i == 0) {
            first = c;
        } else {
            CHECK(c.x == first.x);
            CHECK(c.y == first.y);
            CHECK(c.z == first.z);
        }
    }
}

TEST_CASE("sh_eval rejects wrong coefficient counts") {
    std::vector<float> coeffs(26, 0.0f);
    CHECK_THROWS_AS(sh_eval<float>(coeffs, Vec3f{0, 0, 1}, 2), InputError);
}

TEST_CASE("sh basis is orthonormal under spherical quadrature") {
    // Monte Carlo check of the normalization constants up to degree 2.
    Rng rng(9);
    const int n = 200000;
    double gram[9][9] = {};
    for (int i = 0; i < n; ++i) {
        Vec3f d{rng.normal(), rng.normal(), rng.normal()};
        d = normalized(d);
        float basis[9];
        sh_basis<float>(d, 2, std::span<float>(basis, 9));
        for (int a = 0; a < 9; ++a)
            for (int b = a; b < 9; ++b) gram[a][b] += basis[a] * basis[b];
    }
    const double scale = 4.0 * M_PI / n;
    for (int a = 0; a < 9; ++a)
        for (int b = a; b < 9; ++b) {
            const double want = (a == b) ? 1.0 : 0.0;
            if (a == b) {
                CHECK(gram[a][b] * scale == doctest::Approx(want).epsilon(0.03));
            } else {
                CHECK(std::abs(gram[a][b] * scale - want) < 0.03);
            }
        }
}

TEST_CASE("trilinear interpolation corner and symmetry identities") {
    const float corners[8] = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(trilerp<float>(corners, {0, 0, 0}) == doctest::Approx(1.0f));
    CHECK(trilerp<float>(corners, {1, 0, 0}) == doctest::Approx(2.0f));
    CHECK(trilerp<float>(corners, {1, 1, 1}) == doctest::Approx(8.0f));
    CHECK(trilerp<float>(corners, {0.5f, 0.5f, 0.5f}) == doctest::Approx(4.5f));  // mean
    const float flat[8] = {3, 3, 3, 3, 3, 3, 3, 3};
    Rng rng(1);
    for (int i = 0; i < 20; ++i)
        CHECK(trilerp<float>(flat, {rng.uniform(), rng.uniform(), rng.uniform()}) ==
              doctest::Approx(3.0f));
    // Linear along each axis.
    CHECK(trilerp<float>(corners, {0.25f, 0, 0}) == doctest::Approx(1.25f));
}

TEST_CASE("trilerp weights sum to one") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        float w[8];
        trilerp_weights<float>({rng.uniform(), rng.uniform(), rng.uniform()}, w);
        float sum = 0;
        for (float v : w) sum += v;
        CHECK(sum == doctest::Approx(1.0f).epsilon(1e-6));
    }
}
