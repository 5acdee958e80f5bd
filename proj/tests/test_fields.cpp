// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "nerfcast/config.hpp"
#include "nerfcast/field_model.hpp"

using namespace nerfcast;

namespace {

RunConfig desk() {
    RunConfig c;
    c.apply_desk_preset();
    return c;
}

Vec3f random_dir(Rng& rng) {
    return normalized(Vec3f{rng.normal(), rng.normal(), rng.normal()});
}

}  // namespace

TEST_CASE("cascade identity: query equals phi2(phi1) for all architectures") {
    const RunConfig cfg = desk();
    Rng rng(21);
    for (const ArchTag tag : {ArchTag::Mlp, ArchTag::Grid, ArchTag::Vm, ArchTag::Hash}) {
        FieldModel<float> f = make_field(tag, cfg, 7);
        // Give the grid some non-trivial content.
        if (auto* g = std::get_if<GridField<float>>(&f)) {
            Rng r2(3);
            for (auto& v : g->params.at("grid.sigma").data) v = r2.uniform(0.0f, 5.0f);
            for (auto& v : g->params.at("grid.sh").data) v = r2.uniform(-0.5f, 0.5f);
        }
        std::vector<float> feat(static_cast<std::size_t>(phi1_dim(f)));
        for (int i = 0; i < 50; ++i) {
            const Vec3f x{rng.uniform(-0.99f, 0.99f), rng.uniform(-0.99f, 0.99f),
                          rng.uniform(-0.99f, 0.99f)};
            const Vec3f d = random_dir(rng);
            const auto direct = query(f, x, d);
            query_phi1(f, x, d, std::span<float>(feat));
            const auto cascaded = query_phi2(f, std::span<const float>(feat), d);
            CHECK(direct.sigma == cascaded.sigma);
            CHECK(direct.color.x == cascaded.color.x);
            CHECK(direct.color.y == cascaded.color.y);
            CHECK(direct.color.z == cascaded.color.z);
        }
    }
}

TEST_CASE("density is non-negative for arbitrary parameters") {
    const RunConfig cfg = desk();
    Rng rng(77);
    for (const ArchTag tag : {ArchTag::Mlp, ArchTag::Grid, ArchTag::Vm, ArchTag::Hash}) {
        FieldModel<float> f = make_field(tag, cfg, 99);
        for (auto& seg : params(f).segments)
            if (seg.trainable)
                for (auto& v : seg.data) v += 0.5f * rng.normal();
        for (int i = 0; i < 100; ++i) {
            const Vec3f x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const auto s = query(f, x, random_dir(rng));
            CHECK(s.sigma >= 0.0f);
            CHECK(std::isfinite(s.sigma));
        }
    }
}

TEST_CASE("out-of-box queries are empty space") {
    const RunConfig cfg = desk();
    for (const ArchTag tag : {ArchTag::Mlp, ArchTag::Grid, ArchTag::Vm, ArchTag::Hash}) {
        FieldModel<float> f = make_field(tag, cfg, 3);
        std::vector<float> feat(static_cast<std::size_t>(phi1_dim(f)), 1.0f);
        const auto s = query(f, Vec3f{2.0f, 0, 0}, Vec3f{0, 0, 1}, std::span<float>(feat));
        CHECK(s.sigma == 0.0f);
        for (float v : feat) CHECK(v == 0.0f);
    }
}

TEST_CASE("hash field with zeroed tables yields a zero encoder output") {
    RunConfig cfg;  // full-scale preset: L=14, F=2 -> 28-dim feature
    FieldModel<float> f = make_field(ArchTag::Hash, cfg, 5);
    auto& ps = params(f);
    for (int l = 0; l < cfg.hash.levels; ++l)
        for (auto& v : ps.segments[static_cast<std::size_t>(l)].data) v = 0.0f;
    std::vector<float> feat(static_cast<std::size_t>(phi1_dim(f)), 1.0f);
    REQUIRE(feat.size() == 28);
    query_phi1(f, Vec3f{0.3f, -0.2f, 0.7f}, Vec3f{0, 0, 1}, std::span<float>(feat));
    for (float v : feat) CHECK(v == 0.0f);
}

TEST_CASE("grid query at a cell center returns the stored values") {
    GridConfig gc;
    gc.resolution = 8;
    gc.sh_degree = 2;
    GridField<float> g(gc, 0);
    const int ix = 3, iy = 5, iz = 2;
    const std::size_t cell = g.flat(ix, iy, iz);
    g.params.at("grid.sigma").data[cell] = 4.25f;
    for (int k = 0; k < 27; ++k)
        g.params.at("grid.sh").data[cell * 27 + static_cast<std::size_t>(k)] =
            0.01f * static_cast<float>(k);
    const Vec3f x = g.cell_center(ix, iy, iz);
    std::vector<float> feat(28);
    g.phi1(x, Vec3f{0, 0, 1}, std::span<float>(feat));
    CHECK(feat[0] == doctest::Approx(4.25f).epsilon(1e-6));
    for (int k = 0; k < 27; ++k)
        CHECK(feat[static_cast<std::size_t>(1 + k)] ==
              doctest::Approx(0.01f * static_cast<float>(k)).epsilon(1e-5));
}

TEST_CASE("mlp forward matches an independent layer-by-layer evaluation") {
    MlpConfig mc;
    mc.depth = 3;
    mc.width = 16;
    mc.split_k = 1;
    mc.bottleneck = 8;
    mc.color_hidden = 8;
    mc.enc_x = {2, true};
    mc.enc_d = {1, true};
    MlpField<float> f(mc, 0);  // seed-0 weights
    const Vec3f x{0.1f, 0.2f, 0.3f};
    const Vec3f d = normalized(Vec3f{0.5f, -0.5f, -1.0f});
    const auto got = f.query(x, d);

    // Re-evaluate with plain loops straight off the parameter store.
    auto& ps = f.params;
    auto mat = [&](const std::string& name) { return ps.at(name).data; };
    const int ex = mc.enc_x.output_dim(3);
    std::vector<double> a(static_cast<std::size_t>(ex));
    {
        const double in[3] = {x.x, x.y, x.z};  // bounds are [-1,1], identity mapping
        std::size_t o = 0;
        for (double p : in) a[o++] = p;
        for (double p : in)
            for (int k = 0; k < 2; ++k) {
                a.resize(std::max(a.size(), o + 2));
                a[o++] = std::sin(std::pow(2.0, k) * M_PI * p);
                a[o++] = std::cos(std::pow(2.0, k) * M_PI * p);
            }
    }
    auto dense = [&](const std::vector<double>& in, const std::string& w, const std::string& b,
                     int nin, int nout, bool relu_act) {
        std::vector<double> out(static_cast<std::size_t>(nout));
        for (int o = 0; o < nout; ++o) {
            double acc = mat(b)[static_cast<std::size_t>(o)];
            for (int i = 0; i < nin; ++i)
                acc += static_cast<double>(mat(w)[static_cast<std::size_t>(o * nin + i)]) * in[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(o)] = relu_act ? std::max(acc, 0.0) : acc;
        }
        return out;
    };
    auto h1 = dense(a, "trunk.0.w", "trunk.0.b", ex, 16, true);
    auto h2 = dense(h1, "trunk.1.w", "trunk.1.b", 16, 16, true);
    auto h3 = dense(h2, "trunk.2.w", "trunk.2.b", 16, 16, true);
    auto sraw = dense(h3, "sigma.w", "sigma.b", 16, 1, false);
    auto u = dense(h3, "bottleneck.w", "bottleneck.b", 16, 8, false);
    const int ed = mc.enc_d.output_dim(3);
    std::vector<double> ued(u);
    {
        const double din[3] = {d.x, d.y, d.z};
        for (double p : din) ued.push_back(p);
        for (double p : din) {
            ued.push_back(std::sin(M_PI * p));
            ued.push_back(std::cos(M_PI * p));
        }
    }
    REQUIRE(static_cast<int>(ued.size()) == 8 + ed);
    auto hc = dense(ued, "color.0.w", "color.0.b", 8 + ed, 8, true);
    auto rgb = dense(hc, "color.1.w", "color.1.b", 8, 3, false);
    const double sigma_want = std::log1p(std::exp(sraw[0] - 1.0));
    CHECK(got.sigma == doctest::Approx(sigma_want).epsilon(1e-4));
    for (int ch = 0; ch < 3; ++ch) {
        const double c_want = 1.0 / (1.0 + std::exp(-rgb[static_cast<std::size_t>(ch)]));
        CHECK(got.color[static_cast<std::size_t>(ch)] == doctest::Approx(c_want).epsilon(1e-4));
    }
}

TEST_CASE("zero feature and zero decoder weights give activation(0) and mid-gray") {
    RunConfig cfg = desk();
    FieldModel<float> f = make_field(ArchTag::Hash, cfg, 1);
    auto& ps = params(f);
    for (auto& seg : ps.segments)
        for (auto& v : seg.data) v = 0.0f;
    std::vector<float> feat(static_cast<std::size_t>(phi1_dim(f)), 0.0f);
    const auto s = query_phi2(f, std::span<const float>(feat), Vec3f{0, 0, 1});
    CHECK(s.sigma == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-5));
    CHECK(s.color.x == doctest::Approx(0.5f));
    CHECK(s.color.y == doctest::Approx(0.5f));
    CHECK(s.color.z == doctest::Approx(0.5f));
}

TEST_CASE("phi2 rejects mismatched feature lengths") {
    const RunConfig cfg = desk();
    for (const ArchTag tag : {ArchTag::Mlp, ArchTag::Grid, ArchTag::Vm, ArchTag::Hash}) {
        FieldModel<float> f = make_field(tag, cfg, 3);
        std::vector<float> bad(static_cast<std::size_t>(phi1_dim(f)) + 1, 0.0f);
        CHECK_THROWS_AS(query_phi2(f, std::span<const float>(bad), Vec3f{0, 0, 1}), InputError);
    }
}

TEST_CASE("hash_index matches the scripted oracle bit-exactly") {
    const std::array<uint64_t, 3> primes{1ULL, 2654435761ULL, 805459861ULL};
    CHECK(hash_index(0, 0, 0, primes, 1u << 19) == 0);
    CHECK(hash_index(5, 0, 0, primes, 1u << 19) == 5);  // first axis has prime 1
    // Frozen values from an independent python evaluation (wrapping u64
    // multiplies, xor, mod 2^19 / 2^15).
    CHECK(hash_index(1, 2, 3, primes, 1u << 19) == 128476);
    CHECK(hash_index(7, 11, 13, primes, 1u << 19) == 280589);
    CHECK(hash_index(123, 456, 789, primes, 1u << 19) == 470282);
    CHECK(hash_index(7, 11, 13, primes, 1u << 15) == 18445);
    CHECK(hash_index(123, 456, 789, primes, 1u << 15) == 11530);
    CHECK(hash_index(2048, 1024, 4095, primes, 1u << 19) == 13419);
}

TEST_CASE("hash slots are deterministic and stay below the table size") {
    HashConfig hc;
    hc.levels = 6;
    hc.coarsest = 4;
    hc.finest = 64;
    hc.table_size = 1u << 10;
    HashField<float> f(hc, 0);
    Rng rng(13);
    for (int i = 0; i < 2000; ++i) {
        const int l = static_cast<int>(rng.uniform_int(6));
        const auto r = static_cast<uint64_t>(
            rng.uniform_int(static_cast<uint32_t>(f.level_resolutions()[static_cast<std::size_t>(l)] + 1)));
        const auto v = f.vertex_slot(l, r, r / 2, r / 3);
        CHECK(v == f.vertex_slot(l, r, r / 2, r / 3));
        const auto& seg = f.params.segments[static_cast<std::size_t>(l)];
        CHECK(v < seg.shape[0]);
    }
}

TEST_CASE("coarse hash levels index densely without collisions") {
    HashConfig hc;
    hc.levels = 4;
    hc.coarsest = 2;
    hc.finest = 10;
    hc.table_size = 1u << 10;
    HashField<float> f(hc, 0);
    // level 0 resolution 2 -> 27 vertices, all distinct slots
    std::vector<bool> seen(27, false);
    for (uint64_t z = 0; z <= 2; ++z)
        for (uint64_t y = 0; y <= 2; ++y)
            for (uint64_t x = 0; x <= 2; ++x) {
                const auto s = f.vertex_slot(0, x, y, z);
                REQUIRE(s < 27);
                CHECK(!seen[s]);
                seen[s] = true;
            }
}

TEST_CASE("vm reconstruction: all-ones rank-1 factors give 3 everywhere") {
    VmConfig vc;
    vc.resolution = 4;
    vc.rank_density = 3;  // one component per axis group
    vc.rank_feature = 3;
    vc.feature_dim = 4;
    vc.hidden = 8;
    VmField<float> f(vc, 0);
    for (int g = 0; g < 6; ++g)
        for (auto& v : f.params.segments[static_cast<std::size_t>(g)].data) v = 1.0f;
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        const Vec3f u{rng.uniform(), rng.uniform(), rng.uniform()};
        CHECK(f.reconstruct_density(u) == doctest::Approx(3.0f).epsilon(1e-5));
    }
    for (int g = 0; g < 6; ++g)
        for (auto& v : f.params.segments[static_cast<std::size_t>(g)].data) v = 0.0f;
    CHECK(f.reconstruct_density({0.3f, 0.7f, 0.5f}) == doctest::Approx(0.0f));
}

TEST_CASE("vm reconstruction matches the dense outer-product oracle") {
    VmConfig vc;
    vc.resolution = 2;  // 2x2x2 tensor, exact at the 8 lattice vertices
    vc.rank_density = 6;
    vc.rank_feature = 3;
    vc.feature_dim = 4;
    vc.hidden = 8;
    VmField<float> f(vc, 0);
    Rng rng(11);
    for (int g = 0; g < 6; ++g)
        for (auto& v : f.params.segments[static_cast<std::size_t>(g)].data)
            v = rng.uniform(-1.0f, 1.0f);
    // Dense tensor built by explicit outer products.
    const int rd = vc.rank_density / 3;
    const int res = vc.resolution;
    auto vecv = [&](int g, int r, int i) {
        return f.params.segments[static_cast<std::size_t>(2 * g)]
            .data[static_cast<std::size_t>(r * res + i)];
    };
    auto matv = [&](int g, int r, int b, int c) {
        return f.params.segments[static_cast<std::size_t>(2 * g + 1)]
            .data[static_cast<std::size_t>(r * res * res + c * res + b)];
    };
    for (int z = 0; z < res; ++z)
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                double want = 0;
                for (int r = 0; r < rd; ++r) {
                    want += static_cast<double>(vecv(0, r, x)) * matv(0, r, y, z);
                    want += static_cast<double>(vecv(1, r, y)) * matv(1, r, x, z);
                    want += static_cast<double>(vecv(2, r, z)) * matv(2, r, x, y);
                }
                const Vec3f u{static_cast<float>(x) / (res - 1), static_cast<float>(y) / (res - 1),
                              static_cast<float>(z) / (res - 1)};
                CHECK(f.reconstruct_density(u) == doctest::Approx(want).epsilon(1e-6));
            }
}

TEST_CASE("erase_region zeroes exactly the cells whose centers lie inside") {
    GridConfig gc;
    gc.resolution = 10;
    GridField<float> g(gc, 0);
    for (auto& v : g.params.at("grid.sigma").data) v = 2.0f;
    for (auto& v : g.params.at("grid.sh").data) v = 0.25f;

    SUBCASE("whole-grid box zeroes everything") {
        const auto n = g.erase_region({-1, -1, -1}, {1, 1, 1});
        CHECK(n == 1000);
        for (float v : g.params.at("grid.sigma").data) CHECK(v == 0.0f);
        for (float v : g.params.at("grid.sh").data) CHECK(v == 0.25f);  // untouched
    }

    SUBCASE("disjoint box is a no-op") {
        GridField<float> copy = g;
        // A box fully outside every cell center but inside the field bounds.
        const auto n = g.erase_region({0.981f, 0.981f, 0.981f}, {0.999f, 0.999f, 0.999f});
        CHECK(n == 0);
        CHECK(g.params.at("grid.sigma").data == copy.params.at("grid.sigma").data);
        CHECK(g.params.at("grid.mask").data == copy.params.at("grid.mask").data);
    }

    SUBCASE("half-grid box matches the exhaustive scan oracle") {
        const Vec3f lo{-1, -1, -1}, hi{0.0f, 1, 1};
        const auto n = g.erase_region(lo, hi);
        std::size_t want = 0;
        for (int z = 0; z < 10; ++z)
            for (int y = 0; y < 10; ++y)
                for (int x = 0; x < 10; ++x) {
                    const Vec3f c = g.cell_center(x, y, z);
                    const bool inside = c.x >= lo.x && c.x <= hi.x && c.y >= lo.y &&
                                        c.y <= hi.y && c.z >= lo.z && c.z <= hi.z;
                    if (inside) ++want;
                    const std::size_t i = g.flat(x, y, z);
                    CHECK(g.params.at("grid.sigma").data[i] == (inside ? 0.0f : 2.0f));
                    CHECK(g.params.at("grid.mask").data[i] == (inside ? 0.0f : 1.0f));
                }
        CHECK(n == want);
        CHECK(n == 500);
    }
}

TEST_CASE("masked grid cells read as empty space") {
    GridConfig gc;
    gc.resolution = 4;
    GridField<float> g(gc, 0);
    for (auto& v : g.params.at("grid.sigma").data) v = 3.0f;
    const Vec3f probe = g.cell_center(1, 1, 1);
    std::vector<float> feat(28);
    g.phi1(probe, Vec3f{0, 0, 1}, std::span<float>(feat));
    CHECK(feat[0] == doctest::Approx(3.0f));
    g.erase_region(probe - Vec3f{0.01f, 0.01f, 0.01f}, probe + Vec3f{0.01f, 0.01f, 0.01f});
    g.phi1(probe, Vec3f{0, 0, 1}, std::span<float>(feat));
    CHECK(feat[0] == doctest::Approx(0.0f));
}

TEST_CASE("interpolated field queries are continuous along a sweep") {
    const RunConfig cfg = desk();
    for (const ArchTag tag : {ArchTag::Grid, ArchTag::Vm, ArchTag::Hash}) {
        FieldModel<float> f = make_field(tag, cfg, 17);
        Rng rng(3);
        for (auto& seg : params(f).segments)
            if (seg.trainable)
                for (auto& v : seg.data) v += 0.2f * rng.normal();
        const Vec3f d{0, 0, 1};
        float prev = query(f, Vec3f{-0.9f, 0.13f, 0.27f}, d).sigma;
        float max_jump = 0;
        const int steps = 2000;
        for (int i = 1; i <= steps; ++i) {
            const float x = -0.9f + 1.8f * static_cast<float>(i) / steps;
            const float cur = query(f, Vec3f{x, 0.13f, 0.27f}, d).sigma;
            max_jump = std::max(max_jump, std::abs(cur - prev));
            prev = cur;
        }
        // A Lipschitz-like bound: steps are 9e-4 wide; interpolated fields
        // must not jump by more than a small multiple of the step.
        CHECK(max_jump < 0.5f);
    }
}
