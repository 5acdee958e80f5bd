// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#include "nerfcast/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "nerfcast/crc32.hpp"

namespace nerfcast {

using nlohmann::json;

namespace {

void put_bytes(std::vector<uint8_t>& out, const void* p, std::size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

template <typename T>
void put_pod(std::vector<uint8_t>& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

void put_string(std::vector<uint8_t>& out, const std::string& s) {
    put_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
    put_bytes(out, s.data(), s.size());
}

struct Reader {
    const uint8_t* p;
    const uint8_t* end;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n) throw IoError("checkpoint: truncated file");
    }
    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
    std::string str() {
        const uint32_t n = pod<uint32_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
};

json encoding_to_json(const EncodingConfig& e) {
    return json{{"n_freq", e.n_freq}, {"include_input", e.include_input}};
}
EncodingConfig encoding_from_json(const json& j) {
    return {j.at("n_freq").get<int>(), j.at("include_input").get<bool>()};
}

json bounds_to_json(const FieldBounds<float>& b) {
    return json{{"lo", {b.lo.x, b.lo.y, b.lo.z}}, {"hi", {b.hi.x, b.hi.y, b.hi.z}}};
}
FieldBounds<float> bounds_from_json(const json& j) {
    FieldBounds<float> b;
    b.lo = {j.at("lo").at(0).get<float>(), j.at("lo").at(1).get<float>(),
            j.at("lo").at(2).get<float>()};
    b.hi = {j.at("hi").at(0).get<float>(), j.at("hi").at(1).get<float>(),
            j.at("hi").at(2).get<float>()};
    return b;
}

json hyper_to_json(const FieldModel<float>& f) {
    json j;
    std::visit(
        [&](const auto& a) {
            using Arch = std::decay_t<decltype(a)>;
            j["bounds"] = bounds_to_json(a.bounds);
            if constexpr (std::is_same_v<Arch, MlpField<float>>) {
                j["depth"] = a.cfg.depth;
                j["width"] = a.cfg.width;
                j["split_k"] = a.cfg.split_k;
                j["bottleneck"] = a.cfg.bottleneck;
                j["color_hidden"] = a.cfg.color_hidden;
                j["enc_x"] = encoding_to_json(a.cfg.enc_x);
                j["enc_d"] = encoding_to_json(a.cfg.enc_d);
            } else if constexpr (std::is_same_v<Arch, GridField<float>>) {
                j["resolution"] = a.cfg.resolution;
                j["sh_degree"] = a.cfg.sh_degree;
            } else if constexpr (std::is_same_v<Arch, VmField<float>>) {
                j["resolution"] = a.cfg.resolution;
                j["rank_density"] = a.cfg.rank_density;
                j["rank_feature"] = a.cfg.rank_feature;
                j["feature_dim"] = a.cfg.feature_dim;
                j["hidden"] = a.cfg.hidden;
                j["enc_d"] = encoding_to_json(a.cfg.enc_d);
            } else {
                j["levels"] = a.cfg.levels;
                j["coarsest"] = a.cfg.coarsest;
                j["finest"] = a.cfg.finest;
                j["table_size"] = a.cfg.table_size;
                j["features_per_level"] = a.cfg.features_per_level;
                j["primes"] = {a.cfg.primes[0], a.cfg.primes[1], a.cfg.primes[2]};
                j["hidden"] = a.cfg.hidden;
                j["geo_features"] = a.cfg.geo_features;
                j["enc_d"] = encoding_to_json(a.cfg.enc_d);
            }
        },
        f);
    return j;
}

FieldModel<float> field_from_hyper(ArchTag tag, const json& j) {
    switch (tag) {
        case ArchTag::Mlp: {
            MlpConfig c;
            c.depth = j.at("depth").get<int>();
            c.width = j.at("width").get<int>();
            c.split_k = j.at("split_k").get<int>();
            c.bottleneck = j.at("bottleneck").get<int>();
            c.color_hidden = j.at("color_hidden").get<int>();
            c.enc_x = encoding_from_json(j.at("enc_x"));
            c.enc_d = encoding_from_json(j.at("enc_d"));
            MlpField<float> f(c, 0);
            f.bounds = bounds_from_json(j.at("bounds"));
            return f;
        }
        case ArchTag::Grid: {
            GridConfig c;
            c.resolution = j.at("resolution").get<int>();
            c.sh_degree = j.at("sh_degree").get<int>();
            GridField<float> f(c, 0);
            f.bounds = bounds_from_json(j.at("bounds"));
            return f;
        }
        case ArchTag::Vm: {
            VmConfig c;
            c.resolution = j.at("resolution").get<int>();
            c.rank_density = j.at("rank_density").get<int>();
            c.rank_feature = j.at("rank_feature").get<int>();
            c.feature_dim = j.at("feature_dim").get<int>();
            c.hidden = j.at("hidden").get<int>();
            c.enc_d = encoding_from_json(j.at("enc_d"));
            VmField<float> f(c, 0);
            f.bounds = bounds_from_json(j.at("bounds"));
            return f;
        }
        case ArchTag::Hash: {
            HashConfig c;
            c.levels = j.at("levels").get<int>();
            c.coarsest = j.at("coarsest").get<int>();
            c.finest = j.at("finest").get<int>();
            c.table_size = j.at("table_size").get<uint32_t>();
            c.features_per_level = j.at("features_per_level").get<int>();
            c.primes = {j.at("primes").at(0).get<uint64_t>(), j.at("primes").at(1).get<uint64_t>(),
                        j.at("primes").at(2).get<uint64_t>()};
            c.hidden = j.at("hidden").get<int>();
            c.geo_features = j.at("geo_features").get<int>();
            c.enc_d = encoding_from_json(j.at("enc_d"));
            HashField<float> f(c, 0);
            f.bounds = bounds_from_json(j.at("bounds"));
            return f;
        }
    }
    throw IoError("checkpoint: bad architecture tag");
}

}  // namespace

void save_checkpoint(const FieldModel<float>& field, const std::string& path,
                     const CheckpointMeta& meta) {
    std::vector<uint8_t> buf;
    put_bytes(buf, "PVDA", 4);
    put_pod<uint32_t>(buf, kCheckpointVersion);
    put_pod<uint8_t>(buf, static_cast<uint8_t>(arch_tag(field)));
    put_string(buf, hyper_to_json(field).dump());
    json mj{{"steps", meta.steps}, {"seed", meta.seed}, {"config", meta.config_snapshot}};
    put_string(buf, mj.dump());
    const auto& ps = params(field);
    put_pod<uint32_t>(buf, static_cast<uint32_t>(ps.segments.size()));
    for (const auto& seg : ps.segments) {
        put_string(buf, seg.name);
        put_pod<uint8_t>(buf, seg.trainable ? 1 : 0);
        put_pod<uint8_t>(buf, static_cast<uint8_t>(seg.shape.size()));
        for (std::size_t d : seg.shape) put_pod<uint64_t>(buf, static_cast<uint64_t>(d));
        put_bytes(buf, seg.data.data(), seg.data.size() * sizeof(float));
    }
    put_pod<uint32_t>(buf, crc32(buf.data(), buf.size()));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("checkpoint: write failed: " + path);
}

FieldModel<float> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 13) throw IoError("checkpoint: file too short: " + path);
    uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw IoError("checkpoint: checksum mismatch (corrupt or truncated): " + path);
    Reader r{buf.data(), buf.data() + buf.size() - 4};
    char magic[4];
    std::memcpy(magic, r.p, 4);
    r.p += 4;
    if (std::memcmp(magic, "PVDA", 4) != 0) throw IoError("checkpoint: bad magic: " + path);
    const uint32_t version = r.pod<uint32_t>();
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version) + ": " +
                      path);
    const auto tag = static_cast<ArchTag>(r.pod<uint8_t>());
    json hyper, mj;
    try {
        hyper = json::parse(r.str());
        mj = json::parse(r.str());
    } catch (const json::exception& e) {
        throw IoError("checkpoint: corrupt header json: " + std::string(e.what()));
    }
    FieldModel<float> field = field_from_hyper(tag, hyper);
    if (meta) {
        meta->steps = mj.value("steps", uint64_t{0});
        meta->seed = mj.value("seed", uint64_t{0});
        meta->config_snapshot = mj.value("config", std::string{});
    }
    auto& ps = params(field);
    const uint32_t nseg = r.pod<uint32_t>();
    if (nseg != ps.segments.size())
        throw IoError("checkpoint: segment count does not match architecture: " + path);
    for (auto& seg : ps.segments) {
        const std::string name = r.str();
        if (name != seg.name)
            throw IoError("checkpoint: unexpected segment '" + name + "' (want '" + seg.name +
                          "')");
        seg.trainable = r.pod<uint8_t>() != 0;
        const auto ndim = r.pod<uint8_t>();
        std::vector<std::size_t> shape(ndim);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(r.pod<uint64_t>());
            n *= d;
        }
        if (shape != seg.shape || n != seg.data.size())
            throw IoError("checkpoint: segment shape mismatch at " + name);
        r.need(n * sizeof(float));
        std::memcpy(seg.data.data(), r.p, n * sizeof(float));
        r.p += n * sizeof(float);
    }
    return field;
}

}  // namespace nerfcast
