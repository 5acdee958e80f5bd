// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "nerfcast/field_model.hpp"

namespace nerfcast {

// Versioned binary checkpoint: magic "PVDA", format version, architecture tag
// and hyperparameters, named little-endian f32 parameter segments, training
// metadata, and a trailing CRC32 over the whole payload. Round-trips are
// bit-exact.
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    uint64_t steps = 0;
    uint64_t seed = 0;
    std::string config_snapshot;
};

void save_checkpoint(const FieldModel<float>& field, const std::string& path,
                     const CheckpointMeta& meta = {});
FieldModel<float> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace nerfcast
