// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>

namespace nerfcast::instr {

// Cheap global counters used to assert stage gating in tests (e.g. stage 1
// must never touch the decoder or the compositor).
inline std::atomic<uint64_t> phi2_evals{0};
inline std::atomic<uint64_t> composite_calls{0};

inline void reset() {
    phi2_evals.store(0, std::memory_order_relaxed);
    composite_calls.store(0, std::memory_order_relaxed);
}

}  // namespace nerfcast::instr
