// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace nerfcast {

// Process-wide worker count; 1 guarantees bitwise-deterministic execution.
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into one contiguous chunk per worker and runs
// fn(worker_index, begin, end) on each. With one worker runs inline.
// Workers always receive the same ranges for a given (n, workers), so
// per-worker buffers merged in worker order are deterministic for a fixed
// thread count.
inline void parallel_chunks(std::size_t n, int workers,
                            const std::function<void(int, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (workers > static_cast<int>(n)) workers = static_cast<int>(n);
    if (workers <= 1) {
        fn(0, 0, n);
        return;
    }
    const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const std::size_t b = static_cast<std::size_t>(w) * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace nerfcast
