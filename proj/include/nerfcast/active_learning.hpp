// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "nerfcast/errors.hpp"
#include "nerfcast/rng.hpp"
#include "nerfcast/vec.hpp"

namespace nerfcast {

// Indices of the n largest values, ties broken toward the lower index.
// Deterministic for identical inputs.
inline std::vector<std::size_t> top_n_indices(std::span<const float> values, std::size_t n) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    n = std::min(n, values.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (values[a] != values[b]) return values[a] > values[b];
                          return a < b;
                      });
    idx.resize(n);
    return idx;
}

// Hardest camera poses: the n with the largest mean image error.
inline std::vector<std::size_t> select_poses(std::span<const float> pose_losses, std::size_t n_cp) {
    if (n_cp > pose_losses.size())
        throw InputError("select_poses: n exceeds the number of poses");
    return top_n_indices(pose_losses, n_cp);
}

// Hardest rays: the n with the largest mean squared color gap between the
// teacher's and the student's rendered values.
inline std::vector<std::size_t> select_rays(std::span<const Vec3f> rgb_teacher,
                                            std::span<const Vec3f> rgb_student, std::size_t n_sr) {
    if (rgb_teacher.size() != rgb_student.size())
        throw InputError("select_rays: teacher/student ray counts differ");
    std::vector<float> gap(rgb_teacher.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
        const Vec3f d = rgb_teacher[i] - rgb_student[i];
        gap[i] = dot(d, d) / 3.0f;
    }
    return top_n_indices(gap, std::min(n_sr, gap.size()));
}

// Influential sample points: score each point by the larger of its teacher
// and student compositing weights and mark the top n. Equivalent to
// concatenating both weight lists, sorting, and deduplicating point ids.
inline std::vector<uint8_t> select_points(std::span<const float> w_teacher,
                                          std::span<const float> w_student, std::size_t n_sp) {
    if (w_teacher.size() != w_student.size())
        throw InputError("select_points: teacher/student weight arrays differ in length");
    std::vector<float> score(w_teacher.size());
    for (std::size_t i = 0; i < score.size(); ++i) score[i] = std::max(w_teacher[i], w_student[i]);
    const auto chosen = top_n_indices(score, std::min(n_sp, score.size()));
    std::vector<uint8_t> mask(score.size(), 0);
    for (std::size_t i : chosen) mask[i] = 1;
    return mask;
}

// Bounded FIFO store. Inserts overwrite the oldest entries once the capacity
// is reached (a ring buffer with a persistent replace cursor).
template <typename Item>
class ActiveSet {
public:
    ActiveSet() = default;
    explicit ActiveSet(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const Item& operator[](std::size_t i) const { return items_[i]; }

    void insert(const Item& item) {
        if (capacity_ == 0) return;
        if (items_.size() < capacity_) {
            items_.push_back(item);
        } else {
            items_[cursor_ % capacity_] = item;
        }
        ++cursor_;
    }

    template <typename It>
    void insert(It begin, It end) {
        for (It it = begin; it != end; ++it) insert(*it);
    }

    // Uniformly sample up to n stored entries (with replacement).
    std::vector<Item> random_select(std::size_t n, Rng& rng) const {
        std::vector<Item> out;
        if (items_.empty()) return out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(items_[rng.uniform_int(static_cast<uint32_t>(items_.size()))]);
        return out;
    }

private:
    std::size_t capacity_ = 0;
    std::size_t cursor_ = 0;
    std::vector<Item> items_;
};

}  // namespace nerfcast
