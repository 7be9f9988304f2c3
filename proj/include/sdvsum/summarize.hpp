// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdvsum/datakit.hpp"

namespace sdvsum {

inline constexpr double kSummaryFraction = 0.15;
inline constexpr std::size_t kDefaultSegmentLength = 5;

struct BinarySelection {
  std::vector<std::uint8_t> mask;  // 0/1 per frame
  std::size_t selected = 0;

  std::vector<std::size_t> indices() const;
};

// k = max(1, floor(fraction * N)) highest-scoring frames; ties go to the
// smaller frame index.
BinarySelection select_top_fraction(std::span<const float> scores, double fraction);

std::size_t top_fraction_count(std::size_t frames, double fraction);

struct ScoredFragment {
  Fragment span;
  double score = 0.0;  // sum of frame scores inside the span
};

// Consecutive segments of `segment_len` frames; the last may be shorter.
std::vector<Fragment> fixed_fragmentation(std::size_t frames, std::size_t segment_len);

std::vector<ScoredFragment> score_fragments(std::span<const float> scores, std::span<const Fragment> fragments);

// 0/1 knapsack over fragments: value = summed frame scores, weight = length,
// capacity = budget_frames. Returns the indices (ascending) of a maximum-value
// subset; among equal-value optima the lexicographically smallest index
// sequence wins.
std::vector<std::size_t> fragment_knapsack(std::span<const float> scores, std::span<const Fragment> fragments,
                                           std::size_t budget_frames);

// Frames covered by the chosen fragments, ascending.
std::vector<std::size_t> frames_of(std::span<const Fragment> fragments, std::span<const std::size_t> chosen);

}  // namespace sdvsum
