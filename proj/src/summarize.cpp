// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdvsum {

std::vector<std::size_t> BinarySelection::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) out.push_back(i);
  }
  return out;
}

std::size_t top_fraction_count(std::size_t frames, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(frames)));
  return std::min(frames, std::max<std::size_t>(1, k));
}

BinarySelection select_top_fraction(std::span<const float> scores, double fraction) {
  const std::size_t k = top_fraction_count(scores.size(), fraction);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  BinarySelection sel;
  sel.mask.assign(scores.size(), 0);
  for (std::size_t i = 0; i < k; ++i) sel.mask[order[i]] = 1;
  sel.selected = k;
  return sel;
}

std::vector<Fragment> fixed_fragmentation(std::size_t frames, std::size_t segment_len) {
  if (segment_len < 1) throw std::invalid_argument("segment length must be >= 1");
  std::vector<Fragment> out;
  for (std::size_t s = 0; s < frames; s += segment_len) out.push_back({s, std::min(frames, s + segment_len)});
  return out;
}

std::vector<ScoredFragment> score_fragments(std::span<const float> scores, std::span<const Fragment> fragments) {
  std::vector<ScoredFragment> out;
  out.reserve(fragments.size());
  for (const Fragment& f : fragments) {
    if (f.end > scores.size() || f.end < f.start) {
      throw std::invalid_argument("fragment [" + std::to_string(f.start) + ", " + std::to_string(f.end) +
                                  ") outside " + std::to_string(scores.size()) + " frames");
    }
    double v = 0.0;
    for (std::size_t i = f.start; i < f.end; ++i) v += scores[i];
    out.push_back({f, v});
  }
  return out;
}

std::vector<std::size_t> fragment_knapsack(std::span<const float> scores, std::span<const Fragment> fragments,
                                           std::size_t budget_frames) {
  const auto scored = score_fragments(scores, fragments);
  const std::size_t n = scored.size();
  const std::size_t cap = budget_frames;
  // best[i][c]: max value using fragments i..n-1 within capacity c.
  std::vector<std::vector<double>> best(n + 1, std::vector<double>(cap + 1, 0.0));
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t w = scored[i].span.length();
    for (std::size_t c = 0; c <= cap; ++c) {
      double v = best[i + 1][c];
      if (w <= c) v = std::max(v, scored[i].score + best[i + 1][c - w]);
      best[i][c] = v;
    }
  }

  // Reconstruct the lexicographically smallest optimal index sequence: stop as
  // soon as the target is met, otherwise take the smallest fragment that still
  // admits an optimal completion.
  const double tol = 1e-9 * std::max(1.0, best[0][cap]);
  std::vector<std::size_t> chosen;
  double need = best[0][cap];
  std::size_t c = cap;
  std::size_t i = 0;
  while (need > tol && i < n) {
    std::size_t pick = n;
    for (std::size_t j = i; j < n; ++j) {
      const std::size_t w = scored[j].span.length();
      if (w <= c && scored[j].score + best[j + 1][c - w] >= need - tol) {
        pick = j;
        break;
      }
    }
    if (pick == n) break;
    chosen.push_back(pick);
    need -= scored[pick].score;
    c -= scored[pick].span.length();
    i = pick + 1;
  }
  return chosen;
}

std::vector<std::size_t> frames_of(std::span<const Fragment> fragments, std::span<const std::size_t> chosen) {
  std::vector<std::size_t> out;
  for (std::size_t idx : chosen) {
    for (std::size_t f = fragments[idx].start; f < fragments[idx].end; ++f) out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sdvsum
