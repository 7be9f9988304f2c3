// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "sdvsum/summarize.hpp"

using namespace sdvsum;

namespace {

struct Instance {
  std::vector<float> scores;
  std::vector<Fragment> fragments;
  std::size_t budget = 0;
};

Instance random_instance(Rng& rng, std::size_t max_fragments) {
  Instance in;
  const auto count = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(max_fragments)));
  std::size_t at = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto len = static_cast<std::size_t>(rng.integer(1, 8));
    in.fragments.push_back({at, at + len});
    at += len;
  }
  for (std::size_t f = 0; f < at; ++f) {
    // coarse values so equal-value optima actually occur
    in.scores.push_back(static_cast<float>(rng.integer(0, 4)) / 4.0f);
  }
  in.budget = static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(at)));
  if (rng.bernoulli(0.3)) in.budget = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(at)));
  return in;
}

double value_of(const Instance& in, const std::vector<std::size_t>& chosen) {
  double v = 0;
  for (std::size_t i : chosen) {
    for (std::size_t f = in.fragments[i].start; f < in.fragments[i].end; ++f) v += in.scores[f];
  }
  return v;
}

std::size_t length_of(const Instance& in, const std::vector<std::size_t>& chosen) {
  std::size_t n = 0;
  for (std::size_t i : chosen) n += in.fragments[i].length();
  return n;
}

// Exhaustive search: best value, then lexicographically smallest index list.
std::vector<std::size_t> brute_force(const Instance& in) {
  const std::size_t n = in.fragments.size();
  std::vector<std::size_t> best;
  double best_value = -1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) set.push_back(i);
    }
    if (length_of(in, set) > in.budget) continue;
    const double v = value_of(in, set);
    if (v > best_value + 1e-9 || (std::abs(v - best_value) <= 1e-9 && set < best)) {
      best_value = v;
      best = set;
    }
  }
  return best;
}

std::vector<std::size_t> greedy_by_density(const Instance& in) {
  std::vector<std::size_t> order(in.fragments.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&in](std::size_t a, std::size_t b) {
    return value_of(in, {a}) / in.fragments[a].length() > value_of(in, {b}) / in.fragments[b].length();
  });
  std::vector<std::size_t> out;
  std::size_t used = 0;
  for (std::size_t i : order) {
    if (used + in.fragments[i].length() <= in.budget) {
      out.push_back(i);
      used += in.fragments[i].length();
    }
  }
  return out;
}

}  // namespace

TEST_CASE("select_top_fraction counts") {
  std::vector<float> s(100);
  std::iota(s.begin(), s.end(), 0.0f);
  CHECK(select_top_fraction(s, 0.15).selected == 15);
  CHECK(select_top_fraction(std::vector<float>(7, 0.2f), 0.15).selected == 1);
  CHECK(select_top_fraction(std::vector<float>(3, 0.2f), 0.15).selected == 1);
  CHECK(select_top_fraction(s, 1.0).selected == 100);
  CHECK_THROWS_AS(select_top_fraction(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(select_top_fraction(s, 1.5), std::invalid_argument);
}

TEST_CASE("select_top_fraction breaks ties toward smaller indices") {
  const std::vector<float> s{0.5f, 0.5f, 0.1f};
  CHECK(select_top_fraction(s, 0.34).indices() == std::vector<std::size_t>{0});
  const std::vector<float> flat(20, 0.3f);
  CHECK(select_top_fraction(flat, 0.15).indices() == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("select_top_fraction properties on random inputs") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(1, 80));
    std::vector<float> s(n);
    for (auto& v : s) v = static_cast<float>(rng.integer(0, 10)) / 10.0f;
    const double frac = rng.uniform(0.01, 1.0);
    const auto sel = select_top_fraction(s, frac);
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(frac * n)));
    CHECK(sel.selected == std::min(k, n));
    CHECK(static_cast<std::size_t>(std::count(sel.mask.begin(), sel.mask.end(), 1)) == sel.selected);
    float min_in = 2, max_out = -1;
    for (std::size_t i = 0; i < n; ++i) (sel.mask[i] ? min_in : max_out) = sel.mask[i] ? std::min(min_in, s[i]) : std::max(max_out, s[i]);
    CHECK(min_in >= max_out);
    std::vector<float> scaled(s);
    for (auto& v : scaled) v *= 3.5f;
    CHECK(select_top_fraction(scaled, frac).mask == sel.mask);
  }
}

TEST_CASE("fixed_fragmentation examples") {
  CHECK(fixed_fragmentation(10, 4) == std::vector<Fragment>{{0, 4}, {4, 8}, {8, 10}});
  CHECK(fixed_fragmentation(3, 5) == std::vector<Fragment>{{0, 3}});
  CHECK_THROWS_AS(fixed_fragmentation(3, 0), std::invalid_argument);
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(1, 200));
    const auto len = static_cast<std::size_t>(rng.integer(1, 20));
    const auto f = fixed_fragmentation(n, len);
    CHECK_NOTHROW(validate_fragments(f, n));
  }
}

TEST_CASE("knapsack boundary budgets") {
  const std::vector<float> s{0.1f, 0.9f, 0.4f, 0.3f, 0.2f, 0.8f};
  const auto frags = fixed_fragmentation(6, 2);
  CHECK(fragment_knapsack(s, frags, 6) == std::vector<std::size_t>{0, 1, 2});
  CHECK(fragment_knapsack(s, frags, 100) == std::vector<std::size_t>{0, 1, 2});
  CHECK(fragment_knapsack(s, frags, 0).empty());
  CHECK(fragment_knapsack(s, frags, 2) == std::vector<std::size_t>{2});
  CHECK(frames_of(frags, std::vector<std::size_t>{0, 2}) == std::vector<std::size_t>{0, 1, 4, 5});
}

TEST_CASE("knapsack prefers the lexicographically smallest optimum") {
  const std::vector<float> s{0.5f, 0.5f, 0.5f, 0.5f};
  const auto frags = fixed_fragmentation(4, 1);
  CHECK(fragment_knapsack(s, frags, 2) == std::vector<std::size_t>{0, 1});
  // a zero-score fragment ties, and {0, 1} precedes {1}
  const std::vector<float> z{0.0f, 1.0f, 0.0f};
  CHECK(fragment_knapsack(z, fixed_fragmentation(3, 1), 2) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("knapsack matches exhaustive search on 12-fragment instances") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Instance in = random_instance(rng, 12);
    const auto got = fragment_knapsack(in.scores, in.fragments, in.budget);
    const auto want = brute_force(in);
    CHECK(value_of(in, got) == doctest::Approx(value_of(in, want)));
    CHECK(got == want);
    CHECK(length_of(in, got) <= in.budget);
    CHECK(value_of(in, got) >= value_of(in, greedy_by_density(in)) - 1e-9);
    std::vector<float> scaled(in.scores);
    for (auto& v : scaled) v *= 2.0f;
    CHECK(fragment_knapsack(scaled, in.fragments, in.budget) == got);
  }
}
