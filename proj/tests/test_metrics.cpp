// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <json.hpp>
#include <numeric>
#include <sstream>

#include "sdvsum/metrics.hpp"
#include "support.hpp"

using namespace sdvsum;
using sdvsum::testing::TempDir;
using sdvsum::testing::tiny_spec;

namespace {

std::vector<std::uint8_t> mask(std::size_t n, std::initializer_list<std::size_t> on) {
  std::vector<std::uint8_t> m(n, 0);
  for (auto i : on) m[i] = 1;
  return m;
}

std::vector<float> labels(std::size_t n, std::initializer_list<std::size_t> on) {
  std::vector<float> m(n, 0.0f);
  for (auto i : on) m[i] = 1.0f;
  return m;
}

// Oracle for tau-b: pair counts with explicit tie bookkeeping.
std::optional<double> tau_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double c = 0, d = 0, ta = 0, tb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0) ta += 1;
      if (db == 0) tb += 1;
      if (da != 0 && db != 0) (da * db > 0 ? c : d) += 1;
    }
  }
  const double n0 = n * (n - 1) / 2.0;
  if (n0 == ta || n0 == tb) return std::nullopt;
  return (c - d) / std::sqrt((n0 - ta) * (n0 - tb));
}

// Oracle for rho: O(n^2) mid-ranks, then textbook Pearson.
std::optional<double> rho_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double less = 0, equal = 0;
      for (double y : x) {
        less += y < x[i];
        equal += y == x[i];
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += ra[i];
    sb += rb[i];
    saa += ra[i] * ra[i];
    sbb += rb[i] * rb[i];
    sab += ra[i] * rb[i];
  }
  const double cov = sab - sa * sb / n, va = saa - sa * sa / n, vb = sbb - sb * sb / n;
  if (va <= 1e-12 || vb <= 1e-12) return std::nullopt;
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("fscore examples") {
  CHECK(fscore_binary(mask(5, {1, 2}), labels(5, {1, 2})) == 100.0);
  CHECK(fscore_binary(mask(5, {0}), labels(5, {1, 2})) == 0.0);
  CHECK(fscore_binary(mask(4, {0, 1, 2}), labels(4, {1, 2, 3})) == doctest::Approx(66.6667).epsilon(1e-5));
  CHECK_THROWS_AS(fscore_binary(mask(4, {0}), labels(5, {0})), DimensionError);
}

TEST_CASE("fscore is symmetric and monotone in correct additions") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 50));
    std::vector<std::uint8_t> p(n, 0), g(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.bernoulli(0.3);
      g[i] = rng.bernoulli(0.3);
    }
    p[0] = 1;
    g[n - 1] = 1;
    std::vector<float> pf(p.begin(), p.end()), gf(g.begin(), g.end());
    const double f = fscore_binary(p, gf);
    CHECK(f == doctest::Approx(fscore_binary(g, pf)));
    const auto np = std::count(p.begin(), p.end(), 1), ng = std::count(g.begin(), g.end(), 1);
    if (np < ng) {
      for (std::size_t i = 0; i < n; ++i) {
        if (g[i] && !p[i]) {
          auto q = p;
          q[i] = 1;
          CHECK(fscore_binary(q, gf) > f);
          break;
        }
      }
    }
  }
}

TEST_CASE("kendall tau-b examples and degenerate input") {
  CHECK(*kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 1.0);
  CHECK(*kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == -1.0);
  const std::vector<double> a{1, 2, 2, 3}, b{1, 3, 2, 4};
  CHECK(*kendall_tau_b(a, b) == doctest::Approx(*tau_oracle(a, b)).epsilon(1e-12));
  CHECK_FALSE(kendall_tau_b(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}).has_value());
  CHECK_THROWS_AS(kendall_tau_b(std::vector<double>{1}, std::vector<double>{1}), DimensionError);
}

TEST_CASE("spearman rho examples and degenerate input") {
  CHECK(*spearman_rho(std::vector<double>{4, 1, 3}, std::vector<double>{4, 1, 3}) == doctest::Approx(1.0));
  CHECK(*spearman_rho(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  const std::vector<double> a{1, 2, 2, 4}, b{2, 1, 3, 4};
  CHECK(*spearman_rho(a, b) == doctest::Approx(*rho_oracle(a, b)).epsilon(1e-12));
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK_FALSE(spearman_rho(std::vector<double>{1, 2}, std::vector<double>{5, 5}).has_value());
}

TEST_CASE("tau and rho match oracles and are invariant to increasing transforms") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 50));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.integer(0, 6));
      b[i] = rng.bernoulli(0.5) ? static_cast<double>(rng.integer(0, 3)) : rng.uniform();
    }
    const auto t = kendall_tau_b(a, b), to = tau_oracle(a, b);
    REQUIRE(t.has_value() == to.has_value());
    if (t) CHECK(std::abs(*t - *to) < 1e-9);
    const auto r = spearman_rho(a, b), ro = rho_oracle(a, b);
    REQUIRE(r.has_value() == ro.has_value());
    if (r) CHECK(std::abs(*r - *ro) < 1e-9);

    std::vector<double> ea(a);
    for (auto& v : ea) v = std::exp(v) * 3 + 1;
    if (t) CHECK(*kendall_tau_b(ea, b) == doctest::Approx(*t));
    if (r) CHECK(*spearman_rho(ea, b) == doctest::Approx(*r));
  }
}

TEST_CASE("random selection F-Score is about 15 at p = 0.15") {
  // Monte-Carlo over 1000 random top-15% selections against a 15% ground truth.
  Rng rng(3);
  const std::size_t n = 100;
  std::vector<float> gt(n, 0.0f);
  for (std::size_t i = 0; i < 15; ++i) gt[i * 6] = 1.0f;
  double total = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<float> s(n);
    for (auto& v : s) v = static_cast<float>(rng.uniform());
    total += fscore_binary(select_top_fraction(s, 0.15).mask, gt);
  }
  CHECK(total / 1000 == doctest::Approx(15.0).epsilon(0.1));
}

namespace {

struct Fixture {
  TempDir dir{"metrics"};
  Dataset data;
  Fixture() {
    SynthSpec spec = tiny_spec();
    spec.frames_min = spec.frames_max = 40;
    spec.positive_fraction = 0.15;
    spec.script_topics_min = spec.script_topics_max = 1;
    generate_synthetic(spec, dir.path());
    data = load_dataset(dir / "manifest.json");
  }
};

FrameScorer oracle_scorer(const Dataset& data) {
  return [&data](const ScoreRequest& r) {
    const auto& v = data.videos[r.video];
    if (!r.summary) return average_ground_truth(v.labels).values;
    return v.labels[*r.summary].values;
  };
}

}  // namespace

TEST_CASE("script-driven evaluation with an oracle scorer") {
  Fixture fx;
  const auto report = evaluate_script_driven(oracle_scorer(fx.data), fx.data, Split::Test);
  CHECK(report.videos.size() == 3);
  for (const auto& rec : report.videos) {
    CHECK(rec.fscores.size() == 3);
    CHECK(rec.fscore == doctest::Approx(std::accumulate(rec.fscores.begin(), rec.fscores.end(), 0.0) / 3));
  }
  CHECK(report.fscore == doctest::Approx(100.0).epsilon(0.005));
  const auto j = nlohmann::json::parse(report_to_json(report));
  CHECK(j["split"] == "test");
  CHECK(j["mode"] == "script_driven");
  CHECK(j["tau"].is_null());
  CHECK(j["videos"].size() == 3);
}

TEST_CASE("video mean is the mean of per-summary scores") {
  Fixture fx;
  // 50 on one pair, 70 on the other is not constructible here; check the averaging directly
  int call = 0;
  const FrameScorer alternating = [&](const ScoreRequest& r) {
    ++call;
    const auto& v = fx.data.videos[r.video];
    return (*r.summary % 2 == 0) ? v.labels[*r.summary].values : std::vector<float>(v.labels[0].size(), 0.0f);
  };
  const auto report = evaluate_script_driven(alternating, fx.data, Split::Validation);
  for (const auto& rec : report.videos) {
    double sum = 0;
    for (double f : rec.fscores) sum += f;
    CHECK(rec.fscore == doctest::Approx(sum / rec.fscores.size()));
    CHECK(rec.fscores[0] == doctest::Approx(100.0));
  }
  CHECK(call == 9);
}

TEST_CASE("generic evaluation: averaged-GT scorer gives tau = rho = 1 on tie-free videos") {
  Fixture fx;
  const auto report = evaluate_generic(oracle_scorer(fx.data), fx.data, Split::Test);
  for (const auto& rec : report.videos) {
    if (rec.tau) {
      CHECK(*rec.tau == doctest::Approx(1.0));
      CHECK(*rec.rho == doctest::Approx(1.0));
    }
  }
  // reversed scores on a tie-free video
  Dataset reversed = fx.data;
  const FrameScorer reverse = [](const ScoreRequest& r) {
    std::vector<float> s(static_cast<std::size_t>(r.frames->rows()));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(i);
    return s;
  };
  for (std::size_t vi : videos_in_split(reversed.manifest, Split::Test)) {
    for (auto& l : reversed.videos[vi].labels) {
      for (std::size_t i = 0; i < l.size(); ++i) l.values[i] = i < l.size() / 2 ? 1.0f : 0.0f;
    }
    reversed.videos[vi].labels.resize(1);
  }
  const auto rev = evaluate_generic(reverse, reversed, Split::Test);
  CHECK(*rev.tau < 0);
  CHECK(*rev.rho < 0);
}

TEST_CASE("generic evaluation requires descriptions") {
  Fixture fx;
  for (auto& v : fx.data.videos) v.description.reset();
  CHECK_THROWS_AS(evaluate_generic(oracle_scorer(fx.data), fx.data, Split::Test), DataError);
}

TEST_CASE("evaluation is invariant to video order") {
  Fixture fx;
  const FrameScorer scorer = [](const ScoreRequest& r) {
    std::vector<float> s(static_cast<std::size_t>(r.frames->rows()));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (*r.frames)(static_cast<Eigen::Index>(i), 0);
    return s;
  };
  const auto a = evaluate_script_driven(scorer, fx.data, Split::Train);
  Dataset shuffled = fx.data;
  std::reverse(shuffled.videos.begin(), shuffled.videos.end());
  std::reverse(shuffled.manifest.videos.begin(), shuffled.manifest.videos.end());
  const auto b = evaluate_script_driven(scorer, shuffled, Split::Train);
  CHECK(a.fscore == doctest::Approx(b.fscore).epsilon(1e-12));
}

TEST_CASE("overlap matrix layout and structure") {
  Fixture fx;
  std::vector<std::string> ids;
  for (std::size_t vi : videos_in_split(fx.data.manifest, Split::Test)) ids.push_back(fx.data.manifest.videos[vi].id);

  const auto script = overlap_matrix(oracle_scorer(fx.data), fx.data, ids, TaskMode::ScriptDriven);
  REQUIRE(script.values.size() == ids.size());
  CHECK(script.annotators() == 3);
  for (const auto& row : script.values) {
    for (double v : row) CHECK(v == doctest::Approx(100.0));
  }

  int calls = 0;
  const FrameScorer counting = [&](const ScoreRequest& r) {
    ++calls;
    CHECK_FALSE(r.summary.has_value());
    return oracle_scorer(fx.data)(r);
  };
  const auto generic = overlap_matrix(counting, fx.data, ids, TaskMode::Generic);
  CHECK(calls == static_cast<int>(ids.size()));

  std::ostringstream csv;
  write_overlap_csv(script, csv);
  std::istringstream lines(csv.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "video_id,1,2,3");
  CHECK(first == ids[0] + ",100.00,100.00,100.00");

  const std::vector<std::string> missing{"nope"};
  CHECK_THROWS_AS(overlap_matrix(oracle_scorer(fx.data), fx.data, missing, TaskMode::Generic), DataError);
}
