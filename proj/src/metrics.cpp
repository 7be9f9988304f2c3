// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

namespace sdvsum {

std::string_view to_string(TaskMode mode) {
  return mode == TaskMode::ScriptDriven ? "script_driven" : "generic";
}

TaskMode parse_task_mode(std::string_view text) {
  if (text == "script_driven" || text == "script") return TaskMode::ScriptDriven;
  if (text == "generic") return TaskMode::Generic;
  throw ConfigError("mode must be script_driven or generic, got '" + std::string(text) + "'");
}

double fscore_binary(std::span<const std::uint8_t> pred, std::span<const float> gt) {
  if (pred.size() != gt.size()) {
    throw DimensionError("fscore_binary: prediction has " + std::to_string(pred.size()) +
                         " frames, ground truth " + std::to_string(gt.size()));
  }
  std::size_t hit = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] > 0.5f;
    np += p;
    ng += g;
    hit += p && g;
  }
  if (hit == 0) return 0.0;
  const double precision = static_cast<double>(hit) / static_cast<double>(np);
  const double recall = static_cast<double>(hit) / static_cast<double>(ng);
  return 200.0 * precision * recall / (precision + recall);
}

double fscore_binary(const BinarySelection& pred, const SummaryLabels& gt) {
  return fscore_binary(std::span<const std::uint8_t>(pred.mask), std::span<const float>(gt.values));
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  if (a.size() < 2) throw DimensionError(std::string(what) + ": need at least 2 values");
}

int sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

// O(n^2) pair counting; videos have at most a few thousand frames.
std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "kendall_tau_b");
  const std::size_t n = a.size();
  long long concordant_minus_discordant = 0;
  long long untied_a = 0, untied_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sa = sign(a[i] - a[j]);
      const int sb = sign(b[i] - b[j]);
      untied_a += sa != 0;
      untied_b += sb != 0;
      concordant_minus_discordant += sa * sb;
    }
  }
  if (untied_a == 0 || untied_b == 0) return std::nullopt;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_a) * static_cast<double>(untied_b));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&x](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "spearman_rho");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

FrameScorer model_scorer(const ModelWeights<float>& weights, const ModelConfig& config) {
  return [&weights, config](const ScoreRequest& r) { return predict(weights, config, *r.frames, *r.text); };
}

namespace {

std::vector<float> checked_scores(const FrameScorer& scorer, const ScoreRequest& req, const std::string& id) {
  auto scores = scorer(req);
  if (scores.size() != static_cast<std::size_t>(req.frames->rows())) {
    throw DimensionError("video '" + id + "': scorer returned " + std::to_string(scores.size()) +
                         " scores for " + std::to_string(req.frames->rows()) + " frames");
  }
  return scores;
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_videos(const std::vector<std::size_t>& videos, Split split) {
  if (videos.empty()) throw DataError("split '" + std::string(to_string(split)) + "' has no videos");
}

}  // namespace

EvalReport evaluate_script_driven(const FrameScorer& scorer, const Dataset& data, Split split, double fraction) {
  EvalReport report;
  report.split = split;
  report.mode = TaskMode::ScriptDriven;
  const auto videos = videos_in_split(data.manifest, split);
  require_videos(videos, split);
  std::vector<double> per_video;
  for (std::size_t vi : videos) {
    const VideoData& vd = data.videos[vi];
    EvalRecord rec;
    rec.video_id = data.manifest.videos[vi].id;
    for (std::size_t j = 0; j < vd.scripts.size(); ++j) {
      const auto scores = checked_scores(scorer, {vi, j, &vd.frames, &vd.scripts[j]}, rec.video_id);
      rec.fscores.push_back(fscore_binary(select_top_fraction(scores, fraction), vd.labels[j]));
    }
    rec.fscore = mean(rec.fscores);
    per_video.push_back(rec.fscore);
    report.videos.push_back(std::move(rec));
  }
  report.fscore = mean(per_video);
  return report;
}

EvalReport evaluate_generic(const FrameScorer& scorer, const Dataset& data, Split split, double fraction) {
  EvalReport report;
  report.split = split;
  report.mode = TaskMode::Generic;
  const auto videos = videos_in_split(data.manifest, split);
  require_videos(videos, split);
  std::vector<double> per_video, taus, rhos;
  for (std::size_t vi : videos) {
    const VideoData& vd = data.videos[vi];
    EvalRecord rec;
    rec.video_id = data.manifest.videos[vi].id;
    if (!vd.description) throw DataError("video '" + rec.video_id + "': no description embedding");
    const auto scores = checked_scores(scorer, {vi, std::nullopt, &vd.frames, &*vd.description}, rec.video_id);
    const BinarySelection sel = select_top_fraction(scores, fraction);
    for (const SummaryLabels& gt : vd.labels) rec.fscores.push_back(fscore_binary(sel, gt));
    rec.fscore = mean(rec.fscores);
    per_video.push_back(rec.fscore);

    const SummaryLabels avg = average_ground_truth(vd.labels);
    const std::vector<double> s(scores.begin(), scores.end());
    const std::vector<double> t(avg.values.begin(), avg.values.end());
    rec.tau = kendall_tau_b(s, t);
    rec.rho = spearman_rho(s, t);
    if (rec.tau && rec.rho) {
      taus.push_back(*rec.tau);
      rhos.push_back(*rec.rho);
    } else {
      ++report.degenerate;
    }
    report.videos.push_back(std::move(rec));
  }
  report.fscore = mean(per_video);
  if (!taus.empty()) {
    report.tau = mean(taus);
    report.rho = mean(rhos);
  }
  return report;
}

EvalReport evaluate(const FrameScorer& scorer, const Dataset& data, Split split, TaskMode mode, double fraction) {
  return mode == TaskMode::ScriptDriven ? evaluate_script_driven(scorer, data, split, fraction)
                                        : evaluate_generic(scorer, data, split, fraction);
}

std::string report_to_json(const EvalReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["split"] = std::string(to_string(report.split));
  j["mode"] = std::string(to_string(report.mode));
  j["fscore"] = report.fscore;
  j["tau"] = opt(report.tau);
  j["rho"] = opt(report.rho);
  j["degenerate"] = report.degenerate;
  j["videos"] = nlohmann::json::array();
  for (const EvalRecord& r : report.videos) {
    j["videos"].push_back({{"video_id", r.video_id},
                           {"fscores", r.fscores},
                           {"fscore", r.fscore},
                           {"tau", opt(r.tau)},
                           {"rho", opt(r.rho)}});
  }
  return j.dump(2);
}

OverlapMatrix overlap_matrix(const FrameScorer& scorer, const Dataset& data, std::span<const std::string> video_ids,
                             TaskMode mode, double fraction) {
  OverlapMatrix m;
  std::size_t width = 0;
  for (const std::string& id : video_ids) {
    const VideoEntry* entry = data.manifest.find(id);
    if (entry == nullptr) throw DataError("video '" + id + "' is not in the manifest");
    const auto vi = static_cast<std::size_t>(entry - data.manifest.videos.data());
    const VideoData& vd = data.videos[vi];
    if (vd.labels.empty()) throw DataError("video '" + id + "' has no summaries");
    if (width == 0) width = vd.labels.size();
    if (vd.labels.size() != width) {
      throw DataError("video '" + id + "' has " + std::to_string(vd.labels.size()) + " summaries, expected " +
                      std::to_string(width));
    }
    std::vector<double> row;
    if (mode == TaskMode::ScriptDriven) {
      for (std::size_t j = 0; j < vd.labels.size(); ++j) {
        const auto scores = checked_scores(scorer, {vi, j, &vd.frames, &vd.scripts[j]}, id);
        row.push_back(fscore_binary(select_top_fraction(scores, fraction), vd.labels[j]));
      }
    } else {
      if (!vd.description) throw DataError("video '" + id + "': no description embedding");
      const auto scores = checked_scores(scorer, {vi, std::nullopt, &vd.frames, &*vd.description}, id);
      const BinarySelection sel = select_top_fraction(scores, fraction);
      for (const SummaryLabels& gt : vd.labels) row.push_back(fscore_binary(sel, gt));
    }
    m.video_ids.push_back(id);
    m.values.push_back(std::move(row));
  }
  return m;
}

void write_overlap_csv(const OverlapMatrix& m, std::ostream& out) {
  out << "video_id";
  for (std::size_t j = 1; j <= m.annotators(); ++j) out << ',' << j;
  out << '\n';
  char buf[32];
  for (std::size_t v = 0; v < m.values.size(); ++v) {
    out << m.video_ids[v];
    for (double x : m.values[v]) {
      std::snprintf(buf, sizeof buf, "%.2f", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace sdvsum
