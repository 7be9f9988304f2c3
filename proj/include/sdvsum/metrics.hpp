// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdvsum/datakit.hpp"
#include "sdvsum/model.hpp"
#include "sdvsum/summarize.hpp"

namespace sdvsum {

enum class TaskMode { ScriptDriven, Generic };

std::string_view to_string(TaskMode mode);
// Accepts "script_driven"/"script" and "generic".
TaskMode parse_task_mode(std::string_view text);

// F-Score in percent between a 0/1 selection and a binary ground truth.
double fscore_binary(std::span<const std::uint8_t> pred, std::span<const float> gt);
double fscore_binary(const BinarySelection& pred, const SummaryLabels& gt);

// Rank correlations; nullopt when either input is constant (degenerate).
std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b);
std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b);

// 1-based ranks, tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> x);

// Source of frame scores for evaluation. `summary` is the script index in
// script-driven mode and empty in generic mode; `text` is the script or the
// description.
struct ScoreRequest {
  std::size_t video = 0;
  std::optional<std::size_t> summary;
  const Matrix* frames = nullptr;
  const Matrix* text = nullptr;
};
using FrameScorer = std::function<std::vector<float>(const ScoreRequest&)>;

FrameScorer model_scorer(const ModelWeights<float>& weights, const ModelConfig& config);

struct EvalRecord {
  std::string video_id;
  std::vector<double> fscores;  // per ground-truth summary, percent
  double fscore = 0.0;          // mean of fscores
  std::optional<double> tau;
  std::optional<double> rho;
};

struct EvalReport {
  Split split = Split::Test;
  TaskMode mode = TaskMode::ScriptDriven;
  double fscore = 0.0;  // mean over videos
  std::optional<double> tau;
  std::optional<double> rho;
  std::size_t degenerate = 0;  // videos excluded from the tau/rho means
  std::vector<EvalRecord> videos;
};

EvalReport evaluate_script_driven(const FrameScorer& scorer, const Dataset& data, Split split,
                                  double fraction = kSummaryFraction);
EvalReport evaluate_generic(const FrameScorer& scorer, const Dataset& data, Split split,
                            double fraction = kSummaryFraction);
EvalReport evaluate(const FrameScorer& scorer, const Dataset& data, Split split, TaskMode mode,
                    double fraction = kSummaryFraction);

std::string report_to_json(const EvalReport& report);

// Entry (v, j): F-Score between the system summary and annotator j of video v.
struct OverlapMatrix {
  std::vector<std::string> video_ids;
  std::vector<std::vector<double>> values;

  std::size_t annotators() const { return values.empty() ? 0 : values.front().size(); }
};

OverlapMatrix overlap_matrix(const FrameScorer& scorer, const Dataset& data,
                             std::span<const std::string> video_ids, TaskMode mode,
                             double fraction = kSummaryFraction);

// Header "video_id,1,...,J", one row per video, two decimals.
void write_overlap_csv(const OverlapMatrix& m, std::ostream& out);

}  // namespace sdvsum
