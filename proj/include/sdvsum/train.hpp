// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sdvsum/datakit.hpp"
#include "sdvsum/metrics.hpp"
#include "sdvsum/model.hpp"
#include "sdvsum/numkit.hpp"

namespace sdvsum {

struct TrainConfig {
  double learning_rate = 5e-5;
  double l2_factor = 1e-4;
  std::size_t batch_size = 4;
  std::size_t epochs = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  TaskMode mode = TaskMode::ScriptDriven;
  std::uint64_t seed = 42;

  void validate() const;
};

inline constexpr double kBceClamp = 1e-7;

// Mean binary cross entropy of N x 1 scores against 0/1 targets. Scores are
// clamped to [1e-7, 1 - 1e-7]; the gradient is taken at the clamped value so a
// saturated sigmoid still receives a signal.
template <typename Scalar>
Var<Scalar> bce_loss(Var<Scalar> f, const Mat<Scalar>& target) {
  const auto& fv = f.value();
  if (fv.cols() != 1 || target.cols() != 1 || fv.rows() != target.rows()) {
    throw DimensionError("bce_loss: scores " + shape_str(fv) + ", labels " + shape_str(target));
  }
  const Scalar lo = static_cast<Scalar>(kBceClamp);
  const Scalar hi = Scalar(1) - lo;
  Mat<Scalar> fc = fv.cwiseMax(lo).cwiseMin(hi);
  double total = 0.0;
  for (Eigen::Index i = 0; i < fc.rows(); ++i) {
    const double y = static_cast<double>(target(i, 0));
    const double p = static_cast<double>(fc(i, 0));
    total += y * std::log(p) + (1.0 - y) * std::log1p(-p);
  }
  const double n = static_cast<double>(fc.rows());
  Mat<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(-total / n);
  const std::size_t fi = f.index();
  return f.tape().record(std::move(out), {f},
                         [fi, fc = std::move(fc), target, n](Tape<Scalar>& t, std::size_t self) {
                           const Scalar g = t.grad(self)(0, 0);
                           Mat<Scalar> d = (fc - target).cwiseQuotient(fc.cwiseProduct(Mat<Scalar>::Ones(fc.rows(), 1) - fc));
                           t.grad(fi) += d * (g / static_cast<Scalar>(n));
                         });
}

template <typename Scalar>
Var<Scalar> mse_loss(Var<Scalar> f, const Mat<Scalar>& target) {
  const auto& fv = f.value();
  if (fv.cols() != 1 || target.cols() != 1 || fv.rows() != target.rows()) {
    throw DimensionError("mse_loss: scores " + shape_str(fv) + ", target " + shape_str(target));
  }
  const double n = static_cast<double>(fv.rows());
  Mat<Scalar> diff = fv - target;
  Mat<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(diff.template cast<double>().squaredNorm() / n);
  const std::size_t fi = f.index();
  return f.tape().record(std::move(out), {f}, [fi, diff = std::move(diff), n](Tape<Scalar>& t, std::size_t self) {
    t.grad(fi) += diff * (Scalar(2) * t.grad(self)(0, 0) / static_cast<Scalar>(n));
  });
}

// Label-checked overloads.
Var<float> bce_loss(Var<float> f, const SummaryLabels& labels);
Var<float> mse_loss(Var<float> f, const SummaryLabels& target);

struct AdamMoments {
  Matrix m;
  Matrix v;
};

// Moments in ModelWeights::visit order.
struct OptimizerState {
  std::vector<AdamMoments> moments;
  std::uint64_t step = 0;
};

OptimizerState init_optimizer(const ModelWeights<float>& weights);

// One Adam update of a single tensor at bias-correction step `step` (>= 1),
// with the L2 term added to the gradient.
void adam_update(Matrix& theta, const Matrix& grad, AdamMoments& moments, std::uint64_t step,
                 const TrainConfig& config);

// Updates every parameter; tensors absent from `grads` get a zero data gradient.
void adam_step(ModelWeights<float>& weights, const Gradients<float>& grads, OptimizerState& state,
               const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_fscore = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_val_fscore = 0.0;
  std::filesystem::path checkpoint;  // empty when nothing was written
  std::size_t optimizer_steps = 0;
};

struct TrainResult {
  TrainReport report;
  ModelWeights<float> best_weights;
};

struct TrainOptions {
  // Per-epoch checkpoints and report.jsonl go here; empty keeps everything in memory.
  std::filesystem::path out_dir;
  // Progress lines (the JSON records) are echoed here when set.
  std::ostream* log = nullptr;
};

// Number of optimizer steps in one epoch over `samples` samples.
std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size);

TrainResult train_run(const Dataset& data, const ModelConfig& model, const TrainConfig& train,
                      const TrainOptions& options = {});

std::string epoch_json(const EpochStats& e);
std::string final_json(const TrainReport& r);
void write_report(const TrainReport& report, std::ostream& out);

}  // namespace sdvsum
