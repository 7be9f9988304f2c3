// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace sdvsum {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(learning_rate, "learning_rate");
  positive(adam_eps, "adam_eps");
  if (!(l2_factor >= 0.0)) throw ConfigError("l2_factor must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

namespace {

Matrix target_matrix(const SummaryLabels& labels) { return labels_to_matrix(labels); }

}  // namespace

Var<float> bce_loss(Var<float> f, const SummaryLabels& labels) {
  if (labels.mode != LabelMode::Binary) throw DataError("bce_loss needs binary labels");
  for (float y : labels.values) {
    if (y != 0.0f && y != 1.0f) throw DataError("bce_loss: label value " + std::to_string(y) + " is not 0 or 1");
  }
  return bce_loss(f, target_matrix(labels));
}

Var<float> mse_loss(Var<float> f, const SummaryLabels& target) {
  for (float t : target.values) {
    if (!(t >= 0.0f && t <= 1.0f)) throw DataError("mse_loss: target value " + std::to_string(t) + " outside [0, 1]");
  }
  return mse_loss(f, target_matrix(target));
}

OptimizerState init_optimizer(const ModelWeights<float>& weights) {
  OptimizerState s;
  weights.visit([&s](const std::string&, const Matrix& m, ParamKind) {
    s.moments.push_back({Matrix::Zero(m.rows(), m.cols()), Matrix::Zero(m.rows(), m.cols())});
  });
  return s;
}

void adam_update(Matrix& theta, const Matrix& grad, AdamMoments& mom, std::uint64_t step, const TrainConfig& c) {
  if (grad.rows() != theta.rows() || grad.cols() != theta.cols() || mom.m.rows() != theta.rows() ||
      mom.m.cols() != theta.cols()) {
    throw DimensionError("adam_update: parameter " + shape_str(theta) + ", gradient " + shape_str(grad) +
                         ", moments " + shape_str(mom.m));
  }
  const float b1 = static_cast<float>(c.adam_beta1);
  const float b2 = static_cast<float>(c.adam_beta2);
  const double t = static_cast<double>(step);
  const float c1 = static_cast<float>(1.0 - std::pow(c.adam_beta1, t));
  const float c2 = static_cast<float>(1.0 - std::pow(c.adam_beta2, t));
  const float lr = static_cast<float>(c.learning_rate);
  const float eps = static_cast<float>(c.adam_eps);
  const Matrix g = grad + static_cast<float>(c.l2_factor) * theta;
  mom.m = b1 * mom.m + (1.0f - b1) * g;
  mom.v = b2 * mom.v + (1.0f - b2) * g.cwiseProduct(g);
  theta.array() -= lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + eps);
}

namespace {

void step_all(ModelWeights<float>& weights, std::span<const Matrix> grads, OptimizerState& state,
              const TrainConfig& config) {
  if (state.moments.empty()) state = init_optimizer(weights);
  ++state.step;
  std::size_t i = 0;
  weights.visit([&](const std::string&, Matrix& m, ParamKind) {
    adam_update(m, grads[i], state.moments.at(i), state.step, config);
    ++i;
  });
}

std::vector<Matrix> zero_grads(const ModelWeights<float>& weights) {
  std::vector<Matrix> out;
  weights.visit([&out](const std::string&, const Matrix& m, ParamKind) { out.push_back(Matrix::Zero(m.rows(), m.cols())); });
  return out;
}

}  // namespace

void adam_step(ModelWeights<float>& weights, const Gradients<float>& grads, OptimizerState& state,
               const TrainConfig& config) {
  std::vector<Matrix> g = zero_grads(weights);
  std::size_t i = 0;
  weights.visit([&](const std::string&, const Matrix& m, ParamKind) {
    if (const Matrix* p = grads.find(m)) g[i] = *p;
    ++i;
  });
  step_all(weights, g, state, config);
}

std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size) {
  return (samples + batch_size - 1) / batch_size;
}

std::string epoch_json(const EpochStats& e) {
  return nlohmann::json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_fscore", e.val_fscore}}.dump();
}

std::string final_json(const TrainReport& r) {
  return nlohmann::json{{"best_epoch", r.best_epoch},
                        {"best_val_fscore", r.best_val_fscore},
                        {"checkpoint", r.checkpoint.string()}}
      .dump();
}

void write_report(const TrainReport& report, std::ostream& out) {
  for (const EpochStats& e : report.epochs) out << epoch_json(e) << '\n';
  out << final_json(report) << '\n';
}

namespace {

struct TrainItem {
  const std::string* video_id;
  std::size_t summary;  // script index; unused in generic mode
  const Matrix* frames;
  const Matrix* text;
  Matrix target;        // N x 1
};

std::string item_name(const TrainItem& item, TaskMode mode) {
  return mode == TaskMode::ScriptDriven ? *item.video_id + " summary " + std::to_string(item.summary)
                                        : *item.video_id;
}

std::vector<TrainItem> epoch_items(const Dataset& data, const TrainConfig& config, const Rng& shuffle,
                                   std::size_t epoch, const std::vector<Matrix>& averaged) {
  std::vector<TrainItem> items;
  if (config.mode == TaskMode::ScriptDriven) {
    for (const Sample& s : iterate_split(data, Split::Train, shuffle, epoch, true)) {
      items.push_back({s.video_id, s.summary, s.frames, s.script, labels_to_matrix(*s.labels)});
    }
    return items;
  }
  auto videos = videos_in_split(data.manifest, Split::Train);
  Rng rng = shuffle.derive(epoch);
  std::shuffle(videos.begin(), videos.end(), rng.engine());
  for (std::size_t vi : videos) {
    const VideoData& vd = data.videos[vi];
    items.push_back({&data.manifest.videos[vi].id, 0, &vd.frames, &*vd.description, averaged[vi]});
  }
  return items;
}

}  // namespace

TrainResult train_run(const Dataset& data, const ModelConfig& model, const TrainConfig& config,
                      const TrainOptions& options) {
  model.validate();
  config.validate();
  if (data.manifest.count(Split::Train) == 0) throw DataError("training split is empty");
  if (data.manifest.count(Split::Validation) == 0) throw DataError("validation split is empty");
  if (data.manifest.dimension != model.dim) {
    throw ConfigError("model dim " + std::to_string(model.dim) + " does not match data dimension " +
                      std::to_string(data.manifest.dimension));
  }

  std::vector<Matrix> averaged(data.videos.size());
  if (config.mode == TaskMode::Generic) {
    for (std::size_t vi : videos_in_split(data.manifest, Split::Train)) {
      const VideoData& vd = data.videos[vi];
      if (!vd.description) {
        throw DataError("video '" + data.manifest.videos[vi].id + "': generic training needs a description");
      }
      averaged[vi] = labels_to_matrix(average_ground_truth(vd.labels));
    }
  }

  Rng init_rng = Rng::stream(config.seed, "init");
  Rng dropout_rng = Rng::stream(config.seed, "dropout");
  const Rng shuffle_rng = Rng::stream(config.seed, "shuffle");

  TrainResult result;
  ModelWeights<float> weights = init_weights<float>(model, init_rng);
  OptimizerState state = init_optimizer(weights);
  TrainReport& report = result.report;

  std::ofstream report_file;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    report_file.open(options.out_dir / "report.jsonl", std::ios::trunc);
    if (!report_file) throw FormatError(FormatError::Kind::Io, "cannot write " + (options.out_dir / "report.jsonl").string());
  }
  auto emit = [&](const std::string& line) {
    if (report_file.is_open()) report_file << line << '\n' << std::flush;
    if (options.log != nullptr) *options.log << line << '\n' << std::flush;
  };

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto items = epoch_items(data, config, shuffle_rng, epoch, averaged);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < items.size(); start += config.batch_size) {
      const std::size_t end = std::min(items.size(), start + config.batch_size);
      const float inv = 1.0f / static_cast<float>(end - start);
      std::vector<Matrix> acc = zero_grads(weights);
      for (std::size_t s = start; s < end; ++s) {
        const TrainItem& item = items[s];
        Tape<float> tape;
        Var<float> f = model_forward(tape, *item.frames, *item.text, weights, model, &dropout_rng, true);
        Var<float> loss = config.mode == TaskMode::ScriptDriven ? bce_loss(f, item.target) : mse_loss(f, item.target);
        const float lv = loss.value()(0, 0);
        if (!std::isfinite(lv)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                             item_name(item, config.mode));
        }
        loss_sum += lv;
        const Gradients<float> grads = tape.backward(loss);
        std::size_t i = 0;
        weights.visit([&](const std::string&, const Matrix& m, ParamKind) {
          if (const Matrix* g = grads.find(m)) acc[i] += *g * inv;
          ++i;
        });
      }
      step_all(weights, acc, state, config);
      ++report.optimizer_steps;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(items.size());
    stats.val_fscore = evaluate(model_scorer(weights, model), data, Split::Validation, config.mode).fscore;
    report.epochs.push_back(stats);

    std::filesystem::path ckpt;
    if (!options.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03zu.sdvc", epoch);
      ckpt = options.out_dir / name;
      save_checkpoint(weights, model, ckpt);
    }
    // Strict improvement keeps the earliest epoch on ties.
    if (report.best_epoch == 0 || stats.val_fscore > report.best_val_fscore) {
      report.best_epoch = epoch;
      report.best_val_fscore = stats.val_fscore;
      report.checkpoint = ckpt;
      result.best_weights = weights;
    }
    emit(epoch_json(stats));
  }
  emit(final_json(report));
  return result;
}

}  // namespace sdvsum
