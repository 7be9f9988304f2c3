// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

// Script-conditioned frame scorer: multi-head cross-modal attention from frame
// embeddings (queries) to script sentence embeddings (keys/values), followed
// by a Transformer encoder and a sigmoid scoring head.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdvsum/numkit.hpp"

namespace sdvsum {

enum class TextRep {
  MultiVector,   // one key/value row per script sentence (N x M attention)
  SingleVector,  // script condensed to one 1 x D vector first (N x 1 attention)
};

enum class ScorerHead {
  Direct,  // linear D -> 1, sigmoid
  Hidden,  // linear D -> D, ReLU, linear D -> 1, sigmoid
};

std::string_view to_string(TextRep rep);
std::string_view to_string(ScorerHead head);
TextRep parse_text_rep(std::string_view text);
ScorerHead parse_scorer_head(std::string_view text);

struct ModelConfig {
  std::size_t dim = 512;
  std::size_t heads = 8;
  bool use_scaling = false;  // divide cross-modal logits by sqrt(dim)
  TextRep text_rep = TextRep::MultiVector;
  std::size_t single_vector_t = 8;
  double dropout_rate = 0.5;
  std::size_t encoder_layers = 1;
  std::size_t ffn_dim = 0;  // 0 means 4 * dim
  ScorerHead scorer_head = ScorerHead::Direct;

  std::size_t head_dim() const { return dim / heads; }
  std::size_t ffn() const { return ffn_dim == 0 ? 4 * dim : ffn_dim; }
  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.dim == b.dim && a.heads == b.heads && a.use_scaling == b.use_scaling &&
           a.text_rep == b.text_rep && a.single_vector_t == b.single_vector_t &&
           a.dropout_rate == b.dropout_rate && a.encoder_layers == b.encoder_layers &&
           a.ffn() == b.ffn() && a.scorer_head == b.scorer_head;
  }
};

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Weights. Linear maps act on row vectors: y = x * w + b with w in x out.

template <typename Scalar>
struct Linear {
  Mat<Scalar> w;
  Mat<Scalar> b;
};

template <typename Scalar>
struct NormParams {
  Mat<Scalar> gain;
  Mat<Scalar> bias;
};

template <typename Scalar>
struct CrossHead {
  Linear<Scalar> q, k, v;
};

template <typename Scalar>
struct EncoderLayer {
  Linear<Scalar> q, k, v, o;
  NormParams<Scalar> ln1;
  Linear<Scalar> ffn1, ffn2;
  NormParams<Scalar> ln2;
};

enum class ParamKind { Weight, Bias, NormGain, NormBias };

template <typename Scalar>
struct ModelWeights {
  std::vector<CrossHead<Scalar>> heads;
  Linear<Scalar> out;
  NormParams<Scalar> norm;
  std::vector<EncoderLayer<Scalar>> encoder;
  std::optional<Linear<Scalar>> hidden;
  Linear<Scalar> head;
  std::optional<Linear<Scalar>> condenser;

  // Calls fn(name, tensor, kind) for every tensor in a fixed order. The names
  // are the checkpoint identifiers.
  template <typename Fn>
  void visit(Fn&& fn) {
    visit_impl(*this, fn);
  }
  template <typename Fn>
  void visit(Fn&& fn) const {
    visit_impl(*this, fn);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&n](const std::string&, const Mat<Scalar>& m, ParamKind) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  template <typename Other>
  ModelWeights<Other> cast() const {
    ModelWeights<Other> out;
    auto lin = [](const Linear<Scalar>& l) {
      return Linear<Other>{l.w.template cast<Other>(), l.b.template cast<Other>()};
    };
    auto nrm = [](const NormParams<Scalar>& n) {
      return NormParams<Other>{n.gain.template cast<Other>(), n.bias.template cast<Other>()};
    };
    for (const auto& h : heads) out.heads.push_back({lin(h.q), lin(h.k), lin(h.v)});
    out.out = lin(this->out);
    out.norm = nrm(norm);
    for (const auto& e : encoder) {
      out.encoder.push_back({lin(e.q), lin(e.k), lin(e.v), lin(e.o), nrm(e.ln1), lin(e.ffn1),
                             lin(e.ffn2), nrm(e.ln2)});
    }
    if (hidden) out.hidden = lin(*hidden);
    out.head = lin(head);
    if (condenser) out.condenser = lin(*condenser);
    return out;
  }

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn& fn) {
    auto lin = [&fn](const std::string& p, auto& l, const char* w, const char* b) {
      fn(p + w, l.w, ParamKind::Weight);
      fn(p + b, l.b, ParamKind::Bias);
    };
    auto nrm = [&fn](const std::string& p, auto& n) {
      fn(p + "gain", n.gain, ParamKind::NormGain);
      fn(p + "bias", n.bias, ParamKind::NormBias);
    };
    for (std::size_t h = 0; h < self.heads.size(); ++h) {
      const std::string p = "attn.h" + std::to_string(h) + ".";
      lin(p, self.heads[h].q, "wq", "bq");
      lin(p, self.heads[h].k, "wk", "bk");
      lin(p, self.heads[h].v, "wv", "bv");
    }
    lin("attn.out.", self.out, "w", "b");
    nrm("norm.", self.norm);
    for (std::size_t l = 0; l < self.encoder.size(); ++l) {
      auto& e = self.encoder[l];
      const std::string p = "enc" + std::to_string(l) + ".";
      lin(p + "attn.", e.q, "wq", "bq");
      lin(p + "attn.", e.k, "wk", "bk");
      lin(p + "attn.", e.v, "wv", "bv");
      lin(p + "attn.", e.o, "wo", "bo");
      nrm(p + "ln1.", e.ln1);
      lin(p + "ffn1.", e.ffn1, "w", "b");
      lin(p + "ffn2.", e.ffn2, "w", "b");
      nrm(p + "ln2.", e.ln2);
    }
    if (self.hidden) lin("scorer.hidden.", *self.hidden, "w", "b");
    lin("scorer.head.", self.head, "w", "b");
    if (self.condenser) lin("condenser.", *self.condenser, "w", "b");
  }
};

// Zero-filled tensors with the shapes implied by `config`.
template <typename Scalar>
ModelWeights<Scalar> allocate_weights(const ModelConfig& config) {
  config.validate();
  const auto D = static_cast<Eigen::Index>(config.dim);
  const auto dh = static_cast<Eigen::Index>(config.head_dim());
  const auto F = static_cast<Eigen::Index>(config.ffn());
  auto lin = [](Eigen::Index in, Eigen::Index out) {
    return Linear<Scalar>{Mat<Scalar>::Zero(in, out), Mat<Scalar>::Zero(1, out)};
  };
  auto nrm = [D]() { return NormParams<Scalar>{Mat<Scalar>::Zero(1, D), Mat<Scalar>::Zero(1, D)}; };
  ModelWeights<Scalar> w;
  for (std::size_t h = 0; h < config.heads; ++h) w.heads.push_back({lin(D, dh), lin(D, dh), lin(D, dh)});
  w.out = lin(D, D);
  w.norm = nrm();
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    w.encoder.push_back({lin(D, D), lin(D, D), lin(D, D), lin(D, D), nrm(), lin(D, F), lin(F, D), nrm()});
  }
  if (config.scorer_head == ScorerHead::Hidden) w.hidden = lin(D, D);
  w.head = lin(D, 1);
  if (config.text_rep == TextRep::SingleVector) {
    w.condenser = lin(static_cast<Eigen::Index>(config.single_vector_t) * D, D);
  }
  return w;
}

inline constexpr double kInitGain = 1.4142135623730951;  // sqrt(2)
inline constexpr double kInitBias = 0.1;

// Xavier-uniform weights (gain sqrt(2)), biases 0.1, normalization gain 1 and
// bias 0. Draws happen in visit order.
template <typename Scalar>
ModelWeights<Scalar> init_weights(const ModelConfig& config, Rng& rng) {
  ModelWeights<Scalar> w = allocate_weights<Scalar>(config);
  w.visit([&rng](const std::string&, Mat<Scalar>& m, ParamKind kind) {
    switch (kind) {
      case ParamKind::Weight: {
        const double bound =
            kInitGain * std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
        }
        break;
      }
      case ParamKind::Bias:
        m.setConstant(static_cast<Scalar>(kInitBias));
        break;
      case ParamKind::NormGain:
        m.setOnes();
        break;
      case ParamKind::NormBias:
        m.setZero();
        break;
    }
  });
  return w;
}

template <typename Scalar>
std::size_t parameter_count(const ModelConfig& config) {
  return allocate_weights<Scalar>(config).parameter_count();
}

// ---------------------------------------------------------------------------
// Forward pass

// Sinusoidal table: PE[pos, 2i] = sin(pos / 10000^(2i/D)), PE[pos, 2i+1] = cos(...).
template <typename Scalar>
Mat<Scalar> positional_encoding(std::size_t frames, std::size_t dim) {
  if (dim % 2 != 0) throw DimensionError("positional_encoding: odd dimension " + std::to_string(dim));
  Mat<Scalar> pe(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
  for (std::size_t pos = 0; pos < frames; ++pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) = static_cast<Scalar>(std::sin(angle));
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i + 1)) = static_cast<Scalar>(std::cos(angle));
    }
  }
  return pe;
}

// Rows of an M-sentence script kept by the single-vector condenser: T indices
// uniformly spaced over [0, M), floor(t * M / T), repeating when M < T.
std::vector<std::size_t> condense_indices(std::size_t sentences, std::size_t samples);

// Intermediate values exposed for inspection and tests.
template <typename Scalar>
struct ForwardTrace {
  std::vector<Mat<Scalar>> attention;  // per head, before dropout
  Mat<Scalar> projected;               // heads concatenated and projected, before PE
  Mat<Scalar> cross;                   // cross-modal embeddings Z (after PE)
};

template <typename Scalar>
Var<Scalar> linear(Tape<Scalar>& tape, Var<Scalar> x, const Linear<Scalar>& l) {
  return add(matmul(x, tape.param(l.w)), tape.param(l.b));
}

template <typename Scalar>
Var<Scalar> layer_norm(Tape<Scalar>& tape, Var<Scalar> x, const NormParams<Scalar>& n) {
  return layer_norm(x, tape.param(n.gain), tape.param(n.bias));
}

// 1 x D condensed script representation (single-vector text only).
template <typename Scalar>
Var<Scalar> condense_text(Tape<Scalar>& tape, const Mat<Scalar>& script,
                          const ModelWeights<Scalar>& weights, const ModelConfig& config) {
  if (config.text_rep != TextRep::SingleVector || !weights.condenser) {
    throw std::logic_error("condense_text requires single-vector text representation");
  }
  if (script.rows() < 1) throw DimensionError("condense_text: empty script");
  if (script.cols() != static_cast<Eigen::Index>(config.dim)) {
    throw DimensionError("condense_text: script is " + shape_str(script) + ", dim is " +
                         std::to_string(config.dim));
  }
  const auto idx = condense_indices(static_cast<std::size_t>(script.rows()), config.single_vector_t);
  const Eigen::Index D = script.cols();
  Mat<Scalar> flat(1, static_cast<Eigen::Index>(idx.size()) * D);
  for (std::size_t t = 0; t < idx.size(); ++t) {
    flat.middleCols(static_cast<Eigen::Index>(t) * D, D) = script.row(static_cast<Eigen::Index>(idx[t]));
  }
  return linear(tape, tape.constant(std::move(flat)), *weights.condenser);
}

// Z = [A_1 V_1 | ... | A_H V_H] W_o + b_o + PE with A_h = softmax(Q_h K_h^T),
// optionally divided by sqrt(D) before the softmax. `text` is M' x D.
template <typename Scalar>
Var<Scalar> cross_modal_attention(Tape<Scalar>& tape, Var<Scalar> frames, Var<Scalar> text,
                                  const ModelWeights<Scalar>& weights, const ModelConfig& config,
                                  Rng* rng, bool training, ForwardTrace<Scalar>* trace = nullptr) {
  const auto D = static_cast<Eigen::Index>(config.dim);
  if (frames.rows() < 1 || text.rows() < 1) throw DimensionError("cross_modal_attention: empty input");
  if (frames.cols() != D || text.cols() != D) {
    throw DimensionError("cross_modal_attention: frames " + shape_str(frames.value()) + ", text " +
                         shape_str(text.value()) + ", dim " + std::to_string(config.dim));
  }
  if (training && config.dropout_rate > 0.0 && rng == nullptr) {
    throw std::invalid_argument("cross_modal_attention: training needs a dropout rng");
  }
  const Scalar logit_scale =
      config.use_scaling ? static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(config.dim))) : Scalar(1);
  std::vector<Var<Scalar>> outputs;
  outputs.reserve(weights.heads.size());
  for (const auto& head : weights.heads) {
    Var<Scalar> q = linear(tape, frames, head.q);
    Var<Scalar> k = linear(tape, text, head.k);
    Var<Scalar> v = linear(tape, text, head.v);
    Var<Scalar> logits = matmul(q, transpose(k));
    if (config.use_scaling) logits = scale(logits, logit_scale);
    Var<Scalar> attn = softmax_rows(logits);
    if (trace != nullptr) trace->attention.push_back(attn.value());
    if (training && config.dropout_rate > 0.0) attn = dropout(attn, config.dropout_rate, *rng, true);
    outputs.push_back(matmul(attn, v));
  }
  Var<Scalar> z = linear(tape, concat_cols(std::span<const Var<Scalar>>(outputs)), weights.out);
  if (trace != nullptr) trace->projected = z.value();
  z = add(z, tape.constant(positional_encoding<Scalar>(static_cast<std::size_t>(z.rows()), config.dim)));
  if (trace != nullptr) trace->cross = z.value();
  return z;
}

// Post-norm encoder layer with sqrt(D/H)-scaled self-attention.
template <typename Scalar>
Var<Scalar> encoder_layer(Tape<Scalar>& tape, Var<Scalar> x, const EncoderLayer<Scalar>& layer,
                          const ModelConfig& config) {
  const auto dh = static_cast<Eigen::Index>(config.head_dim());
  const Scalar s = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));
  Var<Scalar> q = linear(tape, x, layer.q);
  Var<Scalar> k = linear(tape, x, layer.k);
  Var<Scalar> v = linear(tape, x, layer.v);
  std::vector<Var<Scalar>> heads;
  heads.reserve(config.heads);
  for (std::size_t h = 0; h < config.heads; ++h) {
    const Eigen::Index at = static_cast<Eigen::Index>(h) * dh;
    Var<Scalar> a = softmax_rows(scale(matmul(col_block(q, at, dh), transpose(col_block(k, at, dh))), s));
    heads.push_back(matmul(a, col_block(v, at, dh)));
  }
  Var<Scalar> attended = linear(tape, concat_cols(std::span<const Var<Scalar>>(heads)), layer.o);
  x = layer_norm(tape, add(x, attended), layer.ln1);
  Var<Scalar> ff = linear(tape, relu(linear(tape, x, layer.ffn1)), layer.ffn2);
  return layer_norm(tape, add(x, ff), layer.ln2);
}

// N x 1 frame scores in (0, 1).
template <typename Scalar>
Var<Scalar> scorer_forward(Tape<Scalar>& tape, Var<Scalar> z, const ModelWeights<Scalar>& weights,
                           const ModelConfig& config) {
  if (z.cols() != static_cast<Eigen::Index>(config.dim)) {
    throw DimensionError("scorer_forward: input " + shape_str(z.value()) + ", dim " + std::to_string(config.dim));
  }
  for (const auto& layer : weights.encoder) z = encoder_layer(tape, z, layer, config);
  if (weights.hidden) z = relu(linear(tape, z, *weights.hidden));
  return sigmoid(linear(tape, z, weights.head));
}

// Full network: [condense] -> cross-modal attention -> dropout -> layer norm ->
// scorer. Returns N x 1 scores.
template <typename Scalar>
Var<Scalar> model_forward(Tape<Scalar>& tape, const Mat<Scalar>& frames, const Mat<Scalar>& script,
                          const ModelWeights<Scalar>& weights, const ModelConfig& config, Rng* rng,
                          bool training, ForwardTrace<Scalar>* trace = nullptr) {
  if (script.rows() < 1) throw DimensionError("model_forward: empty script");
  if (training && config.dropout_rate > 0.0 && rng == nullptr) {
    throw std::invalid_argument("model_forward: training needs a dropout rng");
  }
  Var<Scalar> text = config.text_rep == TextRep::SingleVector
                         ? condense_text(tape, script, weights, config)
                         : tape.constant(script);
  Var<Scalar> x = tape.constant(frames);
  Var<Scalar> z = cross_modal_attention(tape, x, text, weights, config, rng, training, trace);
  if (training && config.dropout_rate > 0.0) z = dropout(z, config.dropout_rate, *rng, true);
  z = layer_norm(tape, z, weights.norm);
  return scorer_forward(tape, z, weights, config);
}

// Inference-mode scores as a plain vector.
std::vector<float> predict(const ModelWeights<float>& weights, const ModelConfig& config,
                           const Matrix& frames, const Matrix& script);

// ---------------------------------------------------------------------------
// SDVC checkpoints: "SDVC", u32 version (1), u32 config length + JSON config,
// u32 tensor count, then per tensor u16 name length, name, u32 rows, u32 cols,
// rows*cols little-endian f32.

inline constexpr std::uint32_t kSdvcVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelWeights<float> weights;
};

std::vector<std::uint8_t> encode_checkpoint(const ModelWeights<float>& weights, const ModelConfig& config);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelWeights<float>& weights, const ModelConfig& config,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also requires the stored config to equal `expected` (FormatError::ConfigMismatch).
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace sdvsum
