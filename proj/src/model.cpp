// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/model.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <json.hpp>

namespace sdvsum {

std::string_view to_string(TextRep rep) {
  return rep == TextRep::MultiVector ? "multi_vector" : "single_vector";
}

std::string_view to_string(ScorerHead head) {
  return head == ScorerHead::Direct ? "direct" : "hidden";
}

TextRep parse_text_rep(std::string_view text) {
  if (text == "multi_vector") return TextRep::MultiVector;
  if (text == "single_vector") return TextRep::SingleVector;
  throw ConfigError("text_rep must be multi_vector or single_vector, got '" + std::string(text) + "'");
}

ScorerHead parse_scorer_head(std::string_view text) {
  if (text == "direct") return ScorerHead::Direct;
  if (text == "hidden") return ScorerHead::Hidden;
  throw ConfigError("scorer_head must be direct or hidden, got '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  if (dim < 2) throw ConfigError("dim must be >= 2");
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (dim % heads != 0) {
    throw ConfigError("dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
  }
  if (dim % 2 != 0) throw ConfigError("dim must be even for the positional encoding");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (encoder_layers < 1) throw ConfigError("encoder_layers must be >= 1");
  if (single_vector_t < 1) throw ConfigError("single_vector_t must be >= 1");
}

std::string config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["dim"] = c.dim;
  j["heads"] = c.heads;
  j["use_scaling"] = c.use_scaling;
  j["text_rep"] = std::string(to_string(c.text_rep));
  j["single_vector_t"] = c.single_vector_t;
  j["dropout_rate"] = c.dropout_rate;
  j["encoder_layers"] = c.encoder_layers;
  j["ffn_dim"] = c.ffn();
  j["scorer_head"] = std::string(to_string(c.scorer_head));
  return j.dump();
}

ModelConfig config_from_json(std::string_view text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.dim = j.at("dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.use_scaling = j.at("use_scaling").get<bool>();
    c.text_rep = parse_text_rep(j.at("text_rep").get<std::string>());
    c.single_vector_t = j.at("single_vector_t").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.scorer_head = parse_scorer_head(j.at("scorer_head").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::ConfigMismatch, std::string("bad config blob: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::ConfigMismatch, std::string("bad config blob: ") + e.what());
  }
  return c;
}

std::vector<std::size_t> condense_indices(std::size_t sentences, std::size_t samples) {
  if (sentences < 1 || samples < 1) throw std::invalid_argument("condense_indices: empty input");
  std::vector<std::size_t> idx(samples);
  for (std::size_t t = 0; t < samples; ++t) idx[t] = t * sentences / samples;
  return idx;
}

std::vector<float> predict(const ModelWeights<float>& weights, const ModelConfig& config,
                           const Matrix& frames, const Matrix& script) {
  Tape<float> tape;
  Var<float> f = model_forward(tape, frames, script, weights, config, nullptr, false);
  const Matrix& v = f.value();
  return {v.data(), v.data() + v.size()};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint8_t kMagic[4] = {0x53, 0x44, 0x56, 0x43};  // "SDVC"

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    T v;
    std::memcpy(&v, take(sizeof(T), what), sizeof(T));
    return v;
  }

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (bytes_.size() - at_ < n) {
      throw FormatError(FormatError::Kind::Truncated, std::string("truncated checkpoint while reading ") + what);
    }
    const std::uint8_t* p = bytes_.data() + at_;
    at_ += n;
    return p;
  }

  std::size_t remaining() const { return bytes_.size() - at_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t at_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelWeights<float>& weights, const ModelConfig& config) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kSdvcVersion);
  const std::string blob = config_to_json(config);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.size()));
  out.insert(out.end(), blob.begin(), blob.end());
  std::uint32_t count = 0;
  weights.visit([&count](const std::string&, const Matrix&, ParamKind) { ++count; });
  put<std::uint32_t>(out, count);
  weights.visit([&out](const std::string& name, const Matrix& m, ParamKind) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    const auto* p = reinterpret_cast<const std::uint8_t*>(m.data());
    out.insert(out.end(), p, p + 4 * static_cast<std::size_t>(m.size()));
  });
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic, "bad checkpoint magic");
  }
  in.take(4, "magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kSdvcVersion) {
    throw FormatError(FormatError::Kind::BadVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto blob_len = in.get<std::uint32_t>("config length");
  const auto* blob = in.take(blob_len, "config");
  Checkpoint ck;
  ck.config = config_from_json(std::string_view(reinterpret_cast<const char*>(blob), blob_len));
  try {
    ck.weights = allocate_weights<float>(ck.config);
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::ConfigMismatch, std::string("invalid stored config: ") + e.what());
  }

  std::map<std::string, Matrix*> expected;
  ck.weights.visit([&expected](const std::string& name, Matrix& m, ParamKind) { expected[name] = &m; });
  const auto count = in.get<std::uint32_t>("tensor count");
  if (count != expected.size()) {
    throw FormatError(FormatError::Kind::NameMismatch, "checkpoint holds " + std::to_string(count) +
                                                           " tensors, config implies " +
                                                           std::to_string(expected.size()));
  }
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = in.get<std::uint16_t>("name length");
    const auto* np = in.take(len, "name");
    const std::string name(reinterpret_cast<const char*>(np), len);
    auto it = expected.find(name);
    if (it == expected.end() || it->second == nullptr) {
      throw FormatError(FormatError::Kind::NameMismatch, "unexpected or repeated tensor '" + name + "'");
    }
    Matrix& m = *it->second;
    it->second = nullptr;
    const auto rows = in.get<std::uint32_t>("rows");
    const auto cols = in.get<std::uint32_t>("cols");
    if (rows != m.rows() || cols != m.cols()) {
      throw FormatError(FormatError::Kind::ShapeMismatch, "tensor '" + name + "' is " + shape_str(rows, cols) +
                                                              ", expected " + shape_str(m));
    }
    const auto* data = in.take(4 * static_cast<std::size_t>(m.size()), "tensor data");
    std::memcpy(m.data(), data, 4 * static_cast<std::size_t>(m.size()));
    if (!m.allFinite()) throw FormatError(FormatError::Kind::NonFinite, "tensor '" + name + "' is not finite");
  }
  if (in.remaining() != 0) {
    throw FormatError(FormatError::Kind::TrailingBytes, std::to_string(in.remaining()) + " trailing bytes");
  }
  return ck;
}

void save_checkpoint(const ModelWeights<float>& weights, const ModelConfig& config,
                     const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(weights, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.config == expected)) {
    throw FormatError(FormatError::Kind::ConfigMismatch,
                      path.string() + ": checkpoint config " + config_to_json(ck.config) +
                          " does not match requested " + config_to_json(expected));
  }
  return ck;
}

}  // namespace sdvsum
