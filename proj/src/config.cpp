// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sdvsum {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': malformed value '" + std::string(v) + "'");
  }
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  if (!v.empty() && v.front() == '-') {
    throw ConfigError("key '" + std::string(key) + "': value must be non-negative, got '" + std::string(v) + "'");
  }
  return parse_number<std::size_t>(key, v);
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + std::string(v) + "'");
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Entry {
  std::string name;
  std::string help;
  Setter set;
  Getter get;
};

#define COUNT_KEY(NAME, FIELD, HELP)                                                              \
  Entry {                                                                                         \
    NAME, HELP, [](RunConfig& c, std::string_view k, std::string_view v) { c.FIELD = parse_count(k, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                                \
  }
#define REAL_KEY(NAME, FIELD, HELP)                                                                        \
  Entry {                                                                                                  \
    NAME, HELP, [](RunConfig& c, std::string_view k, std::string_view v) { c.FIELD = parse_number<double>(k, v); }, \
        [](const RunConfig& c) { return fmt(c.FIELD); }                                                    \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      COUNT_KEY("dim", model.dim, "embedding size D"),
      COUNT_KEY("heads", model.heads, "cross-modal attention heads"),
      {"use_scaling", "divide attention logits by sqrt(D)",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.model.use_scaling = parse_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.model.use_scaling ? "true" : "false"); }},
      {"text_rep", "multi_vector or single_vector",
       [](RunConfig& c, std::string_view, std::string_view v) { c.model.text_rep = parse_text_rep(v); },
       [](const RunConfig& c) { return std::string(to_string(c.model.text_rep)); }},
      COUNT_KEY("single_vector_t", model.single_vector_t, "sentences sampled by the single-vector condenser"),
      REAL_KEY("dropout", model.dropout_rate, "dropout rate"),
      COUNT_KEY("encoder_layers", model.encoder_layers, "scorer encoder layers"),
      COUNT_KEY("ffn_dim", model.ffn_dim, "encoder feed-forward width, 0 means 4*D"),
      {"scorer_head", "direct or hidden",
       [](RunConfig& c, std::string_view, std::string_view v) { c.model.scorer_head = parse_scorer_head(v); },
       [](const RunConfig& c) { return std::string(to_string(c.model.scorer_head)); }},

      REAL_KEY("learning_rate", train.learning_rate, "Adam learning rate"),
      REAL_KEY("l2_factor", train.l2_factor, "L2 regularization factor"),
      COUNT_KEY("batch_size", train.batch_size, "samples per optimizer step"),
      COUNT_KEY("epochs", train.epochs, "training epochs"),
      REAL_KEY("adam_beta1", train.adam_beta1, "Adam beta1"),
      REAL_KEY("adam_beta2", train.adam_beta2, "Adam beta2"),
      REAL_KEY("adam_eps", train.adam_eps, "Adam epsilon"),
      {"mode", "script_driven or generic",
       [](RunConfig& c, std::string_view, std::string_view v) { c.train.mode = parse_task_mode(v); },
       [](const RunConfig& c) { return std::string(to_string(c.train.mode)); }},
      {"seed", "master seed",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.train.seed = parse_number<std::uint64_t>(k, v);
         c.synth.seed = c.train.seed;
       },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},

      COUNT_KEY("synth_topics", synth.topics, "latent topics K"),
      COUNT_KEY("synth_train_videos", synth.train_videos, "training videos"),
      COUNT_KEY("synth_validation_videos", synth.validation_videos, "validation videos"),
      COUNT_KEY("synth_test_videos", synth.test_videos, "test videos"),
      COUNT_KEY("synth_frames_min", synth.frames_min, "minimum frames per video"),
      COUNT_KEY("synth_frames_max", synth.frames_max, "maximum frames per video"),
      COUNT_KEY("synth_sentences_min", synth.sentences_min, "minimum script sentences"),
      COUNT_KEY("synth_sentences_max", synth.sentences_max, "maximum script sentences"),
      COUNT_KEY("synth_dimension", synth.dimension, "embedding size of generated data"),
      REAL_KEY("synth_noise", synth.noise, "embedding noise sigma"),
      REAL_KEY("synth_positive_fraction", synth.positive_fraction, "ground-truth positive fraction"),
      COUNT_KEY("synth_summaries", synth.summaries_per_video, "summaries per video"),
      COUNT_KEY("synth_script_topics_min", synth.script_topics_min, "minimum topics per script"),
      COUNT_KEY("synth_script_topics_max", synth.script_topics_max, "maximum topics per script, 0 means K/2"),

      {"manifest", "dataset manifest path",
       [](RunConfig& c, std::string_view, std::string_view v) { c.manifest = std::string(v); },
       [](const RunConfig& c) { return c.manifest.string(); }},
      {"checkpoint", "checkpoint path",
       [](RunConfig& c, std::string_view, std::string_view v) { c.checkpoint = std::string(v); },
       [](const RunConfig& c) { return c.checkpoint.string(); }},
      {"out_dir", "output directory",
       [](RunConfig& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); },
       [](const RunConfig& c) { return c.out_dir.string(); }},
  };
  return table;
}

#undef COUNT_KEY
#undef REAL_KEY

const Entry* lookup(std::string_view key) {
  for (const Entry& e : entries()) {
    if (e.name == key) return &e;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  try {
    synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<ConfigKey> config_keys() {
  const RunConfig defaults;
  std::vector<ConfigKey> out;
  for (const Entry& e : entries()) out.push_back({e.name, e.get(defaults), e.help});
  return out;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const Entry* e = lookup(key);
  if (e == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'");
  e->set(config, key, value);
}

RunConfig parse_config_text(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key.empty() || value.empty()) throw ConfigError("empty key or value");
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_text(const RunConfig& config) {
  std::string out;
  for (const Entry& e : entries()) {
    const std::string v = e.get(config);
    if (!v.empty()) out += e.name + " = " + v + "\n";
  }
  return out;
}

}  // namespace sdvsum
