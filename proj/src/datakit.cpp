// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/datakit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <json.hpp>

namespace sdvsum {

static_assert(std::endian::native == std::endian::little,
              "SDVE/SDVC I/O assumes a little-endian host");

namespace {

constexpr std::uint8_t kMagic[4] = {0x53, 0x44, 0x56, 0x45};  // "SDVE"
constexpr std::size_t kHeaderBytes = 16;

std::uint32_t load_u32(const std::uint8_t* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Header checks shared by full decodes and shape-only reads. `head` holds at
// most the first 16 bytes; `total` is the full container size.
ContainerShape check_header(std::span<const std::uint8_t> head, std::uint64_t total) {
  if (head.size() >= 4 && std::memcmp(head.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic, "bad magic");
  }
  if (total < kHeaderBytes) {
    throw FormatError(FormatError::Kind::Truncated,
                      "truncated header: " + std::to_string(total) + " bytes");
  }
  const std::uint32_t version = load_u32(head.data() + 4);
  if (version != kSdveVersion) {
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported version " + std::to_string(version));
  }
  ContainerShape shape{load_u32(head.data() + 8), load_u32(head.data() + 12)};
  if (shape.rows == 0 || shape.cols == 0) {
    throw FormatError(FormatError::Kind::ShapeMismatch,
                      "empty shape " + shape_str(shape.rows, shape.cols));
  }
  const std::uint64_t n = std::uint64_t{shape.rows} * shape.cols;
  if (n > kMaxContainerElements) {
    throw FormatError(FormatError::Kind::DimensionOverflow,
                      "dimension overflow: " + shape_str(shape.rows, shape.cols));
  }
  const std::uint64_t expected = kHeaderBytes + 4 * n;
  if (total < expected) {
    throw FormatError(FormatError::Kind::Truncated,
                      "truncated payload: header says " + shape_str(shape.rows, shape.cols) +
                          " but only " + std::to_string((total - kHeaderBytes) / 4) +
                          " floats present");
  }
  if (total > expected) {
    throw FormatError(FormatError::Kind::TrailingBytes,
                      std::to_string(total - expected) + " trailing bytes");
  }
  return shape;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation") return Split::Validation;
  if (text == "test") return Split::Test;
  throw DataError("invalid split label '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_embeddings(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw FormatError(FormatError::Kind::ShapeMismatch, "empty shape " + shape_str(m));
  }
  const std::uint64_t n = static_cast<std::uint64_t>(m.rows()) * static_cast<std::uint64_t>(m.cols());
  if (n > kMaxContainerElements) {
    throw FormatError(FormatError::Kind::DimensionOverflow, "dimension overflow: " + shape_str(m));
  }
  if (!m.allFinite()) throw FormatError(FormatError::Kind::NonFinite, "non-finite value");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * n);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  store_u32(out, kSdveVersion);
  store_u32(out, static_cast<std::uint32_t>(m.rows()));
  store_u32(out, static_cast<std::uint32_t>(m.cols()));
  const auto* p = reinterpret_cast<const std::uint8_t*>(m.data());
  out.insert(out.end(), p, p + 4 * n);
  return out;
}

Matrix decode_embeddings(std::span<const std::uint8_t> bytes) {
  const ContainerShape shape = check_header(bytes.first(std::min(bytes.size(), kHeaderBytes)), bytes.size());
  Matrix m(shape.rows, shape.cols);
  std::memcpy(m.data(), bytes.data() + kHeaderBytes, 4 * static_cast<std::size_t>(m.size()));
  if (!m.allFinite()) throw FormatError(FormatError::Kind::NonFinite, "non-finite value");
  return m;
}

void write_embeddings(const Matrix& m, const fs::path& path) {
  const auto bytes = encode_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

Matrix read_embeddings(const fs::path& path) {
  const auto bytes = slurp(path);
  try {
    return decode_embeddings(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

ContainerShape read_embeddings_shape(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  const auto total = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> head(static_cast<std::size_t>(std::min<std::uint64_t>(total, kHeaderBytes)));
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  try {
    return check_header(head, total);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::size_t SummaryLabels::positives() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                [](float v) { return v > 0.5f; }));
}

void validate_labels(const SummaryLabels& labels) {
  if (labels.values.empty()) throw DataError("labels are empty");
  if (labels.mode == LabelMode::Binary) {
    for (float v : labels.values) {
      if (v != 0.0f && v != 1.0f) {
        throw DataError("binary labels contain " + std::to_string(v));
      }
    }
    if (labels.positives() == 0) throw DataError("binary labels have no positive frame");
  } else {
    for (float v : labels.values) {
      if (!(v >= 0.0f && v <= 1.0f)) throw DataError("averaged labels contain " + std::to_string(v));
    }
  }
}

SummaryLabels labels_from_matrix(const Matrix& m, LabelMode mode) {
  if (m.cols() != 1) throw DataError("labels must have one column, got " + shape_str(m));
  SummaryLabels labels{std::vector<float>(m.data(), m.data() + m.size()), mode};
  validate_labels(labels);
  return labels;
}

Matrix labels_to_matrix(const SummaryLabels& labels) {
  Matrix m(static_cast<Eigen::Index>(labels.values.size()), 1);
  std::copy(labels.values.begin(), labels.values.end(), m.data());
  return m;
}

SummaryLabels average_ground_truth(std::span<const SummaryLabels> summaries) {
  if (summaries.empty()) throw DataError("average_ground_truth: no summaries");
  const std::size_t n = summaries.front().size();
  // Binary counts are exact in double, so the result does not depend on order.
  std::vector<double> acc(n, 0.0);
  for (const SummaryLabels& s : summaries) {
    if (s.size() != n) {
      throw DimensionError("average_ground_truth: summary of length " + std::to_string(s.size()) +
                           ", expected " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) acc[i] += s.values[i];
  }
  SummaryLabels out;
  out.mode = LabelMode::Averaged;
  out.values.resize(n);
  const double count = static_cast<double>(summaries.size());
  for (std::size_t i = 0; i < n; ++i) out.values[i] = static_cast<float>(acc[i] / count);
  return out;
}

void validate_fragments(std::span<const Fragment> fragments, std::size_t frames) {
  std::size_t cursor = 0;
  for (const Fragment& f : fragments) {
    if (f.end <= f.start) {
      throw DataError("empty fragment [" + std::to_string(f.start) + ", " + std::to_string(f.end) + ")");
    }
    if (f.start < cursor) {
      throw DataError("overlapping fragments at frame " + std::to_string(f.start));
    }
    if (f.start > cursor) {
      throw DataError("fragments leave frames [" + std::to_string(cursor) + ", " +
                      std::to_string(f.start) + ") uncovered");
    }
    cursor = f.end;
  }
  if (cursor != frames) {
    throw DataError("fragments cover [0, " + std::to_string(cursor) + ") but the video has " +
                    std::to_string(frames) + " frames");
  }
}

// ---------------------------------------------------------------------------

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      videos.begin(), videos.end(), [split](const VideoEntry& v) { return v.split == split; }));
}

const VideoEntry* DatasetManifest::find(std::string_view id) const {
  for (const auto& v : videos) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(where + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw DataError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

void check_file(const fs::path& path, std::size_t rows, std::size_t cols, const std::string& where,
                const char* what) {
  if (!fs::exists(path)) throw DataError(where + ": missing " + what + " file " + path.string());
  ContainerShape shape;
  try {
    shape = read_embeddings_shape(path);
  } catch (const FormatError& e) {
    throw DataError(where + ": " + e.what());
  }
  if ((rows != 0 && shape.rows != rows) || shape.cols != cols) {
    throw DataError(where + ": " + what + " " + path.string() + " is " +
                    shape_str(shape.rows, shape.cols) + ", expected " +
                    (rows != 0 ? std::to_string(rows) : std::string("*")) + "x" +
                    std::to_string(cols));
  }
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  const std::string where = "manifest " + path.string();
  if (!doc.is_object()) throw DataError(where + ": top level must be an object");
  const json& dim = require(doc, "dimension", where);
  if (!dim.is_number_integer() || dim.get<std::int64_t>() < 1) {
    throw DataError(where + ": 'dimension' must be a positive integer");
  }
  const json& videos = require(doc, "videos", where);
  if (!videos.is_array()) throw DataError(where + ": 'videos' must be an array");

  DatasetManifest manifest;
  manifest.dimension = dim.get<std::size_t>();
  const std::size_t D = manifest.dimension;
  std::set<std::string> seen;
  for (const json& v : videos) {
    if (!v.is_object()) throw DataError(where + ": video entries must be objects");
    VideoEntry entry;
    entry.id = require_string(v, "id", where);
    const std::string vw = "video '" + entry.id + "'";
    if (!seen.insert(entry.id).second) throw DataError(vw + ": duplicate id");
    try {
      entry.split = parse_split(require_string(v, "split", vw));
    } catch (const DataError& e) {
      throw DataError(vw + ": " + e.what());
    }
    entry.frames = base / require_string(v, "frames", vw);
    check_file(entry.frames, 0, D, vw, "frames");
    entry.frame_count = read_embeddings_shape(entry.frames).rows;
    const std::size_t N = entry.frame_count;

    const json& summaries = require(v, "summaries", vw);
    if (!summaries.is_array() || summaries.empty()) {
      throw DataError(vw + ": 'summaries' must be a non-empty array");
    }
    for (const json& s : summaries) {
      SummaryEntry se{base / require_string(s, "labels", vw), base / require_string(s, "script", vw)};
      check_file(se.labels, N, 1, vw, "labels");
      check_file(se.script, 0, D, vw, "script");
      try {
        labels_from_matrix(read_embeddings(se.labels), LabelMode::Binary);
      } catch (const DataError& e) {
        throw DataError(vw + ": " + se.labels.string() + ": " + e.what());
      }
      entry.summaries.push_back(std::move(se));
    }
    if (auto it = v.find("description"); it != v.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError(vw + ": 'description' must be a path string");
      entry.description = base / it->get<std::string>();
      check_file(*entry.description, 0, D, vw, "description");
    }
    if (auto it = v.find("fragments"); it != v.end() && !it->is_null()) {
      if (!it->is_array()) throw DataError(vw + ": 'fragments' must be an array");
      for (const json& f : *it) {
        if (!f.is_array() || f.size() != 2 || !f[0].is_number_integer() ||
            !f[1].is_number_integer() || f[0].get<std::int64_t>() < 0) {
          throw DataError(vw + ": fragments must be [start, end) integer pairs");
        }
        entry.fragments.push_back({f[0].get<std::size_t>(), f[1].get<std::size_t>()});
      }
      try {
        validate_fragments(entry.fragments, N);
      } catch (const DataError& e) {
        throw DataError(vw + ": " + e.what());
      }
    }
    manifest.videos.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto rel = [&base](const fs::path& p) {
    return (base.empty() ? p : p.lexically_relative(base)).generic_string();
  };
  json doc;
  doc["dimension"] = manifest.dimension;
  doc["videos"] = json::array();
  for (const auto& v : manifest.videos) {
    json jv;
    jv["id"] = v.id;
    jv["split"] = std::string(to_string(v.split));
    jv["frames"] = rel(v.frames);
    jv["summaries"] = json::array();
    for (const auto& s : v.summaries) {
      jv["summaries"].push_back({{"labels", rel(s.labels)}, {"script", rel(s.script)}});
    }
    if (v.description) jv["description"] = rel(*v.description);
    if (!v.fragments.empty()) {
      jv["fragments"] = json::array();
      for (const auto& f : v.fragments) jv["fragments"].push_back({f.start, f.end});
    }
    doc["videos"].push_back(std::move(jv));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

Dataset load_dataset(const fs::path& manifest_path) {
  Dataset data;
  data.manifest = load_manifest(manifest_path);
  data.videos.reserve(data.manifest.videos.size());
  for (const auto& v : data.manifest.videos) {
    VideoData vd;
    vd.frames = read_embeddings(v.frames);
    for (const auto& s : v.summaries) {
      vd.scripts.push_back(read_embeddings(s.script));
      vd.labels.push_back(labels_from_matrix(read_embeddings(s.labels), LabelMode::Binary));
    }
    if (v.description) vd.description = read_embeddings(*v.description);
    data.videos.push_back(std::move(vd));
  }
  return data;
}

std::vector<std::size_t> videos_in_split(const DatasetManifest& manifest, Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.videos.size(); ++i) {
    if (manifest.videos[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<Sample> iterate_split(const Dataset& data, Split split, const Rng& shuffle_stream,
                                  std::size_t epoch, bool shuffle) {
  std::vector<Sample> samples;
  for (std::size_t vi : videos_in_split(data.manifest, split)) {
    const VideoData& vd = data.videos[vi];
    for (std::size_t s = 0; s < vd.scripts.size(); ++s) {
      samples.push_back(Sample{vi, s, &data.manifest.videos[vi].id, &vd.frames, &vd.scripts[s],
                               &vd.labels[s]});
    }
  }
  if (shuffle) {
    Rng rng = shuffle_stream.derive(epoch);
    std::shuffle(samples.begin(), samples.end(), rng.engine());
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Synthetic data

std::size_t SynthSpec::max_script_topics() const {
  return script_topics_max == 0 ? std::max<std::size_t>(1, topics / 2) : script_topics_max;
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synth spec: " + msg); };
  if (topics < 2) fail("topic count must be >= 2");
  if (dimension < 8) fail("dimension must be >= 8");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) fail("positive fraction must lie in (0, 1)");
  if (!(noise >= 0.0)) fail("noise must be >= 0");
  if (frames_min < 1 || frames_max < frames_min) fail("invalid frame range");
  if (sentences_min < 1 || sentences_max < sentences_min) fail("invalid sentence range");
  if (summaries_per_video < 1) fail("need at least one summary per video");
  if (script_topics_min < 1 || max_script_topics() < script_topics_min) fail("invalid topics-per-script range");
  if (train_videos + validation_videos + test_videos == 0) fail("no videos requested");
}

namespace {

Matrix unit_rows(Matrix m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const float n = m.row(r).norm();
    if (n > 0.0f) m.row(r) /= n;
  }
  return m;
}

// topic + isotropic Gaussian noise whose expected norm is sigma, renormalized.
Eigen::RowVectorXf noisy_unit(const Eigen::RowVectorXf& topic, double sigma, Rng& rng) {
  const double per_coord = sigma / std::sqrt(static_cast<double>(topic.size()));
  Eigen::RowVectorXf v = topic;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] += static_cast<float>(per_coord * rng.normal());
  }
  return v / v.norm();
}

SyntheticVideo synth_video(const SynthSpec& spec, const Matrix& topics, Rng& rng) {
  const std::size_t K = spec.topics;
  const double p = spec.positive_fraction;
  const auto N = static_cast<std::size_t>(
      rng.integer(static_cast<std::int64_t>(spec.frames_min), static_cast<std::int64_t>(spec.frames_max)));

  // Script topics ("events") get a fixed frame quota so that a script with
  // script_topics_min topics marks about p*N frames; leftover frames go to
  // background topics that no script of this video mentions.
  const std::size_t quota =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(p * static_cast<double>(N))) /
                                   spec.script_topics_min);
  std::size_t events = std::min(K, N / quota);
  if (events * quota < N && events == K) --events;
  if (events < spec.script_topics_min) {
    throw std::invalid_argument("synth spec: " + std::to_string(K) + " topics cannot host scripts of " +
                                std::to_string(spec.script_topics_min) + " topics at N=" +
                                std::to_string(N));
  }
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::vector<std::size_t> event_topics(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(events));
  const std::vector<std::size_t> background(order.begin() + static_cast<std::ptrdiff_t>(events), order.end());

  std::vector<std::pair<std::size_t, std::size_t>> counts;  // (topic, frames)
  for (std::size_t t : event_topics) counts.emplace_back(t, quota);
  const std::size_t rest = N - events * quota;
  if (rest > 0) {
    const std::size_t used = std::min(background.size(), rest);
    for (std::size_t i = 0; i < used; ++i) {
      counts.emplace_back(background[i], rest / used + (i < rest % used ? 1 : 0));
    }
  }

  // Each topic's frames are cut into short contiguous chunks; chunks are
  // shuffled to form the timeline and double as the video's fragmentation.
  std::vector<std::pair<std::size_t, std::size_t>> chunks;  // (topic, length)
  for (auto [topic, count] : counts) {
    while (count > 0) {
      const auto len = std::min<std::size_t>(count, static_cast<std::size_t>(rng.integer(2, 5)));
      chunks.emplace_back(topic, len);
      count -= len;
    }
  }
  std::shuffle(chunks.begin(), chunks.end(), rng.engine());

  SyntheticVideo v;
  v.frames.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(spec.dimension));
  std::size_t at = 0;
  for (auto [topic, len] : chunks) {
    v.fragments.push_back({at, at + len});
    for (std::size_t i = 0; i < len; ++i, ++at) {
      v.frame_topics.push_back(topic);
      v.frames.row(static_cast<Eigen::Index>(at)) =
          noisy_unit(topics.row(static_cast<Eigen::Index>(topic)), spec.noise, rng);
    }
  }

  const double lo = p / 2.0;
  const double hi = std::min(2.0 * p, 0.9);
  const std::size_t max_s = std::min(spec.max_script_topics(), events);
  for (std::size_t j = 0; j < spec.summaries_per_video; ++j) {
    auto size = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(spec.script_topics_min),
                                                     static_cast<std::int64_t>(max_s)));
    auto frac = [&](std::size_t s) { return static_cast<double>(s * quota) / static_cast<double>(N); };
    while (size > 1 && frac(size) > hi) --size;
    while (size < events && frac(size) < lo) ++size;

    std::vector<std::size_t> pick(event_topics);
    std::shuffle(pick.begin(), pick.end(), rng.engine());
    pick.resize(size);
    std::sort(pick.begin(), pick.end());

    const auto drawn = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(spec.sentences_min),
                                                            static_cast<std::int64_t>(spec.sentences_max)));
    const std::size_t M = std::max(drawn, size);
    std::vector<std::size_t> sentence_topics(pick);
    while (sentence_topics.size() < M) {
      sentence_topics.push_back(pick[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(size) - 1))]);
    }
    std::shuffle(sentence_topics.begin(), sentence_topics.end(), rng.engine());
    Matrix script(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(spec.dimension));
    for (std::size_t m = 0; m < M; ++m) {
      script.row(static_cast<Eigen::Index>(m)) =
          noisy_unit(topics.row(static_cast<Eigen::Index>(sentence_topics[m])), spec.noise, rng);
    }

    SummaryLabels labels{std::vector<float>(N, 0.0f), LabelMode::Binary};
    for (std::size_t n = 0; n < N; ++n) {
      if (std::binary_search(pick.begin(), pick.end(), v.frame_topics[n])) labels.values[n] = 1.0f;
    }
    v.script_topics.push_back(std::move(pick));
    v.scripts.push_back(std::move(script));
    v.labels.push_back(std::move(labels));
  }

  Eigen::RowVectorXf mean = Eigen::RowVectorXf::Zero(static_cast<Eigen::Index>(spec.dimension));
  for (const auto& c : counts) mean += topics.row(static_cast<Eigen::Index>(c.first));
  mean /= static_cast<float>(counts.size());
  v.description = noisy_unit(mean / mean.norm(), spec.noise, rng);
  return v;
}

}  // namespace

SyntheticDataset synthesize(const SynthSpec& spec) {
  spec.validate();
  SyntheticDataset out;
  Rng rng = Rng::stream(spec.seed, "data");
  Matrix raw(static_cast<Eigen::Index>(spec.topics), static_cast<Eigen::Index>(spec.dimension));
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = static_cast<float>(rng.normal());
  out.topics = unit_rows(std::move(raw));

  const std::size_t total = spec.train_videos + spec.validation_videos + spec.test_videos;
  std::vector<Split> splits;
  splits.insert(splits.end(), spec.train_videos, Split::Train);
  splits.insert(splits.end(), spec.validation_videos, Split::Validation);
  splits.insert(splits.end(), spec.test_videos, Split::Test);
  std::shuffle(splits.begin(), splits.end(), rng.engine());

  const int width = std::max<int>(4, static_cast<int>(std::to_string(total).size()));
  for (std::size_t i = 0; i < total; ++i) {
    SyntheticVideo v = synth_video(spec, out.topics, rng);
    std::string num = std::to_string(i);
    v.id = "v" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    v.split = splits[i];
    out.videos.push_back(std::move(v));
  }
  return out;
}

DatasetManifest generate_synthetic(const SynthSpec& spec, const fs::path& out_dir) {
  const SyntheticDataset data = synthesize(spec);
  std::error_code ec;
  for (const char* sub : {"frames", "scripts", "labels", "descriptions"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw DataError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  DatasetManifest manifest;
  manifest.dimension = spec.dimension;
  for (const auto& v : data.videos) {
    VideoEntry e;
    e.id = v.id;
    e.split = v.split;
    e.frames = out_dir / "frames" / (v.id + ".sdve");
    write_embeddings(v.frames, e.frames);
    for (std::size_t j = 0; j < v.scripts.size(); ++j) {
      const std::string stem = v.id + "_" + std::to_string(j);
      SummaryEntry s{out_dir / "labels" / (stem + ".sdve"), out_dir / "scripts" / (stem + ".sdve")};
      write_embeddings(labels_to_matrix(v.labels[j]), s.labels);
      write_embeddings(v.scripts[j], s.script);
      e.summaries.push_back(std::move(s));
    }
    e.description = out_dir / "descriptions" / (v.id + ".sdve");
    write_embeddings(v.description, *e.description);
    e.fragments = v.fragments;
    e.frame_count = static_cast<std::size_t>(v.frames.rows());
    manifest.videos.push_back(std::move(e));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace sdvsum
