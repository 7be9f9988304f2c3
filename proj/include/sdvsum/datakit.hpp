// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdvsum/numkit.hpp"

namespace sdvsum {

namespace fs = std::filesystem;

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// ---------------------------------------------------------------------------
// SDVE container: "SDVE", u32 version (1), u32 rows, u32 cols, then rows*cols
// little-endian f32 values, row-major. No padding, nothing trailing.

inline constexpr std::uint32_t kSdveVersion = 1;
inline constexpr std::uint64_t kMaxContainerElements = 2147483647ull;  // 2^31 - 1

std::vector<std::uint8_t> encode_embeddings(const Matrix& m);
Matrix decode_embeddings(std::span<const std::uint8_t> bytes);

void write_embeddings(const Matrix& m, const fs::path& path);
Matrix read_embeddings(const fs::path& path);

struct ContainerShape {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

// Validates the header and payload size without decoding the values.
ContainerShape read_embeddings_shape(const fs::path& path);

// ---------------------------------------------------------------------------
// Labels

enum class LabelMode {
  Binary,    // one annotator's selection, values in {0, 1}, at least one 1
  Averaged,  // frame-level mean over several annotators, values in [0, 1]
};

struct SummaryLabels {
  std::vector<float> values;
  LabelMode mode = LabelMode::Binary;

  std::size_t size() const noexcept { return values.size(); }
  std::size_t positives() const;
};

// Throws DataError when the values break the mode's invariants.
void validate_labels(const SummaryLabels& labels);

// Labels are stored as N x 1 SDVE containers.
SummaryLabels labels_from_matrix(const Matrix& m, LabelMode mode);
Matrix labels_to_matrix(const SummaryLabels& labels);

// Frame-level mean of several binary summaries of one video.
SummaryLabels average_ground_truth(std::span<const SummaryLabels> summaries);

// ---------------------------------------------------------------------------
// Manifest

// Half-open frame interval [start, end).
struct Fragment {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const Fragment&, const Fragment&) = default;
};

// Throws DataError unless the fragments are sorted, disjoint, non-empty and
// cover [0, frames).
void validate_fragments(std::span<const Fragment> fragments, std::size_t frames);

struct SummaryEntry {
  fs::path labels;
  fs::path script;
};

struct VideoEntry {
  std::string id;
  Split split = Split::Train;
  fs::path frames;
  std::vector<SummaryEntry> summaries;
  std::optional<fs::path> description;
  std::vector<Fragment> fragments;  // empty when the manifest gives none
  std::size_t frame_count = 0;      // filled by load_manifest
};

// Paths inside a loaded manifest are resolved against the manifest's
// directory.
struct DatasetManifest {
  std::size_t dimension = 0;
  std::vector<VideoEntry> videos;

  std::size_t count(Split split) const;
  const VideoEntry* find(std::string_view id) const;
};

// Parses the JSON manifest and checks every referenced file against the
// declared dimension. Errors name the offending video id.
DatasetManifest load_manifest(const fs::path& path);

// Writes `manifest` as JSON. Entry paths are stored relative to the manifest
// file's directory.
void save_manifest(const DatasetManifest& manifest, const fs::path& path);

// ---------------------------------------------------------------------------
// In-memory dataset

struct VideoData {
  Matrix frames;                       // N x D
  std::vector<Matrix> scripts;         // each M_j x D
  std::vector<SummaryLabels> labels;   // binary, each of length N
  std::optional<Matrix> description;   // 1 x D (or more rows)
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<VideoData> videos;  // parallel to manifest.videos
};

Dataset load_dataset(const fs::path& manifest_path);

// One training/evaluation sample: a (video, ground-truth summary) pair.
struct Sample {
  std::size_t video = 0;
  std::size_t summary = 0;
  const std::string* video_id = nullptr;
  const Matrix* frames = nullptr;
  const Matrix* script = nullptr;
  const SummaryLabels* labels = nullptr;
};

// Every (video, summary) pair of `split` exactly once. With shuffle the order
// is a function of (shuffle_stream, epoch) only; otherwise manifest order.
std::vector<Sample> iterate_split(const Dataset& data, Split split, const Rng& shuffle_stream,
                                  std::size_t epoch, bool shuffle);

std::vector<std::size_t> videos_in_split(const DatasetManifest& manifest, Split split);

// ---------------------------------------------------------------------------
// Synthetic topic-planted datasets

struct SynthSpec {
  std::size_t topics = 8;
  std::size_t train_videos = 200;
  std::size_t validation_videos = 50;
  std::size_t test_videos = 50;
  std::size_t frames_min = 60;
  std::size_t frames_max = 60;
  std::size_t sentences_min = 3;
  std::size_t sentences_max = 6;
  std::size_t dimension = 64;
  double noise = 0.1;
  double positive_fraction = 0.15;
  std::size_t summaries_per_video = 10;
  // Topics per script. 0 for the maximum means topics / 2.
  std::size_t script_topics_min = 2;
  std::size_t script_topics_max = 0;
  std::uint64_t seed = 42;

  std::size_t max_script_topics() const;
  void validate() const;  // throws std::invalid_argument
};

struct SyntheticVideo {
  std::string id;
  Split split = Split::Train;
  std::vector<std::size_t> frame_topics;
  Matrix frames;
  std::vector<std::vector<std::size_t>> script_topics;  // the subset S of each script
  std::vector<Matrix> scripts;
  std::vector<SummaryLabels> labels;
  Matrix description;
  std::vector<Fragment> fragments;
};

struct SyntheticDataset {
  Matrix topics;  // K x D, unit rows
  std::vector<SyntheticVideo> videos;
};

// Pure function of the spec.
SyntheticDataset synthesize(const SynthSpec& spec);

// synthesize() and write the containers plus manifest.json under out_dir.
DatasetManifest generate_synthetic(const SynthSpec& spec, const fs::path& out_dir);

}  // namespace sdvsum
