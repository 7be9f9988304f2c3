// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "sdvsum/datakit.hpp"
#include "sdvsum/numkit.hpp"

namespace sdvsum::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sdvsum_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

template <typename Scalar>
Mat<Scalar> random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Mat<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(scale * rng.normal());
  return m;
}

// Small dataset that trains in seconds.
inline SynthSpec tiny_spec(std::uint64_t seed = 7) {
  SynthSpec s;
  s.topics = 6;
  s.train_videos = 8;
  s.validation_videos = 3;
  s.test_videos = 3;
  s.frames_min = 20;
  s.frames_max = 30;
  s.sentences_min = 2;
  s.sentences_max = 4;
  s.dimension = 16;
  s.summaries_per_video = 3;
  s.seed = seed;
  return s;
}

}  // namespace sdvsum::testing
