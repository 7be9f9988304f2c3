// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "sdvsum/datakit.hpp"
#include "support.hpp"

using namespace sdvsum;
using sdvsum::testing::TempDir;
using sdvsum::testing::random_mat;
using sdvsum::testing::tiny_spec;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

FormatError::Kind decode_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_embeddings(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("decode accepted malformed bytes");
  return FormatError::Kind::Io;
}

// Writes a one-video dataset (N frames, D dims) into dir and returns the
// manifest JSON prefix pieces for tests to customize.
struct MiniData {
  std::size_t n = 10, d = 8;
  explicit MiniData(const TempDir& dir) {
    Rng rng(1);
    write_embeddings(random_mat<float>(10, 8, rng), dir / "f.sdve");
    write_embeddings(random_mat<float>(3, 8, rng), dir / "s.sdve");
    Matrix lab = Matrix::Zero(10, 1);
    lab(2, 0) = lab(3, 0) = 1.0f;
    write_embeddings(lab, dir / "l.sdve");
  }
};

std::string manifest_with(const std::string& video_extra, const std::string& labels = "l.sdve",
                          const std::string& split = "train") {
  return R"({"dimension": 8, "videos": [{"id": "clip7", "split": ")" + split +
         R"(", "frames": "f.sdve", "summaries": [{"labels": ")" + labels + R"(", "script": "s.sdve"}])" +
         video_extra + "}]}";
}

}  // namespace

TEST_CASE("SDVE byte layout is fixed") {
  Matrix m(1, 2);
  m << 1.0f, -2.5f;
  const auto bytes = encode_embeddings(m);
  REQUIRE(bytes.size() == 16 + 8);
  CHECK(std::memcmp(bytes.data(), "SDVE", 4) == 0);
  const std::uint8_t header[12] = {1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0};
  CHECK(std::memcmp(bytes.data() + 4, header, 12) == 0);
  const std::uint8_t one[4] = {0x00, 0x00, 0x80, 0x3f};  // 1.0f little-endian
  CHECK(std::memcmp(bytes.data() + 16, one, 4) == 0);
}

TEST_CASE("SDVE write then read is bit-exact") {
  TempDir dir("sdve");
  Rng rng(3);
  Matrix m = random_mat<float>(3, 4, rng);
  m(0, 0) = -0.0f;
  m(1, 1) = std::numeric_limits<float>::denorm_min();
  write_embeddings(m, dir / "m.sdve");
  const Matrix back = read_embeddings(dir / "m.sdve");
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK(std::memcmp(back.data(), m.data(), sizeof(float) * 12) == 0);
  CHECK(slurp(dir / "m.sdve") == encode_embeddings(back));
  const auto shape = read_embeddings_shape(dir / "m.sdve");
  CHECK(shape.rows == 3);
  CHECK(shape.cols == 4);
}

TEST_CASE("SDVE malformed containers raise distinct errors") {
  const auto good = encode_embeddings(Matrix::Ones(2, 3));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(decode_kind(bad_magic) == FormatError::Kind::BadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(decode_kind(bad_version) == FormatError::Kind::BadVersion);

  // header says 2x3 but only 5 floats follow
  auto truncated = good;
  truncated.resize(16 + 5 * 4);
  CHECK(decode_kind(truncated) == FormatError::Kind::Truncated);
  CHECK(decode_kind(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)) == FormatError::Kind::Truncated);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(decode_kind(trailing) == FormatError::Kind::TrailingBytes);

  auto overflow = good;
  const std::uint32_t big = 0x10000u;  // 65536 x 65536 > 2^31 - 1
  std::memcpy(overflow.data() + 8, &big, 4);
  std::memcpy(overflow.data() + 12, &big, 4);
  CHECK(decode_kind(overflow) == FormatError::Kind::DimensionOverflow);

  auto nonfinite = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nonfinite.data() + 16, &nan, 4);
  CHECK(decode_kind(nonfinite) == FormatError::Kind::NonFinite);

  CHECK_THROWS_AS(encode_embeddings(Matrix(0, 3)), FormatError);
}

TEST_CASE("labels validate their mode") {
  CHECK_NOTHROW(validate_labels({{0, 1, 0}, LabelMode::Binary}));
  CHECK_THROWS_AS(validate_labels({{0, 0, 0}, LabelMode::Binary}), DataError);
  CHECK_THROWS_AS(validate_labels({{0, 0.5f}, LabelMode::Binary}), DataError);
  CHECK_NOTHROW(validate_labels({{0, 0.5f}, LabelMode::Averaged}));
  CHECK_THROWS_AS(validate_labels({{1.5f}, LabelMode::Averaged}), DataError);
}

TEST_CASE("average_ground_truth examples") {
  const SummaryLabels a{{1, 0}, LabelMode::Binary}, b{{0, 0}, LabelMode::Binary};
  std::vector<SummaryLabels> one{a};
  CHECK(average_ground_truth(one).values == a.values);
  std::vector<SummaryLabels> two{a, b};
  CHECK(average_ground_truth(two).values == std::vector<float>{0.5f, 0.0f});
  CHECK(average_ground_truth(two).mode == LabelMode::Averaged);

  std::vector<SummaryLabels> ten;
  for (int j = 0; j < 10; ++j) ten.push_back({{j < 7 ? 1.0f : 0.0f, 1.0f}, LabelMode::Binary});
  CHECK(average_ground_truth(ten).values[0] == doctest::Approx(0.7));
  std::vector<SummaryLabels> rev(ten.rbegin(), ten.rend());
  CHECK(average_ground_truth(rev).values == average_ground_truth(ten).values);

  std::vector<SummaryLabels> mismatch{a, {{1, 0, 0}, LabelMode::Binary}};
  CHECK_THROWS_AS(average_ground_truth(mismatch), DimensionError);
  CHECK_THROWS_AS(average_ground_truth(std::span<const SummaryLabels>{}), DataError);
}

TEST_CASE("minimal manifest loads") {
  TempDir dir("mani");
  MiniData data(dir);
  spit(dir / "m.json", manifest_with(R"(, "fragments": [[0, 5], [5, 10]])"));
  const auto m = load_manifest(dir / "m.json");
  REQUIRE(m.videos.size() == 1);
  CHECK(m.count(Split::Train) == 1);
  CHECK(m.videos[0].frame_count == 10);
  CHECK(m.videos[0].fragments.size() == 2);
  CHECK(m.find("clip7") != nullptr);
}

TEST_CASE("manifest errors name the video") {
  TempDir dir("mani_bad");
  MiniData data(dir);
  auto message = [&](const std::string& text) {
    spit(dir / "m.json", text);
    try {
      load_manifest(dir / "m.json");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string missing = message(manifest_with("", "absent.sdve"));
  CHECK(missing.find("clip7") != std::string::npos);
  CHECK(missing.find("absent.sdve") != std::string::npos);

  const std::string overlap = message(manifest_with(R"(, "fragments": [[0, 5], [4, 9]])"));
  CHECK(overlap.find("clip7") != std::string::npos);
  CHECK(overlap.find("overlap") != std::string::npos);

  CHECK(message(manifest_with(R"(, "fragments": [[0, 5]])")).find("clip7") != std::string::npos);
  CHECK(message(manifest_with("", "l.sdve", "dev")).find("clip7") != std::string::npos);

  // labels container with the wrong column count, i.e. a D mismatch
  CHECK(message(manifest_with("", "s.sdve")).find("clip7") != std::string::npos);
  spit(dir / "m.json", R"({"dimension": 4, "videos": [{"id": "clip7", "split": "train", "frames": "f.sdve", "summaries": []}]})");
  CHECK_THROWS_AS(load_manifest(dir / "m.json"), DataError);
}

TEST_CASE("save_manifest round-trips with relative paths") {
  TempDir dir("mani_rt");
  const auto m = generate_synthetic(tiny_spec(), dir.path());
  const auto loaded = load_manifest(dir / "manifest.json");
  REQUIRE(loaded.videos.size() == m.videos.size());
  save_manifest(loaded, dir / "copy.json");
  const auto again = load_manifest(dir / "copy.json");
  CHECK(again.videos[0].frames == loaded.videos[0].frames);
  const std::string text(reinterpret_cast<const char*>(slurp(dir / "copy.json").data()), slurp(dir / "copy.json").size());
  CHECK(text.find(dir.path().string()) == std::string::npos);
}

TEST_CASE("synthetic generation is byte-identical for equal specs") {
  TempDir a("syn_a"), b("syn_b");
  SynthSpec spec;
  spec.topics = 8;
  spec.dimension = 64;
  spec.frames_min = spec.frames_max = 60;
  spec.sentences_min = spec.sentences_max = 4;
  spec.positive_fraction = 0.2;
  spec.train_videos = 4;
  spec.validation_videos = 2;
  spec.test_videos = 2;
  spec.seed = 7;
  generate_synthetic(spec, a.path());
  generate_synthetic(spec, b.path());
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a.path());
    CHECK(slurp(entry.path()) == slurp(b.path() / rel));
    ++files;
  }
  CHECK(files > 8 * 10);
  spec.seed = 8;
  TempDir c("syn_c");
  generate_synthetic(spec, c.path());
  CHECK(slurp(a / "manifest.json") != slurp(c / "manifest.json"));
}

TEST_CASE("synthetic data respects its structural invariants") {
  SynthSpec spec;  // reference spec, shrunk to fewer videos
  spec.train_videos = 40;
  spec.validation_videos = 5;
  spec.test_videos = 5;
  const auto ds = synthesize(spec);
  const double p = spec.positive_fraction;
  std::size_t splits[3] = {0, 0, 0};
  for (const auto& v : ds.videos) {
    ++splits[static_cast<int>(v.split)];
    CHECK(v.frames.rows() == 60);
    CHECK(v.scripts.size() == 10);
    CHECK(v.labels.size() == 10);
    validate_fragments(v.fragments, 60);
    CHECK(v.description.rows() == 1);
    for (std::size_t j = 0; j < v.labels.size(); ++j) {
      validate_labels(v.labels[j]);
      const double frac = static_cast<double>(v.labels[j].positives()) / 60.0;
      CHECK(frac >= p / 2);
      CHECK(frac <= std::min(2 * p, 0.9));
      CHECK(v.scripts[j].rows() >= 3);
      CHECK(v.scripts[j].rows() <= 6);
      // every sentence points at a planted topic
      for (Eigen::Index s = 0; s < v.scripts[j].rows(); ++s) {
        const Eigen::RowVectorXf row = v.scripts[j].row(s);
        const float best = (ds.topics * row.transpose()).maxCoeff() / row.norm();
        CHECK(best >= 0.8f);
      }
      // labels mark exactly the frames whose topic is in the script
      for (std::size_t f = 0; f < 60; ++f) {
        const bool in_script = std::count(v.script_topics[j].begin(), v.script_topics[j].end(), v.frame_topics[f]) > 0;
        CHECK((v.labels[j].values[f] == 1.0f) == in_script);
      }
    }
  }
  CHECK(splits[0] == 40);
  CHECK(splits[1] == 5);
  CHECK(splits[2] == 5);
}

TEST_CASE("zero noise frames equal their topic vectors") {
  SynthSpec spec = tiny_spec();
  spec.noise = 0.0;
  const auto ds = synthesize(spec);
  for (const auto& v : ds.videos) {
    for (Eigen::Index f = 0; f < v.frames.rows(); ++f) {
      // renormalization may move the last bit
      CHECK(v.frames.row(f).isApprox(ds.topics.row(static_cast<Eigen::Index>(v.frame_topics[f])), 1e-6f));
    }
  }
}

TEST_CASE("nearest-topic classification at sigma 0.1, D 64 is at least 99 percent") {
  SynthSpec spec;
  spec.train_videos = 150;
  spec.validation_videos = 10;
  spec.test_videos = 10;
  spec.summaries_per_video = 1;
  const auto ds = synthesize(spec);
  std::size_t total = 0, right = 0;
  for (const auto& v : ds.videos) {
    for (Eigen::Index f = 0; f < v.frames.rows() && total < 10000; ++f, ++total) {
      Eigen::Index arg = 0;
      (ds.topics * v.frames.row(f).transpose()).maxCoeff(&arg);
      right += static_cast<std::size_t>(arg) == v.frame_topics[f];
    }
  }
  CHECK(total == 10000);
  CHECK(static_cast<double>(right) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("iterate_split counts, order and determinism") {
  TempDir dir("iter");
  SynthSpec spec = tiny_spec();
  spec.train_videos = 3;
  spec.summaries_per_video = 10;
  generate_synthetic(spec, dir.path());
  const Dataset data = load_dataset(dir / "manifest.json");
  const Rng shuffle = Rng::stream(42, "shuffle");
  const auto plain = iterate_split(data, Split::Train, shuffle, 1, false);
  REQUIRE(plain.size() == 30);
  for (std::size_t i = 1; i < plain.size(); ++i) {
    CHECK(std::make_pair(plain[i - 1].video, plain[i - 1].summary) < std::make_pair(plain[i].video, plain[i].summary));
  }
  auto key = [](const std::vector<Sample>& s) {
    std::vector<std::pair<std::size_t, std::size_t>> k;
    for (const auto& x : s) k.push_back({x.video, x.summary});
    return k;
  };
  const auto e1 = key(iterate_split(data, Split::Train, shuffle, 1, true));
  CHECK(e1 == key(iterate_split(data, Split::Train, Rng::stream(42, "shuffle"), 1, true)));
  CHECK(e1 != key(iterate_split(data, Split::Train, shuffle, 2, true)));
  CHECK(std::set(e1.begin(), e1.end()).size() == 30);
}
