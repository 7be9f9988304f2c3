// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdvsum/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdvsum/metrics.hpp"
#include "sdvsum/summarize.hpp"

namespace sdvsum {

std::vector<AblationVariant> ablation_variants(const ModelConfig& base) {
  auto make = [&base](TextRep rep, std::size_t heads, bool scaling) {
    ModelConfig c = base;
    c.text_rep = rep;
    c.heads = heads;
    c.use_scaling = scaling;
    return c;
  };
  return {
      {"SD-VSum", make(TextRep::MultiVector, 8, false)},
      {"Variant1", make(TextRep::SingleVector, 8, false)},
      {"Variant2", make(TextRep::SingleVector, 8, true)},
      {"Variant3", make(TextRep::SingleVector, 4, true)},
      {"Variant4", make(TextRep::MultiVector, 8, true)},
  };
}

std::vector<AblationRow> run_ablation(const Dataset& data, const RunConfig& config,
                                      const std::filesystem::path& out_dir, std::ostream* log) {
  std::vector<AblationRow> rows;
  for (const AblationVariant& v : ablation_variants(config.model)) {
    TrainOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir / v.name;
    opts.log = log;
    if (log != nullptr) *log << "# training " << v.name << '\n';
    const TrainResult r = train_run(data, v.config, config.train, opts);
    AblationRow row;
    row.name = v.name;
    row.config = v.config;
    row.parameters = parameter_count<float>(v.config);
    row.best_epoch = r.report.best_epoch;
    row.val_fscore = r.report.best_val_fscore;
    row.test_fscore = evaluate(model_scorer(r.best_weights, v.config), data, Split::Test, config.train.mode).fscore;
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << "name,text_rep,heads,scaling,parameters,best_epoch,val_fscore,test_fscore\n";
  char buf[64];
  for (const AblationRow& r : rows) {
    out << r.name << ',' << to_string(r.config.text_rep) << ',' << r.config.heads << ','
        << (r.config.use_scaling ? "yes" : "no") << ',' << r.parameters << ',' << r.best_epoch;
    std::snprintf(buf, sizeof buf, ",%.2f,%.2f\n", r.val_fscore, r.test_fscore);
    out << buf;
  }
}

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load_run_config(const std::string& path) {
  return path.empty() ? RunConfig{} : parse_config(path);
}

Checkpoint open_checkpoint(const std::string& path, const std::string& config_path) {
  if (config_path.empty()) return load_checkpoint(path);
  return load_checkpoint(path, parse_config(config_path).model);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  f << text;
}

std::vector<std::string> read_ids(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read video id list " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.push_back(line.substr(b, e - b + 1));
  }
  return ids;
}

std::vector<Fragment> parse_fragments_option(const std::string& spec, std::size_t frames,
                                             const std::string& manifest, const std::string& video) {
  if (spec == "from-manifest") {
    if (manifest.empty() || video.empty()) throw Usage("--fragments from-manifest needs --manifest and --video");
    const DatasetManifest m = load_manifest(manifest);
    const VideoEntry* e = m.find(video);
    if (e == nullptr) throw DataError("video '" + video + "' is not in the manifest");
    if (e->fragments.empty()) throw DataError("video '" + video + "' has no fragments in the manifest");
    validate_fragments(e->fragments, frames);
    return e->fragments;
  }
  if (spec.rfind("fixed:", 0) == 0) {
    std::size_t len = 0;
    try {
      len = std::stoul(spec.substr(6));
    } catch (const std::exception&) {
      throw Usage("bad --fragments value '" + spec + "'");
    }
    if (len < 1) throw Usage("fragment length must be >= 1");
    return fixed_fragmentation(frames, len);
  }
  throw Usage("--fragments must be from-manifest or fixed:<len>, got '" + spec + "'");
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Script-driven video summarization toolkit"};
  app.name("sdvsum");
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  auto add_seed = [&seed](CLI::App* sub) { sub->add_option("--seed", seed, "master seed (overrides the config; default 42)"); };

  std::string spec_path, out_dir, manifest, config_path, checkpoint, split = "test", mode = "script";
  std::string overlap_ids, overlap_out = "overlap.csv", report_out;
  std::string frames_path, script_path, fragments = "fixed:5", video_id;
  double budget_frac = kSummaryFraction;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "config file with synth_* keys");
  synth->add_option("--out", out_dir, "output directory")->required();
  add_seed(synth);

  auto* train = app.add_subcommand("train", "train a model and write per-epoch checkpoints");
  train->add_option("--manifest", manifest)->required();
  train->add_option("--config", config_path);
  train->add_option("--out", out_dir)->required();
  add_seed(train);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--config", config_path, "require the checkpoint to match this config");
  eval->add_option("--split", split)->check(CLI::IsMember({"validation", "test"}))->capture_default_str();
  eval->add_option("--mode", mode)->check(CLI::IsMember({"script", "generic"}))->capture_default_str();
  eval->add_option("--overlap", overlap_ids, "file of video ids, one per line");
  eval->add_option("--overlap-out", overlap_out)->capture_default_str();
  eval->add_option("--report", report_out, "also write the report JSON here");

  auto* summ = app.add_subcommand("summarize", "summarize one video");
  summ->add_option("--checkpoint", checkpoint)->required();
  summ->add_option("--config", config_path);
  summ->add_option("--frames", frames_path)->required();
  summ->add_option("--script", script_path)->required();
  summ->add_option("--budget-frac", budget_frac)->capture_default_str();
  summ->add_option("--fragments", fragments, "from-manifest or fixed:<len>")->capture_default_str();
  summ->add_option("--manifest", manifest);
  summ->add_option("--video", video_id);
  summ->add_option("--out", report_out, "write the summary JSON here instead of stdout");

  auto* ablate = app.add_subcommand("ablate", "train SD-VSum and Variant1..4 on one dataset");
  ablate->add_option("--manifest", manifest)->required();
  ablate->add_option("--config", config_path);
  ablate->add_option("--out", out_dir)->required();
  add_seed(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      RunConfig rc = load_run_config(spec_path);
      if (synth->count("--seed") > 0) rc.synth.seed = seed;
      const DatasetManifest m = generate_synthetic(rc.synth, out_dir);
      out << (std::filesystem::path(out_dir) / "manifest.json").string() << ": " << m.videos.size()
          << " videos\n";
    } else if (train->parsed()) {
      RunConfig rc = load_run_config(config_path);
      if (train->count("--seed") > 0) rc.train.seed = seed;
      const Dataset data = load_dataset(manifest);
      TrainOptions opts;
      opts.out_dir = out_dir;
      opts.log = &out;
      train_run(data, rc.model, rc.train, opts);
    } else if (eval->parsed()) {
      const Checkpoint ck = open_checkpoint(checkpoint, config_path);
      const Dataset data = load_dataset(manifest);
      const TaskMode tm = parse_task_mode(mode);
      const FrameScorer scorer = model_scorer(ck.weights, ck.config);
      const EvalReport report = evaluate(scorer, data, parse_split(split), tm);
      const std::string json = report_to_json(report);
      if (!report_out.empty()) write_text(report_out, json + "\n");
      out << json << '\n';
      if (report.degenerate > 0) err << report.degenerate << " degenerate videos excluded from tau/rho\n";
      if (!overlap_ids.empty()) {
        const auto ids = read_ids(overlap_ids);
        const OverlapMatrix om = overlap_matrix(scorer, data, ids, tm);
        std::ostringstream csv;
        write_overlap_csv(om, csv);
        write_text(overlap_out, csv.str());
      }
    } else if (summ->parsed()) {
      const Checkpoint ck = open_checkpoint(checkpoint, config_path);
      const Matrix frames = read_embeddings(frames_path);
      const Matrix script = read_embeddings(script_path);
      if (!(budget_frac > 0.0 && budget_frac <= 1.0)) throw Usage("--budget-frac must lie in (0, 1]");
      const auto n = static_cast<std::size_t>(frames.rows());
      const auto frags = parse_fragments_option(fragments, n, manifest, video_id);
      const auto scores = predict(ck.weights, ck.config, frames, script);
      const auto budget = static_cast<std::size_t>(std::floor(budget_frac * static_cast<double>(n)));
      const auto chosen = fragment_knapsack(scores, frags, budget);
      nlohmann::json j;
      j["video_id"] = video_id.empty() ? std::filesystem::path(frames_path).stem().string() : video_id;
      j["selected_frames"] = frames_of(frags, chosen);
      j["selected_fragments"] = nlohmann::json::array();
      for (std::size_t i : chosen) j["selected_fragments"].push_back({frags[i].start, frags[i].end});
      if (report_out.empty()) {
        out << j.dump() << '\n';
      } else {
        write_text(report_out, j.dump() + "\n");
      }
    } else if (ablate->parsed()) {
      RunConfig rc = load_run_config(config_path);
      if (ablate->count("--seed") > 0) rc.train.seed = seed;
      const Dataset data = load_dataset(manifest);
      const auto rows = run_ablation(data, rc, out_dir, &err);
      std::ostringstream table;
      write_ablation_table(rows, table);
      write_text(std::filesystem::path(out_dir) / "ablation.csv", table.str());
      out << table.str();
    }
  } catch (const Usage& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace sdvsum
