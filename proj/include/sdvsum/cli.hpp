// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "sdvsum/config.hpp"

namespace sdvsum {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct AblationVariant {
  std::string name;
  ModelConfig config;
};

// SD-VSum and Variant1..4 derived from `base` (dims, dropout and scorer are kept).
std::vector<AblationVariant> ablation_variants(const ModelConfig& base);

struct AblationRow {
  std::string name;
  ModelConfig config;
  std::size_t parameters = 0;
  std::size_t best_epoch = 0;
  double val_fscore = 0.0;
  double test_fscore = 0.0;
};

// Trains every variant on `data` with the same train config and seed.
std::vector<AblationRow> run_ablation(const Dataset& data, const RunConfig& config,
                                      const std::filesystem::path& out_dir, std::ostream* log);

void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out);

}  // namespace sdvsum
