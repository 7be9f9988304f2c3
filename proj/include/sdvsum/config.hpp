// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

// Flat `key = value` run configuration shared by every subcommand.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sdvsum/datakit.hpp"
#include "sdvsum/model.hpp"
#include "sdvsum/train.hpp"

namespace sdvsum {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SynthSpec synth;
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path out_dir;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every accepted key with its default, in documentation order.
std::vector<ConfigKey> config_keys();

// Unknown keys, malformed values and inconsistent model shapes raise
// ConfigError naming the line.
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::filesystem::path& path);

// Applies one assignment; used by the parser and by command-line overrides.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

std::string config_to_text(const RunConfig& config);

}  // namespace sdvsum
