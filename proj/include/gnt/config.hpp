// Copyright 2026  The gnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Flat key=value run configuration. One setting per line, '#' starts a
// comment, whitespace around keys and values is ignored:
//
//   train.epochs = 40
//   schedule.alpha_target = 0.3
//
// Every key is listed by config_keys().

#include <string>
#include <utility>
#include <vector>

#include "gnt/dataset.hpp"
#include "gnt/training.hpp"

namespace gnt {

enum class TaskKind { kMailNail, kSynthetic, kFile };

struct DataConfig {
  TaskKind task = TaskKind::kMailNail;
  std::string path;         // kFile only
  double ambiguity = 1.0;   // mail/nail
  int copies = 16;          // mail/nail pairs
  SyntheticSpec synthetic;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  double init_scale = 0.1;
  TrainConfig train;
  Schedule schedule;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// All recognised keys with a one-line description each.
const std::vector<ConfigKey>& config_keys();

/// Applies one setting. Throws kParse for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key,
                   const std::string& value);

RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const RunConfig& config);

/// Builds the dataset described by config.data, drawing from the "dataset"
/// sub-stream of train.seed.
Dataset make_dataset(const RunConfig& config);

/// Throws kDimensionMismatch / kTokenOutOfRange if the data does not fit the
/// model.
void check_dataset(const Dataset& data, const ModelConfig& model);

}  // namespace gnt
