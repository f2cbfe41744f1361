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

// End-to-end experiments shared by the command-line tool and the acceptance
// suite.

#include <vector>

#include "gnt/latency.hpp"
#include "gnt/training.hpp"

namespace gnt {

// ---------------------------------------------------------------------------
// mail/nail label bias

struct LabelBiasConfig {
  int copies = 16;             // utterance pairs
  double ambiguity = 1.0;
  std::uint64_t seed = 1;
  ModelConfig model = default_model();
  double init_scale = 0.1;
  TrainConfig train = default_train();
  Schedule schedule = default_schedule();
  int eval_beam = 16;
  double frame_ms = 10.0;

  static ModelConfig default_model();
  static TrainConfig default_train();
  static Schedule default_schedule();
};

struct SystemSummary {
  ModelParams params;
  double alpha = 1.0;
  double nll = 0;                       // mean per-utterance
  std::vector<TokenSequence> decodes;   // full-audio top-1, dataset order
  double token_error = 0;               // percent, corpus level
  LatencyReport latency;
  std::vector<MetricsRecord> metrics;
};

struct LabelBiasResult {
  Dataset data;
  SystemSummary local;
  SystemSummary global;
  double latency_delta_ms = 0;  // global - local
};

/// Trains a locally normalized model (alpha pinned to 1, no regularizer)
/// and a model on the full global schedule from the same initialization.
/// Local NLL is the exact normalized loss. The global system is read at
/// alpha = 0: its NLL takes the normalizer over a fresh N-best list, and its
/// decodes and latency use the raw weights.
LabelBiasResult run_label_bias(const LabelBiasConfig& config);

// ---------------------------------------------------------------------------
// Regularizer on the synthetic task

struct RegularizerConfig {
  SyntheticSpec data;
  std::uint64_t seed = 1;
  ModelConfig model;
  double init_scale = 0.1;
  TrainConfig train;
  double ramp_start = 8;      // epoch where lambda starts rising
  double ramp_epochs = 0.75;
  double lambda_target = 0.01;
  double window = 0.1;        // epochs averaged for the pre/post readings
  RegularizerConfig();
};

struct RegularizerResult {
  std::vector<MetricsRecord> baseline;   // lambda = 0
  std::vector<MetricsRecord> ramped;
  double pre_ramp_metric = 0;    // mean over the window ending at ramp start
  double post_ramp_metric = 0;   // mean over the window ending 2 epochs later
  double baseline_nll = 0;       // final held-out local NLL
  double ramped_nll = 0;
};

RegularizerResult run_regularizer_experiment(const RegularizerConfig& config);

/// Mean of `field` over the records with progress in [from, to).
double mean_over(const std::vector<MetricsRecord>& records, double from,
                 double to, double MetricsRecord::*field);

}  // namespace gnt
