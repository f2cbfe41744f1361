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

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gnt/dataset.hpp"
#include "gnt/losses.hpp"
#include "gnt/search.hpp"

namespace gnt {

// ---------------------------------------------------------------------------
// Schedules. Epochs are real-valued: epoch e plus the fraction of its batches
// already done.

struct Schedule {
  double branch_epoch = 10;       // global-normalization training starts here
  double alpha_target = 0.3;
  double alpha_slope = 0.25;      // per epoch
  double lambda_target = 0.01;
  double lambda_ramp_epochs = 1;  // ramp ends at branch_epoch
  void validate() const;
};

/// 1 before branch_epoch, then 1 - slope * (e - branch), never below target.
double alpha_schedule(double epoch, const Schedule& s);
/// Linear from 0 at branch - ramp to lambda_target at branch.
double lambda_schedule(double epoch, const Schedule& s);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;
  static AdamState like(const ModelParams& params);
};

/// Adaptive-moment step. Throws kNonFiniteGradient before touching params.
void optimizer_step(ModelParams& params, const ModelParams& grads,
                    AdamState& state, const AdamHyper& hyper);

// ---------------------------------------------------------------------------
// Collapse guard

struct GuardReport {
  /// log(mean_i exp(logsumexp(competitors_i) - ref_i)); -inf with no
  /// competitors at all.
  double margin = -std::numeric_limits<double>::infinity();
  double global_loss = 0;  // mean over utterances of global_nbest_loss
  bool fired = false;
};

/// Global loss of 1e-6 corresponds to margin log(expm1(1e-6)).
double default_guard_floor();

struct GuardInput {
  double reference_score;
  std::vector<double> competitor_scores;
};

GuardReport competitor_mass_guard(const std::vector<GuardInput>& batch,
                                  double floor = default_guard_floor());

// ---------------------------------------------------------------------------
// Training loop

/// How a batch combines per-utterance losses: divided by the summed frame
/// count of the batch (the default) or averaged over utterances.
enum class LossNormalization { kPerFrame, kPerUtterance };

struct TrainConfig {
  int epochs = 40;
  int nbest = 10;              // N
  int refresh_period = 20;     // batches between beam-search refreshes
  int batch_budget = 2000;     // max summed frames per batch
  int beam = 16;               // B used while training
  int max_emissions = 4;       // E
  std::uint64_t seed = 1;
  AdamHyper adam;
  double guard_floor = default_guard_floor();
  int jobs = 1;
  LossNormalization normalization = LossNormalization::kPerFrame;
  void validate() const;
};

struct MetricsRecord {
  int epoch = 0;
  int batch = 0;
  std::int64_t step = 0;
  double progress = 0;       // real-valued epoch
  double loss = 0;           // total objective, batch mean
  double nll = 0;            // interpolated loss, batch normalized
  double reg_metric = 0;     // mean squared row log-sum over reference grids
  double alpha = 1;
  double lambda = 0;
  double guard_margin = 0;
  bool guard_fired = false;
  int utterances = 0;
};

std::string to_json_line(const MetricsRecord& r);
MetricsRecord metrics_from_json(const std::string& line);

struct TrainCallbacks {
  std::function<void(const MetricsRecord&)> on_batch;
  std::function<void(int epoch, const ModelParams&, double alpha)> on_epoch;
};

/// Deterministic batches over a shuffled order, packed by summed frames.
std::vector<std::vector<std::size_t>> make_batches(const Dataset& data,
                                                   int budget,
                                                   std::uint64_t seed);

/// Objective over one batch: summed interpolated loss over utterances,
/// normalized per `normalization`, plus lambda times the regularizer averaged
/// over every row of every hypothesis grid in the batch. Gradients are
/// accumulated into `grads` when non-null.
struct BatchResult {
  double loss = 0;
  double nll = 0;
  double reg_metric = 0;
  GuardReport guard;
};
BatchResult batch_objective(const Dataset& data,
                            const std::vector<std::size_t>& batch,
                            const std::vector<HypothesisSet>& hypotheses,
                            const ModelParams& params, double alpha,
                            double lambda, ModelParams* grads, int jobs = 1,
                            double guard_floor = default_guard_floor(),
                            LossNormalization normalization =
                                LossNormalization::kPerFrame);

/// Divisor applied to the summed loss of a batch.
double loss_divisor(const Dataset& data, const std::vector<std::size_t>& batch,
                    LossNormalization normalization);

/// Full loop; returns the final parameters.
ModelParams train(const Dataset& data, ModelParams params,
                  const TrainConfig& config, const Schedule& schedule,
                  const TrainCallbacks& callbacks = {});

/// Mean local_nll over a dataset, per utterance.
double mean_local_nll(const Dataset& data, const ModelParams& params);

/// Mean interpolated loss using a fresh N-best list per utterance.
double mean_nbest_nll(const Dataset& data, const ModelParams& params,
                      double alpha, const SearchOptions& search);

/// Hypothesis set for one utterance with the search settings of `config`.
HypothesisSet refresh_hypotheses(const Utterance& u, const ModelParams& params,
                                 const TrainConfig& config, double alpha);

/// Run fn(i) for i in [0, n) over `jobs` threads. Callers write results to
/// per-index slots, so the outcome is independent of `jobs`.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gnt
