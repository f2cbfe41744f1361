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

#include "gnt/experiments.hpp"

#include <limits>

#include "gnt/wer.hpp"

namespace gnt {

ModelConfig LabelBiasConfig::default_model() {
  ModelConfig m;
  m.feature_dim = mail_nail::kFeatureDim;
  m.vocab = mail_nail::kVocab;
  return m;
}

TrainConfig LabelBiasConfig::default_train() {
  TrainConfig t;
  t.epochs = 60;
  t.batch_budget = 80;
  t.adam.lr = 3e-2;
  return t;
}

Schedule LabelBiasConfig::default_schedule() {
  Schedule s;
  s.branch_epoch = 15;  // a quarter of the run
  return s;
}

namespace {

std::vector<std::string> words(const TokenSequence& z) {
  std::vector<std::string> w;
  for (int t : z) w.push_back(std::to_string(t));
  return w;
}

SystemSummary train_system(const Dataset& data, const ModelParams& init,
                           const LabelBiasConfig& config,
                           const Schedule& schedule, double eval_alpha) {
  SystemSummary s;
  TrainCallbacks callbacks;
  callbacks.on_batch = [&](const MetricsRecord& r) { s.metrics.push_back(r); };
  s.params = train(data, init, config.train, schedule, callbacks);
  s.alpha = eval_alpha;

  SearchOptions search;
  search.beam = config.eval_beam;
  search.nbest = config.train.nbest;
  search.max_emissions = config.train.max_emissions;
  if (s.alpha == 1.0) {
    s.nll = mean_local_nll(data, s.params);
  } else {
    s.nll = mean_nbest_nll(data, s.params, s.alpha, search);
  }

  std::vector<std::vector<std::string>> refs, hyps;
  for (const Utterance& u : data) {
    s.decodes.push_back(decode(u.features, s.params, config.eval_beam, s.alpha,
                               u.deadlines, config.train.max_emissions));
    refs.push_back(words(u.tokens));
    hyps.push_back(words(s.decodes.back()));
  }
  s.token_error = corpus_wer(refs, hyps).rate;
  s.latency = average_emission_time(data, s.params, s.alpha, config.frame_ms);
  return s;
}

}  // namespace

LabelBiasResult run_label_bias(const LabelBiasConfig& config) {
  LabelBiasResult r;
  r.data = make_mail_nail_dataset(config.ambiguity, config.copies,
                                  derive_seed(config.seed, "dataset"));
  const ModelParams init = ModelParams::random(
      config.model, derive_seed(config.seed, "init"), config.init_scale);

  Schedule local = config.schedule;
  local.branch_epoch = std::numeric_limits<double>::infinity();
  local.lambda_target = 0.0;
  r.local = train_system(r.data, init, config, local, 1.0);
  r.global = train_system(r.data, init, config, config.schedule, 0.0);
  r.latency_delta_ms = latency_delta(r.global.latency, r.local.latency).delta_ms;
  return r;
}

RegularizerConfig::RegularizerConfig() {
  data.count = 1000;
  data.noise = 0.0;
  data.max_tokens = 3;
  model.feature_dim = data.feature_dim;
  model.vocab = data.vocab;
  train.epochs = 12;
  train.batch_budget = 120;
  train.adam.lr = 2e-2;
}

double mean_over(const std::vector<MetricsRecord>& records, double from,
                 double to, double MetricsRecord::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records) {
    if (r.progress >= from && r.progress < to) {
      sum += r.*field;
      ++n;
    }
  }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

RegularizerResult run_regularizer_experiment(const RegularizerConfig& config) {
  const Dataset all = make_synthetic_dataset(config.data,
                                             derive_seed(config.seed, "dataset"));
  const Split split = split_dataset(all, 5);
  const ModelParams init = ModelParams::random(
      config.model, derive_seed(config.seed, "init"), config.init_scale);

  // Alpha stays at 1 in both runs; only lambda differs.
  Schedule ramp;
  ramp.alpha_target = 1.0;
  ramp.lambda_target = config.lambda_target;
  ramp.lambda_ramp_epochs = config.ramp_epochs;
  ramp.branch_epoch = config.ramp_start + config.ramp_epochs;
  Schedule flat = ramp;
  flat.lambda_target = 0.0;

  RegularizerResult r;
  TrainCallbacks cb;
  cb.on_batch = [&](const MetricsRecord& m) { r.baseline.push_back(m); };
  const ModelParams base = train(split.train, init, config.train, flat, cb);
  cb.on_batch = [&](const MetricsRecord& m) { r.ramped.push_back(m); };
  const ModelParams reg = train(split.train, init, config.train, ramp, cb);

  const double w = config.window;
  r.pre_ramp_metric = mean_over(r.ramped, config.ramp_start - w,
                                config.ramp_start, &MetricsRecord::reg_metric);
  r.post_ramp_metric = mean_over(r.ramped, config.ramp_start + 2.0 - w,
                                 config.ramp_start + 2.0, &MetricsRecord::reg_metric);
  r.baseline_nll = mean_local_nll(split.held_out, base);
  r.ramped_nll = mean_local_nll(split.held_out, reg);
  return r;
}

}  // namespace gnt
