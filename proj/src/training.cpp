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

#include "gnt/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

namespace gnt {

// ---------------------------------------------------------------------------
// Schedules

void Schedule::validate() const {
  if (!(alpha_target >= 0.0 && alpha_target <= 1.0) || alpha_slope < 0.0 ||
      lambda_target < 0.0 || lambda_ramp_epochs < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "bad schedule");
  }
}

double alpha_schedule(double epoch, const Schedule& s) {
  if (epoch < s.branch_epoch) return 1.0;
  const double a = 1.0 - s.alpha_slope * (epoch - s.branch_epoch);
  return std::clamp(a, s.alpha_target, 1.0);
}

double lambda_schedule(double epoch, const Schedule& s) {
  const double start = s.branch_epoch - s.lambda_ramp_epochs;
  if (epoch >= s.branch_epoch) return s.lambda_target;
  if (epoch <= start || s.lambda_ramp_epochs <= 0.0) return 0.0;
  return s.lambda_target * (epoch - start) / s.lambda_ramp_epochs;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamState AdamState::like(const ModelParams& params) {
  return {ModelParams::zeros(params.config), ModelParams::zeros(params.config), 0};
}

void optimizer_step(ModelParams& params, const ModelParams& grads,
                    AdamState& state, const AdamHyper& h) {
  if (!grads.all_finite()) {
    throw Error(ErrorCode::kNonFiniteGradient,
                "non-finite gradient at optimizer step " +
                    std::to_string(state.step + 1));
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].value->size() == 0) continue;
    *m[i].value = h.beta1 * *m[i].value + (1.0 - h.beta1) * *g[i].value;
    *v[i].value = h.beta2 * *v[i].value +
                  (1.0 - h.beta2) * g[i].value->cwiseProduct(*g[i].value);
    *p[i].value -= (h.lr * (m[i].value->array() / c1) /
                    ((v[i].value->array() / c2).sqrt() + h.eps))
                       .matrix();
  }
  ++params.version;
}

// ---------------------------------------------------------------------------
// Guard

double default_guard_floor() { return std::log(std::expm1(1e-6)); }

GuardReport competitor_mass_guard(const std::vector<GuardInput>& batch,
                                  double floor) {
  GuardReport r;
  if (batch.empty()) {
    r.fired = true;
    return r;
  }
  std::vector<double> margins;
  double loss = 0.0;
  for (const GuardInput& in : batch) {
    double margin = kLogZero<double>;
    if (!in.competitor_scores.empty()) {
      margin = logsumexp(in.competitor_scores) - in.reference_score;
    }
    margins.push_back(margin);
    // global_nbest_loss = log(1 + exp(margin))
    loss += margin > 0 ? margin + std::log1p(std::exp(-margin))
                       : std::log1p(std::exp(margin));
  }
  r.margin = logsumexp(margins) - std::log(static_cast<double>(batch.size()));
  r.global_loss = loss / static_cast<double>(batch.size());
  r.fired = !(r.margin >= floor);
  return r;
}

// ---------------------------------------------------------------------------
// Metrics

std::string to_json_line(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["batch"] = r.batch;
  j["step"] = r.step;
  j["progress"] = r.progress;
  j["loss"] = r.loss;
  j["nll"] = r.nll;
  j["reg_metric"] = r.reg_metric;
  j["alpha"] = r.alpha;
  j["lambda"] = r.lambda;
  // JSON has no infinities; -inf margin is written as null.
  j["guard"] = {{"margin", std::isfinite(r.guard_margin)
                               ? nlohmann::ordered_json(r.guard_margin)
                               : nlohmann::ordered_json(nullptr)},
                {"fired", r.guard_fired}};
  j["utterances"] = r.utterances;
  return j.dump();
}

MetricsRecord metrics_from_json(const std::string& line) {
  MetricsRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.epoch = j.at("epoch").get<int>();
    r.batch = j.at("batch").get<int>();
    r.step = j.at("step").get<std::int64_t>();
    r.progress = j.at("progress").get<double>();
    r.loss = j.at("loss").get<double>();
    r.nll = j.at("nll").get<double>();
    r.reg_metric = j.at("reg_metric").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.lambda = j.at("lambda").get<double>();
    const auto& g = j.at("guard");
    r.guard_margin = g.at("margin").is_null() ? kLogZero<double>
                                              : g.at("margin").get<double>();
    r.guard_fired = g.at("fired").get<bool>();
    r.utterances = j.value("utterances", 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad metrics line: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Batching and parallelism

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::vector<std::size_t>> make_batches(const Dataset& data,
                                                   int budget,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  int frames = 0;
  for (std::size_t i : order) {
    const int f = std::max(1, data[i].frames());
    if (!current.empty() && frames + f > budget) {
      batches.push_back(std::move(current));
      current.clear();
      frames = 0;
    }
    current.push_back(i);
    frames += f;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

void TrainConfig::validate() const {
  if (nbest < 1 || refresh_period < 1 || batch_budget < 1 || epochs < 0 ||
      beam < nbest || max_emissions < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad training configuration");
  }
}

// ---------------------------------------------------------------------------
// Objective over a batch

double loss_divisor(const Dataset& data, const std::vector<std::size_t>& batch,
                    LossNormalization normalization) {
  if (normalization == LossNormalization::kPerUtterance) {
    return static_cast<double>(batch.size());
  }
  double frames = 0.0;
  for (std::size_t idx : batch) frames += std::max(1, data[idx].frames());
  return frames;
}

namespace {

struct UtteranceWork {
  double interpolated = 0;
  double reg_sum = 0;       // over all hypothesis grids
  double ref_reg_sum = 0;   // over the reference grid only
  std::size_t ref_rows = 0;
  GuardInput guard{};
  ModelParams grads;
};

}  // namespace

BatchResult batch_objective(const Dataset& data,
                            const std::vector<std::size_t>& batch,
                            const std::vector<HypothesisSet>& hypotheses,
                            const ModelParams& params, double alpha,
                            double lambda, ModelParams* grads, int jobs,
                            double guard_floor, LossNormalization normalization) {
  const InterpolationWeight weight(alpha);
  const double n = loss_divisor(data, batch, normalization);

  std::size_t total_rows = 0;
  for (std::size_t idx : batch) {
    const int frames = data[idx].frames();
    for (const auto& z : hypotheses[idx].hypotheses) {
      total_rows += static_cast<std::size_t>(frames + 1) * (z.size() + 1);
    }
  }
  const double reg_scale = total_rows ? lambda / static_cast<double>(total_rows) : 0.0;

  std::vector<UtteranceWork> work(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t slot) {
    const Utterance& u = data[batch[slot]];
    const HypothesisSet& H = hypotheses[batch[slot]];
    UtteranceWork& w = work[slot];

    const EncoderOutput enc = encode(u.features, params);
    std::vector<PredictorStates> preds;
    std::vector<JointOutput> joints;
    std::vector<Grid> grids;
    for (const auto& z : H.hypotheses) {
      preds.push_back(predict(z, params));
      joints.push_back(joint(enc, preds.back(), params));
      joints.back().grid.deadlines = u.deadlines;
      grids.push_back(joints.back().grid);
    }

    MultiGridLoss main = interpolated_loss(grids, H, weight);
    w.interpolated = main.loss;

    for (std::size_t i = 0; i < grids.size(); ++i) {
      main.grads[i].rows() *= 1.0 / n;
      const auto acc = accumulate_regularizer(
          grids[i], lambda > 0.0 ? &main.grads[i] : nullptr, reg_scale);
      w.reg_sum += acc.sum_squares;
      if (i == H.ref_index) {
        w.ref_reg_sum = acc.sum_squares;
        w.ref_rows = acc.rows;
        w.guard.reference_score = forward_score(grids[i], H.hypotheses[i]);
      } else {
        w.guard.competitor_scores.push_back(
            forward_score(grids[i], H.hypotheses[i]));
      }
    }

    if (grads != nullptr) {
      w.grads = ModelParams::zeros(params.config);
      Matrix enc_grad = Matrix::Zero(enc.length(), params.config.model_dim);
      for (std::size_t i = 0; i < grids.size(); ++i) {
        Matrix pred_grad = Matrix::Zero(preds[i].size(), params.config.model_dim);
        backprop_joint(main.grads[i], enc, preds[i], joints[i], params, w.grads,
                       enc_grad, pred_grad);
        backprop_predictor(pred_grad, preds[i], params, w.grads);
      }
      backprop_encoder(enc_grad, enc, params, w.grads);
    }
  });

  BatchResult out;
  double reg_total = 0.0;
  double ref_reg_total = 0.0;
  std::size_t ref_rows = 0;
  std::vector<GuardInput> guard_inputs;
  for (auto& w : work) {
    out.nll += w.interpolated / n;
    reg_total += w.reg_sum;
    ref_reg_total += w.ref_reg_sum;
    ref_rows += w.ref_rows;
    guard_inputs.push_back(std::move(w.guard));
    if (grads != nullptr) accumulate(*grads, w.grads);
  }
  const double reg_value = total_rows ? reg_total / static_cast<double>(total_rows) : 0.0;
  out.loss = out.nll + lambda * reg_value;
  out.reg_metric = ref_rows ? ref_reg_total / static_cast<double>(ref_rows) : 0.0;
  out.guard = competitor_mass_guard(guard_inputs, guard_floor);
  return out;
}

HypothesisSet refresh_hypotheses(const Utterance& u, const ModelParams& params,
                                 const TrainConfig& config, double alpha) {
  SearchOptions search;
  search.beam = config.beam;
  search.nbest = config.nbest;
  search.max_emissions = config.max_emissions;
  search.alpha = alpha;
  return build_training_hypotheses(u.features, u.tokens, params, search,
                                   u.deadlines);
}

// ---------------------------------------------------------------------------
// Loop

ModelParams train(const Dataset& data, ModelParams params,
                  const TrainConfig& config, const Schedule& schedule,
                  const TrainCallbacks& callbacks) {
  config.validate();
  schedule.validate();
  if (data.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "training dataset is empty");
  }
  AdamState adam = AdamState::like(params);
  std::vector<HypothesisSet> hypotheses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    hypotheses[i].hypotheses = {data[i].tokens};
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = make_batches(
        data, config.batch_budget,
        derive_seed(config.seed, "batching:" + std::to_string(epoch)));
    const double nb = static_cast<double>(batches.size());
    bool window_searched = false;
    double alpha = 1.0;

    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double progress = epoch + static_cast<double>(b) / nb;
      alpha = alpha_schedule(progress, schedule);
      const double lambda = lambda_schedule(progress, schedule);
      const bool needs_search = alpha < 1.0 || lambda > 0.0;

      const bool window_start = b % static_cast<std::size_t>(config.refresh_period) == 0;
      if (window_start) window_searched = false;
      if (window_start || (needs_search && !window_searched)) {
        // Regenerate competitors for the rest of this refresh window.
        const std::size_t end =
            std::min(batches.size(),
                     (b / config.refresh_period + 1) * config.refresh_period);
        std::vector<std::size_t> members;
        for (std::size_t k = b; k < end; ++k) {
          members.insert(members.end(), batches[k].begin(), batches[k].end());
        }
        parallel_for(members.size(), config.jobs, [&](std::size_t i) {
          const Utterance& u = data[members[i]];
          HypothesisSet& H = hypotheses[members[i]];
          if (needs_search) {
            H = refresh_hypotheses(u, params, config, alpha);
          } else {
            H = HypothesisSet{{u.tokens}, 0};
          }
        });
        window_searched = needs_search;
      }

      ModelParams grads = ModelParams::zeros(params.config);
      const BatchResult r =
          batch_objective(data, batches[b], hypotheses, params, alpha, lambda,
                          &grads, config.jobs, config.guard_floor,
                          config.normalization);
      if (!std::isfinite(r.loss)) {
        throw Error(ErrorCode::kDivergence,
                    "non-finite loss at epoch " + std::to_string(epoch) +
                        " batch " + std::to_string(b) + " (alpha=" +
                        std::to_string(alpha) + ", lambda=" +
                        std::to_string(lambda) + ", nll=" + std::to_string(r.nll) +
                        ")");
      }
      optimizer_step(params, grads, adam, config.adam);

      if (callbacks.on_batch) {
        MetricsRecord rec;
        rec.epoch = epoch;
        rec.batch = static_cast<int>(b);
        rec.step = adam.step;
        rec.progress = progress;
        rec.loss = r.loss;
        rec.nll = r.nll;
        rec.reg_metric = r.reg_metric;
        rec.alpha = alpha;
        rec.lambda = lambda;
        rec.guard_margin = r.guard.margin;
        rec.guard_fired = r.guard.fired && alpha < 1.0;
        rec.utterances = static_cast<int>(batches[b].size());
        callbacks.on_batch(rec);
      }
    }
    if (callbacks.on_epoch) {
      callbacks.on_epoch(epoch, params,
                         alpha_schedule(epoch + 1.0, schedule));
    }
  }
  return params;
}

double mean_local_nll(const Dataset& data, const ModelParams& params) {
  double total = 0.0;
  for (const Utterance& u : data) {
    const EncoderOutput enc = encode(u.features, params);
    Grid g = joint_grid(enc, predict(u.tokens, params), params);
    g.deadlines = u.deadlines;
    total += local_nll(g, u.tokens).loss;
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

double mean_nbest_nll(const Dataset& data, const ModelParams& params,
                      double alpha, const SearchOptions& search) {
  double total = 0.0;
  for (const Utterance& u : data) {
    SearchOptions s = search;
    s.alpha = alpha;
    const HypothesisSet H = build_training_hypotheses(u.features, u.tokens,
                                                      params, s, u.deadlines);
    const EncoderOutput enc = encode(u.features, params);
    std::vector<Grid> grids;
    for (const auto& z : H.hypotheses) {
      grids.push_back(joint_grid(enc, predict(z, params), params));
      grids.back().deadlines = u.deadlines;
    }
    total += interpolated_loss(grids, H, InterpolationWeight(alpha)).loss;
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

}  // namespace gnt
