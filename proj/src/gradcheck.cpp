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

#include "gnt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "gnt/dataset.hpp"
#include "gnt/losses.hpp"

namespace gnt {

namespace {

constexpr double kStep = 1e-5;

double relative_error(const std::vector<double>& analytic,
                      const std::vector<double>& numeric) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 0.0 ? diff / scale : diff;
}

// Central differences of f over every entry of every grid.
template <typename F>
std::vector<double> grid_differences(std::vector<Grid> grids, F f) {
  std::vector<double> out;
  for (auto& g : grids) {
    for (Eigen::Index i = 0; i < g.rows().size(); ++i) {
      double& w = g.rows().data()[i];
      const double keep = w;
      w = keep + kStep;
      const double plus = f(grids);
      w = keep - kStep;
      const double minus = f(grids);
      w = keep;
      out.push_back((plus - minus) / (2 * kStep));
    }
  }
  return out;
}

std::vector<double> flatten(const std::vector<Grid>& grads) {
  std::vector<double> out;
  for (const auto& g : grads) {
    out.insert(out.end(), g.rows().data(), g.rows().data() + g.rows().size());
  }
  return out;
}

Grid random_grid(std::mt19937_64& rng, int T, int U, int K) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid g(T, U, K);
  for (Eigen::Index i = 0; i < g.rows().size(); ++i) g.rows().data()[i] = normal(rng);
  return g;
}

TokenSequence random_tokens(std::mt19937_64& rng, int U, int K) {
  std::uniform_int_distribution<int> token(1, K);
  TokenSequence z(static_cast<std::size_t>(U));
  for (int& t : z) t = token(rng);
  return z;
}

// Three distinct sequences of lengths drawn from 0..3, reference at a random slot.
HypothesisSet random_hypotheses(std::mt19937_64& rng, int K) {
  std::uniform_int_distribution<int> length(0, 3);
  HypothesisSet H;
  while (H.size() < 3) {
    TokenSequence z = random_tokens(rng, length(rng), K);
    if (std::find(H.hypotheses.begin(), H.hypotheses.end(), z) == H.hypotheses.end()) {
      H.hypotheses.push_back(std::move(z));
    }
  }
  H.ref_index = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
  return H;
}

}  // namespace

double GradCheckReport::grid_max() const {
  return std::max({occupancy, local, global, interpolated, regularizer});
}

GradCheckReport run_grad_check(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(derive_seed(seed, "grad-check"));
  std::uniform_int_distribution<int> frames(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int K = 3;
  GradCheckReport r;
  r.instances = instances;

  for (int n = 0; n < instances; ++n) {
    const int T = frames(rng);
    const int U = std::uniform_int_distribution<int>(0, 3)(rng);
    const TokenSequence z = random_tokens(rng, U, K);
    const std::vector<Grid> single = {random_grid(rng, T, U, K)};

    const auto fb = forward_backward(single[0], z);
    r.occupancy = std::max(r.occupancy, relative_error(
        flatten({fb.occupancy}),
        grid_differences(single, [&](const auto& g) { return forward_score(g[0], z); })));

    const GridLoss local = local_nll(single[0], z);
    r.local = std::max(r.local, relative_error(
        flatten({local.grad}),
        grid_differences(single, [&](const auto& g) { return local_nll(g[0], z).loss; })));

    const HypothesisSet H = random_hypotheses(rng, K);
    std::vector<Grid> grids;
    for (const auto& h : H.hypotheses) {
      grids.push_back(random_grid(rng, T, static_cast<int>(h.size()), K));
    }
    const auto global = global_nbest_loss(grids, H);
    r.global = std::max(r.global, relative_error(
        flatten(global.grads),
        grid_differences(grids, [&](const auto& g) { return global_nbest_loss(g, H).loss; })));

    const InterpolationWeight alpha(unit(rng));
    const auto interp = interpolated_loss(grids, H, alpha);
    r.interpolated = std::max(r.interpolated, relative_error(
        flatten(interp.grads),
        grid_differences(grids, [&](const auto& g) { return interpolated_loss(g, H, alpha).loss; })));

    const auto reg = normalization_regularizer(grids);
    r.regularizer = std::max(r.regularizer, relative_error(
        flatten(reg.grads),
        grid_differences(grids, [&](const auto& g) { return normalization_regularizer(g).value; })));
  }

  // End to end through the model.
  ModelConfig config;
  config.feature_dim = 3;
  config.context = 2;
  config.encoder_hidden = 5;
  config.model_dim = 4;
  config.embed_dim = 3;
  config.joiner_dim = 5;
  config.vocab = K;
  for (int n = 0; n < std::max(1, instances / 5); ++n) {
    ModelParams params = ModelParams::random(config, rng(), 0.5);
    const int T = frames(rng);
    Matrix features(T, config.feature_dim);
    for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = unit(rng) * 2 - 1;
    const HypothesisSet H = random_hypotheses(rng, K);
    const InterpolationWeight alpha(unit(rng));
    const double lambda = unit(rng);

    auto objective = [&](const ModelParams& p, ModelParams* grads) {
      const EncoderOutput enc = encode(features, p);
      std::vector<PredictorStates> preds;
      std::vector<JointOutput> joints;
      std::vector<Grid> grids;
      for (const auto& h : H.hypotheses) {
        preds.push_back(predict(h, p));
        joints.push_back(joint(enc, preds.back(), p));
        grids.push_back(joints.back().grid);
      }
      const Objective obj = total_objective(grids, H, alpha, lambda);
      if (grads != nullptr) {
        Matrix enc_grad = Matrix::Zero(enc.length(), p.config.model_dim);
        for (std::size_t i = 0; i < grids.size(); ++i) {
          Matrix pred_grad = Matrix::Zero(preds[i].size(), p.config.model_dim);
          backprop_joint(obj.grads[i], enc, preds[i], joints[i], p, *grads, enc_grad, pred_grad);
          backprop_predictor(pred_grad, preds[i], p, *grads);
        }
        backprop_encoder(enc_grad, enc, p, *grads);
      }
      return obj.loss;
    };

    ModelParams grads = ModelParams::zeros(config);
    objective(params, &grads);
    std::vector<double> analytic, numeric;
    auto values = tensors(params);
    auto g = tensors(grads);
    for (std::size_t k = 0; k < values.size(); ++k) {
      Matrix& m = *values[k].value;
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double keep = m.data()[i];
        m.data()[i] = keep + kStep;
        ++params.version;
        const double plus = objective(params, nullptr);
        m.data()[i] = keep - kStep;
        ++params.version;
        const double minus = objective(params, nullptr);
        m.data()[i] = keep;
        ++params.version;
        numeric.push_back((plus - minus) / (2 * kStep));
        analytic.push_back(g[k].value->data()[i]);
      }
    }
    r.parameters = std::max(r.parameters, relative_error(analytic, numeric));
  }
  return r;
}

std::string to_json(const GradCheckReport& r) {
  nlohmann::ordered_json j;
  j["instances"] = r.instances;
  j["occupancy"] = r.occupancy;
  j["local_nll"] = r.local;
  j["global_nbest_loss"] = r.global;
  j["interpolated_loss"] = r.interpolated;
  j["normalization_regularizer"] = r.regularizer;
  j["grid_max"] = r.grid_max();
  j["parameters"] = r.parameters;
  return j.dump(2);
}

}  // namespace gnt
