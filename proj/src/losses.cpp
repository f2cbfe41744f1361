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

#include "gnt/losses.hpp"

#include <set>
#include <string>

namespace gnt {

void HypothesisSet::validate() const {
  if (hypotheses.empty() || ref_index >= hypotheses.size()) {
    throw Error(ErrorCode::kMissingReference,
                "hypothesis set has no reference entry");
  }
  std::set<TokenSequence> seen;
  for (const auto& z : hypotheses) {
    if (!seen.insert(z).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "hypothesis set contains a duplicate token sequence");
    }
  }
}

InterpolationWeight::InterpolationWeight(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "interpolation weight " + std::to_string(alpha) +
                    " outside [0, 1]");
  }
}

InterpolationWeight InterpolationWeight::clamped(double alpha) {
  return InterpolationWeight(std::clamp(alpha, 0.0, 1.0));
}

GridLoss local_nll(const Grid& g, const TokenSequence& z) {
  const Grid normalized = apply_partial_normalization(g, 1.0);
  auto fb = forward_backward(normalized, z);
  fb.occupancy.rows() *= -1.0;
  return {-fb.score, partial_normalization_backward(g, 1.0, fb.occupancy)};
}

namespace {

void check_alignment(std::span<const Grid> grids, const HypothesisSet& H) {
  H.validate();
  if (grids.size() != H.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(grids.size()) + " grids for " +
                    std::to_string(H.size()) + " hypotheses");
  }
}

/// Raw forward-backward on every hypothesis grid, then the gradient of
/// scale * logsumexp over hypotheses.
double normalizer_term(std::span<const Grid> grids, const HypothesisSet& H,
                       double scale, std::vector<Grid>& grads) {
  std::vector<ForwardBackward<double>> fbs;
  std::vector<double> scores;
  fbs.reserve(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    fbs.push_back(forward_backward(grids[i], H.hypotheses[i]));
    scores.push_back(fbs.back().score);
  }
  const double log_z = logsumexp(scores);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const double posterior = std::exp(scores[i] - log_z);
    grads[i].rows() += (scale * posterior) * fbs[i].occupancy.rows();
  }
  return log_z;
}

std::vector<Grid> zero_grads(std::span<const Grid> grids) {
  std::vector<Grid> out;
  out.reserve(grids.size());
  for (const Grid& g : grids) out.push_back(g.zeros_like());
  return out;
}

}  // namespace

MultiGridLoss global_nbest_loss(std::span<const Grid> grids,
                                const HypothesisSet& H) {
  check_alignment(grids, H);
  MultiGridLoss out{0.0, zero_grads(grids)};
  const double log_z = normalizer_term(grids, H, 1.0, out.grads);
  const std::size_t r = H.ref_index;
  const auto ref = forward_backward(grids[r], H.hypotheses[r]);
  out.grads[r].rows() -= ref.occupancy.rows();
  out.loss = log_z - ref.score;
  return out;
}

MultiGridLoss interpolated_loss(std::span<const Grid> grids,
                                const HypothesisSet& H,
                                InterpolationWeight weight) {
  check_alignment(grids, H);
  const double alpha = weight.value();
  MultiGridLoss out{0.0, zero_grads(grids)};
  double log_z = 0.0;
  if (alpha < 1.0) {
    log_z = normalizer_term(grids, H, 1.0 - alpha, out.grads);
  }
  // Second pass on the reference, this time partially normalized.
  const std::size_t r = H.ref_index;
  const Grid normalized = apply_partial_normalization(grids[r], alpha);
  auto ref = forward_backward(normalized, H.hypotheses[r]);
  ref.occupancy.rows() *= -1.0;
  out.grads[r].rows() +=
      partial_normalization_backward(grids[r], alpha, ref.occupancy).rows();
  out.loss = (1.0 - alpha) * log_z - ref.score;
  return out;
}

RegularizerSum accumulate_regularizer(const Grid& g, Grid* grad, double scale) {
  RegularizerSum acc;
  const auto& rows = g.rows();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double lse = logsumexp(rows.row(r));
    acc.sum_squares += lse * lse;
    if (grad != nullptr) {
      grad->rows().row(r).array() +=
          (scale * 2.0 * lse) * softmax(rows.row(r), lse);
    }
  }
  acc.rows = static_cast<std::size_t>(rows.rows());
  return acc;
}

RegularizerValue normalization_regularizer(std::span<const Grid> grids) {
  RegularizerValue out;
  out.grads = zero_grads(grids);
  std::size_t rows = 0;
  for (const Grid& g : grids) rows += static_cast<std::size_t>(g.num_nodes());
  if (rows == 0) return out;
  const double scale = 1.0 / static_cast<double>(rows);
  double total = 0.0;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    total += accumulate_regularizer(grids[i], &out.grads[i], scale).sum_squares;
  }
  out.value = total * scale;
  return out;
}

Objective total_objective(std::span<const Grid> grids, const HypothesisSet& H,
                          InterpolationWeight alpha, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "regularizer weight must be >= 0");
  }
  MultiGridLoss main = interpolated_loss(grids, H, alpha);
  Objective out;
  out.interpolated = main.loss;
  out.grads = std::move(main.grads);
  if (lambda > 0.0) {
    RegularizerValue reg = normalization_regularizer(grids);
    out.regularizer = reg.value;
    for (std::size_t i = 0; i < grids.size(); ++i) {
      out.grads[i].rows() += lambda * reg.grads[i].rows();
    }
  } else {
    std::size_t rows = 0;
    double total = 0.0;
    for (const Grid& g : grids) {
      const auto acc = accumulate_regularizer(g, nullptr, 0.0);
      total += acc.sum_squares;
      rows += acc.rows;
    }
    out.regularizer = rows ? total / static_cast<double>(rows) : 0.0;
  }
  out.loss = out.interpolated + lambda * out.regularizer;
  return out;
}

}  // namespace gnt
