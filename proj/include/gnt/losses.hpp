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

// Training objectives over weight grids. Every loss returns its value and the
// gradient with respect to each input grid, so the caller can push the grid
// gradients through the model once.

#include <algorithm>
#include <span>
#include <vector>

#include "gnt/model.hpp"

namespace gnt {

/// Competitor token sequences for one utterance, reference included once.
struct HypothesisSet {
  std::vector<TokenSequence> hypotheses;
  std::size_t ref_index = 0;

  const TokenSequence& reference() const { return hypotheses.at(ref_index); }
  std::size_t size() const { return hypotheses.size(); }
  /// Throws kMissingReference / kInvalidArgument on a broken set.
  void validate() const;
};

/// Interpolation exponent between the locally (1) and globally (0)
/// normalized model.
class InterpolationWeight {
 public:
  explicit InterpolationWeight(double alpha);
  double value() const { return alpha_; }

  static InterpolationWeight clamped(double alpha);

 private:
  double alpha_;
};

struct GridLoss {
  double loss = 0;
  Grid grad;
};

struct MultiGridLoss {
  double loss = 0;
  std::vector<Grid> grads;  // aligned with the input grids
};

/// -log P_local(z | x): forward score of the log-softmaxed grid, negated.
GridLoss local_nll(const Grid& g, const TokenSequence& z);

/// -[F(g_ref, z_ref) - logsumexp_{z in H} F(g_z, z)] with N-best normalizer.
MultiGridLoss global_nbest_loss(std::span<const Grid> grids,
                                const HypothesisSet& H);

/// (1-alpha) logsumexp_{z in H} F(g_z, z) - F(normalize(g_ref, alpha), z_ref).
/// The reference grid takes part in both terms: one forward-backward on the
/// raw grid and one on the partially normalized grid.
MultiGridLoss interpolated_loss(std::span<const Grid> grids,
                                const HypothesisSet& H, InterpolationWeight alpha);

struct RegularizerSum {
  double sum_squares = 0;    // sum over rows of logsumexp(row)^2
  std::size_t rows = 0;
};

/// Sum of squared row log-sums, plus d/d row of that sum (2 lse softmax),
/// written into `grads` (scaled by `scale`) when non-null.
RegularizerSum accumulate_regularizer(const Grid& g, Grid* grad, double scale);

/// Mean over all rows of all grids of logsumexp(row)^2.
struct RegularizerValue {
  double value = 0;
  std::vector<Grid> grads;
};
RegularizerValue normalization_regularizer(std::span<const Grid> grids);

struct Objective {
  double loss = 0;
  double interpolated = 0;
  double regularizer = 0;
  std::vector<Grid> grads;
};

/// interpolated_loss + lambda * normalization_regularizer over every row of
/// every hypothesis grid.
Objective total_objective(std::span<const Grid> grids, const HypothesisSet& H,
                          InterpolationWeight alpha, double lambda);

}  // namespace gnt
