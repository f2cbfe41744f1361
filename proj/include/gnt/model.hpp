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

// Toy streaming transducer: a causal two-layer encoder over a fixed window of
// past frames, a token-history predictor, and a joiner whose outputs are used
// directly as unnormalized log weights.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gnt/lattice.hpp"

namespace gnt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Grid = WeightGrid<double>;

enum class PredictorKind : int { kFullHistory = 0, kLimitedHistory = 1 };

struct ModelConfig {
  int feature_dim = 4;
  int context = 3;         // past frames visible besides the current one
  int encoder_hidden = 16;
  int model_dim = 16;      // encoder output = predictor output
  int embed_dim = 8;
  int joiner_dim = 16;
  int vocab = 4;           // K, blank excluded
  PredictorKind predictor = PredictorKind::kFullHistory;
  int history_order = 1;   // n, limited-history mode only

  int window_dim() const { return (context + 1) * feature_dim; }
  int labels() const { return vocab + 1; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// All weights. Vectors are stored as n x 1 matrices so every tensor can be
/// visited uniformly.
struct ModelParams {
  ModelConfig config;

  Matrix enc_w1, enc_b1;  // encoder_hidden x window_dim, encoder_hidden x 1
  Matrix enc_w2, enc_b2;  // model_dim x encoder_hidden

  Matrix embedding;       // labels x embed_dim; row 0 is the start symbol
  // Full-history gated recurrence over [embedding; previous state].
  Matrix pred_gate_w, pred_gate_b;
  Matrix pred_cand_w, pred_cand_b;
  // Limited-history: tanh of an affine map of the last n embeddings.
  Matrix pred_table_w, pred_table_b;

  Matrix join_enc, join_pred, join_b;  // joiner_dim x model_dim
  Matrix out_w, out_b;                 // labels x joiner_dim

  /// Bumped on every in-place update; caches remember the version they were
  /// computed with.
  std::uint64_t version = 0;

  static ModelParams zeros(const ModelConfig& config);
  /// uniform(-scale, scale), deterministic given seed.
  static ModelParams random(const ModelConfig& config, std::uint64_t seed,
                            double scale = 0.1);

  std::size_t num_values() const;
  bool all_finite() const;
};

struct TensorRef {
  const char* name;
  Matrix* value;
};
struct ConstTensorRef {
  const char* name;
  const Matrix* value;
};

/// Fixed serialization order; shared by the optimizer and the checkpoint
/// format. Inactive predictor tensors are 0 x 0.
std::vector<TensorRef> tensors(ModelParams& p);
std::vector<ConstTensorRef> tensors(const ModelParams& p);

struct EncoderOutput {
  Matrix frames;   // T x model_dim; row t-1 is frame t
  Matrix windows;  // T x window_dim, zero-padded before frame 1
  Matrix hidden;   // T x encoder_hidden
  std::uint64_t version = 0;
  int length() const { return static_cast<int>(frames.rows()); }
};

EncoderOutput encode(const Matrix& features, const ModelParams& params);

struct PredictorState {
  Vector output;             // model_dim
  std::vector<int> history;  // last n tokens, limited-history mode only
};

struct PredictorStates {
  TokenSequence tokens;
  Matrix outputs;  // (U+1) x model_dim; row u = state after u tokens
  // Recurrence activations for backprop, rows 1..U used.
  Matrix inputs;   // (U+1) x input width
  Matrix gates;
  Matrix candidates;
  std::uint64_t version = 0;
  int size() const { return static_cast<int>(outputs.rows()); }
};

PredictorState predictor_start(const ModelParams& params);
PredictorState predictor_step(const PredictorState& state, int token,
                              const ModelParams& params);
PredictorStates predict(const TokenSequence& z, const ModelParams& params);

/// Encoder frame feeding node (t, u): frame min(t+1, T), as a 0-based row.
inline int encoder_row_for(int t, int frames) {
  return std::min(t + 1, frames) - 1;
}

struct JointOutput {
  Grid grid;
  Matrix hidden;  // num_nodes x joiner_dim
  std::uint64_t version = 0;
};

JointOutput joint(const EncoderOutput& enc, const PredictorStates& pred,
                  const ModelParams& params);
/// Logit grid only.
Grid joint_grid(const EncoderOutput& enc, const PredictorStates& pred,
                const ModelParams& params);

/// Per-frame joiner projections, join_enc * enc + join_b. Shared between
/// grid construction and beam search so both produce identical rows.
Matrix project_encoder(const EncoderOutput& enc, const ModelParams& params);
Vector project_predictor(const Vector& state, const ModelParams& params);
/// Logits for one node from its two projections.
Vector joiner_logits(const Vector& enc_proj, const Vector& pred_proj,
                     const ModelParams& params);

/// One complete forward evaluation for one (features, z) pair.
struct ForwardCache {
  EncoderOutput enc;
  PredictorStates pred;
  JointOutput joint;
};

ForwardCache forward(const Matrix& features, const TokenSequence& z,
                     const ModelParams& params);

/// Reverse-mode pieces. Each accumulates into `grads` (same shape as params).
/// Joiner backprop also accumulates d/d encoder frames and d/d predictor
/// states so that several grids sharing one encoder pass backprop it once.
void backprop_joint(const Grid& grid_grad, const EncoderOutput& enc,
                    const PredictorStates& pred, const JointOutput& joint,
                    const ModelParams& params, ModelParams& grads,
                    Matrix& enc_grad, Matrix& pred_grad);
void backprop_predictor(const Matrix& pred_grad, const PredictorStates& pred,
                        const ModelParams& params, ModelParams& grads);
void backprop_encoder(const Matrix& enc_grad, const EncoderOutput& enc,
                      const ModelParams& params, ModelParams& grads);

/// Full chain for a single grid.
ModelParams backprop(const Grid& grid_grad, const ForwardCache& cache,
                     const ModelParams& params);

void accumulate(ModelParams& into, const ModelParams& from, double scale = 1.0);

void save_checkpoint(const ModelParams& params, const std::string& path,
                     double alpha = 1.0);
struct Checkpoint {
  ModelParams params;
  double alpha = 1.0;  // interpolation weight the model was trained at
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gnt
