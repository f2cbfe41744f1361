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

#include "gnt/model.hpp"

#include <cmath>
#include <random>

namespace gnt {

namespace {

Matrix sigmoid(const Matrix& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

int predictor_input_dim(const ModelConfig& c) {
  return c.predictor == PredictorKind::kFullHistory
             ? c.embed_dim + c.model_dim
             : c.history_order * c.embed_dim;
}

void check_version(std::uint64_t cached, const ModelParams& params,
                   const char* what) {
  if (cached != params.version) {
    throw Error(ErrorCode::kStaleCache,
                std::string(what) + " cache was computed for parameter version " +
                    std::to_string(cached) + ", current is " +
                    std::to_string(params.version));
  }
}

}  // namespace

void ModelConfig::validate() const {
  require(feature_dim > 0 && context >= 0 && encoder_hidden > 0 &&
              model_dim > 0 && embed_dim > 0 && joiner_dim > 0 && vocab > 0,
          ErrorCode::kInvalidArgument, "model dimensions must be positive");
  require(predictor == PredictorKind::kFullHistory || history_order >= 1,
          ErrorCode::kInvalidArgument, "history order must be >= 1");
}

ModelParams ModelParams::zeros(const ModelConfig& c) {
  c.validate();
  ModelParams p;
  p.config = c;
  p.enc_w1 = Matrix::Zero(c.encoder_hidden, c.window_dim());
  p.enc_b1 = Matrix::Zero(c.encoder_hidden, 1);
  p.enc_w2 = Matrix::Zero(c.model_dim, c.encoder_hidden);
  p.enc_b2 = Matrix::Zero(c.model_dim, 1);
  p.embedding = Matrix::Zero(c.labels(), c.embed_dim);
  const int in = predictor_input_dim(c);
  if (c.predictor == PredictorKind::kFullHistory) {
    p.pred_gate_w = Matrix::Zero(c.model_dim, in);
    p.pred_gate_b = Matrix::Zero(c.model_dim, 1);
    p.pred_cand_w = Matrix::Zero(c.model_dim, in);
    p.pred_cand_b = Matrix::Zero(c.model_dim, 1);
  } else {
    p.pred_table_w = Matrix::Zero(c.model_dim, in);
    p.pred_table_b = Matrix::Zero(c.model_dim, 1);
  }
  p.join_enc = Matrix::Zero(c.joiner_dim, c.model_dim);
  p.join_pred = Matrix::Zero(c.joiner_dim, c.model_dim);
  p.join_b = Matrix::Zero(c.joiner_dim, 1);
  p.out_w = Matrix::Zero(c.labels(), c.joiner_dim);
  p.out_b = Matrix::Zero(c.labels(), 1);
  return p;
}

ModelParams ModelParams::random(const ModelConfig& c, std::uint64_t seed,
                                double scale) {
  ModelParams p = zeros(c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& t : tensors(p)) {
    for (Eigen::Index i = 0; i < t.value->size(); ++i) {
      t.value->data()[i] = dist(rng);
    }
  }
  return p;
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors(*this)) n += static_cast<std::size_t>(t.value->size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors(*this)) {
    if (!t.value->allFinite()) return false;
  }
  return true;
}

std::vector<TensorRef> tensors(ModelParams& p) {
  return {{"enc_w1", &p.enc_w1},           {"enc_b1", &p.enc_b1},
          {"enc_w2", &p.enc_w2},           {"enc_b2", &p.enc_b2},
          {"embedding", &p.embedding},     {"pred_gate_w", &p.pred_gate_w},
          {"pred_gate_b", &p.pred_gate_b}, {"pred_cand_w", &p.pred_cand_w},
          {"pred_cand_b", &p.pred_cand_b}, {"pred_table_w", &p.pred_table_w},
          {"pred_table_b", &p.pred_table_b}, {"join_enc", &p.join_enc},
          {"join_pred", &p.join_pred},     {"join_b", &p.join_b},
          {"out_w", &p.out_w},             {"out_b", &p.out_b}};
}

std::vector<ConstTensorRef> tensors(const ModelParams& p) {
  auto& mut = const_cast<ModelParams&>(p);
  std::vector<ConstTensorRef> out;
  for (const auto& t : tensors(mut)) out.push_back({t.name, t.value});
  return out;
}

// ---------------------------------------------------------------------------
// Encoder

EncoderOutput encode(const Matrix& features, const ModelParams& params) {
  const ModelConfig& c = params.config;
  const auto T = static_cast<int>(features.rows());
  if (T > 0 && features.cols() != c.feature_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature dim " + std::to_string(features.cols()) +
                    " != model feature dim " + std::to_string(c.feature_dim));
  }
  EncoderOutput out;
  out.version = params.version;
  out.windows = Matrix::Zero(T, c.window_dim());
  for (int r = 0; r < T; ++r) {
    // Oldest frame first; frames before the start stay zero.
    for (int k = 0; k <= c.context; ++k) {
      const int src = r - c.context + k;
      if (src < 0) continue;
      out.windows.block(r, k * c.feature_dim, 1, c.feature_dim) =
          features.row(src);
    }
  }
  out.hidden =
      ((out.windows * params.enc_w1.transpose()).rowwise() +
       params.enc_b1.col(0).transpose())
          .array()
          .tanh()
          .matrix();
  out.frames =
      ((out.hidden * params.enc_w2.transpose()).rowwise() +
       params.enc_b2.col(0).transpose())
          .array()
          .tanh()
          .matrix();
  return out;
}

void backprop_encoder(const Matrix& enc_grad, const EncoderOutput& enc,
                      const ModelParams& params, ModelParams& grads) {
  check_version(enc.version, params, "encoder");
  if (enc.length() == 0) return;
  const Matrix d_pre2 =
      (enc_grad.array() * (1.0 - enc.frames.array().square())).matrix();
  grads.enc_w2 += d_pre2.transpose() * enc.hidden;
  grads.enc_b2 += d_pre2.colwise().sum().transpose();
  const Matrix d_hidden = d_pre2 * params.enc_w2;
  const Matrix d_pre1 =
      (d_hidden.array() * (1.0 - enc.hidden.array().square())).matrix();
  grads.enc_w1 += d_pre1.transpose() * enc.windows;
  grads.enc_b1 += d_pre1.colwise().sum().transpose();
}

// ---------------------------------------------------------------------------
// Predictor

namespace {

Vector limited_input(const std::vector<int>& history, const ModelParams& p) {
  const int m = p.config.embed_dim;
  Vector x(p.config.history_order * m);
  for (int k = 0; k < p.config.history_order; ++k) {
    x.segment(k * m, m) = p.embedding.row(history[static_cast<std::size_t>(k)]).transpose();
  }
  return x;
}

void check_token(int token, const ModelParams& p) {
  if (token < 1 || token > p.config.vocab) {
    throw Error(ErrorCode::kTokenOutOfRange,
                "token " + std::to_string(token) + " outside 1.." +
                    std::to_string(p.config.vocab));
  }
}

struct StepActivations {
  Vector input, gate, candidate, output;
};

StepActivations full_step(const Vector& prev, int token, const ModelParams& p) {
  StepActivations a;
  const int m = p.config.embed_dim;
  a.input.resize(m + p.config.model_dim);
  a.input.head(m) = p.embedding.row(token).transpose();
  a.input.tail(p.config.model_dim) = prev;
  a.gate = sigmoid(p.pred_gate_w * a.input + p.pred_gate_b);
  a.candidate =
      (p.pred_cand_w * a.input + p.pred_cand_b).array().tanh().matrix();
  a.output = ((1.0 - a.gate.array()) * prev.array() +
              a.gate.array() * a.candidate.array())
                 .matrix();
  return a;
}

}  // namespace

PredictorState predictor_start(const ModelParams& params) {
  const ModelConfig& c = params.config;
  PredictorState s;
  if (c.predictor == PredictorKind::kFullHistory) {
    s.output = Vector::Zero(c.model_dim);
  } else {
    s.history.assign(static_cast<std::size_t>(c.history_order), 0);
    s.output = (params.pred_table_w * limited_input(s.history, params) +
                params.pred_table_b)
                   .array()
                   .tanh()
                   .matrix();
  }
  return s;
}

PredictorState predictor_step(const PredictorState& state, int token,
                              const ModelParams& params) {
  check_token(token, params);
  PredictorState next;
  if (params.config.predictor == PredictorKind::kFullHistory) {
    next.output = full_step(state.output, token, params).output;
  } else {
    next.history.reserve(state.history.size());
    next.history.push_back(token);
    next.history.insert(next.history.end(), state.history.begin(),
                        state.history.end() - 1);
    next.output = (params.pred_table_w * limited_input(next.history, params) +
                   params.pred_table_b)
                      .array()
                      .tanh()
                      .matrix();
  }
  return next;
}

PredictorStates predict(const TokenSequence& z, const ModelParams& params) {
  const ModelConfig& c = params.config;
  for (int tok : z) check_token(tok, params);
  const auto U = static_cast<int>(z.size());
  const int in = predictor_input_dim(c);
  PredictorStates s;
  s.tokens = z;
  s.version = params.version;
  s.outputs = Matrix::Zero(U + 1, c.model_dim);
  s.inputs = Matrix::Zero(U + 1, in);
  s.gates = Matrix::Zero(U + 1, c.model_dim);
  s.candidates = Matrix::Zero(U + 1, c.model_dim);

  PredictorState state = predictor_start(params);
  s.outputs.row(0) = state.output.transpose();
  if (c.predictor == PredictorKind::kLimitedHistory) {
    s.inputs.row(0) = limited_input(state.history, params).transpose();
  }
  for (int u = 1; u <= U; ++u) {
    const int tok = z[static_cast<std::size_t>(u - 1)];
    if (c.predictor == PredictorKind::kFullHistory) {
      const StepActivations a = full_step(state.output, tok, params);
      s.inputs.row(u) = a.input.transpose();
      s.gates.row(u) = a.gate.transpose();
      s.candidates.row(u) = a.candidate.transpose();
      state.output = a.output;
    } else {
      state = predictor_step(state, tok, params);
      s.inputs.row(u) = limited_input(state.history, params).transpose();
    }
    s.outputs.row(u) = state.output.transpose();
  }
  return s;
}

void backprop_predictor(const Matrix& pred_grad, const PredictorStates& pred,
                        const ModelParams& params, ModelParams& grads) {
  check_version(pred.version, params, "predictor");
  const ModelConfig& c = params.config;
  const int U = pred.size() - 1;
  const int m = c.embed_dim;

  if (c.predictor == PredictorKind::kLimitedHistory) {
    for (int u = 0; u <= U; ++u) {
      const Vector d_pre =
          (pred_grad.row(u).transpose().array() *
           (1.0 - pred.outputs.row(u).transpose().array().square()))
              .matrix();
      grads.pred_table_w += d_pre * pred.inputs.row(u);
      grads.pred_table_b += d_pre;
      const Vector d_in = params.pred_table_w.transpose() * d_pre;
      // Rebuild which embedding rows fed this input.
      for (int k = 0; k < c.history_order; ++k) {
        const int pos = u - k;  // token position 1..u, <= 0 is start padding
        const int tok = pos >= 1 ? pred.tokens[static_cast<std::size_t>(pos - 1)] : 0;
        grads.embedding.row(tok) += d_in.segment(k * m, m).transpose();
      }
    }
    return;
  }

  Vector carry = Vector::Zero(c.model_dim);
  for (int u = U; u >= 1; --u) {
    const Vector dh = pred_grad.row(u).transpose() + carry;
    const Vector prev = pred.outputs.row(u - 1).transpose();
    const Vector gate = pred.gates.row(u).transpose();
    const Vector cand = pred.candidates.row(u).transpose();
    const Vector input = pred.inputs.row(u).transpose();

    const Vector d_gate_pre =
        (dh.array() * (cand - prev).array() * gate.array() *
         (1.0 - gate.array()))
            .matrix();
    const Vector d_cand_pre =
        (dh.array() * gate.array() * (1.0 - cand.array().square())).matrix();
    grads.pred_gate_w += d_gate_pre * input.transpose();
    grads.pred_gate_b += d_gate_pre;
    grads.pred_cand_w += d_cand_pre * input.transpose();
    grads.pred_cand_b += d_cand_pre;

    const Vector d_input = params.pred_gate_w.transpose() * d_gate_pre +
                           params.pred_cand_w.transpose() * d_cand_pre;
    const int tok = pred.tokens[static_cast<std::size_t>(u - 1)];
    grads.embedding.row(tok) += d_input.head(m).transpose();
    carry = d_input.tail(c.model_dim) +
            (dh.array() * (1.0 - gate.array())).matrix();
  }
  // State 0 is a constant zero vector; its gradient goes nowhere.
}

// ---------------------------------------------------------------------------
// Joiner

Matrix project_encoder(const EncoderOutput& enc, const ModelParams& params) {
  Matrix proj = enc.frames * params.join_enc.transpose();
  proj.rowwise() += params.join_b.col(0).transpose();
  return proj;
}

Vector project_predictor(const Vector& state, const ModelParams& params) {
  return params.join_pred * state;
}

Vector joiner_logits(const Vector& enc_proj, const Vector& pred_proj,
                     const ModelParams& params) {
  const Vector hidden = (enc_proj + pred_proj).array().tanh().matrix();
  return params.out_w * hidden + params.out_b;
}

JointOutput joint(const EncoderOutput& enc, const PredictorStates& pred,
                  const ModelParams& params) {
  const ModelConfig& c = params.config;
  if (enc.frames.rows() > 0 && enc.frames.cols() != c.model_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "encoder output width");
  }
  if (pred.outputs.cols() != c.model_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "predictor output width");
  }
  const int T = enc.length();
  const int U = pred.size() - 1;
  JointOutput out;
  out.version = params.version;
  out.grid = Grid(T, U, c.vocab);
  out.hidden = Matrix::Zero(out.grid.num_nodes(), c.joiner_dim);

  const Matrix enc_proj = project_encoder(enc, params);
  const Vector no_audio = params.join_b.col(0);
  std::vector<Vector> pred_proj;
  pred_proj.reserve(static_cast<std::size_t>(U + 1));
  for (int u = 0; u <= U; ++u) {
    pred_proj.push_back(
        project_predictor(pred.outputs.row(u).transpose(), params));
  }
  for (int t = 0; t <= T; ++t) {
    const Vector e = T > 0 ? Vector(enc_proj.row(encoder_row_for(t, T)).transpose())
                           : no_audio;
    for (int u = 0; u <= U; ++u) {
      const Vector& p = pred_proj[static_cast<std::size_t>(u)];
      const auto n = out.grid.node(t, u);
      out.hidden.row(n) = (e + p).array().tanh().matrix().transpose();
      out.grid.rows().row(n) = joiner_logits(e, p, params).transpose();
    }
  }
  return out;
}

Grid joint_grid(const EncoderOutput& enc, const PredictorStates& pred,
                const ModelParams& params) {
  return joint(enc, pred, params).grid;
}

void backprop_joint(const Grid& grid_grad, const EncoderOutput& enc,
                    const PredictorStates& pred, const JointOutput& joint_out,
                    const ModelParams& params, ModelParams& grads,
                    Matrix& enc_grad, Matrix& pred_grad) {
  check_version(joint_out.version, params, "joiner");
  const int T = joint_out.grid.frames();
  const int U = joint_out.grid.tokens();
  if (grid_grad.frames() != T || grid_grad.tokens() != U ||
      grid_grad.vocab() != joint_out.grid.vocab()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "gradient grid shape does not match the cached forward pass");
  }
  if (enc_grad.rows() != T || pred_grad.rows() != U + 1) {
    throw Error(ErrorCode::kDimensionMismatch, "state gradient buffers");
  }
  const auto& G = grid_grad.rows();
  const Matrix& H = joint_out.hidden;
  grads.out_w += G.transpose() * H;
  grads.out_b += G.colwise().sum().transpose();
  const Matrix d_pre =
      ((G * params.out_w).array() * (1.0 - H.array().square())).matrix();
  grads.join_b += d_pre.colwise().sum().transpose();

  Matrix d_enc_proj = Matrix::Zero(T, params.config.joiner_dim);
  Matrix d_pred_proj = Matrix::Zero(U + 1, params.config.joiner_dim);
  for (int t = 0; t <= T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const auto row = d_pre.row(joint_out.grid.node(t, u));
      if (T > 0) d_enc_proj.row(encoder_row_for(t, T)) += row;
      d_pred_proj.row(u) += row;
    }
  }
  if (T > 0) {
    grads.join_enc += d_enc_proj.transpose() * enc.frames;
    enc_grad += d_enc_proj * params.join_enc;
  }
  grads.join_pred += d_pred_proj.transpose() * pred.outputs;
  pred_grad += d_pred_proj * params.join_pred;
}

ForwardCache forward(const Matrix& features, const TokenSequence& z,
                     const ModelParams& params) {
  ForwardCache c;
  c.enc = encode(features, params);
  c.pred = predict(z, params);
  c.joint = joint(c.enc, c.pred, params);
  return c;
}

ModelParams backprop(const Grid& grid_grad, const ForwardCache& cache,
                     const ModelParams& params) {
  ModelParams grads = ModelParams::zeros(params.config);
  Matrix enc_grad = Matrix::Zero(cache.enc.length(), params.config.model_dim);
  Matrix pred_grad = Matrix::Zero(cache.pred.size(), params.config.model_dim);
  backprop_joint(grid_grad, cache.enc, cache.pred, cache.joint, params, grads,
                 enc_grad, pred_grad);
  backprop_predictor(pred_grad, cache.pred, params, grads);
  backprop_encoder(enc_grad, cache.enc, params, grads);
  return grads;
}

void accumulate(ModelParams& into, const ModelParams& from, double scale) {
  auto dst = tensors(into);
  auto src = tensors(from);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].value->size() != src[i].value->size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string("tensor ") + dst[i].name + " shape");
    }
    *dst[i].value += scale * *src[i].value;
  }
}

}  // namespace gnt
