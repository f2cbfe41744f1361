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

// Transducer alignment lattice over a (T+1) x (U+1) grid of nodes. Node (t, u)
// has consumed t frames and emitted u tokens. A BLANK move goes (t,u) ->
// (t+1,u) with weight W[t,u,0]; a TOKEN move goes (t,u) -> (t,u+1) with
// weight W[t,u,z_{u+1}]. Complete paths run from (0,0) to (T,U) and do not
// require a final blank. Weights are unnormalized log values; nothing here
// assumes rows sum to one.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gnt/error.hpp"
#include "gnt/logspace.hpp"

namespace gnt {

inline constexpr int kBlank = 0;
inline constexpr int kDefaultOracleCap = 12;

/// Output tokens, blanks stripped. Entries are vocabulary ids in 1..K.
using TokenSequence = std::vector<int>;
/// Alignment labels, blanks (0) interleaved with tokens.
using LabelSequence = std::vector<int>;

template <typename Scalar>
class WeightGrid {
 public:
  using Rows =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  WeightGrid() = default;
  WeightGrid(int frames, int tokens, int vocab)
      : frames_(frames), tokens_(tokens), vocab_(vocab),
        rows_(Rows::Zero(static_cast<Eigen::Index>(frames + 1) * (tokens + 1),
                         vocab + 1)) {
    if (frames < 0 || tokens < 0 || vocab < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative grid dimension");
    }
  }

  int frames() const { return frames_; }  // T
  int tokens() const { return tokens_; }  // U
  int vocab() const { return vocab_; }    // K, blank excluded
  int labels() const { return vocab_ + 1; }
  Eigen::Index num_nodes() const { return rows_.rows(); }

  Eigen::Index node(int t, int u) const {
    return static_cast<Eigen::Index>(t) * (tokens_ + 1) + u;
  }

  Scalar& operator()(int t, int u, int y) { return rows_(node(t, u), y); }
  Scalar operator()(int t, int u, int y) const { return rows_(node(t, u), y); }

  auto row(int t, int u) { return rows_.row(node(t, u)); }
  auto row(int t, int u) const { return rows_.row(node(t, u)); }

  Rows& rows() { return rows_; }
  const Rows& rows() const { return rows_; }

  bool blank_allowed(int t, int /*u*/) const { return t < frames_; }

  /// Token u+1 may leave node (t,u) unless an emission deadline forbids it.
  bool token_allowed(int t, int u) const {
    if (u >= tokens_) return false;
    const auto pos = static_cast<std::size_t>(u);
    return pos >= deadlines.size() || deadlines[pos] < 0 || t <= deadlines[pos];
  }

  /// Same shape and deadlines, every weight zero.
  WeightGrid zeros_like() const {
    WeightGrid g(frames_, tokens_, vocab_);
    g.deadlines = deadlines;
    return g;
  }

  /// deadlines[u] is the last node time t at which token u+1 may be
  /// emitted; negative or missing entries mean no limit.
  std::vector<int> deadlines;

 private:
  int frames_ = 0;
  int tokens_ = 0;
  int vocab_ = 0;
  Rows rows_ = Rows::Zero(1, 1);
};

enum class MoveKind { kBlank, kToken };

struct Move {
  MoveKind kind;
  int t;  // source node
  int u;
};

struct Path {
  std::vector<Move> moves;
};

/// All monotone staircases from (0,0) to (T,U), blank-first order.
std::vector<Path> enumerate_paths(int frames, int tokens,
                                  int cap = kDefaultOracleCap);

LabelSequence path_to_labels(const Path& path, const TokenSequence& z);

/// Strip blanks.
TokenSequence labels_to_tokens(const LabelSequence& labels);

/// Parse/format helpers for label strings such as "_ _ a d _ _ d", with
/// blank written '_' and token k written as the k-th lowercase letter.
std::string labels_to_string(const LabelSequence& labels);

namespace detail {

template <typename Scalar>
void check_lengths(const WeightGrid<Scalar>& g, const TokenSequence& z) {
  if (static_cast<int>(z.size()) != g.tokens()) {
    throw Error(ErrorCode::kLengthMismatch,
                "token sequence length " + std::to_string(z.size()) +
                    " does not match grid U=" + std::to_string(g.tokens()));
  }
  for (int tok : z) {
    if (tok < 1 || tok > g.vocab()) {
      throw Error(ErrorCode::kTokenOutOfRange,
                  "token " + std::to_string(tok) + " outside 1.." +
                      std::to_string(g.vocab()));
    }
  }
}

}  // namespace detail

template <typename Scalar>
using NodeMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Forward variables alpha(t,u), (T+1) x (U+1).
template <typename Scalar>
NodeMatrix<Scalar> forward_variables(const WeightGrid<Scalar>& g,
                                     const TokenSequence& z) {
  detail::check_lengths(g, z);
  const int T = g.frames();
  const int U = g.tokens();
  NodeMatrix<Scalar> alpha =
      NodeMatrix<Scalar>::Constant(T + 1, U + 1, kLogZero<Scalar>);
  alpha(0, 0) = 0;
  for (int t = 0; t <= T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      Scalar acc = kLogZero<Scalar>;
      if (t > 0) acc = alpha(t - 1, u) + g(t - 1, u, kBlank);
      if (u > 0 && g.token_allowed(t, u - 1)) {
        acc = log_add(acc, alpha(t, u - 1) + g(t, u - 1, z[u - 1]));
      }
      alpha(t, u) = acc;
    }
  }
  return alpha;
}

/// Backward variables beta(t,u): log mass of all completions to (T,U).
template <typename Scalar>
NodeMatrix<Scalar> backward_variables(const WeightGrid<Scalar>& g,
                                      const TokenSequence& z) {
  detail::check_lengths(g, z);
  const int T = g.frames();
  const int U = g.tokens();
  NodeMatrix<Scalar> beta =
      NodeMatrix<Scalar>::Constant(T + 1, U + 1, kLogZero<Scalar>);
  beta(T, U) = 0;
  for (int t = T; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T && u == U) continue;
      Scalar acc = kLogZero<Scalar>;
      if (t < T) acc = beta(t + 1, u) + g(t, u, kBlank);
      if (g.token_allowed(t, u)) {
        acc = log_add(acc, beta(t, u + 1) + g(t, u, z[u]));
      }
      beta(t, u) = acc;
    }
  }
  return beta;
}

/// log of the sum over all alignments of z of the product of edge weights.
template <typename Scalar>
Scalar forward_score(const WeightGrid<Scalar>& g, const TokenSequence& z) {
  const auto alpha = forward_variables(g, z);
  return alpha(g.frames(), g.tokens());
}

template <typename Scalar>
struct ForwardBackward {
  Scalar score;
  /// d score / d W[t,u,y]: posterior occupancy of each used edge, zero on
  /// entries no path uses.
  WeightGrid<Scalar> occupancy;
};

template <typename Scalar>
ForwardBackward<Scalar> forward_backward(const WeightGrid<Scalar>& g,
                                         const TokenSequence& z) {
  const auto alpha = forward_variables(g, z);
  const auto beta = backward_variables(g, z);
  const int T = g.frames();
  const int U = g.tokens();
  ForwardBackward<Scalar> out{alpha(T, U), g.zeros_like()};
  const Scalar total = out.score;
  if (total == kLogZero<Scalar>) return out;
  for (int t = 0; t <= T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t < T) {
        out.occupancy(t, u, kBlank) =
            std::exp(alpha(t, u) + g(t, u, kBlank) + beta(t + 1, u) - total);
      }
      if (g.token_allowed(t, u)) {
        out.occupancy(t, u, z[u]) =
            std::exp(alpha(t, u) + g(t, u, z[u]) + beta(t, u + 1) - total);
      }
    }
  }
  return out;
}

template <typename Scalar>
WeightGrid<Scalar> occupancy_gradients(const WeightGrid<Scalar>& g,
                                       const TokenSequence& z) {
  return forward_backward(g, z).occupancy;
}

template <typename Scalar>
bool path_allowed(const WeightGrid<Scalar>& g, const Path& p) {
  for (const Move& m : p.moves) {
    if (m.kind == MoveKind::kToken && !g.token_allowed(m.t, m.u)) return false;
  }
  return true;
}

/// Sum of log weights along one path.
template <typename Scalar>
Scalar path_weight(const WeightGrid<Scalar>& g, const TokenSequence& z,
                   const Path& p) {
  Scalar acc = 0;
  for (const Move& m : p.moves) {
    acc += m.kind == MoveKind::kBlank ? g(m.t, m.u, kBlank)
                                      : g(m.t, m.u, z[m.u]);
  }
  return acc;
}

/// Exhaustive oracle for forward_score: logsumexp over every admissible path.
template <typename Scalar>
Scalar brute_force_score(const WeightGrid<Scalar>& g, const TokenSequence& z,
                         int cap = kDefaultOracleCap) {
  detail::check_lengths(g, z);
  std::vector<Scalar> weights;
  for (const Path& p : enumerate_paths(g.frames(), g.tokens(), cap)) {
    if (path_allowed(g, p)) weights.push_back(path_weight(g, z, p));
  }
  if (weights.empty()) return kLogZero<Scalar>;
  return logsumexp(weights);
}

/// W'[t,u,y] = W[t,u,y] - alpha * logsumexp_y' W[t,u,y'] on every node.
/// alpha = 1 is a log-softmax, alpha = 0 is the identity.
template <typename Scalar>
WeightGrid<Scalar> apply_partial_normalization(const WeightGrid<Scalar>& g,
                                               Scalar alpha) {
  WeightGrid<Scalar> out = g;
  if (alpha == Scalar(0)) return out;
  auto& rows = out.rows();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const Scalar lse = logsumexp(rows.row(r));
    rows.row(r).array() -= alpha * lse;
  }
  return out;
}

/// Chain a gradient w.r.t. apply_partial_normalization(g, alpha) back to g.
template <typename Scalar>
WeightGrid<Scalar> partial_normalization_backward(
    const WeightGrid<Scalar>& g, Scalar alpha,
    const WeightGrid<Scalar>& grad_out) {
  WeightGrid<Scalar> grad = grad_out;
  if (alpha == Scalar(0)) return grad;
  for (Eigen::Index r = 0; r < g.rows().rows(); ++r) {
    const Scalar mass = grad_out.rows().row(r).sum();
    if (mass == Scalar(0)) continue;
    const Scalar lse = logsumexp(g.rows().row(r));
    grad.rows().row(r).array() -=
        alpha * mass * softmax(g.rows().row(r), lse);
  }
  return grad;
}

}  // namespace gnt
