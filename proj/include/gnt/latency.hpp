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

// Expected token emission times over the reference alignment lattice. The
// forward recursion runs in the expectation semiring: each element pairs a
// path mass with the mass-weighted accumulated emission time.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gnt/dataset.hpp"
#include "gnt/lattice.hpp"

namespace gnt {

/// (w, m): w is log mass; m is mass times accumulated time, stored as a
/// log magnitude with a sign so long utterances do not underflow.
template <typename Scalar>
struct ExpectationWeight {
  Scalar log_mass = kLogZero<Scalar>;
  Scalar log_abs_moment = kLogZero<Scalar>;
  int sign = 0;  // sign of m; 0 when m == 0

  static ExpectationWeight zero() { return {}; }
  static ExpectationWeight one() { return {Scalar(0), kLogZero<Scalar>, 0}; }

  /// An edge with log weight w whose traversal happens at `time`.
  static ExpectationWeight edge(Scalar log_weight, Scalar time) {
    ExpectationWeight e{log_weight, kLogZero<Scalar>, 0};
    if (time != Scalar(0) && log_weight != kLogZero<Scalar>) {
      e.log_abs_moment = log_weight + std::log(std::abs(time));
      e.sign = time > 0 ? 1 : -1;
    }
    return e;
  }

  static ExpectationWeight from_linear(Scalar mass, Scalar moment) {
    ExpectationWeight e{std::log(mass), kLogZero<Scalar>, 0};
    if (moment != Scalar(0)) {
      e.log_abs_moment = std::log(std::abs(moment));
      e.sign = moment > 0 ? 1 : -1;
    }
    return e;
  }

  Scalar mass() const { return std::exp(log_mass); }
  Scalar moment() const { return sign * std::exp(log_abs_moment); }
  /// m / w, the expected value under the normalized path distribution.
  Scalar expectation() const {
    return sign == 0 ? Scalar(0) : sign * std::exp(log_abs_moment - log_mass);
  }
};

namespace detail {

/// Signed log-magnitude addition.
template <typename Scalar>
void signed_log_add(Scalar& log_abs, int& sign, Scalar other_log_abs,
                    int other_sign) {
  if (other_sign == 0) return;
  if (sign == 0) {
    log_abs = other_log_abs;
    sign = other_sign;
    return;
  }
  if (sign == other_sign) {
    log_abs = log_add(log_abs, other_log_abs);
    return;
  }
  if (log_abs == other_log_abs) {
    log_abs = kLogZero<Scalar>;
    sign = 0;
    return;
  }
  if (log_abs > other_log_abs) {
    log_abs = log_abs + std::log1p(-std::exp(other_log_abs - log_abs));
  } else {
    log_abs = other_log_abs + std::log1p(-std::exp(log_abs - other_log_abs));
    sign = other_sign;
  }
}

}  // namespace detail

/// (w1 + w2, m1 + m2)
template <typename Scalar>
ExpectationWeight<Scalar> operator+(const ExpectationWeight<Scalar>& a,
                                    const ExpectationWeight<Scalar>& b) {
  ExpectationWeight<Scalar> r = a;
  r.log_mass = log_add(a.log_mass, b.log_mass);
  detail::signed_log_add(r.log_abs_moment, r.sign, b.log_abs_moment, b.sign);
  return r;
}

/// (w1 w2, w1 m2 + w2 m1)
template <typename Scalar>
ExpectationWeight<Scalar> operator*(const ExpectationWeight<Scalar>& a,
                                    const ExpectationWeight<Scalar>& b) {
  ExpectationWeight<Scalar> r;
  r.log_mass = a.log_mass + b.log_mass;
  if (r.log_mass == kLogZero<Scalar>) return ExpectationWeight<Scalar>::zero();
  if (b.sign != 0) {
    r.log_abs_moment = a.log_mass + b.log_abs_moment;
    r.sign = b.sign;
  }
  if (a.sign != 0) {
    detail::signed_log_add(r.log_abs_moment, r.sign,
                           b.log_mass + a.log_abs_moment, a.sign);
  }
  return r;
}

/// Forward algorithm in the expectation semiring over the alignments of z.
/// Token edges leaving node (t,u) carry emission time t * frame_ms; blank
/// edges carry time zero. Returns nullopt when U = 0 (no tokens to time).
template <typename Scalar>
std::optional<ExpectationWeight<Scalar>> expectation_forward(
    const WeightGrid<Scalar>& g, const TokenSequence& z, Scalar frame_ms) {
  detail::check_lengths(g, z);
  const int T = g.frames();
  const int U = g.tokens();
  if (U == 0) return std::nullopt;
  using W = ExpectationWeight<Scalar>;
  std::vector<W> alpha(static_cast<std::size_t>((T + 1) * (U + 1)), W::zero());
  auto at = [&](int t, int u) -> W& {
    return alpha[static_cast<std::size_t>(t * (U + 1) + u)];
  };
  at(0, 0) = W::one();
  for (int t = 0; t <= T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      W acc = W::zero();
      if (t > 0) acc = at(t - 1, u) * W::edge(g(t - 1, u, kBlank), Scalar(0));
      if (u > 0 && g.token_allowed(t, u - 1)) {
        acc = acc + at(t, u - 1) *
                        W::edge(g(t, u - 1, z[static_cast<std::size_t>(u - 1)]),
                                Scalar(t) * frame_ms);
      }
      at(t, u) = acc;
    }
  }
  return at(T, U);
}

/// Path-enumeration oracle: sum_paths p(path) * sum of token emission times.
template <typename Scalar>
std::optional<Scalar> brute_force_expected_time(const WeightGrid<Scalar>& g,
                                                const TokenSequence& z,
                                                Scalar frame_ms) {
  detail::check_lengths(g, z);
  if (z.empty()) return std::nullopt;
  std::vector<Scalar> weights;
  std::vector<Scalar> times;
  for (const Path& p : enumerate_paths(g.frames(), g.tokens())) {
    if (!path_allowed(g, p)) continue;
    weights.push_back(path_weight(g, z, p));
    Scalar time = 0;
    for (const Move& m : p.moves) {
      if (m.kind == MoveKind::kToken) time += Scalar(m.t) * frame_ms;
    }
    times.push_back(time);
  }
  const Scalar total = logsumexp(weights);
  Scalar expected = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    expected += std::exp(weights[i] - total) * times[i];
  }
  return expected;
}

// ---------------------------------------------------------------------------
// Dataset-level measurement

struct UtteranceLatency {
  std::string id;
  int tokens = 0;
  std::optional<double> mean_ms;  // absent when the reference is empty
  double total_ms = 0;            // expected summed emission time
};

struct LatencyReport {
  std::vector<UtteranceLatency> utterances;
  double average_ms = 0;
  int measured = 0;
  int skipped = 0;  // utterances with no tokens
  bool pooled = false;
  double frame_ms = 10;
};

/// Expected per-token emission time of the reference transcriptions under
/// the model, whose weights are partially normalized by `alpha`. Default
/// averaging is per utterance first; `pooled` divides summed times by the
/// summed token count instead.
LatencyReport average_emission_time(const Dataset& data,
                                    const ModelParams& params, double alpha,
                                    double frame_ms = 10.0,
                                    bool pooled = false);

struct LatencyDelta {
  LatencyReport system;
  LatencyReport baseline;
  double delta_ms = 0;  // system - baseline
};

/// Rejects reports measured on different utterances with kDatasetMismatch.
LatencyDelta latency_delta(LatencyReport system, LatencyReport baseline);

std::string to_json(const LatencyReport& report);
std::string to_json(const LatencyDelta& delta);

}  // namespace gnt
