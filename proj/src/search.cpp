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

#include "gnt/search.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace gnt {

void SearchOptions::validate() const {
  if (nbest < 1 || beam < nbest || max_emissions < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "beam search needs B >= N >= 1 and E >= 1");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "search alpha outside [0, 1]");
  }
}

namespace {

struct Hyp {
  PredictorState state;
  Vector pred_proj;
  double score = 0;
  int emitted = 0;  // tokens emitted at the current frame
  Vector row;       // weights at the current frame, filled lazily
};

using Pool = std::map<TokenSequence, Hyp>;

bool token_allowed(const std::vector<int>& deadlines, std::size_t position,
                   int t) {
  return position >= deadlines.size() || deadlines[position] < 0 ||
         t <= deadlines[position];
}

/// Best-first, ties broken by the token sequence so results never depend on
/// container order.
template <typename It>
std::vector<It> top(std::vector<It> items, int limit) {
  std::sort(items.begin(), items.end(), [](It a, It b) {
    if (a->second.score != b->second.score) {
      return a->second.score > b->second.score;
    }
    return a->first < b->first;
  });
  if (static_cast<int>(items.size()) > limit) {
    items.resize(static_cast<std::size_t>(limit));
  }
  return items;
}

}  // namespace

std::vector<ScoredSequence> beam_search(const Matrix& features,
                                        const ModelParams& params,
                                        const SearchOptions& options,
                                        const std::vector<int>& deadlines) {
  options.validate();
  const EncoderOutput enc = encode(features, params);
  const int T = enc.length();
  if (T == 0) return {ScoredSequence{{}, 0.0}};

  const Matrix enc_proj = project_encoder(enc, params);
  const int K = params.config.vocab;
  const auto max_tokens = options.max_tokens < 0
                              ? std::numeric_limits<std::size_t>::max()
                              : static_cast<std::size_t>(options.max_tokens);

  auto weights = [&](int t, Hyp& h) -> const Vector& {
    if (h.row.size() == 0) {
      const Vector e = enc_proj.row(encoder_row_for(t, T)).transpose();
      h.row = joiner_logits(e, h.pred_proj, params);
      if (options.alpha != 0.0) {
        h.row.array() -= options.alpha * logsumexp(h.row);
      }
    }
    return h.row;
  };

  Pool beam;
  {
    Hyp start;
    start.state = predictor_start(params);
    start.pred_proj = project_predictor(start.state.output, params);
    beam.emplace(TokenSequence{}, std::move(start));
  }

  for (int t = 0; t <= T; ++t) {
    Pool pool = std::move(beam);
    beam.clear();

    // Expand shortest prefixes first: every way of reaching a prefix of
    // length u+1 at this frame is merged before that prefix expands.
    std::size_t len = pool.begin()->first.size();
    for (const auto& [z, h] : pool) len = std::min(len, z.size());
    for (;; ++len) {
      bool any_longer = false;
      std::vector<Pool::iterator> expandable;
      for (auto it = pool.begin(); it != pool.end(); ++it) {
        if (it->first.size() > len) any_longer = true;
        if (it->first.size() == len && it->second.emitted < options.max_emissions &&
            len < max_tokens && token_allowed(deadlines, len, t)) {
          expandable.push_back(it);
        }
      }
      if (expandable.empty() && !any_longer) break;
      for (auto it : top(std::move(expandable), options.beam)) {
        Hyp& h = it->second;
        const Vector& row = weights(t, h);
        for (int k = 1; k <= K; ++k) {
          TokenSequence next = it->first;
          next.push_back(k);
          const double score = h.score + row(k);
          auto found = pool.find(next);
          if (found != pool.end()) {
            found->second.score = log_add(found->second.score, score);
            found->second.emitted = std::min(found->second.emitted, h.emitted + 1);
            continue;
          }
          Hyp child;
          child.state = predictor_step(h.state, k, params);
          child.pred_proj = project_predictor(child.state.output, params);
          child.score = score;
          child.emitted = h.emitted + 1;
          pool.emplace(std::move(next), std::move(child));
        }
      }
    }

    if (t == T) {
      std::vector<Pool::iterator> all;
      for (auto it = pool.begin(); it != pool.end(); ++it) all.push_back(it);
      std::vector<ScoredSequence> out;
      for (auto it : top(std::move(all), options.nbest)) {
        out.push_back({it->first, it->second.score});
      }
      return out;
    }

    std::vector<Pool::iterator> all;
    for (auto it = pool.begin(); it != pool.end(); ++it) {
      it->second.score += weights(t, it->second)(kBlank);
      all.push_back(it);
    }
    for (auto it : top(std::move(all), options.beam)) {
      Hyp h = std::move(it->second);
      h.emitted = 0;
      h.row.resize(0);
      beam.emplace(it->first, std::move(h));
    }
  }
  return {};
}

HypothesisSet build_training_hypotheses(const Matrix& features,
                                        const TokenSequence& reference,
                                        const ModelParams& params,
                                        const SearchOptions& options,
                                        const std::vector<int>& deadlines) {
  HypothesisSet H;
  for (auto& s : beam_search(features, params, options, deadlines)) {
    H.hypotheses.push_back(std::move(s.tokens));
  }
  auto found = std::find(H.hypotheses.begin(), H.hypotheses.end(), reference);
  if (found != H.hypotheses.end()) {
    H.ref_index = static_cast<std::size_t>(found - H.hypotheses.begin());
  } else if (static_cast<int>(H.hypotheses.size()) < options.nbest) {
    H.hypotheses.push_back(reference);
    H.ref_index = H.hypotheses.size() - 1;
  } else {
    H.hypotheses.back() = reference;
    H.ref_index = H.hypotheses.size() - 1;
  }
  return H;
}

TokenSequence decode(const Matrix& features, const ModelParams& params,
                     int beam, double alpha, const std::vector<int>& deadlines,
                     int max_emissions) {
  SearchOptions options;
  options.beam = beam;
  options.nbest = 1;
  options.alpha = alpha;
  options.max_emissions = max_emissions;
  return beam_search(features, params, options, deadlines).front().tokens;
}

}  // namespace gnt
