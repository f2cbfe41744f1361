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

#include <vector>

#include "gnt/losses.hpp"
#include "gnt/model.hpp"

namespace gnt {

struct SearchOptions {
  int beam = 50;            // B
  int nbest = 10;           // N
  int max_emissions = 4;    // E, tokens per hypothesis per frame
  int max_tokens = -1;      // total output length cap, negative = none
  double alpha = 1.0;       // partial normalization applied to every row
  void validate() const;
};

struct ScoredSequence {
  TokenSequence tokens;
  double score = 0;  // log weight, alignments merged by logsumexp
};

/// Time-synchronous beam search. At every node time t each surviving prefix
/// may emit up to E tokens before the blank moves it to t+1; prefixes reached
/// by different alignments are merged. Returns at most N sequences, best
/// first. Never consults a global normalizer.
std::vector<ScoredSequence> beam_search(const Matrix& features,
                                        const ModelParams& params,
                                        const SearchOptions& options,
                                        const std::vector<int>& deadlines = {});

/// N-best plus the reference. If the reference was not found, it replaces
/// the last competitor so the set size stays at N.
HypothesisSet build_training_hypotheses(const Matrix& features,
                                        const TokenSequence& reference,
                                        const ModelParams& params,
                                        const SearchOptions& options,
                                        const std::vector<int>& deadlines = {});

TokenSequence decode(const Matrix& features, const ModelParams& params,
                     int beam = 50, double alpha = 1.0,
                     const std::vector<int>& deadlines = {},
                     int max_emissions = 4);

}  // namespace gnt
