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

#include "gnt/lattice.hpp"

namespace gnt {

namespace {

void extend(int t, int u, int frames, int tokens, Path& prefix,
            std::vector<Path>& out) {
  if (t == frames && u == tokens) {
    out.push_back(prefix);
    return;
  }
  if (t < frames) {
    prefix.moves.push_back({MoveKind::kBlank, t, u});
    extend(t + 1, u, frames, tokens, prefix, out);
    prefix.moves.pop_back();
  }
  if (u < tokens) {
    prefix.moves.push_back({MoveKind::kToken, t, u});
    extend(t, u + 1, frames, tokens, prefix, out);
    prefix.moves.pop_back();
  }
}

}  // namespace

std::vector<Path> enumerate_paths(int frames, int tokens, int cap) {
  if (frames < 0 || tokens < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative lattice size");
  }
  if (frames + tokens > cap) {
    throw Error(ErrorCode::kOracleSize,
                "path enumeration needs T+U <= " + std::to_string(cap) +
                    ", got " + std::to_string(frames + tokens));
  }
  std::vector<Path> out;
  Path prefix;
  prefix.moves.reserve(static_cast<std::size_t>(frames + tokens));
  extend(0, 0, frames, tokens, prefix, out);
  return out;
}

LabelSequence path_to_labels(const Path& path, const TokenSequence& z) {
  std::size_t token_moves = 0;
  for (const Move& m : path.moves) token_moves += m.kind == MoveKind::kToken;
  if (token_moves != z.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "path has " + std::to_string(token_moves) +
                    " token moves but z has " + std::to_string(z.size()));
  }
  LabelSequence labels;
  labels.reserve(path.moves.size());
  for (const Move& m : path.moves) {
    labels.push_back(m.kind == MoveKind::kBlank ? kBlank
                                                : z[static_cast<std::size_t>(m.u)]);
  }
  return labels;
}

TokenSequence labels_to_tokens(const LabelSequence& labels) {
  TokenSequence z;
  for (int y : labels) {
    if (y != kBlank) z.push_back(y);
  }
  return z;
}

std::string labels_to_string(const LabelSequence& labels) {
  std::string s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) s += ' ';
    s += labels[i] == kBlank ? '_' : static_cast<char>('a' + labels[i] - 1);
  }
  return s;
}

}  // namespace gnt
