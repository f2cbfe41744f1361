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

#include <cstdint>
#include <string>
#include <vector>

#include "gnt/model.hpp"

namespace gnt {

struct Utterance {
  std::string id;
  Matrix features;  // frames x feature_dim
  TokenSequence tokens;
  std::vector<int> deadlines;  // see WeightGrid::deadlines

  int frames() const { return static_cast<int>(features.rows()); }
};

using Dataset = std::vector<Utterance>;

namespace mail_nail {
inline constexpr int kMail = 1;
inline constexpr int kNail = 2;
inline constexpr int kOrder = 3;
inline constexpr int kPolish = 4;
inline constexpr int kVocab = 4;
inline constexpr int kChunkFrames = 10;
inline constexpr int kFeatureDim = 4;
const char* word(int token);
}  // namespace mail_nail

/// Two-class toy task: "mail order" vs "nail polish". Frames 1..10 mix a
/// per-pair shared draw with a class offset scaled by (1 - ambiguity);
/// frames 11..20 are class-distinct. The first word must be emitted within
/// the first chunk. Utterances alternate mail/nail.
Dataset make_mail_nail_dataset(double ambiguity, int copies, std::uint64_t seed);

struct SyntheticSpec {
  int vocab = 6;
  int min_tokens = 1;
  int max_tokens = 4;
  int frames_per_token = 3;
  int feature_dim = 4;
  double noise = 0.1;
  int count = 200;
};

/// Random token sequences rendered as per-token embeddings held for
/// frames_per_token frames, plus uniform noise in [-noise, noise].
Dataset make_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

/// The fixed per-token embeddings the synthetic generator renders.
Matrix synthetic_token_embeddings(const SyntheticSpec& spec, std::uint64_t seed);

struct Split {
  Dataset train;
  Dataset held_out;
};
/// Deterministic split; held_out takes every `stride`-th utterance.
Split split_dataset(const Dataset& data, int stride);

/// Dataset container. First line is a text header:
///   "GNTDATA 1 <utterances> <feature_dim>\n"
/// followed by, per utterance, little-endian fields:
///   u32 id_len, id bytes, u32 frames, u32 tokens, u32 deadlines,
///   i32 x tokens, i32 x deadlines, f64 x (frames * feature_dim) row-major.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Named sub-stream of a master seed (dataset, init, batching, ...).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream);

}  // namespace gnt
