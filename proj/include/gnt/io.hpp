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

// Text formats shared by the command-line tool.

#include <string>
#include <vector>

#include "gnt/losses.hpp"
#include "gnt/training.hpp"

namespace gnt {

/// One line per utterance: "<id>\t<space-joined token ids>\t<log score>".
struct HypothesisLine {
  std::string id;
  TokenSequence tokens;
  double score = 0;
};

std::string format_hypotheses(const std::vector<HypothesisLine>& lines);
void write_hypotheses(const std::vector<HypothesisLine>& lines,
                      const std::string& path);
std::vector<HypothesisLine> read_hypotheses(const std::string& path);

/// Transcript lines for scoring: "<id>\t<words...>[\t...]". Lines without a
/// tab are keyed by their 1-based line number.
struct Transcript {
  std::string id;
  std::vector<std::string> words;
};
std::vector<Transcript> read_transcripts(const std::string& path);

std::vector<MetricsRecord> read_metrics(const std::string& path);

/// Curve export, one row per logged batch.
std::string metrics_csv(const std::vector<MetricsRecord>& records);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace gnt
