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

#include <string>
#include <vector>

namespace gnt {

struct WerResult {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_length = 0;
  double rate = 0;  // percent

  int errors() const { return substitutions + deletions + insertions; }
};

/// Unit-cost Levenshtein alignment of hyp against ref. Among minimal edit
/// scripts the backtrace prefers substitution, then insertion, then deletion.
/// Throws kInvalidArgument for an empty reference.
WerResult wer(const std::vector<std::string>& ref,
              const std::vector<std::string>& hyp);

/// Summed counts over utterance pairs; rate is relative to the summed
/// reference length.
WerResult corpus_wer(const std::vector<std::vector<std::string>>& refs,
                     const std::vector<std::vector<std::string>>& hyps);

std::vector<std::string> split_words(const std::string& text);

std::string to_json(const WerResult& r);

}  // namespace gnt
