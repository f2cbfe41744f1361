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

#include "gnt/wer.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "gnt/error.hpp"

namespace gnt {

WerResult wer(const std::vector<std::string>& ref,
              const std::vector<std::string>& hyp) {
  if (ref.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty reference");
  }
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  // cost(i, j): edits turning ref[0..i) into hyp[0..j)
  std::vector<int> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }

  WerResult r;
  r.ref_length = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++r.substitutions;
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++r.insertions;
      --j;
    } else {
      ++r.deletions;
      --i;
    }
  }
  r.rate = 100.0 * r.errors() / r.ref_length;
  return r;
}

WerResult corpus_wer(const std::vector<std::vector<std::string>>& refs,
                     const std::vector<std::vector<std::string>>& hyps) {
  if (refs.size() != hyps.size()) {
    throw Error(ErrorCode::kDatasetMismatch, "reference and hypothesis counts differ");
  }
  WerResult total;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const WerResult r = wer(refs[k], hyps[k]);
    total.substitutions += r.substitutions;
    total.deletions += r.deletions;
    total.insertions += r.insertions;
    total.ref_length += r.ref_length;
  }
  if (total.ref_length == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty reference");
  }
  total.rate = 100.0 * total.errors() / total.ref_length;
  return total;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::string to_json(const WerResult& r) {
  nlohmann::ordered_json j;
  j["substitutions"] = r.substitutions;
  j["deletions"] = r.deletions;
  j["insertions"] = r.insertions;
  j["ref_length"] = r.ref_length;
  j["rate"] = r.rate;
  return j.dump(2);
}

}  // namespace gnt
