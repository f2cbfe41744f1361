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

#include "gnt/latency.hpp"

#include <json.hpp>

namespace gnt {

LatencyReport average_emission_time(const Dataset& data,
                                    const ModelParams& params, double alpha,
                                    double frame_ms, bool pooled) {
  LatencyReport report;
  report.pooled = pooled;
  report.frame_ms = frame_ms;
  double sum = 0.0;
  double pooled_time = 0.0;
  long pooled_tokens = 0;
  for (const Utterance& u : data) {
    UtteranceLatency entry;
    entry.id = u.id;
    entry.tokens = static_cast<int>(u.tokens.size());
    if (!u.tokens.empty()) {
      const EncoderOutput enc = encode(u.features, params);
      Grid g = joint_grid(enc, predict(u.tokens, params), params);
      g.deadlines = u.deadlines;
      const auto w =
          expectation_forward(apply_partial_normalization(g, alpha), u.tokens, frame_ms);
      entry.total_ms = w->expectation();
      entry.mean_ms = entry.total_ms / entry.tokens;
      sum += *entry.mean_ms;
      pooled_time += entry.total_ms;
      pooled_tokens += entry.tokens;
      ++report.measured;
    } else {
      ++report.skipped;
    }
    report.utterances.push_back(std::move(entry));
  }
  if (report.measured > 0) {
    report.average_ms = pooled ? pooled_time / static_cast<double>(pooled_tokens)
                               : sum / report.measured;
  }
  return report;
}

LatencyDelta latency_delta(LatencyReport system, LatencyReport baseline) {
  bool same = system.utterances.size() == baseline.utterances.size();
  for (std::size_t i = 0; same && i < system.utterances.size(); ++i) {
    same = system.utterances[i].id == baseline.utterances[i].id &&
           system.utterances[i].tokens == baseline.utterances[i].tokens;
  }
  if (!same) {
    throw Error(ErrorCode::kDatasetMismatch,
                "latency reports were measured on different datasets");
  }
  if (system.pooled != baseline.pooled || system.frame_ms != baseline.frame_ms) {
    throw Error(ErrorCode::kInvalidArgument,
                "latency reports use different averaging settings");
  }
  LatencyDelta d;
  d.delta_ms = system.average_ms - baseline.average_ms;
  d.system = std::move(system);
  d.baseline = std::move(baseline);
  return d;
}

namespace {

nlohmann::ordered_json report_json(const LatencyReport& r) {
  nlohmann::ordered_json j;
  j["average_ms"] = r.average_ms;
  j["measured"] = r.measured;
  j["skipped"] = r.skipped;
  j["averaging"] = r.pooled ? "pooled" : "per-utterance";
  j["frame_ms"] = r.frame_ms;
  auto& list = j["utterances"] = nlohmann::ordered_json::array();
  for (const auto& u : r.utterances) {
    nlohmann::ordered_json e;
    e["id"] = u.id;
    e["tokens"] = u.tokens;
    e["mean_ms"] = u.mean_ms ? nlohmann::ordered_json(*u.mean_ms)
                             : nlohmann::ordered_json(nullptr);
    e["total_ms"] = u.total_ms;
    list.push_back(std::move(e));
  }
  return j;
}

}  // namespace

std::string to_json(const LatencyReport& report) {
  return report_json(report).dump(2);
}

std::string to_json(const LatencyDelta& delta) {
  nlohmann::ordered_json j;
  j["delta_ms"] = delta.delta_ms;
  j["system"] = report_json(delta.system);
  j["baseline"] = report_json(delta.baseline);
  return j.dump(2);
}

}  // namespace gnt
