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

#include "gnt/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "gnt/wer.hpp"

namespace gnt {

namespace {

std::string round_trip(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::vector<std::string> lines_of(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  f << contents;
  if (!f) throw Error(ErrorCode::kIo, "short write to " + path);
}

std::string format_hypotheses(const std::vector<HypothesisLine>& lines) {
  std::string out;
  for (const auto& h : lines) {
    out += h.id + '\t';
    for (std::size_t i = 0; i < h.tokens.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(h.tokens[i]);
    }
    out += '\t' + round_trip(h.score) + '\n';
  }
  return out;
}

void write_hypotheses(const std::vector<HypothesisLine>& lines,
                      const std::string& path) {
  write_file(path, format_hypotheses(lines));
}

std::vector<HypothesisLine> read_hypotheses(const std::string& path) {
  std::vector<HypothesisLine> out;
  int number = 0;
  for (const auto& line : lines_of(path)) {
    ++number;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(number) +
                                         ": expected id<TAB>tokens<TAB>score");
    }
    HypothesisLine h;
    h.id = fields[0];
    try {
      for (const auto& w : split_words(fields[1])) h.tokens.push_back(std::stoi(w));
      h.score = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(number) + ": bad number");
    }
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<Transcript> read_transcripts(const std::string& path) {
  std::vector<Transcript> out;
  int number = 0;
  for (const auto& line : lines_of(path)) {
    ++number;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() == 1) {
      out.push_back({std::to_string(number), split_words(fields[0])});
    } else {
      out.push_back({fields[0], split_words(fields[1])});
    }
  }
  return out;
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
  std::vector<MetricsRecord> out;
  for (const auto& line : lines_of(path)) {
    if (!line.empty()) out.push_back(metrics_from_json(line));
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out =
      "step,epoch,batch,progress,loss,nll,reg_metric,alpha,lambda,guard_margin,"
      "guard_fired\n";
  for (const auto& r : records) {
    out += std::to_string(r.step) + ',' + std::to_string(r.epoch) + ',' +
           std::to_string(r.batch) + ',' + round_trip(r.progress) + ',' +
           round_trip(r.loss) + ',' + round_trip(r.nll) + ',' +
           round_trip(r.reg_metric) + ',' + round_trip(r.alpha) + ',' +
           round_trip(r.lambda) + ',' + round_trip(r.guard_margin) + ',' +
           (r.guard_fired ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace gnt
