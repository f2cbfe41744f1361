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

#include "gnt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace gnt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kParse, "bad value '" + value + "' for " + key);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

struct Field {
  std::string help;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define GNT_INT_FIELD(expr, help)                                                     \
  Field {                                                                             \
    help,                                                                             \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_number<std::remove_reference_t<decltype(c.expr)>>(k, v);     \
        },                                                                            \
        [](const RunConfig& c) { return std::to_string(c.expr); }                     \
  }

#define GNT_REAL_FIELD(expr, help)                                                    \
  Field {                                                                             \
    help,                                                                             \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_number<double>(k, v);                                        \
        },                                                                            \
        [](const RunConfig& c) { return format_double(c.expr); }                      \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"data.task",
       Field{"mail_nail, synthetic or file",
             [](RunConfig& c, const std::string& k, const std::string& v) {
               if (v == "mail_nail") c.data.task = TaskKind::kMailNail;
               else if (v == "synthetic") c.data.task = TaskKind::kSynthetic;
               else if (v == "file") c.data.task = TaskKind::kFile;
               else bad_value(k, v);
             },
             [](const RunConfig& c) -> std::string {
               switch (c.data.task) {
                 case TaskKind::kMailNail: return "mail_nail";
                 case TaskKind::kSynthetic: return "synthetic";
                 case TaskKind::kFile: return "file";
               }
               return "";
             }}},
      {"data.path",
       Field{"dataset container for data.task = file",
             [](RunConfig& c, const std::string&, const std::string& v) { c.data.path = v; },
             [](const RunConfig& c) { return c.data.path; }}},
      {"data.ambiguity", GNT_REAL_FIELD(data.ambiguity, "mail/nail first-chunk ambiguity in [0, 1]")},
      {"data.copies", GNT_INT_FIELD(data.copies, "mail/nail utterance pairs")},
      {"data.vocab", GNT_INT_FIELD(data.synthetic.vocab, "synthetic vocabulary size K")},
      {"data.min_tokens", GNT_INT_FIELD(data.synthetic.min_tokens, "synthetic shortest transcript")},
      {"data.max_tokens", GNT_INT_FIELD(data.synthetic.max_tokens, "synthetic longest transcript")},
      {"data.frames_per_token", GNT_INT_FIELD(data.synthetic.frames_per_token, "synthetic frames per token")},
      {"data.feature_dim", GNT_INT_FIELD(data.synthetic.feature_dim, "synthetic feature dimension")},
      {"data.noise", GNT_REAL_FIELD(data.synthetic.noise, "synthetic uniform noise amplitude")},
      {"data.count", GNT_INT_FIELD(data.synthetic.count, "synthetic utterance count")},

      {"model.feature_dim", GNT_INT_FIELD(model.feature_dim, "input feature dimension")},
      {"model.context", GNT_INT_FIELD(model.context, "past frames in the encoder window")},
      {"model.encoder_hidden", GNT_INT_FIELD(model.encoder_hidden, "encoder hidden width")},
      {"model.model_dim", GNT_INT_FIELD(model.model_dim, "encoder and predictor output width")},
      {"model.embed_dim", GNT_INT_FIELD(model.embed_dim, "token embedding width")},
      {"model.joiner_dim", GNT_INT_FIELD(model.joiner_dim, "joiner hidden width")},
      {"model.vocab", GNT_INT_FIELD(model.vocab, "token vocabulary size K, blank excluded")},
      {"model.predictor",
       Field{"full (gated recurrence) or limited (last n tokens)",
             [](RunConfig& c, const std::string& k, const std::string& v) {
               if (v == "full") c.model.predictor = PredictorKind::kFullHistory;
               else if (v == "limited") c.model.predictor = PredictorKind::kLimitedHistory;
               else bad_value(k, v);
             },
             [](const RunConfig& c) -> std::string {
               return c.model.predictor == PredictorKind::kFullHistory ? "full" : "limited";
             }}},
      {"model.history_order", GNT_INT_FIELD(model.history_order, "n for the limited-history predictor")},
      {"model.init_scale", GNT_REAL_FIELD(init_scale, "uniform initialisation half-width")},

      {"train.epochs", GNT_INT_FIELD(train.epochs, "training epochs")},
      {"train.nbest", GNT_INT_FIELD(train.nbest, "hypotheses per utterance N")},
      {"train.refresh_period", GNT_INT_FIELD(train.refresh_period, "batches between N-best refreshes")},
      {"train.batch_budget", GNT_INT_FIELD(train.batch_budget, "max summed frames per batch")},
      {"train.beam", GNT_INT_FIELD(train.beam, "beam width B used for refreshes")},
      {"train.max_emissions", GNT_INT_FIELD(train.max_emissions, "max tokens per frame E")},
      {"train.seed", GNT_INT_FIELD(train.seed, "master seed")},
      {"train.lr", GNT_REAL_FIELD(train.adam.lr, "Adam learning rate")},
      {"train.beta1", GNT_REAL_FIELD(train.adam.beta1, "Adam first-moment decay")},
      {"train.beta2", GNT_REAL_FIELD(train.adam.beta2, "Adam second-moment decay")},
      {"train.eps", GNT_REAL_FIELD(train.adam.eps, "Adam epsilon")},
      {"train.guard_floor", GNT_REAL_FIELD(train.guard_floor, "collapse guard floor on the competitor margin")},
      {"train.jobs", GNT_INT_FIELD(train.jobs, "worker threads")},
      {"train.loss_normalization",
       Field{"frame (summed loss over batch frames) or utterance (mean over utterances)",
             [](RunConfig& c, const std::string& k, const std::string& v) {
               if (v == "frame") c.train.normalization = LossNormalization::kPerFrame;
               else if (v == "utterance") c.train.normalization = LossNormalization::kPerUtterance;
               else bad_value(k, v);
             },
             [](const RunConfig& c) -> std::string {
               return c.train.normalization == LossNormalization::kPerFrame ? "frame" : "utterance";
             }}},

      {"schedule.branch_epoch", GNT_REAL_FIELD(schedule.branch_epoch, "epoch where alpha starts to fall")},
      {"schedule.alpha_target", GNT_REAL_FIELD(schedule.alpha_target, "final interpolation weight")},
      {"schedule.alpha_slope", GNT_REAL_FIELD(schedule.alpha_slope, "alpha decrease per epoch")},
      {"schedule.lambda_target", GNT_REAL_FIELD(schedule.lambda_target, "regularizer weight after the ramp")},
      {"schedule.lambda_ramp_epochs", GNT_REAL_FIELD(schedule.lambda_ramp_epochs, "ramp length, ending at branch_epoch")},
  };
  return table;
}

#undef GNT_INT_FIELD
#undef GNT_REAL_FIELD

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& [name, f] : fields()) out.push_back({name, f.help});
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key,
                   const std::string& value) {
  for (const auto& [name, f] : fields()) {
    if (name == key) {
      f.set(config, key, value);
      return;
    }
  }
  throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig config) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(number) + ": expected key = value");
    }
    try {
      apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(config) + "\n";
  return out;
}

Dataset make_dataset(const RunConfig& config) {
  switch (config.data.task) {
    case TaskKind::kMailNail:
      return make_mail_nail_dataset(config.data.ambiguity, config.data.copies,
                                    derive_seed(config.train.seed, "dataset"));
    case TaskKind::kSynthetic:
      return make_synthetic_dataset(config.data.synthetic,
                                    derive_seed(config.train.seed, "dataset"));
    case TaskKind::kFile:
      return load_dataset(config.data.path);
  }
  return {};
}

void check_dataset(const Dataset& data, const ModelConfig& model) {
  for (const Utterance& u : data) {
    if (u.frames() > 0 && u.features.cols() != model.feature_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  u.id + ": feature dim " + std::to_string(u.features.cols()) +
                      " but the model expects " + std::to_string(model.feature_dim));
    }
    for (int t : u.tokens) {
      if (t < 1 || t > model.vocab) {
        throw Error(ErrorCode::kTokenOutOfRange,
                    u.id + ": token " + std::to_string(t) + " outside 1.." +
                        std::to_string(model.vocab));
      }
    }
  }
}

}  // namespace gnt
