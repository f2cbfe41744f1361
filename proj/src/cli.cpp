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

#include "gnt/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnt/config.hpp"
#include "gnt/experiments.hpp"
#include "gnt/gradcheck.hpp"
#include "gnt/io.hpp"
#include "gnt/wer.hpp"

namespace gnt {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Flags shared by several subcommands. Unset values leave the config alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> alpha_target;
  std::optional<int> nbest;
  std::optional<int> beam;
  std::optional<double> lambda;
  std::vector<std::string> settings;  // key=value

  void apply(RunConfig& c) const {
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kParse, "--set expects key=value, got '" + s + "'");
      }
      apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) c.train.seed = *seed;
    if (jobs) c.train.jobs = *jobs;
    if (alpha_target) c.schedule.alpha_target = *alpha_target;
    if (nbest) c.train.nbest = *nbest;
    if (beam) c.train.beam = *beam;
    if (lambda) c.schedule.lambda_target = *lambda;
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_config(config);
    apply(c);
    return c;
  }
};

void add_config(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key=value run configuration")
      ->envname("GNT_CONFIG");
  app->add_option("--set", o.settings, "extra key=value setting (repeatable)");
}
void add_seed(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "master seed")->envname("GNT_SEED");
}
void add_jobs(CLI::App* app, Overrides& o) {
  app->add_option("--jobs", o.jobs, "worker threads (1 = sequential)")
      ->envname("GNT_JOBS")
      ->check(CLI::PositiveNumber);
}
void add_search(CLI::App* app, Overrides& o) {
  app->add_option("--nbest", o.nbest, "hypotheses per utterance")->envname("GNT_NBEST");
  app->add_option("--beam", o.beam, "beam width")->envname("GNT_BEAM");
}
void add_schedule(CLI::App* app, Overrides& o) {
  app->add_option("--alpha-target", o.alpha_target, "final interpolation weight")
      ->envname("GNT_ALPHA_TARGET");
  app->add_option("--lambda", o.lambda, "regularizer weight")->envname("GNT_LAMBDA");
}
void add_out(CLI::App* app, std::string& out) {
  app->add_option("--out", out, "machine-readable output path")
      ->envname("GNT_OUT")
      ->required();
}

std::vector<std::string> as_words(const TokenSequence& z) {
  std::vector<std::string> w;
  for (int t : z) w.push_back(std::to_string(t));
  return w;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch-%03d.ckpt", epoch);
  return buf;
}

// Dataset from --data if given, else generated from the configuration.
Dataset input_data(const std::string& data_path, const Overrides& o) {
  if (!data_path.empty()) return load_dataset(data_path);
  return make_dataset(o.resolve());
}

// ---------------------------------------------------------------------------

int cmd_train(const Overrides& o, const std::string& out_dir, std::ostream& out) {
  const RunConfig config = o.resolve();
  const Dataset data = make_dataset(config);
  check_dataset(data, config.model);
  const ModelParams init = ModelParams::random(
      config.model, derive_seed(config.train.seed, "init"), config.init_scale);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file((dir / "config.txt").string(), to_config_text(config));
  std::ofstream metrics((dir / "metrics.jsonl").string(), std::ios::trunc);
  if (!metrics) throw Error(ErrorCode::kIo, "cannot write metrics log in " + out_dir);

  MetricsRecord last;
  int fired = 0;
  TrainCallbacks callbacks;
  callbacks.on_batch = [&](const MetricsRecord& r) {
    metrics << to_json_line(r) << '\n';
    metrics.flush();
    last = r;
    fired += r.guard_fired;
  };
  callbacks.on_epoch = [&](int epoch, const ModelParams& p, double alpha) {
    save_checkpoint(p, (dir / epoch_name(epoch)).string(), alpha);
    out << "epoch " << epoch << "  loss " << fixed(last.loss) << "  alpha "
        << fixed(last.alpha, 3) << "  lambda " << fixed(last.lambda, 4)
        << "  reg " << fixed(last.reg_metric, 3) << '\n';
  };
  const ModelParams final_params = train(data, init, config.train, config.schedule, callbacks);
  const double alpha = alpha_schedule(config.train.epochs, config.schedule);
  save_checkpoint(final_params, (dir / "final.ckpt").string(), alpha);

  Json summary;
  summary["utterances"] = data.size();
  summary["epochs"] = config.train.epochs;
  summary["steps"] = last.step;
  summary["final_loss"] = last.loss;
  summary["final_alpha"] = alpha;
  summary["guard_fired_batches"] = fired;
  summary["mean_local_nll"] = mean_local_nll(data, final_params);
  write_file((dir / "summary.json").string(), summary.dump(2) + "\n");

  out << "trained " << config.train.epochs << " epochs on " << data.size()
      << " utterances, " << last.step << " steps; final alpha " << fixed(alpha, 3)
      << "; checkpoints and metrics.jsonl in " << out_dir << '\n';
  return 0;
}

int cmd_make_dataset(const Overrides& o, const std::string& path, std::ostream& out) {
  const Dataset data = make_dataset(o.resolve());
  save_dataset(data, path);
  out << "wrote " << data.size() << " utterances to " << path << '\n';
  return 0;
}

int cmd_decode(const Overrides& o, const std::string& ckpt,
               const std::string& data_path, std::optional<double> alpha_flag,
               int max_emissions, const std::string& path, std::ostream& out) {
  const Checkpoint c = load_checkpoint(ckpt);
  const Dataset data = input_data(data_path, o);
  check_dataset(data, c.params.config);
  const double alpha = alpha_flag.value_or(c.alpha);
  const int beam = o.beam.value_or(16);

  std::vector<HypothesisLine> lines(data.size());
  parallel_for(data.size(), o.jobs.value_or(1), [&](std::size_t i) {
    SearchOptions s;
    s.beam = beam;
    s.nbest = 1;
    s.max_emissions = max_emissions;
    s.alpha = alpha;
    const auto best = beam_search(data[i].features, c.params, s, data[i].deadlines);
    lines[i].id = data[i].id;
    if (!best.empty()) {
      lines[i].tokens = best.front().tokens;
      lines[i].score = best.front().score;
    }
  });
  write_hypotheses(lines, path);

  std::vector<std::vector<std::string>> refs, hyps;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].tokens.empty()) continue;
    refs.push_back(as_words(data[i].tokens));
    hyps.push_back(as_words(lines[i].tokens));
  }
  out << "decoded " << data.size() << " utterances (beam " << beam << ", alpha "
      << fixed(alpha, 3) << ") to " << path << '\n';
  if (!refs.empty()) {
    out << "token error against dataset transcripts: "
        << fixed(corpus_wer(refs, hyps).rate, 2) << "%\n";
  }
  return 0;
}

int cmd_nbest(const Overrides& o, const std::string& ckpt,
              const std::string& data_path, std::optional<double> alpha_flag,
              int max_emissions, const std::string& path, std::ostream& out) {
  const Checkpoint c = load_checkpoint(ckpt);
  const Dataset data = input_data(data_path, o);
  check_dataset(data, c.params.config);
  const double alpha = alpha_flag.value_or(c.alpha);
  SearchOptions s;
  s.beam = o.beam.value_or(16);
  s.nbest = o.nbest.value_or(10);
  s.max_emissions = max_emissions;
  s.alpha = alpha;
  s.validate();

  std::vector<Json> entries(data.size());
  parallel_for(data.size(), o.jobs.value_or(1), [&](std::size_t i) {
    const Utterance& u = data[i];
    const HypothesisSet H =
        build_training_hypotheses(u.features, u.tokens, c.params, s, u.deadlines);
    const EncoderOutput enc = encode(u.features, c.params);
    Json e;
    e["id"] = u.id;
    e["ref_index"] = H.ref_index;
    e["hypotheses"] = Json::array();
    for (const auto& z : H.hypotheses) {
      Grid g = joint_grid(enc, predict(z, c.params), c.params);
      g.deadlines = u.deadlines;
      e["hypotheses"].push_back(
          {{"tokens", z}, {"score", forward_score(apply_partial_normalization(g, alpha), z)}});
    }
    entries[i] = std::move(e);
  });
  Json j;
  j["alpha"] = alpha;
  j["beam"] = s.beam;
  j["nbest"] = s.nbest;
  j["utterances"] = entries;
  write_file(path, j.dump(2) + "\n");
  std::size_t total = 0;
  for (const auto& e : entries) total += e["hypotheses"].size();
  out << "wrote " << data.size() << " hypothesis sets (" << total
      << " hypotheses) to " << path << '\n';
  return 0;
}

int cmd_latency(const Overrides& o, const std::string& system_path,
                const std::string& baseline_path, const std::string& data_path,
                std::optional<double> system_alpha, std::optional<double> baseline_alpha,
                double frame_ms, bool pooled, const std::string& path,
                std::ostream& out) {
  const Checkpoint system = load_checkpoint(system_path);
  const Checkpoint baseline = load_checkpoint(baseline_path);
  const Dataset data = input_data(data_path, o);
  check_dataset(data, system.params.config);
  check_dataset(data, baseline.params.config);
  const LatencyDelta d = latency_delta(
      average_emission_time(data, system.params, system_alpha.value_or(system.alpha),
                            frame_ms, pooled),
      average_emission_time(data, baseline.params,
                            baseline_alpha.value_or(baseline.alpha), frame_ms, pooled));
  write_file(path, to_json(d) + "\n");
  out << "average emission time: system " << fixed(d.system.average_ms, 2)
      << " ms, baseline " << fixed(d.baseline.average_ms, 2) << " ms, delta "
      << fixed(d.delta_ms, 2) << " ms (" << d.system.measured << " utterances, "
      << d.system.skipped << " skipped)\n";
  return 0;
}

int cmd_wer(const std::string& ref_path, const std::string& hyp_path,
            const std::string& path, std::ostream& out) {
  const auto refs = read_transcripts(ref_path);
  const auto hyps = read_transcripts(hyp_path);
  std::map<std::string, const Transcript*> by_id;
  for (const auto& h : hyps) by_id[h.id] = &h;
  if (by_id.size() != hyps.size()) {
    throw Error(ErrorCode::kParse, hyp_path + ": duplicate utterance ids");
  }
  std::vector<std::vector<std::string>> r, h;
  for (const auto& ref : refs) {
    const auto it = by_id.find(ref.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kDatasetMismatch, "no hypothesis for utterance " + ref.id);
    }
    r.push_back(ref.words);
    h.push_back(it->second->words);
  }
  if (refs.size() != hyps.size()) {
    throw Error(ErrorCode::kDatasetMismatch, "hypothesis file has extra utterances");
  }
  const WerResult w = corpus_wer(r, h);
  write_file(path, to_json(w) + "\n");
  out << "WER " << fixed(w.rate, 2) << "% (" << w.substitutions << " sub, "
      << w.deletions << " del, " << w.insertions << " ins, " << w.ref_length
      << " reference words)\n";
  return 0;
}

int cmd_grad_check(std::uint64_t seed, int instances, const std::string& path,
                   std::ostream& out) {
  const GradCheckReport r = run_grad_check(seed, instances);
  write_file(path, to_json(r) + "\n");
  out << "max relative error over " << r.instances << " instances\n"
      << "  occupancy          " << r.occupancy << '\n'
      << "  local_nll          " << r.local << '\n'
      << "  global_nbest_loss  " << r.global << '\n'
      << "  interpolated_loss  " << r.interpolated << '\n'
      << "  regularizer        " << r.regularizer << '\n'
      << "  parameters         " << r.parameters << '\n';
  return 0;
}

Json system_json(const SystemSummary& s, const Dataset& data) {
  Json j;
  j["alpha"] = s.alpha;
  j["nll"] = s.nll;
  j["token_error"] = s.token_error;
  j["average_emission_ms"] = s.latency.average_ms;
  Json decodes = Json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    decodes.push_back({{"id", data[i].id}, {"tokens", s.decodes[i]}});
  }
  j["decodes"] = decodes;
  return j;
}

std::string words_of(const TokenSequence& z) {
  std::string s;
  for (int t : z) s += std::string(s.empty() ? "" : " ") + mail_nail::word(t);
  return s.empty() ? "(empty)" : s;
}

int cmd_labelbias(const Overrides& o, int copies, int epochs,
                  const std::string& path, std::ostream& out) {
  LabelBiasConfig c;
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.train.jobs = *o.jobs;
  if (o.alpha_target) c.schedule.alpha_target = *o.alpha_target;
  if (o.nbest) c.train.nbest = *o.nbest;
  if (o.beam) c.eval_beam = c.train.beam = *o.beam;
  if (o.lambda) c.schedule.lambda_target = *o.lambda;
  if (copies > 0) c.copies = copies;
  if (epochs > 0) {
    c.train.epochs = epochs;
    c.schedule.branch_epoch = epochs / 4.0;
  }
  const LabelBiasResult r = run_label_bias(c);

  Json j;
  j["copies"] = c.copies;
  j["epochs"] = c.train.epochs;
  j["seed"] = c.seed;
  j["ln2"] = std::log(2.0);
  j["local"] = system_json(r.local, r.data);
  j["global"] = system_json(r.global, r.data);
  j["latency_delta_ms"] = r.latency_delta_ms;
  write_file(path, j.dump(2) + "\n");

  out << "mail/nail, " << r.data.size() << " utterances, ambiguity 1\n"
      << "  local  model: NLL " << fixed(r.local.nll) << " (ln 2 = "
      << fixed(std::log(2.0)) << "), token error " << fixed(r.local.token_error, 2)
      << "%\n"
      << "  global model: NLL " << fixed(r.global.nll) << ", token error "
      << fixed(r.global.token_error, 2) << "%\n"
      << "  latency delta (global - local): " << fixed(r.latency_delta_ms, 2) << " ms\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(2, r.data.size()); ++i) {
    out << "  " << r.data[i].id << ": local \"" << words_of(r.local.decodes[i])
        << "\", global \"" << words_of(r.global.decodes[i]) << "\"\n";
  }
  return 0;
}

int cmd_export_curves(const std::string& metrics_path, const std::string& path,
                      std::ostream& out) {
  const auto records = read_metrics(metrics_path);
  write_file(path, metrics_csv(records));
  out << "exported " << records.size() << " rows to " << path << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Globally normalized transducer training and decoding", "gnt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gnt 1.0");

  Overrides o;
  std::string out_path;
  std::string ckpt, data_path, system_path, baseline_path, ref_path, hyp_path, metrics_path;
  std::optional<double> alpha, system_alpha, baseline_alpha;
  int max_emissions = 4;
  double frame_ms = 10.0;
  bool pooled = false;
  int instances = 10;
  int copies = 0;
  int epochs = 0;

  auto* train_cmd = app.add_subcommand("train", "train a model from a run configuration");
  add_config(train_cmd, o);
  add_seed(train_cmd, o);
  add_jobs(train_cmd, o);
  add_search(train_cmd, o);
  add_schedule(train_cmd, o);
  add_out(train_cmd, out_path);

  auto* make_cmd = app.add_subcommand("make-dataset", "write the configured dataset to a file");
  add_config(make_cmd, o);
  add_seed(make_cmd, o);
  add_out(make_cmd, out_path);

  auto* decode_cmd = app.add_subcommand("decode", "beam-search top-1 hypotheses");
  decode_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--data", data_path, "dataset file (default: generate from --config)");
  decode_cmd->add_option("--alpha", alpha, "partial normalization (default: checkpoint)");
  decode_cmd->add_option("--max-emissions", max_emissions, "tokens per frame");
  add_config(decode_cmd, o);
  add_seed(decode_cmd, o);
  add_jobs(decode_cmd, o);
  add_search(decode_cmd, o);
  add_out(decode_cmd, out_path);

  auto* nbest_cmd = app.add_subcommand("nbest", "dump training hypothesis sets as JSON");
  nbest_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
  nbest_cmd->add_option("--data", data_path, "dataset file (default: generate from --config)");
  nbest_cmd->add_option("--alpha", alpha, "partial normalization (default: checkpoint)");
  nbest_cmd->add_option("--max-emissions", max_emissions, "tokens per frame");
  add_config(nbest_cmd, o);
  add_seed(nbest_cmd, o);
  add_jobs(nbest_cmd, o);
  add_search(nbest_cmd, o);
  add_out(nbest_cmd, out_path);

  auto* latency_cmd = app.add_subcommand("latency", "emission-time delta between two models");
  latency_cmd->add_option("--system", system_path, "checkpoint under test")->required()->check(CLI::ExistingFile);
  latency_cmd->add_option("--baseline", baseline_path, "reference checkpoint")->required()->check(CLI::ExistingFile);
  latency_cmd->add_option("--data", data_path, "dataset file (default: generate from --config)");
  latency_cmd->add_option("--system-alpha", system_alpha, "override the system's alpha");
  latency_cmd->add_option("--baseline-alpha", baseline_alpha, "override the baseline's alpha");
  latency_cmd->add_option("--frame-ms", frame_ms, "milliseconds per frame");
  latency_cmd->add_flag("--pooled", pooled, "pool tokens across utterances");
  add_config(latency_cmd, o);
  add_seed(latency_cmd, o);
  add_out(latency_cmd, out_path);

  auto* wer_cmd = app.add_subcommand("wer", "score hypotheses against references");
  wer_cmd->add_option("--ref", ref_path, "reference transcripts")->required()->check(CLI::ExistingFile);
  wer_cmd->add_option("--hyp", hyp_path, "hypothesis transcripts")->required()->check(CLI::ExistingFile);
  add_out(wer_cmd, out_path);

  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference gradient checks");
  grad_cmd->add_option("--instances", instances, "random grid instances")->check(CLI::PositiveNumber);
  add_seed(grad_cmd, o);
  add_out(grad_cmd, out_path);

  auto* lb_cmd = app.add_subcommand("labelbias-demo", "mail/nail local vs global experiment");
  lb_cmd->add_option("--copies", copies, "utterance pairs");
  lb_cmd->add_option("--epochs", epochs, "training epochs (branch at a quarter)");
  add_seed(lb_cmd, o);
  add_jobs(lb_cmd, o);
  add_search(lb_cmd, o);
  add_schedule(lb_cmd, o);
  add_out(lb_cmd, out_path);

  auto* curves_cmd = app.add_subcommand("export-curves", "metrics log to CSV");
  curves_cmd->add_option("--metrics", metrics_path, "metrics.jsonl from train")->required()->check(CLI::ExistingFile);
  add_out(curves_cmd, out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code;
  }

  try {
    if (*train_cmd) return cmd_train(o, out_path, out);
    if (*make_cmd) return cmd_make_dataset(o, out_path, out);
    if (*decode_cmd) return cmd_decode(o, ckpt, data_path, alpha, max_emissions, out_path, out);
    if (*nbest_cmd) return cmd_nbest(o, ckpt, data_path, alpha, max_emissions, out_path, out);
    if (*latency_cmd) {
      return cmd_latency(o, system_path, baseline_path, data_path, system_alpha,
                         baseline_alpha, frame_ms, pooled, out_path, out);
    }
    if (*wer_cmd) return cmd_wer(ref_path, hyp_path, out_path, out);
    if (*grad_cmd) return cmd_grad_check(o.seed.value_or(1), instances, out_path, out);
    if (*lb_cmd) return cmd_labelbias(o, copies, epochs, out_path, out);
    if (*curves_cmd) return cmd_export_curves(metrics_path, out_path, out);
  } catch (const Error& e) {
    err << "error[" << error_code_name(e.code()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error[io]: " << e.what() << '\n';
    return static_cast<int>(ErrorCode::kIo);
  }
  return 1;
}

}  // namespace gnt
