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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "gnt/cli.hpp"
#include "gnt/config.hpp"
#include "gnt/gradcheck.hpp"
#include "gnt/io.hpp"
#include "gnt/wer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gnt;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gnt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory under the system temp path.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gnt-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string tiny_config() {
  return "data.task = mail_nail\n"
         "data.copies = 2\n"
         "model.encoder_hidden = 6\n"
         "model.model_dim = 6\n"
         "model.embed_dim = 4\n"
         "model.joiner_dim = 6\n"
         "train.epochs = 3\n"
         "train.nbest = 3\n"
         "train.beam = 4\n"
         "train.refresh_period = 2\n"
         "train.batch_budget = 40\n"
         "schedule.branch_epoch = 1\n"
         "schedule.alpha_slope = 0.5\n"
         "schedule.lambda_ramp_epochs = 0.5\n";
}

std::vector<std::string> words(const std::string& s) { return split_words(s); }

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("word error rate examples") {
  const WerResult same = wer(words("a b c"), words("a b c"));
  CHECK(same.errors() == 0);
  CHECK(same.rate == 0.0);

  const WerResult sub = wer(words("a b c"), words("a x c"));
  CHECK(sub.substitutions == 1);
  CHECK(sub.deletions == 0);
  CHECK(sub.insertions == 0);
  CHECK(std::abs(sub.rate - 100.0 / 3.0) <= 1e-12);

  const WerResult ins = wer(words("a b"), words("a b c d"));
  CHECK(ins.insertions == 2);
  CHECK(ins.errors() == 2);
  CHECK(ins.rate == 100.0);

  const WerResult del = wer(words("a b c d"), words("a b"));
  CHECK(del.deletions == 2);
  CHECK(del.rate == 50.0);

  CHECK(wer(words("a"), {}).rate == 100.0);
  CHECK_ERROR_CODE(wer({}, words("a")), ErrorCode::kInvalidArgument);
}

TEST_CASE("word error rate matches exhaustive edit scripts") {
  std::mt19937_64 rng(1);
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<std::string> ref(1 + rng() % 4), hyp(rng() % 5);
    for (auto& w : ref) w = alphabet[rng() % 3];
    for (auto& w : hyp) w = alphabet[rng() % 3];
    const WerResult r = wer(ref, hyp);
    const auto scripts = oracle::minimal_edit_scripts(ref, hyp);
    REQUIRE(!scripts.empty());
    CHECK(r.errors() == scripts.front().total());
    bool found = false;
    for (const auto& s : scripts) {
      found |= s.sub == r.substitutions && s.del == r.deletions &&
               s.ins == r.insertions;
    }
    CHECK(found);
    CHECK(r.ref_length == static_cast<int>(ref.size()));
  }
}

TEST_CASE("corpus word error rate") {
  const WerResult c = corpus_wer({words("a b c"), words("d")}, {words("a x c"), words("")});
  CHECK(c.substitutions == 1);
  CHECK(c.deletions == 1);
  CHECK(c.ref_length == 4);
  CHECK(c.rate == 50.0);
  CHECK_ERROR_CODE(corpus_wer({words("a")}, {}), ErrorCode::kDatasetMismatch);
  const std::string json = to_json(c);
  CHECK(json.find("\"rate\"") != std::string::npos);
}

TEST_CASE("hypothesis and transcript files") {
  const fs::path dir = scratch("io");
  const std::vector<HypothesisLine> lines = {{"u1", {1, 2, 3}, -1.25}, {"u2", {}, -0.1}};
  const std::string path = (dir / "hyp.txt").string();
  write_hypotheses(lines, path);
  CHECK(read_file(path) == "u1\t1 2 3\t-1.25\nu2\t\t-0.10000000000000001\n");
  const auto back = read_hypotheses(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].tokens == TokenSequence{1, 2, 3});
  CHECK(back[1].tokens.empty());
  CHECK(back[1].score == -0.1);

  write_file(path, "u1\t1 2\n");
  CHECK_ERROR_CODE(read_hypotheses(path), ErrorCode::kParse);
  write_file(path, "u1\t1 x\t0\n");
  CHECK_ERROR_CODE(read_hypotheses(path), ErrorCode::kParse);
  CHECK_ERROR_CODE(read_hypotheses((dir / "missing").string()), ErrorCode::kIo);

  write_file(path, "a b\nid7\tc d e\n\n");
  const auto t = read_transcripts(path);
  REQUIRE(t.size() == 2);
  CHECK(t[0].id == "1");
  CHECK(t[0].words == words("a b"));
  CHECK(t[1].id == "id7");
  CHECK(t[1].words == words("c d e"));
}

TEST_CASE("metrics curves") {
  MetricsRecord r;
  r.step = 3;
  r.progress = 0.5;
  r.guard_fired = true;
  const std::string csv = metrics_csv({r});
  CHECK(csv.rfind(
            "step,epoch,batch,progress,loss,nll,reg_metric,alpha,lambda,"
            "guard_margin,guard_fired\n",
            0) == 0);
  CHECK(csv.find("\n3,0,0,0.5,") != std::string::npos);
  CHECK(csv.back() == '\n');
}

TEST_CASE("run configuration") {
  const RunConfig c = parse_config(
      "# comment\n"
      "  train.epochs = 7  \n"
      "schedule.alpha_target=0.25\n"
      "model.predictor = limited\n"
      "model.history_order = 2\n"
      "data.task = synthetic\n");
  CHECK(c.train.epochs == 7);
  CHECK(c.schedule.alpha_target == 0.25);
  CHECK(c.model.predictor == PredictorKind::kLimitedHistory);
  CHECK(c.model.history_order == 2);
  CHECK(c.data.task == TaskKind::kSynthetic);

  const RunConfig again = parse_config(to_config_text(c));
  CHECK(to_config_text(again) == to_config_text(c));
  CHECK(again.model == c.model);

  CHECK_ERROR_CODE(parse_config("train.nope = 1\n"), ErrorCode::kParse);
  CHECK_ERROR_CODE(parse_config("train.epochs = many\n"), ErrorCode::kParse);
  CHECK_ERROR_CODE(parse_config("train.epochs\n"), ErrorCode::kParse);
  CHECK_ERROR_CODE(parse_config("data.task = speech\n"), ErrorCode::kParse);

  // Every listed key is accepted by the parser.
  const std::string text = to_config_text(RunConfig{});
  for (const auto& k : config_keys()) {
    CHECK_MESSAGE(text.find(k.name + " =") != std::string::npos, k.name);
  }
}

TEST_CASE("gradient check report") {
  const GradCheckReport r = run_grad_check(3, 4);
  CHECK(r.instances == 4);
  CHECK(r.grid_max() <= 1e-6);
  CHECK(r.parameters <= 1e-4);
  CHECK(to_json(r).find("\"parameters\"") != std::string::npos);
}

TEST_CASE("command line errors") {
  const CliResult none = cli({});
  CHECK(none.code != 0);
  CHECK(none.err.find("Usage") != std::string::npos);

  const CliResult unknown_cmd = cli({"frobnicate"});
  CHECK(unknown_cmd.code != 0);
  CHECK(unknown_cmd.err.find("Usage") != std::string::npos);

  const CliResult unknown_flag = cli({"grad-check", "--bogus", "--out", "x"});
  CHECK(unknown_flag.code != 0);
  CHECK(unknown_flag.err.find("Usage") != std::string::npos);

  const CliResult missing_out = cli({"grad-check"});
  CHECK(missing_out.code != 0);

  const fs::path dir = scratch("cli-errors");
  const std::string cfg = (dir / "bad.cfg").string();
  write_file(cfg, "train.bogus = 1\n");
  const CliResult bad_cfg = cli({"make-dataset", "--config", cfg, "--out", (dir / "d").string()});
  CHECK(bad_cfg.code == static_cast<int>(ErrorCode::kParse));
  CHECK(bad_cfg.err.find("error[") != std::string::npos);
}

TEST_CASE("command line wer and grad-check") {
  const fs::path dir = scratch("cli-wer");
  const std::string ref = (dir / "ref.txt").string();
  const std::string hyp = (dir / "hyp.txt").string();
  const std::string out = (dir / "wer.json").string();
  write_file(ref, "u1\ta b c\nu2\td e\n");
  write_file(hyp, "u2\td e\nu1\ta b c\n");
  const CliResult same = cli({"wer", "--ref", ref, "--hyp", ref, "--out", out});
  REQUIRE(same.code == 0);
  CHECK(nlohmann::json::parse(read_file(out))["rate"] == 0.0);
  REQUIRE(cli({"wer", "--ref", ref, "--hyp", hyp, "--out", out}).code == 0);
  CHECK(nlohmann::json::parse(read_file(out))["rate"] == 0.0);

  write_file(hyp, "u1\ta x c\nu2\td\n");
  REQUIRE(cli({"wer", "--ref", ref, "--hyp", hyp, "--out", out}).code == 0);
  const auto j = nlohmann::json::parse(read_file(out));
  CHECK(j["substitutions"] == 1);
  CHECK(j["deletions"] == 1);
  CHECK(j["rate"] == 40.0);

  write_file(hyp, "u1\ta b c\n");
  CHECK(cli({"wer", "--ref", ref, "--hyp", hyp, "--out", out}).code ==
        static_cast<int>(ErrorCode::kDatasetMismatch));

  const std::string grad = (dir / "grad.json").string();
  REQUIRE(cli({"grad-check", "--instances", "2", "--seed", "5", "--out", grad}).code == 0);
  const auto g = nlohmann::json::parse(read_file(grad));
  CHECK(g["parameters"].get<double>() <= 1e-4);
  CHECK(g["local_nll"].get<double>() <= 1e-6);
}

TEST_CASE("command line training pipeline") {
  const fs::path dir = scratch("cli-train");
  const std::string cfg = (dir / "run.cfg").string();
  write_file(cfg, tiny_config());

  const std::string a = (dir / "a").string();
  const std::string b = (dir / "b").string();
  REQUIRE(cli({"train", "--config", cfg, "--seed", "3", "--out", a}).code == 0);
  REQUIRE(cli({"train", "--config", cfg, "--seed", "3", "--jobs", "2", "--out", b}).code == 0);
  for (const char* f : {"metrics.jsonl", "final.ckpt", "epoch-000.ckpt", "epoch-002.ckpt",
                        "summary.json"}) {
    REQUIRE_MESSAGE(fs::exists(fs::path(a) / f), f);
    CHECK_MESSAGE(read_file((fs::path(a) / f).string()) == read_file((fs::path(b) / f).string()),
                  f);
  }
  // The stored config differs only in train.jobs.
  CHECK(load_config((fs::path(b) / "config.txt").string()).train.jobs == 2);
  const auto records = read_metrics((fs::path(a) / "metrics.jsonl").string());
  REQUIRE(!records.empty());
  CHECK(records.back().alpha < 1.0);

  // Environment overrides stand in for missing flags.
  const std::string c = (dir / "c").string();
  ::setenv("GNT_SEED", "3", 1);
  ::setenv("GNT_CONFIG", cfg.c_str(), 1);
  const CliResult env = cli({"train", "--out", c});
  ::unsetenv("GNT_SEED");
  ::unsetenv("GNT_CONFIG");
  REQUIRE(env.code == 0);
  CHECK(read_file((fs::path(c) / "final.ckpt").string()) ==
        read_file((fs::path(a) / "final.ckpt").string()));

  const std::string other = (dir / "seed4").string();
  REQUIRE(cli({"train", "--config", cfg, "--seed", "4", "--out", other}).code == 0);
  CHECK(read_file((fs::path(other) / "final.ckpt").string()) !=
        read_file((fs::path(a) / "final.ckpt").string()));

  // Downstream subcommands on the trained model.
  const std::string data = (dir / "data.bin").string();
  REQUIRE(cli({"make-dataset", "--config", cfg, "--seed", "3", "--out", data}).code == 0);
  CHECK(load_dataset(data).size() == 4);

  const std::string ckpt = (fs::path(a) / "final.ckpt").string();
  const std::string hyp = (dir / "hyp.txt").string();
  const CliResult dec = cli({"decode", "--checkpoint", ckpt, "--data", data, "--out", hyp});
  REQUIRE(dec.code == 0);
  CHECK(read_hypotheses(hyp).size() == 4);
  CHECK(dec.out.find("token error") != std::string::npos);

  const std::string nb = (dir / "nbest.json").string();
  REQUIRE(cli({"nbest", "--checkpoint", ckpt, "--data", data, "--nbest", "3", "--beam", "4",
               "--out", nb})
              .code == 0);
  const auto nj = nlohmann::json::parse(read_file(nb));
  REQUIRE(nj["utterances"].size() == 4);
  for (const auto& u : nj["utterances"]) {
    CHECK(u["hypotheses"].size() >= 1);
    CHECK(u["ref_index"].get<int>() < static_cast<int>(u["hypotheses"].size()));
  }

  const std::string lat = (dir / "latency.json").string();
  REQUIRE(cli({"latency", "--system", ckpt, "--baseline", ckpt, "--data", data, "--out", lat})
              .code == 0);
  CHECK(nlohmann::json::parse(read_file(lat))["delta_ms"] == 0.0);

  const std::string csv = (dir / "curves.csv").string();
  REQUIRE(cli({"export-curves", "--metrics", (fs::path(a) / "metrics.jsonl").string(), "--out",
               csv})
              .code == 0);
  std::istringstream rows(read_file(csv));
  std::size_t n = 0;
  for (std::string line; std::getline(rows, line);) ++n;
  CHECK(n == records.size() + 1);

  CHECK(cli({"decode", "--checkpoint", (dir / "nothing").string(), "--out", hyp}).code != 0);
}

}  // TEST_SUITE
