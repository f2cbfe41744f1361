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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "gnt/losses.hpp"
#include "gnt/training.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gnt;

namespace {

ModelConfig toy_model(int vocab, int feature_dim) {
  ModelConfig c;
  c.feature_dim = feature_dim;
  c.context = 2;
  c.encoder_hidden = 6;
  c.model_dim = 6;
  c.embed_dim = 4;
  c.joiner_dim = 6;
  c.vocab = vocab;
  return c;
}

Dataset toy_data(int count, std::uint64_t seed) {
  SyntheticSpec s;
  s.vocab = 3;
  s.max_tokens = 3;
  s.frames_per_token = 2;
  s.count = count;
  return make_synthetic_dataset(s, seed);
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  const auto x = tensors(a);
  const auto y = tensors(b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (*x[i].value != *y[i].value) return false;
  }
  return true;
}

// Locally normalized training written directly against the model and loss
// primitives: per-frame normalized summed local NLL, one Adam step per batch.
ModelParams plain_local_trainer(const Dataset& data, ModelParams params,
                                const TrainConfig& config) {
  AdamState adam = AdamState::like(params);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = make_batches(
        data, config.batch_budget,
        derive_seed(config.seed, "batching:" + std::to_string(epoch)));
    for (const auto& batch : batches) {
      double frames = 0;
      for (std::size_t i : batch) frames += data[i].frames();
      ModelParams grads = ModelParams::zeros(params.config);
      for (std::size_t i : batch) {
        const Utterance& u = data[i];
        ForwardCache cache = forward(u.features, u.tokens, params);
        cache.joint.grid.deadlines = u.deadlines;
        GridLoss l = local_nll(cache.joint.grid, u.tokens);
        l.grad.rows() *= 1.0 / frames;
        accumulate(grads, backprop(l.grad, cache, params));
      }
      optimizer_step(params, grads, adam, config.adam);
    }
  }
  return params;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("alpha schedule") {
  Schedule s;
  s.branch_epoch = 10;
  s.alpha_slope = 0.25;
  s.alpha_target = 0.3;
  CHECK(alpha_schedule(0, s) == 1.0);
  CHECK(alpha_schedule(9.99, s) == 1.0);
  CHECK(alpha_schedule(10, s) == 1.0);
  CHECK(alpha_schedule(11, s) == 0.75);
  CHECK(alpha_schedule(13, s) == 0.3);
  CHECK(alpha_schedule(12.8, s) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(alpha_schedule(1e6, s) == 0.3);
  double prev = 1.0;
  for (double e = 0; e < 20; e += 0.05) {
    const double a = alpha_schedule(e, s);
    CHECK(a <= prev);
    CHECK(a >= 0.3);
    prev = a;
  }
}

TEST_CASE("lambda schedule") {
  Schedule s;
  s.branch_epoch = 10;
  s.lambda_ramp_epochs = 1;
  CHECK(s.lambda_target == 0.01);
  CHECK(lambda_schedule(0, s) == 0.0);
  CHECK(lambda_schedule(9.5, s) == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(lambda_schedule(10, s) == 0.01);
  CHECK(lambda_schedule(30, s) == 0.01);
  double prev = 0.0;
  for (double e = 0; e < 20; e += 0.05) {
    const double l = lambda_schedule(e, s);
    CHECK(l >= prev);
    prev = l;
  }
  s.alpha_target = 1.5;
  CHECK_ERROR_CODE(s.validate(), ErrorCode::kInvalidArgument);
}

TEST_CASE("adam") {
  const ModelParams start = ModelParams::random(toy_model(3, 2), 1, 0.5);
  AdamHyper h;
  CHECK(h.lr == 1e-3);
  CHECK(h.beta1 == 0.9);
  CHECK(h.beta2 == 0.999);
  CHECK(h.eps == 1e-8);

  ModelParams p = start;
  AdamState st = AdamState::like(p);
  optimizer_step(p, ModelParams::zeros(p.config), st, h);
  CHECK(same_params(p, start));
  CHECK(p.version == start.version + 1);

  // f(p) = sum of squares, gradient 2p.
  auto f = [](const ModelParams& q) {
    double s = 0;
    for (const auto& t : tensors(q)) s += t.value->squaredNorm();
    return s;
  };
  ModelParams q = start;
  AdamState sq = AdamState::like(q);
  ModelParams g = q;
  for (const auto& t : tensors(g)) *t.value *= 2.0;
  optimizer_step(q, g, sq, h);
  CHECK(f(q) < f(start));

  ModelParams r = start;
  AdamState sr = AdamState::like(r);
  optimizer_step(r, g, sr, h);
  CHECK(same_params(q, r));

  ModelParams bad = g;
  bad.out_b(0, 0) = std::nan("");
  ModelParams untouched = start;
  AdamState su = AdamState::like(untouched);
  CHECK_ERROR_CODE(optimizer_step(untouched, bad, su, h), ErrorCode::kNonFiniteGradient);
  CHECK(same_params(untouched, start));
  CHECK(su.step == 0);
}

TEST_CASE("collapse guard") {
  const GuardReport solo = competitor_mass_guard({{-3.0, {}}});
  CHECK(solo.margin == kLogZero<double>);
  CHECK(solo.fired);

  const GuardReport tie = competitor_mass_guard({{-3.0, {-3.0}}});
  CHECK(tie.margin == 0.0);
  CHECK(std::abs(tie.global_loss - std::log(2.0)) < 1e-15);
  CHECK_FALSE(tie.fired);

  const GuardReport collapsed =
      competitor_mass_guard({{0.0, {-1e6, -1e6 - 3}}, {2.0, {2.0 - 1e6}}});
  CHECK(collapsed.fired);
  CHECK(collapsed.global_loss < 1e-6);

  CHECK(competitor_mass_guard({}).fired);
  // The floor sits where the global loss crosses 1e-6.
  CHECK(std::log1p(std::exp(default_guard_floor())) == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(competitor_mass_guard({{0.0, {default_guard_floor() - 1e-3}}}).fired);
  CHECK_FALSE(competitor_mass_guard({{0.0, {default_guard_floor() + 1e-3}}}).fired);
}

TEST_CASE("batches") {
  const Dataset data = toy_data(40, 3);
  const auto a = make_batches(data, 12, 99);
  const auto b = make_batches(data, 12, 99);
  CHECK(a == b);
  CHECK(make_batches(data, 12, 100) != a);
  std::multiset<std::size_t> seen;
  for (const auto& batch : a) {
    int frames = 0;
    for (std::size_t i : batch) {
      frames += data[i].frames();
      seen.insert(i);
    }
    CHECK((frames <= 12 || batch.size() == 1));
  }
  CHECK(seen.size() == data.size());
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == data.size());
}

TEST_CASE("batch objective") {
  const Dataset data = toy_data(12, 4);
  const ModelParams p = ModelParams::random(toy_model(3, 4), 5, 0.5);
  std::vector<std::size_t> batch = {0, 3, 5, 7};
  std::vector<HypothesisSet> refs(data.size());
  double frames = 0;
  double local = 0;
  for (std::size_t i = 0; i < data.size(); ++i) refs[i] = {{data[i].tokens}, 0};
  for (std::size_t i : batch) {
    frames += data[i].frames();
    Grid g = forward(data[i].features, data[i].tokens, p).joint.grid;
    local += local_nll(g, data[i].tokens).loss;
  }
  const BatchResult r = batch_objective(data, batch, refs, p, 1.0, 0.0, nullptr);
  CHECK(std::abs(r.loss - local / frames) <= 1e-12);
  CHECK(r.guard.fired);  // no competitors

  const BatchResult per_utt = batch_objective(data, batch, refs, p, 1.0, 0.0, nullptr, 1,
                                              default_guard_floor(),
                                              LossNormalization::kPerUtterance);
  CHECK(std::abs(per_utt.loss - local / 4) <= 1e-12);

  // Thread count does not change a single bit.
  TrainConfig tc;
  tc.beam = 6;
  tc.nbest = 4;
  std::vector<HypothesisSet> hyps(data.size());
  for (std::size_t i : batch) hyps[i] = refresh_hypotheses(data[i], p, tc, 0.5);
  ModelParams g1 = ModelParams::zeros(p.config);
  ModelParams g4 = ModelParams::zeros(p.config);
  const BatchResult r1 = batch_objective(data, batch, hyps, p, 0.5, 0.01, &g1, 1);
  const BatchResult r4 = batch_objective(data, batch, hyps, p, 0.5, 0.01, &g4, 4);
  CHECK(r1.loss == r4.loss);
  CHECK(r1.reg_metric == r4.reg_metric);
  CHECK(same_params(g1, g4));
  CHECK_FALSE(r1.guard.fired);
}

TEST_CASE("refresh searches at the current interpolation weight") {
  const Dataset data = toy_data(3, 6);
  const ModelParams p = ModelParams::random(toy_model(3, 4), 7, 1.0);
  TrainConfig tc;
  tc.beam = 8;
  tc.nbest = 5;
  for (double alpha : {1.0, 0.3, 0.0}) {
    SearchOptions o;
    o.beam = 8;
    o.nbest = 5;
    o.alpha = alpha;
    const HypothesisSet H = refresh_hypotheses(data[0], p, tc, alpha);
    const HypothesisSet expected =
        build_training_hypotheses(data[0].features, data[0].tokens, p, o, data[0].deadlines);
    CHECK(H.hypotheses == expected.hypotheses);
    CHECK(H.ref_index == expected.ref_index);
  }
}

TEST_CASE("local endpoint reproduces a plain locally normalized trainer") {
  const Dataset data = toy_data(24, 8);
  const ModelParams init = ModelParams::random(toy_model(3, 4), 9, 0.1);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_budget = 20;
  tc.adam.lr = 1e-2;
  tc.refresh_period = 2;
  Schedule pinned;
  pinned.branch_epoch = 1e9;
  pinned.lambda_target = 0.0;

  std::vector<MetricsRecord> log;
  TrainCallbacks cb;
  cb.on_batch = [&](const MetricsRecord& m) { log.push_back(m); };
  const ModelParams trained = train(data, init, tc, pinned, cb);
  const ModelParams plain = plain_local_trainer(data, init, tc);
  CHECK(same_params(trained, plain));
  for (const auto& m : log) {
    CHECK(m.alpha == 1.0);
    CHECK(m.lambda == 0.0);
    CHECK(m.loss == m.nll);
    CHECK_FALSE(m.guard_fired);
  }
}

TEST_CASE("training runs are reproducible and honor the schedule") {
  const Dataset data = toy_data(16, 10);
  const ModelParams init = ModelParams::random(toy_model(3, 4), 11, 0.1);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_budget = 16;
  tc.beam = 6;
  tc.nbest = 4;
  tc.refresh_period = 3;
  tc.adam.lr = 1e-2;
  Schedule s;
  s.branch_epoch = 1;

  std::vector<std::string> lines_a, lines_b;
  TrainCallbacks cb;
  cb.on_batch = [&](const MetricsRecord& m) { lines_a.push_back(to_json_line(m)); };
  const ModelParams a = train(data, init, tc, s, cb);
  cb.on_batch = [&](const MetricsRecord& m) { lines_b.push_back(to_json_line(m)); };
  tc.jobs = 3;
  const ModelParams b = train(data, init, tc, s, cb);
  CHECK(lines_a == lines_b);
  CHECK(same_params(a, b));

  double prev_alpha = 1.0;
  double prev_lambda = 0.0;
  for (const auto& line : lines_a) {
    const MetricsRecord m = metrics_from_json(line);
    CHECK(m.alpha == alpha_schedule(m.progress, s));
    CHECK(m.lambda == lambda_schedule(m.progress, s));
    CHECK(m.alpha <= prev_alpha);
    CHECK(m.lambda >= prev_lambda);
    prev_alpha = m.alpha;
    prev_lambda = m.lambda;
    if (m.alpha == 1.0) CHECK_FALSE(m.guard_fired);
  }
  CHECK(prev_alpha < 1.0);
}

TEST_CASE("training failures") {
  const ModelParams init = ModelParams::random(toy_model(3, 4), 12, 0.1);
  TrainConfig tc;
  tc.epochs = 1;
  CHECK_ERROR_CODE(train({}, init, tc, Schedule{}), ErrorCode::kInvalidArgument);

  Dataset data = toy_data(4, 13);
  data[1].features(0, 0) = std::nan("");
  CHECK_ERROR_CODE(train(data, init, tc, Schedule{}), ErrorCode::kDivergence);

  tc.refresh_period = 0;
  CHECK_ERROR_CODE(train(toy_data(4, 13), init, tc, Schedule{}), ErrorCode::kInvalidArgument);
}

TEST_CASE("metrics lines") {
  MetricsRecord m;
  m.epoch = 2;
  m.batch = 7;
  m.step = 31;
  m.progress = 2.5;
  m.loss = 0.125;
  m.nll = 0.1;
  m.reg_metric = 3.25;
  m.alpha = 0.3;
  m.lambda = 0.01;
  m.guard_margin = kLogZero<double>;
  m.guard_fired = true;
  m.utterances = 4;
  const MetricsRecord back = metrics_from_json(to_json_line(m));
  CHECK(back.epoch == 2);
  CHECK(back.step == 31);
  CHECK(back.progress == 2.5);
  CHECK(back.guard_margin == kLogZero<double>);
  CHECK(back.guard_fired);
  CHECK(to_json_line(back) == to_json_line(m));
  CHECK_ERROR_CODE(metrics_from_json("{\"epoch\": 1}"), ErrorCode::kParse);
  CHECK_ERROR_CODE(metrics_from_json("not json"), ErrorCode::kParse);
}

TEST_CASE("mail/nail dataset") {
  using namespace mail_nail;
  const Dataset same = make_mail_nail_dataset(1.0, 8, 3);
  REQUIRE(same.size() == 16);
  for (std::size_t i = 0; i < same.size(); i += 2) {
    CHECK(same[i].tokens == TokenSequence{kMail, kOrder});
    CHECK(same[i + 1].tokens == TokenSequence{kNail, kPolish});
    CHECK(same[i].features.topRows(kChunkFrames) == same[i + 1].features.topRows(kChunkFrames));
    CHECK(same[i].features.bottomRows(kChunkFrames) !=
          same[i + 1].features.bottomRows(kChunkFrames));
    CHECK(same[i].frames() == 2 * kChunkFrames);
    CHECK(same[i].deadlines == std::vector<int>{kChunkFrames - 1});
  }
  CHECK(std::string(word(kPolish)) == "polish");

  // Fully separable: the sign of feature 0 over the first chunk gives the
  // class.
  const Dataset apart = make_mail_nail_dataset(0.0, 8, 3);
  for (const Utterance& u : apart) {
    const bool mail = u.tokens[0] == kMail;
    for (int t = 0; t < kChunkFrames; ++t) CHECK((u.features(t, 0) > 0) == mail);
  }

  const Dataset x = make_mail_nail_dataset(1.0, 100, 5);
  const Dataset y = make_mail_nail_dataset(1.0, 100, 5);
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].id == y[i].id);
    CHECK(x[i].features == y[i].features);
  }
  CHECK_ERROR_CODE(make_mail_nail_dataset(1.5, 1, 1), ErrorCode::kInvalidArgument);
}

TEST_CASE("synthetic dataset") {
  SyntheticSpec s;
  s.noise = 0.0;
  s.count = 30;
  const Dataset clean = make_synthetic_dataset(s, 7);
  const Matrix embed = synthetic_token_embeddings(s, 7);
  for (const Utterance& u : clean) {
    CHECK(u.frames() == static_cast<int>(u.tokens.size()) * s.frames_per_token);
    for (int f = 0; f < u.frames(); ++f) {
      CHECK(u.features.row(f) == embed.row(u.tokens[static_cast<std::size_t>(f / s.frames_per_token)]));
    }
  }
  s.noise = 0.1;
  const Dataset a = make_synthetic_dataset(s, 7);
  const Dataset b = make_synthetic_dataset(s, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].features == b[i].features);
  }
  const Split split = split_dataset(a, 5);
  CHECK(split.train.size() + split.held_out.size() == a.size());
  std::set<std::string> train_ids;
  for (const auto& u : split.train) train_ids.insert(u.id);
  for (const auto& u : split.held_out) CHECK(train_ids.count(u.id) == 0);
  s.vocab = 1;
  CHECK_ERROR_CODE(make_synthetic_dataset(s, 1), ErrorCode::kInvalidArgument);
}

TEST_CASE("dataset container") {
  const Dataset data = make_mail_nail_dataset(1.0, 3, 2);
  const auto path = (std::filesystem::temp_directory_path() / "gnt_test_data.bin").string();
  save_dataset(data, path);
  {
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "GNTDATA 1 6 4");
  }
  const Dataset back = load_dataset(path);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].id == data[i].id);
    CHECK(back[i].tokens == data[i].tokens);
    CHECK(back[i].deadlines == data[i].deadlines);
    CHECK(back[i].features == data[i].features);
  }
  {
    std::ofstream f(path, std::ios::trunc);
    f << "GNTDATA 1 6 4\nshort";
  }
  CHECK_THROWS_AS(load_dataset(path), Error);
  {
    std::ofstream f(path, std::ios::trunc);
    f << "SOMETHING ELSE\n";
  }
  CHECK_ERROR_CODE(load_dataset(path), ErrorCode::kParse);
  std::filesystem::remove(path);
  CHECK_ERROR_CODE(load_dataset(path), ErrorCode::kIo);
}

TEST_CASE("seed streams") {
  CHECK(derive_seed(1, "dataset") == derive_seed(1, "dataset"));
  CHECK(derive_seed(1, "dataset") != derive_seed(1, "init"));
  CHECK(derive_seed(1, "dataset") != derive_seed(2, "dataset"));
}

}  // TEST_SUITE
