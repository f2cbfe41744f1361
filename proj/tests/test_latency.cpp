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
#include <random>

#include "gnt/latency.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gnt;
using EW = ExpectationWeight<double>;

namespace {

bool close(const EW& a, const EW& b, double tol) {
  const double ma = a.mass();
  const double mb = b.mass();
  const double xa = a.moment();
  const double xb = b.moment();
  return std::abs(ma - mb) <= tol * std::max({1.0, std::abs(ma), std::abs(mb)}) &&
         std::abs(xa - xb) <= tol * std::max({1.0, std::abs(xa), std::abs(xb)});
}

EW random_element(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mass(0.05, 3.0);
  std::uniform_real_distribution<double> moment(-5.0, 5.0);
  return EW::from_linear(mass(rng), moment(rng));
}

ModelConfig tiny() {
  ModelConfig c;
  c.feature_dim = 2;
  c.context = 1;
  c.encoder_hidden = 4;
  c.model_dim = 4;
  c.embed_dim = 3;
  c.joiner_dim = 4;
  c.vocab = 3;
  return c;
}

}  // namespace

TEST_SUITE("latency") {

TEST_CASE("semiring laws") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const EW a = random_element(rng);
    const EW b = random_element(rng);
    const EW c = random_element(rng);
    CHECK(close((a + b) + c, a + (b + c), 1e-10));
    CHECK(close((a * b) * c, a * (b * c), 1e-10));
    CHECK(close(a + b, b + a, 1e-12));
    CHECK(close(a * b, b * a, 1e-12));
    CHECK(close(a * (b + c), a * b + a * c, 1e-10));
    CHECK(close((a + b) * c, a * c + b * c, 1e-10));
    CHECK(close(a + EW::zero(), a, 1e-15));
    CHECK(close(EW::zero() + a, a, 1e-15));
    CHECK(close(a * EW::one(), a, 1e-15));
    CHECK(close(EW::one() * a, a, 1e-15));
    CHECK(close(a * EW::zero(), EW::zero(), 1e-15));
    // Linear-domain definition of the product.
    const EW p = a * b;
    CHECK(std::abs(p.mass() - a.mass() * b.mass()) <= 1e-12 * p.mass());
    CHECK(std::abs(p.moment() - (a.mass() * b.moment() + b.mass() * a.moment())) <=
          1e-10 * std::max(1.0, std::abs(p.moment())));
  }
  // Cancelling moments.
  const EW x = EW::from_linear(1.0, 2.0);
  const EW y = EW::from_linear(1.0, -2.0);
  CHECK((x + y).sign == 0);
  CHECK((x + y).moment() == 0.0);
}

TEST_CASE("single and symmetric alignments") {
  // T=2, U=1: only blank, token at t=1, blank survives.
  Grid one(2, 1, 1);
  one(0, 0, 1) = kLogZero<double>;
  one(1, 0, 0) = kLogZero<double>;
  const auto w = expectation_forward(one, {1}, 10.0);
  REQUIRE(w.has_value());
  CHECK(std::abs(w->expectation() - 10.0) <= 1e-14 * 10.0);

  // Token at t=1 or t=3 with equal mass.
  Grid two(3, 1, 1);
  two(0, 0, 1) = kLogZero<double>;
  two(2, 0, 1) = kLogZero<double>;
  const auto e = expectation_forward(two, {1}, 1.0);
  REQUIRE(e.has_value());
  CHECK(std::abs(e->expectation() - 2.0) <= 1e-15);
  CHECK(std::abs(e->log_mass - std::log(2.0)) <= 1e-15);

  CHECK_FALSE(expectation_forward(Grid(3, 0, 1), {}, 10.0).has_value());
  CHECK_ERROR_CODE(expectation_forward(two, {}, 1.0), ErrorCode::kLengthMismatch);
}

TEST_CASE("expectation matches alignment enumeration") {
  std::mt19937_64 rng(2);
  double worst = 0;
  for (int T = 0; T <= 5; ++T) {
    for (int U = 1; U <= 5; ++U) {
      for (int rep = 0; rep < 4; ++rep) {
        Grid g = oracle::random_grid(rng, T, U, 3);
        if (rep == 3) {
          for (int k = 0; k < U; ++k) g.deadlines.push_back(static_cast<int>(rng() % (T + 1)));
        }
        const TokenSequence z = oracle::random_tokens(rng, U, 3);
        const auto w = expectation_forward(g, z, 10.0);
        REQUIRE(w.has_value());
        const double fwd = forward_score(g, z);
        if (fwd == kLogZero<double>) {
          CHECK(w->log_mass == kLogZero<double>);
          continue;
        }
        CHECK(w->log_mass == fwd);
        const double expected = oracle::expected_time(g, z, 10.0);
        worst = std::max(worst, oracle::rel_err(w->expectation(), expected));
        worst = std::max(worst, oracle::rel_err(*brute_force_expected_time(g, z, 10.0),
                                                expected));
      }
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("long utterances keep finite expectations") {
  std::mt19937_64 rng(3);
  const Grid g = oracle::random_grid(rng, 400, 30, 3, -40, -20);
  const TokenSequence z = oracle::random_tokens(rng, 30, 3);
  const auto w = expectation_forward(g, z, 10.0);
  REQUIRE(w.has_value());
  CHECK(std::isfinite(w->log_mass));
  CHECK(std::isfinite(w->expectation()));
  CHECK(w->expectation() >= 0.0);
  CHECK(w->expectation() <= 30 * 400 * 10.0);
}

TEST_CASE("average emission time") {
  std::mt19937_64 rng(4);
  const ModelParams p = ModelParams::random(tiny(), 5, 1.0);
  std::uniform_real_distribution<double> d(-1, 1);
  Dataset data;
  for (int i = 0; i < 6; ++i) {
    Utterance u;
    u.id = "u" + std::to_string(i);
    const int T = 1 + i;
    u.features = Matrix(T, 2);
    for (Eigen::Index k = 0; k < u.features.size(); ++k) u.features.data()[k] = d(rng);
    u.tokens = oracle::random_tokens(rng, i % 3, 3);  // includes U = 0
    if (i == 4) u.deadlines = {1, 2};
    data.push_back(u);
  }

  for (double alpha : {1.0, 0.3, 0.0}) {
    const LatencyReport r = average_emission_time(data, p, alpha, 10.0);
    double sum = 0;
    double pooled_time = 0;
    int pooled_tokens = 0;
    int measured = 0;
    for (const Utterance& u : data) {
      if (u.tokens.empty()) continue;
      Grid g = joint_grid(encode(u.features, p), predict(u.tokens, p), p);
      g.deadlines = u.deadlines;
      const double total = oracle::expected_time(
          apply_partial_normalization(g, alpha), u.tokens, 10.0);
      sum += total / static_cast<double>(u.tokens.size());
      pooled_time += total;
      pooled_tokens += static_cast<int>(u.tokens.size());
      ++measured;
    }
    CHECK(r.measured == measured);
    CHECK(r.skipped == 2);
    CHECK(oracle::rel_err(r.average_ms, sum / measured) <= 1e-10);
    CHECK(!r.utterances[0].mean_ms.has_value());
    const LatencyReport pooled = average_emission_time(data, p, alpha, 10.0, true);
    CHECK(oracle::rel_err(pooled.average_ms, pooled_time / pooled_tokens) <= 1e-10);

    const LatencyReport doubled = average_emission_time(data, p, alpha, 20.0);
    CHECK(oracle::rel_err(doubled.average_ms, 2 * r.average_ms) <= 1e-12);
    CHECK(average_emission_time(data, p, alpha, 10.0).average_ms == r.average_ms);
  }

  // Deadline at t=0 forces every emission to the first frame.
  Dataset forced{data[1]};
  forced[0].tokens = {2};
  forced[0].deadlines = {0};
  CHECK(average_emission_time(forced, p, 1.0, 10.0).average_ms == 0.0);
}

TEST_CASE("latency delta") {
  const ModelParams a = ModelParams::random(tiny(), 6, 1.0);
  const ModelParams b = ModelParams::random(tiny(), 7, 1.0);
  Dataset data;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int i = 0; i < 3; ++i) {
    Utterance u;
    u.id = "x" + std::to_string(i);
    u.features = Matrix(4, 2);
    for (Eigen::Index k = 0; k < u.features.size(); ++k) u.features.data()[k] = d(rng);
    u.tokens = {1 + i, 2};
    data.push_back(u);
  }
  const LatencyReport ra = average_emission_time(data, a, 1.0);
  const LatencyReport rb = average_emission_time(data, b, 1.0);
  CHECK(latency_delta(ra, ra).delta_ms == 0.0);
  CHECK(latency_delta(ra, rb).delta_ms == ra.average_ms - rb.average_ms);

  Dataset other = data;
  other[1].id = "changed";
  CHECK_ERROR_CODE(latency_delta(ra, average_emission_time(other, b, 1.0)),
                   ErrorCode::kDatasetMismatch);
  CHECK_ERROR_CODE(latency_delta(ra, average_emission_time(data, b, 1.0, 10.0, true)),
                   ErrorCode::kInvalidArgument);

  const std::string json = to_json(latency_delta(ra, rb));
  CHECK(json.find("\"delta_ms\"") != std::string::npos);
  CHECK(json.find("\"per-utterance\"") != std::string::npos);
  CHECK(to_json(ra).find("\"utterances\"") != std::string::npos);
}

}  // TEST_SUITE
