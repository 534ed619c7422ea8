/*
 * Copyright 2026 Tunelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "tunelab/error.hpp"
#include "tunelab/flops.hpp"
#include "tunelab/model.hpp"
#include "tunelab/optimizer.hpp"

using namespace tunelab;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.vocab_size = 37;
  cfg.d_model = 8;
  cfg.num_heads = 2;
  cfg.ffn_dim = 16;
  cfg.encoder_layers = 2;
  cfg.decoder_layers = 3;
  cfg.max_positions = 12;
  cfg.tie_output_to_embedding = true;
  return cfg;
}

ModelConfig reference_config() {
  ModelConfig cfg;
  cfg.vocab_size = 50265;
  cfg.d_model = 1024;
  cfg.num_heads = 16;
  cfg.ffn_dim = 4096;
  cfg.encoder_layers = 12;
  cfg.decoder_layers = 12;
  cfg.max_positions = 1024;
  cfg.tie_output_to_embedding = true;
  return cfg;
}

// Counts parameters by walking an actual model's registry, the second route
// against the closed form.
std::pair<std::uint64_t, std::uint64_t> registry_census(Model& model) {
  std::uint64_t total = 0;
  std::uint64_t trainable = 0;
  for (const RegistryEntry& e : model.registry()) {
    total += e.count;
    if (!e.frozen) trainable += e.count;
  }
  return {total, trainable};
}

// Exhaustively enumerates every hypothesis beam_search could produce: all
// sequences that emit eos within max_len emissions plus all eos-free
// sequences of exactly max_len tokens.
void enumerate_hypotheses(const StepScorer& scorer, int eos_id,
                          std::size_t max_len, std::vector<int>& prefix,
                          double sum_logp,
                          std::vector<BeamHypothesis>& out) {
  if (prefix.size() == max_len) {
    BeamHypothesis h;
    h.tokens = prefix;
    h.sum_logp = sum_logp;
    h.finished = false;
    out.push_back(std::move(h));
    return;
  }
  const std::vector<double> logp = scorer(prefix);
  for (int tok = 0; tok < static_cast<int>(logp.size()); ++tok) {
    if (tok == eos_id) {
      BeamHypothesis h;
      h.tokens = prefix;
      h.sum_logp = sum_logp + logp[tok];
      h.finished = true;
      out.push_back(std::move(h));
    } else {
      prefix.push_back(tok);
      enumerate_hypotheses(scorer, eos_id, max_len, prefix,
                           sum_logp + logp[tok], out);
      prefix.pop_back();
    }
  }
}

bool hypothesis_better(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.score() != b.score()) return a.score() > b.score();
  return a.tokens < b.tokens;
}

// Deterministic but asymmetric scorer: log probabilities depend on the
// emitted prefix through a seeded generator.
StepScorer hashed_scorer(std::size_t vocab, std::uint64_t salt) {
  return [vocab, salt](const std::vector<int>& prefix) {
    std::uint64_t seed = salt;
    for (int t : prefix) {
      seed = seed * 1000003ULL + static_cast<std::uint64_t>(t) + 1;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    std::vector<double> w(vocab);
    double norm = 0.0;
    for (double& x : w) {
      x = dist(rng);
      norm += x;
    }
    for (double& x : w) x = std::log(x / norm);
    return w;
  };
}

}  // namespace

TEST_CASE("model config validation and key-value parsing") {
  ModelConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  cfg.num_heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.num_heads = 2;
  cfg.vocab_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  KeyValueFile kv = KeyValueFile::parse_text(
      "vocab_size = 37\n"
      "d_model = 8\n"
      "num_heads = 2\n"
      "ffn_dim = 16\n"
      "encoder_layers = 2\n"
      "decoder_layers = 3\n"
      "max_positions = 12\n"
      "tie_output_to_embedding = true\n",
      "test");
  ModelConfig parsed = ModelConfig::from_kv(kv);
  CHECK(parsed.vocab_size == 37);
  CHECK(parsed.decoder_layers == 3);
  CHECK(parsed.tie_output_to_embedding);

  KeyValueFile missing = KeyValueFile::parse_text("d_model = 8\n", "test");
  CHECK_THROWS_AS(ModelConfig::from_kv(missing), Error);
}

TEST_CASE("closed-form census matches a real model registry") {
  for (bool tied : {true, false}) {
    ModelConfig cfg = tiny_config();
    cfg.tie_output_to_embedding = tied;
    Model model(cfg, 7);

    for (StrategyKind kind : all_strategies()) {
      const std::size_t lp = kind == StrategyKind::Prefix ? 3 : 0;
      PrefixBank bank(cfg.encoder_layers, cfg.decoder_layers,
                      lp == 0 ? 1 : lp, cfg.d_model);
      if (kind == StrategyKind::Prefix) model.attach_prefix(&bank);

      FreezePlan plan = make_freeze_plan(kind, model.registry(), lp);
      model.apply_freeze_plan(plan);
      auto [total, trainable] = registry_census(model);
      ParamCounts expect = count_parameters(cfg, kind, lp);
      CAPTURE(tied);
      CAPTURE(strategy_name(kind));
      CHECK(total == expect.total);
      CHECK(trainable == expect.trainable);

      model.detach_prefix();
    }
  }
}

TEST_CASE("census of the reference configuration") {
  const ModelConfig cfg = reference_config();

  const ParamCounts custom = count_parameters(cfg, StrategyKind::Custom);
  CHECK(custom.total == 406283264ULL);
  CHECK(custom.trainable == 406283264ULL);

  const ParamCounts leo = count_parameters(cfg, StrategyKind::LEO);
  CHECK(leo.total == 406283264ULL);
  CHECK(leo.trainable == 53568512ULL);

  const ParamCounts lldb = count_parameters(cfg, StrategyKind::LLDB);
  CHECK(lldb.trainable == 16796672ULL);

  const ParamCounts prefix =
      count_parameters(cfg, StrategyKind::Prefix, 200);
  CHECK(prefix.trainable == 9830400ULL);
  CHECK(prefix.total == 406283264ULL + 9830400ULL);

  // Trainable fractions of the strategy totals.
  const double leo_pct =
      100.0 * static_cast<double>(leo.trainable) / static_cast<double>(leo.total);
  const double lldb_pct = 100.0 * static_cast<double>(lldb.trainable) /
                          static_cast<double>(lldb.total);
  const double prefix_pct = 100.0 * static_cast<double>(prefix.trainable) /
                            static_cast<double>(prefix.total);
  CHECK(leo_pct == doctest::Approx(13.185).epsilon(0.001));
  CHECK(lldb_pct == doctest::Approx(4.134).epsilon(0.001));
  CHECK(prefix_pct == doctest::Approx(2.3624).epsilon(0.001));

  CHECK_THROWS_AS(count_parameters(cfg, StrategyKind::Prefix, 0), Error);
}

TEST_CASE("same seed gives bitwise identical models") {
  ModelConfig cfg = tiny_config();
  Model a(cfg, 1234);
  Model b(cfg, 1234);
  Model c(cfg, 1235);

  auto pa = a.parameters();
  auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  bool all_equal = true;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!pa[i]->value.bitwise_equal(pb[i]->value)) all_equal = false;
  }
  CHECK(all_equal);

  bool any_diff = false;
  auto pc = c.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!pa[i]->value.bitwise_equal(pc[i]->value)) any_diff = true;
  }
  CHECK(any_diff);

  const std::vector<int> src{4, 5, 6};
  const std::vector<int> tgt{7, 8, 2};
  auto [loss_a, nll_a] = a.forward_loss(src, tgt);
  auto [loss_b, nll_b] = b.forward_loss(src, tgt);
  CHECK(loss_a == loss_b);
  CHECK(nll_a == nll_b);
}

TEST_CASE("clone copies values and freeze state") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 99);
  FreezePlan plan = make_freeze_plan(StrategyKind::LLDB, model.registry());
  model.apply_freeze_plan(plan);

  Model copy = model.clone();
  auto pa = model.parameters();
  auto pb = copy.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value.bitwise_equal(pb[i]->value));
    CHECK(pa[i]->frozen == pb[i]->frozen);
    CHECK(pa[i]->id == pb[i]->id);
  }
}

TEST_CASE("zero embedding gives uniform logits and perplexity equal to vocab") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 3);
  model.find_parameter("tok_emb")->value.zero();

  const std::vector<int> src{4, 5, 6, 7};
  const std::vector<int> tgt{8, 9, 10, 2};
  auto [loss, nll] = model.forward_loss(src, tgt);

  const double expect = std::log(static_cast<double>(cfg.vocab_size));
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
  REQUIRE(nll.size() == tgt.size());
  for (double v : nll) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("loss equals the mean of per-token negative log likelihoods") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 11);
  const std::vector<int> src{3, 4, 5};
  const std::vector<int> tgt{6, 7, 8, 9, 2};
  auto [loss, nll] = model.forward_loss(src, tgt);
  REQUIRE(nll.size() == tgt.size());
  double mean = 0.0;
  for (double v : nll) mean += v;
  mean /= static_cast<double>(nll.size());
  CHECK(loss == doctest::Approx(mean).epsilon(1e-12));
  for (double v : nll) CHECK(v > 0.0);
}

TEST_CASE("sequence length and argument validation") {
  ModelConfig cfg = tiny_config();  // max_positions = 12
  Model model(cfg, 5);
  std::vector<int> ok{4, 5};
  std::vector<int> too_long(cfg.max_positions + 1, 4);
  std::vector<int> empty;

  CHECK_THROWS_AS(model.forward_loss(too_long, ok), Error);
  CHECK_THROWS_AS(model.forward_loss(empty, ok), Error);
  CHECK_THROWS_AS(model.forward_loss(ok, empty), Error);
  CHECK_THROWS_AS(model.encode(empty), Error);
  CHECK_THROWS_AS(model.beam_decode(ok, 2, cfg.max_positions), Error);
  CHECK_THROWS_AS(model.beam_decode(ok, 0, 4), Error);

  PrefixBank wrong(cfg.encoder_layers + 1, cfg.decoder_layers, 2, cfg.d_model);
  CHECK_THROWS_AS(model.attach_prefix(&wrong), Error);
}

TEST_CASE("a tiny model can memorize one pair and decode it back") {
  ModelConfig cfg;
  cfg.vocab_size = 13;
  cfg.d_model = 16;
  cfg.num_heads = 2;
  cfg.ffn_dim = 32;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.max_positions = 16;
  cfg.tie_output_to_embedding = true;

  Model model(cfg, 21);
  const std::vector<int> src{4, 5, 6, 7};
  const std::vector<int> tgt{8, 9, 10, 2};  // ends with eos

  AdamOptimizer opt(0.01);
  double loss = 0.0;
  for (int step = 0; step < 300; ++step) {
    Graph g;
    Graph::NodeId l = model.loss_node(g, src, tgt);
    loss = g.value(l)(0, 0);
    g.backward(l);
    opt.step(model.parameters());
  }
  CHECK(loss < 0.05);

  std::vector<BeamHypothesis> hyps = model.beam_decode(src, 1, 8);
  REQUIRE(hyps.size() == 1);
  CHECK(hyps[0].finished);
  CHECK(hyps[0].tokens == std::vector<int>{8, 9, 10});

  // A wider beam must rank the memorized sequence first as well.
  std::vector<BeamHypothesis> wide = model.beam_decode(src, 4, 8);
  REQUIRE(!wide.empty());
  CHECK(wide[0].tokens == std::vector<int>{8, 9, 10});
}

TEST_CASE("beam search with exhaustive width matches brute-force enumeration") {
  const std::size_t vocab = 4;
  const int eos = 3;
  const std::size_t max_len = 4;
  StepScorer scorer = hashed_scorer(vocab, 17);

  std::vector<BeamHypothesis> all;
  std::vector<int> prefix;
  enumerate_hypotheses(scorer, eos, max_len, prefix, 0.0, all);
  std::sort(all.begin(), all.end(), hypothesis_better);
  REQUIRE(all.size() == 121);  // 1 + 3 + 9 + 27 eos-ended plus 81 full length

  std::vector<BeamHypothesis> beam = beam_search(scorer, eos, 200, max_len);
  REQUIRE(beam.size() >= 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CAPTURE(i);
    CHECK(beam[i].tokens == all[i].tokens);
    CHECK(beam[i].finished == all[i].finished);
    CHECK(beam[i].sum_logp == doctest::Approx(all[i].sum_logp).epsilon(1e-12));
  }
}

TEST_CASE("narrow beams stay sorted and never exceed the requested width") {
  StepScorer scorer = hashed_scorer(5, 23);
  for (std::size_t width : {1u, 2u, 3u}) {
    std::vector<BeamHypothesis> beam = beam_search(scorer, 4, width, 5);
    REQUIRE(!beam.empty());
    CHECK(beam.size() <= width);
    for (std::size_t i = 1; i < beam.size(); ++i) {
      CHECK(beam[i - 1].score() >= beam[i].score());
    }
  }
}

TEST_CASE("beam width one is exactly greedy decoding") {
  const std::size_t vocab = 6;
  const int eos = 5;
  const std::size_t max_len = 7;
  StepScorer scorer = hashed_scorer(vocab, 91);

  // Manual greedy rollout: argmax each step, smaller id on ties.
  std::vector<int> greedy;
  double greedy_sum = 0.0;
  bool finished = false;
  while (greedy.size() < max_len) {
    std::vector<double> logp = scorer(greedy);
    std::size_t best = 0;
    for (std::size_t t = 1; t < logp.size(); ++t) {
      if (logp[t] > logp[best]) best = t;
    }
    greedy_sum += logp[best];
    if (static_cast<int>(best) == eos) {
      finished = true;
      break;
    }
    greedy.push_back(static_cast<int>(best));
  }

  std::vector<BeamHypothesis> beam = beam_search(scorer, eos, 1, max_len);
  REQUIRE(beam.size() == 1);
  CHECK(beam[0].tokens == greedy);
  CHECK(beam[0].finished == finished);
  CHECK(beam[0].sum_logp == doctest::Approx(greedy_sum).epsilon(1e-12));
}

TEST_CASE("beam search input validation") {
  StepScorer scorer = hashed_scorer(3, 1);
  CHECK_THROWS_AS(beam_search(scorer, 0, 0, 4), Error);
  CHECK_THROWS_AS(beam_search(scorer, 0, 2, 0), Error);
  CHECK_THROWS_AS(beam_search(nullptr, 0, 2, 4), Error);
}
