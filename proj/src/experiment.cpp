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

// Cross-validated personalization grid: fold splitting, early-stopped
// training, beam-search evaluation and the experiment driver that ties them
// together and writes the result tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include "tunelab/error.hpp"
#include "tunelab/experiment.hpp"
#include "tunelab/optimizer.hpp"
#include "tunelab/stats.hpp"

namespace tunelab {

namespace {

namespace fs = std::filesystem;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

std::vector<Parameter*> trainable_parameters(Model& model) {
  std::vector<Parameter*> out;
  for (Parameter* p : model.parameters()) {
    if (!p->frozen) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> const_parameters(const Model& model) {
  return model.parameters();
}

// Pooled mean negative log likelihood over a set of pairs.
double validation_loss(const Model& model, const std::vector<TokenPair>& val) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const TokenPair& pair : val) {
    auto [loss, nlls] = model.forward_loss(pair.source, pair.target);
    (void)loss;
    for (double nll : nlls) total += nll;
    tokens += nlls.size();
  }
  if (tokens == 0) {
    fail(ErrorCode::InvalidArgument, "validation set has no tokens");
  }
  return total / static_cast<double>(tokens);
}

}  // namespace

std::vector<FoldSplit> kfold_split(std::size_t n, std::size_t k,
                                   std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "k-fold needs at least 2 folds");
  if (n < k) {
    fail(ErrorCode::InvalidArgument,
         "k-fold needs at least one example per fold");
  }
  const std::size_t largest = (n + k - 1) / k;
  if (n - largest < 2) {
    fail(ErrorCode::InvalidArgument,
         "k-fold needs at least two examples outside every test chunk");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<FoldSplit> folds(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    FoldSplit& fold = folds[f];
    fold.test.assign(order.begin() + start, order.begin() + start + size);
    std::vector<std::size_t> rest;
    rest.reserve(n - size);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < start || i >= start + size) rest.push_back(order[i]);
    }
    std::size_t val_count = rest.size() / 10;
    if (val_count == 0) val_count = 1;
    fold.val.assign(rest.begin(), rest.begin() + val_count);
    fold.train.assign(rest.begin() + val_count, rest.end());
    start += size;
  }
  return folds;
}

TokenPair encode_example(const FocalExample& example,
                         const SubwordVocabulary& vocab,
                         std::size_t max_positions) {
  if (max_positions < 2) {
    fail(ErrorCode::InvalidArgument,
         "encode_example needs at least two positions");
  }
  TokenPair pair;
  pair.source = vocab.encode(example.focal_method);
  if (pair.source.size() > max_positions) pair.source.resize(max_positions);
  if (pair.source.empty()) {
    fail(ErrorCode::InvalidArgument,
         "focal method encodes to an empty sequence");
  }
  pair.target = vocab.encode(example.test_case);
  if (pair.target.size() > max_positions - 1) {
    pair.target.resize(max_positions - 1);
  }
  pair.target.push_back(SubwordVocabulary::kEosId);
  return pair;
}

TrainResult train_to_best(Model& model, const FreezePlan& plan,
                          const std::vector<TokenPair>& train,
                          const std::vector<TokenPair>& val,
                          const TrainOptions& options) {
  if (train.empty()) fail(ErrorCode::InvalidArgument, "empty training set");
  if (val.empty()) fail(ErrorCode::InvalidArgument, "empty validation set");
  if (options.eval_every == 0) {
    fail(ErrorCode::InvalidArgument, "eval_every must be positive");
  }
  if (options.max_steps == 0) {
    fail(ErrorCode::InvalidArgument, "max_steps must be positive");
  }
  if (!(options.lr > 0.0)) {
    fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  }

  std::vector<Parameter*> trainables = trainable_parameters(model);
  if (trainables.empty()) {
    fail(ErrorCode::InvalidArgument,
         "freeze plan leaves nothing trainable; cannot train");
  }
  std::vector<const Parameter*> trainables_view(trainables.begin(),
                                                trainables.end());

  AdamOptimizer optimizer(options.lr);
  FlopLedger ledger;
  TrainResult result;

  double best = validation_loss(model, val);
  ledger.mark_validation(best);
  std::vector<CheckpointEntry> best_snapshot = snapshot(trainables_view);

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  std::size_t bad = 0;
  std::size_t done = 0;
  while (done < options.max_steps) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const TokenPair& pair = train[order[cursor++]];
    try {
      Graph g;
      Graph::NodeId loss = model.loss_node(g, pair.source, pair.target);
      g.backward(loss);
      optimizer.step(model.parameters());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Numeric) {
        result.failed = true;
        break;
      }
      throw;
    }
    ++done;
    ledger.record(flops_train_step(model.config(), plan,
                                   pair.source.size() + pair.target.size())
                      .total);

    if (done % options.eval_every == 0) {
      double current = 0.0;
      try {
        current = validation_loss(model, val);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Numeric) {
          result.failed = true;
          break;
        }
        throw;
      }
      ledger.mark_validation(current);
      if (current < best) {
        best = current;
        best_snapshot = snapshot(trainables_view);
        bad = 0;
      } else {
        ++bad;
        if (bad > options.patience) break;
      }
    }
  }

  restore(best_snapshot, trainables);
  result.best_val_loss = best;
  result.steps_taken = done;
  result.total_flops = ledger.cumulative();
  result.curve = ledger.curve();
  return result;
}

EvalResult evaluate_model(const Model& model, const SubwordVocabulary& vocab,
                          const std::vector<FocalExample>& examples,
                          const std::vector<std::string>& example_ids,
                          const EvalOptions& options) {
  if (examples.empty()) {
    fail(ErrorCode::InvalidArgument, "evaluate_model: no examples");
  }
  if (examples.size() != example_ids.size()) {
    fail(ErrorCode::InvalidArgument,
         "evaluate_model: example ids are not parallel to examples");
  }
  if (options.beam_width == 0 || options.max_len == 0) {
    fail(ErrorCode::InvalidArgument,
         "evaluate_model: beam width and max length must be positive");
  }

  EvalResult result;
  std::vector<double> nlls;
  std::vector<std::string> top1;
  std::vector<std::string> references;
  std::map<std::string, std::string> reference_by_id;

  const std::size_t max_positions = model.config().max_positions;
  const std::size_t max_len =
      std::min(options.max_len, max_positions - 1);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    TokenPair pair = encode_example(examples[i], vocab, max_positions);
    auto [loss, token_nlls] = model.forward_loss(pair.source, pair.target);
    (void)loss;
    nlls.insert(nlls.end(), token_nlls.begin(), token_nlls.end());

    std::vector<BeamHypothesis> hyps =
        model.beam_decode(pair.source, options.beam_width, max_len);
    for (std::size_t r = 0; r < hyps.size(); ++r) {
      Prediction prediction;
      prediction.focal_id = example_ids[i];
      prediction.rank = static_cast<int>(r) + 1;
      prediction.text = vocab.decode(hyps[r].tokens);
      prediction.score = hyps[r].score();
      result.predictions.push_back(std::move(prediction));
    }
    top1.push_back(vocab.decode(hyps.front().tokens));
    references.push_back(examples[i].test_case);
    reference_by_id[example_ids[i]] = examples[i].test_case;
  }

  result.perplexity = pooled_perplexity(nlls);
  if (options.corpus_level_bleu) {
    result.bleu = corpus_bleu4(top1, references);
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < top1.size(); ++i) {
      sum += bleu4(top1[i], references[i]);
    }
    result.bleu = sum / static_cast<double>(top1.size());
  }
  result.exact_at_1 =
      topk_match_rate(result.predictions, reference_by_id, 1, false);
  result.exact_at_5 = topk_match_rate(result.predictions, reference_by_id,
                                      options.beam_width, false);
  result.abstract_at_1 =
      topk_match_rate(result.predictions, reference_by_id, 1, true);
  result.abstract_at_5 = topk_match_rate(result.predictions, reference_by_id,
                                         options.beam_width, true);
  result.style = style_similarity(top1, references);
  return result;
}

ExperimentConfig::ExperimentConfig() {
  model.vocab_size = 768;  // cap; the trained vocabulary sets the real size
  model.d_model = 64;
  model.num_heads = 4;
  model.ffn_dim = 256;
  model.encoder_layers = 2;
  model.decoder_layers = 2;
  model.max_positions = 128;
  model.tie_output_to_embedding = true;

  strategy_lr[StrategyKind::Custom] = 1e-3;
  strategy_lr[StrategyKind::LEO] = 2e-3;
  strategy_lr[StrategyKind::LLDB] = 2e-3;
  strategy_lr[StrategyKind::Prefix] = 1e-2;

  train.max_steps = 400;
  train.eval_every = 40;
  train.patience = 3;

  eval.beam_width = 5;
  eval.max_len = 48;
}

ExperimentConfig ExperimentConfig::from_kv(const KeyValueFile& kv) {
  ExperimentConfig config;

  config.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
  config.synth.seed =
      static_cast<std::uint64_t>(kv.get_int("synth_seed", kv.get_int("seed", 1)));
  config.synth.projects =
      static_cast<std::size_t>(kv.get_int("projects", config.synth.projects));
  config.synth.examples_per_project = static_cast<std::size_t>(kv.get_int(
      "examples_per_project", config.synth.examples_per_project));
  config.synth.shared_words = static_cast<std::size_t>(
      kv.get_int("shared_words", config.synth.shared_words));

  config.model.vocab_size = static_cast<std::size_t>(
      kv.get_int("vocab_size", config.model.vocab_size));
  config.model.d_model =
      static_cast<std::size_t>(kv.get_int("d_model", config.model.d_model));
  config.model.num_heads = static_cast<std::size_t>(
      kv.get_int("num_heads", config.model.num_heads));
  config.model.ffn_dim =
      static_cast<std::size_t>(kv.get_int("ffn_dim", config.model.ffn_dim));
  config.model.encoder_layers = static_cast<std::size_t>(
      kv.get_int("encoder_layers", config.model.encoder_layers));
  config.model.decoder_layers = static_cast<std::size_t>(
      kv.get_int("decoder_layers", config.model.decoder_layers));
  config.model.max_positions = static_cast<std::size_t>(
      kv.get_int("max_positions", config.model.max_positions));
  config.model.tie_output_to_embedding = kv.get_bool(
      "tie_output_to_embedding", config.model.tie_output_to_embedding);

  if (kv.has("strategies")) {
    config.strategies.clear();
    std::stringstream list(kv.require_string("strategies"));
    std::string name;
    while (std::getline(list, name, ',')) {
      const auto begin = name.find_first_not_of(" \t");
      const auto end = name.find_last_not_of(" \t");
      if (begin == std::string::npos) continue;
      config.strategies.push_back(
          parse_strategy(name.substr(begin, end - begin + 1)));
    }
    if (config.strategies.empty()) {
      fail(ErrorCode::InvalidArgument, "strategies list is empty");
    }
  }

  config.folds = static_cast<std::size_t>(kv.get_int("folds", config.folds));
  config.prefix_length = static_cast<std::size_t>(
      kv.get_int("prefix_length", config.prefix_length));
  config.pretrain_steps = static_cast<std::size_t>(
      kv.get_int("pretrain_steps", config.pretrain_steps));
  config.pretrain_lr = kv.get_double("pretrain_lr", config.pretrain_lr);

  config.strategy_lr[StrategyKind::Custom] =
      kv.get_double("lr_custom", config.strategy_lr[StrategyKind::Custom]);
  config.strategy_lr[StrategyKind::LEO] =
      kv.get_double("lr_leo", config.strategy_lr[StrategyKind::LEO]);
  config.strategy_lr[StrategyKind::LLDB] =
      kv.get_double("lr_lldb", config.strategy_lr[StrategyKind::LLDB]);
  config.strategy_lr[StrategyKind::Prefix] =
      kv.get_double("lr_prefix", config.strategy_lr[StrategyKind::Prefix]);

  config.train.max_steps = static_cast<std::size_t>(
      kv.get_int("max_steps", config.train.max_steps));
  config.train.eval_every = static_cast<std::size_t>(
      kv.get_int("eval_every", config.train.eval_every));
  config.train.patience =
      static_cast<std::size_t>(kv.get_int("patience", config.train.patience));

  config.eval.beam_width = static_cast<std::size_t>(
      kv.get_int("beam_width", config.eval.beam_width));
  config.eval.max_len =
      static_cast<std::size_t>(kv.get_int("max_len", config.eval.max_len));
  config.eval.corpus_level_bleu =
      kv.get_bool("corpus_level_bleu", config.eval.corpus_level_bleu);

  config.threads =
      static_cast<std::size_t>(kv.get_int("threads", config.threads));
  config.out_dir = kv.get_string("out_dir", config.out_dir);

  const std::vector<std::string> unused = kv.unused_keys();
  if (!unused.empty()) {
    std::string joined;
    for (const std::string& key : unused) {
      if (!joined.empty()) joined += ", ";
      joined += key;
    }
    fail(ErrorCode::InvalidArgument,
         "unknown experiment config keys: " + joined);
  }
  return config;
}

namespace {

// Fold-averaged copy of several evaluations (predictions are not averaged).
EvalResult average_evals(const std::vector<EvalResult>& evals) {
  EvalResult avg;
  const double n = static_cast<double>(evals.size());
  for (const EvalResult& e : evals) {
    avg.perplexity += e.perplexity / n;
    avg.bleu += e.bleu / n;
    avg.exact_at_1 += e.exact_at_1 / n;
    avg.exact_at_5 += e.exact_at_5 / n;
    avg.abstract_at_1 += e.abstract_at_1 / n;
    avg.abstract_at_5 += e.abstract_at_5 / n;
    avg.style += e.style / n;
  }
  return avg;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::Io, "failed while writing " + path);
}

std::string csv_double(double v) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << v;
  return out.str();
}

struct CellOutcome {
  RunRecord record;
  std::exception_ptr error;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.out_dir.empty()) {
    fail(ErrorCode::InvalidArgument, "experiment needs an output directory");
  }
  if (config.strategies.empty()) {
    fail(ErrorCode::InvalidArgument, "experiment needs at least one strategy");
  }
  if (config.folds < 2) {
    fail(ErrorCode::InvalidArgument, "experiment needs at least two folds");
  }
  fs::create_directories(config.out_dir);
  const std::string base_dir = config.out_dir + "/";

  // --- data ------------------------------------------------------------
  const std::vector<std::vector<FocalExample>> projects =
      generate_synthetic_projects(config.synth);

  std::vector<FocalExample> flat;
  std::vector<ProjectCorpus> corpora;
  std::vector<std::string> pooled_texts;
  for (const auto& examples : projects) {
    corpora.push_back(corpus_from_examples(examples));
    for (const FocalExample& example : examples) {
      flat.push_back(example);
      pooled_texts.push_back(example.focal_method);
      pooled_texts.push_back(example.test_case);
    }
  }
  write_dataset_jsonl(flat, base_dir + "dataset.jsonl");

  // Disposable generic projects, drawn with a derived seed, supply the
  // pretraining stream.  The target projects above never appear in it, so
  // the shared starting point knows the domain's shape but none of a
  // target project's naming style.
  SyntheticOptions generic_opts = config.synth;
  generic_opts.seed = derive_seed(config.seed, 0x6e71);
  generic_opts.projects = std::max<std::size_t>(config.synth.projects, 6);
  const std::vector<std::vector<FocalExample>> generic_projects =
      generate_synthetic_projects(generic_opts);
  std::vector<FocalExample> generic_flat;
  for (const auto& examples : generic_projects) {
    for (const FocalExample& example : examples) {
      generic_flat.push_back(example);
      pooled_texts.push_back(example.focal_method);
      pooled_texts.push_back(example.test_case);
    }
  }

  ExperimentResult result;
  result.matrix = shared_token_matrix(corpora);
  write_matrix_csv(result.matrix, base_dir + "matrix.csv");

  // --- tokenizer and base model ----------------------------------------
  SubwordVocabulary vocab =
      SubwordVocabulary::train(pooled_texts, config.model.vocab_size);
  vocab.save(base_dir + "vocab.tl");
  result.vocab_size = vocab.size();

  ModelConfig mc = config.model;
  mc.vocab_size = vocab.size();
  mc.validate();
  result.model_parameters =
      count_parameters(mc, StrategyKind::Custom).total;

  Model base(mc, derive_seed(config.seed, 0xba5e));

  std::vector<TokenPair> pretrain_pairs;
  pretrain_pairs.reserve(generic_flat.size());
  for (const FocalExample& example : generic_flat) {
    pretrain_pairs.push_back(encode_example(example, vocab, mc.max_positions));
  }

  // Pretraining on the generic projects teaches the shared skeleton and the
  // copying of names and constants; the pretrained model is the baseline
  // the personalized runs are compared against.
  {
    AdamOptimizer optimizer(config.pretrain_lr);
    std::mt19937_64 rng(derive_seed(config.seed, 0x9e7a));
    std::vector<std::size_t> order(pretrain_pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;
    for (std::size_t step = 0; step < config.pretrain_steps; ++step) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const TokenPair& pair = pretrain_pairs[order[cursor++]];
      Graph g;
      Graph::NodeId loss = base.loss_node(g, pair.source, pair.target);
      g.backward(loss);
      optimizer.step(base.parameters());
    }
  }

  // --- folds and baseline ----------------------------------------------
  std::vector<std::vector<FoldSplit>> folds(projects.size());
  for (std::size_t p = 0; p < projects.size(); ++p) {
    folds[p] = kfold_split(projects[p].size(), config.folds,
                           derive_seed(config.seed, 0xf01d + p));
  }

  auto subset_examples = [&](std::size_t p,
                             const std::vector<std::size_t>& idx) {
    std::vector<FocalExample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(projects[p][i]);
    return out;
  };
  auto subset_ids = [&](std::size_t p, const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
      out.push_back(corpora[p].id + ":" + std::to_string(i));
    }
    return out;
  };
  auto subset_pairs = [&](std::size_t p, const std::vector<std::size_t>& idx) {
    std::vector<TokenPair> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
      out.push_back(encode_example(projects[p][i], vocab, mc.max_positions));
    }
    return out;
  };

  for (std::size_t p = 0; p < projects.size(); ++p) {
    std::vector<EvalResult> per_fold;
    for (std::size_t f = 0; f < config.folds; ++f) {
      per_fold.push_back(evaluate_model(base, vocab,
                                        subset_examples(p, folds[p][f].test),
                                        subset_ids(p, folds[p][f].test),
                                        config.eval));
    }
    BaselineRecord record;
    record.project_id = corpora[p].id;
    record.eval = average_evals(per_fold);
    result.baselines.push_back(std::move(record));
  }

  // --- the personalization grid ----------------------------------------
  struct CellSpec {
    std::size_t project;
    std::size_t strategy;
    std::size_t fold;
  };
  std::vector<CellSpec> cells;
  for (std::size_t p = 0; p < projects.size(); ++p) {
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      for (std::size_t f = 0; f < config.folds; ++f) {
        cells.push_back({p, s, f});
      }
    }
  }

  std::vector<CellOutcome> outcomes(cells.size());
  auto run_cell = [&](std::size_t index) {
    const CellSpec& cell = cells[index];
    const StrategyKind strategy = config.strategies[cell.strategy];
    const FoldSplit& split = folds[cell.project][cell.fold];

    Model model = base.clone();
    std::optional<PrefixBank> bank;
    if (strategy == StrategyKind::Prefix) {
      bank.emplace(
          init_prefix(corpora[cell.project], model, vocab,
                      config.prefix_length));
      model.attach_prefix(&*bank);
    }
    const FreezePlan plan =
        make_freeze_plan(strategy, model.registry(), config.prefix_length);
    model.apply_freeze_plan(plan);

    const std::vector<CheckpointEntry> before =
        snapshot(const_parameters(model));

    TrainOptions topts = config.train;
    auto lr = config.strategy_lr.find(strategy);
    if (lr != config.strategy_lr.end()) topts.lr = lr->second;
    topts.seed = derive_seed(
        config.seed,
        0xce11 + cell.project * 1009 + cell.strategy * 101 + cell.fold);

    RunRecord record;
    record.project_id = corpora[cell.project].id;
    record.strategy = strategy;
    record.fold = cell.fold;
    record.train =
        train_to_best(model, plan, subset_pairs(cell.project, split.train),
                      subset_pairs(cell.project, split.val), topts);
    record.drift = drift_report(before, snapshot(const_parameters(model)));
    record.eval = evaluate_model(model, vocab,
                                 subset_examples(cell.project, split.test),
                                 subset_ids(cell.project, split.test),
                                 config.eval);
    outcomes[index].record = std::move(record);
  };

  std::size_t workers = config.threads;
  if (workers == 0) {
    workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
  }
  workers = std::min(workers, cells.size());

  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        const std::size_t index = next.fetch_add(1);
        if (index >= cells.size()) return;
        try {
          run_cell(index);
        } catch (...) {
          outcomes[index].error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    for (const CellOutcome& outcome : outcomes) {
      if (outcome.error) std::rethrow_exception(outcome.error);
    }
  }

  result.runs.reserve(outcomes.size());
  for (CellOutcome& outcome : outcomes) {
    result.runs.push_back(std::move(outcome.record));
  }

  // --- artifacts ---------------------------------------------------------
  {
    std::ostringstream csv;
    csv << "project,strategy,fold,val_loss,perplexity,bleu,exact_at_1,"
           "exact_at_5,abstract_at_1,abstract_at_5,style,steps,train_flops,"
           "pf_seconds,failed\n";
    for (const RunRecord& run : result.runs) {
      csv << run.project_id << ',' << strategy_name(run.strategy) << ','
          << run.fold << ',' << csv_double(run.train.best_val_loss) << ','
          << csv_double(run.eval.perplexity) << ','
          << csv_double(run.eval.bleu) << ','
          << csv_double(run.eval.exact_at_1) << ','
          << csv_double(run.eval.exact_at_5) << ','
          << csv_double(run.eval.abstract_at_1) << ','
          << csv_double(run.eval.abstract_at_5) << ','
          << csv_double(run.eval.style) << ',' << run.train.steps_taken << ','
          << run.train.total_flops << ','
          << csv_double(static_cast<double>(run.train.total_flops) / 1e15)
          << ',' << (run.train.failed ? 1 : 0) << '\n';
    }
    write_text_file(base_dir + "metrics.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "project,perplexity,bleu,exact_at_1,exact_at_5,abstract_at_1,"
           "abstract_at_5,style\n";
    for (const BaselineRecord& baseline : result.baselines) {
      csv << baseline.project_id << ','
          << csv_double(baseline.eval.perplexity) << ','
          << csv_double(baseline.eval.bleu) << ','
          << csv_double(baseline.eval.exact_at_1) << ','
          << csv_double(baseline.eval.exact_at_5) << ','
          << csv_double(baseline.eval.abstract_at_1) << ','
          << csv_double(baseline.eval.abstract_at_5) << ','
          << csv_double(baseline.eval.style) << '\n';
    }
    write_text_file(base_dir + "baseline.csv", csv.str());
  }

  // Fold-averaged per (project, strategy) table, baseline rows included.
  std::map<std::pair<std::string, StrategyKind>, std::vector<EvalResult>>
      by_cell;
  for (const RunRecord& run : result.runs) {
    by_cell[{run.project_id, run.strategy}].push_back(run.eval);
  }
  {
    std::ostringstream md;
    md << "# Personalization grid\n\n";
    md << "| project | strategy | perplexity | bleu | exact@1 | exact@5 | "
          "abstract@1 | abstract@5 | style |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    auto emit_row = [&md](const std::string& project,
                          const std::string& strategy, const EvalResult& e) {
      md << "| " << project << " | " << strategy << " | "
         << csv_double(e.perplexity) << " | " << csv_double(e.bleu) << " | "
         << csv_double(e.exact_at_1) << " | " << csv_double(e.exact_at_5)
         << " | " << csv_double(e.abstract_at_1) << " | "
         << csv_double(e.abstract_at_5) << " | " << csv_double(e.style)
         << " |\n";
    };
    for (const BaselineRecord& baseline : result.baselines) {
      emit_row(baseline.project_id, "baseline", baseline.eval);
      for (StrategyKind strategy : config.strategies) {
        auto it = by_cell.find({baseline.project_id, strategy});
        if (it != by_cell.end()) {
          emit_row(baseline.project_id, strategy_name(strategy),
                   average_evals(it->second));
        }
      }
    }
    write_text_file(base_dir + "summary.md", md.str());
  }

  // Kruskal-Wallis across strategies, one fold-averaged value per project.
  {
    std::ostringstream csv;
    csv << "metric,h,p\n";
    struct MetricColumn {
      const char* name;
      double EvalResult::* field;
    };
    const MetricColumn columns[] = {
        {"perplexity", &EvalResult::perplexity},
        {"bleu", &EvalResult::bleu},
        {"exact_at_1", &EvalResult::exact_at_1},
        {"exact_at_5", &EvalResult::exact_at_5},
        {"abstract_at_1", &EvalResult::abstract_at_1},
        {"abstract_at_5", &EvalResult::abstract_at_5},
        {"style", &EvalResult::style},
    };
    // The test needs at least two strategy groups to compare; with fewer
    // the file keeps its header and no rows.
    if (config.strategies.size() >= 2) {
      for (const MetricColumn& column : columns) {
        std::vector<std::vector<double>> groups;
        for (StrategyKind strategy : config.strategies) {
          std::vector<double> values;
          for (const BaselineRecord& baseline : result.baselines) {
            auto it = by_cell.find({baseline.project_id, strategy});
            if (it != by_cell.end()) {
              values.push_back(average_evals(it->second).*column.field);
            }
          }
          groups.push_back(std::move(values));
        }
        KruskalWallisResult kw = kruskal_wallis(groups);
        csv << column.name << ',' << csv_double(kw.h) << ','
            << csv_double(kw.p_value) << '\n';
      }
    }
    write_text_file(base_dir + "kw.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "strategy,project,fold,cumulative_flops,pf_seconds,val_loss\n";
    for (const RunRecord& run : result.runs) {
      for (const FlopLedger::Point& point : run.train.curve) {
        csv << strategy_name(run.strategy) << ',' << run.project_id << ','
            << run.fold << ',' << point.cumulative_flops << ','
            << std::setprecision(12) << point.pf_seconds << ','
            << csv_double(point.val_loss) << '\n';
      }
    }
    write_text_file(base_dir + "curves.csv", csv.str());
  }

  // One drift report and one predictions file per strategy.
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    const StrategyKind strategy = config.strategies[s];
    const std::string name = strategy_name(strategy);
    std::vector<Prediction> merged;
    const RunRecord* first_cell = nullptr;
    for (const RunRecord& run : result.runs) {
      if (run.strategy != strategy) continue;
      if (!first_cell) first_cell = &run;
      merged.insert(merged.end(), run.eval.predictions.begin(),
                    run.eval.predictions.end());
    }
    if (first_cell) {
      write_drift_csv(first_cell->drift, base_dir + "drift_" + name + ".csv");
    }
    write_predictions_jsonl(merged, base_dir + "predictions_" + name +
                                        ".jsonl");
  }

  {
    std::ostringstream manifest;
    manifest << "seed = " << config.seed << "\n";
    manifest << "projects = " << config.synth.projects << "\n";
    manifest << "examples_per_project = " << config.synth.examples_per_project
             << "\n";
    manifest << "shared_words = " << config.synth.shared_words << "\n";
    manifest << "folds = " << config.folds << "\n";
    std::string strategies;
    for (StrategyKind strategy : config.strategies) {
      if (!strategies.empty()) strategies += ",";
      strategies += strategy_name(strategy);
    }
    manifest << "strategies = " << strategies << "\n";
    manifest << "vocab_size = " << result.vocab_size << "\n";
    manifest << "model_parameters = " << result.model_parameters << "\n";
    manifest << "d_model = " << mc.d_model << "\n";
    manifest << "num_heads = " << mc.num_heads << "\n";
    manifest << "ffn_dim = " << mc.ffn_dim << "\n";
    manifest << "encoder_layers = " << mc.encoder_layers << "\n";
    manifest << "decoder_layers = " << mc.decoder_layers << "\n";
    manifest << "max_positions = " << mc.max_positions << "\n";
    manifest << "prefix_length = " << config.prefix_length << "\n";
    manifest << "pretrain_projects = " << generic_opts.projects << "\n";
    manifest << "pretrain_steps = " << config.pretrain_steps << "\n";
    manifest << "max_steps = " << config.train.max_steps << "\n";
    manifest << "eval_every = " << config.train.eval_every << "\n";
    manifest << "patience = " << config.train.patience << "\n";
    manifest << "beam_width = " << config.eval.beam_width << "\n";
    manifest << "analysis_tokenizer_version = " << kAnalysisTokenizerVersion
             << "\n";
    manifest << "validation_flops_included = false\n";
    write_text_file(base_dir + "manifest.txt", manifest.str());
  }

  return result;
}

}  // namespace tunelab
