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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tunelab/bpe.hpp"
#include "tunelab/config.hpp"
#include "tunelab/corpus.hpp"
#include "tunelab/flops.hpp"
#include "tunelab/metrics.hpp"
#include "tunelab/model.hpp"
#include "tunelab/strategy.hpp"

namespace tunelab {

/// One supervised pair: a focal method and the unit test written for it.
struct FocalExample {
  std::string project_id;
  std::string focal_method;
  std::string test_case;
};

/// Dataset files are JSON lines with keys project_id, focal_method and
/// test_case.
std::vector<FocalExample> load_dataset_jsonl(const std::string& path);
void write_dataset_jsonl(const std::vector<FocalExample>& examples,
                         const std::string& path);

/// Prediction files are JSON lines with keys focal_id, rank, text, score.
std::vector<Prediction> load_predictions_jsonl(const std::string& path);
void write_predictions_jsonl(const std::vector<Prediction>& predictions,
                             const std::string& path);

/// Groups examples by project id, preserving first-appearance order.
std::vector<std::vector<FocalExample>> group_by_project(
    const std::vector<FocalExample>& examples);

/// Treats a project's focal methods and tests as its corpus files.
ProjectCorpus corpus_from_examples(const std::vector<FocalExample>& examples);

// ---- synthetic data ---------------------------------------------------------

struct SyntheticOptions {
  std::size_t projects = 4;
  std::size_t examples_per_project = 12;
  std::size_t shared_words = 4;  // words common to every project
  std::uint64_t seed = 1;
};

/// Generates per-project focal/test pairs whose identifier pools mix a
/// small shared vocabulary into otherwise disjoint private vocabularies,
/// calibrated so the shared-token ratio matrix has a median off-diagonal
/// near 0.13. Each reference test is a deterministic function of its focal
/// method and the project's naming style.
std::vector<std::vector<FocalExample>> generate_synthetic_projects(
    const SyntheticOptions& options);

// ---- cross-validation -------------------------------------------------------

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Deterministic k-fold split of n indices: the shuffled indices are cut
/// into k disjoint test chunks that cover everything; a tenth of the
/// remainder (at least one example) validates, the rest trains.
std::vector<FoldSplit> kfold_split(std::size_t n, std::size_t k,
                                   std::uint64_t seed);

// ---- training ---------------------------------------------------------------

struct TokenPair {
  std::vector<int> source;
  std::vector<int> target;  // ends with the eos id
};

TokenPair encode_example(const FocalExample& example,
                         const SubwordVocabulary& vocab,
                         std::size_t max_positions);

struct TrainOptions {
  std::size_t max_steps = 400;
  std::size_t eval_every = 50;
  std::size_t patience = 3;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainResult {
  double best_val_loss = 0.0;
  std::size_t steps_taken = 0;
  bool failed = false;  // training hit a non-finite loss
  std::uint64_t total_flops = 0;
  std::vector<FlopLedger::Point> curve;  // validation points
};

/// Adam training with periodic validation and early stopping: after
/// `patience` consecutive non-improving validations (zero tolerates none)
/// training stops and the best-validation snapshot is restored. Validation
/// passes are excluded from the compute ledger.
TrainResult train_to_best(Model& model, const FreezePlan& plan,
                          const std::vector<TokenPair>& train,
                          const std::vector<TokenPair>& val,
                          const TrainOptions& options);

// ---- evaluation -------------------------------------------------------------

struct EvalOptions {
  std::size_t beam_width = 5;
  std::size_t max_len = 48;
  bool corpus_level_bleu = false;
};

struct EvalResult {
  double perplexity = 0.0;
  double bleu = 0.0;
  double exact_at_1 = 0.0;
  double exact_at_5 = 0.0;
  double abstract_at_1 = 0.0;
  double abstract_at_5 = 0.0;
  double style = 0.0;
  std::vector<Prediction> predictions;
};

/// Beam-decodes every example and scores the hypotheses against the
/// references. Focal ids are the provided example ids, parallel to
/// `examples`.
EvalResult evaluate_model(const Model& model, const SubwordVocabulary& vocab,
                          const std::vector<FocalExample>& examples,
                          const std::vector<std::string>& example_ids,
                          const EvalOptions& options);

// ---- the full grid ----------------------------------------------------------

struct ExperimentConfig {
  SyntheticOptions synth;
  ModelConfig model;  // vocab_size is a cap; the trained vocabulary decides
  std::vector<StrategyKind> strategies = all_strategies();
  std::size_t folds = 2;
  std::size_t prefix_length = 8;
  std::size_t pretrain_steps = 120;
  double pretrain_lr = 3e-3;
  std::map<StrategyKind, double> strategy_lr;  // defaults filled in
  TrainOptions train;
  EvalOptions eval;
  std::size_t threads = 0;  // 0 picks the hardware concurrency
  std::uint64_t seed = 1;
  std::string out_dir;

  ExperimentConfig();
  static ExperimentConfig from_kv(const KeyValueFile& kv);
};

struct RunRecord {
  std::string project_id;
  StrategyKind strategy = StrategyKind::Custom;
  std::size_t fold = 0;
  TrainResult train;
  EvalResult eval;
  DriftReport drift;
};

struct BaselineRecord {
  std::string project_id;
  EvalResult eval;  // averaged over folds
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<BaselineRecord> baselines;
  SharedTokenMatrix matrix;
  std::uint64_t model_parameters = 0;
  std::size_t vocab_size = 0;
};

/// Runs the complete grid: synthesizes the target projects plus a disjoint
/// set of generic projects, trains the tokenizer, pretrains the shared
/// baseline on the generic examples only, then personalizes per (project,
/// strategy, fold) in parallel, and writes metric tables, the ratio matrix,
/// loss-versus-compute curves, drift reports, predictions and a manifest
/// under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace tunelab
