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

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tunelab/checkpoint.hpp"
#include "tunelab/parameter.hpp"

namespace tunelab {

class Model;
class SubwordVocabulary;
struct ProjectCorpus;

/// The four personalization strategies.
///
///   Custom  - every parameter of the base model is trainable.
///   LEO     - only the embedding and output blocks are trainable.
///   LLDB    - only the last decoder block is trainable.
///   Prefix  - the base model is fully frozen; a bank of learned prefix
///             key/value rows attached to every self-attention is trained.
enum class StrategyKind { Custom, LEO, LLDB, Prefix };

std::string strategy_name(StrategyKind kind);
StrategyKind parse_strategy(const std::string& name);
std::vector<StrategyKind> all_strategies();

/// Per-block frozen flags for one strategy, derived from a model's
/// parameter registry.
struct FreezePlan {
  StrategyKind strategy = StrategyKind::Custom;
  std::size_t prefix_length = 0;
  std::map<BlockLabel, bool> frozen;

  bool trainable(const BlockLabel& block) const;
};

FreezePlan make_freeze_plan(StrategyKind kind,
                            const ParameterRegistry& registry,
                            std::size_t prefix_length = 0);

/// Learned prefix key/value rows, one pair of (prefix_length x d_model)
/// tensors per self-attention (encoder and decoder blocks). Banks live
/// outside the model so several projects can share one frozen base.
class PrefixBank {
 public:
  PrefixBank(std::size_t encoder_blocks, std::size_t decoder_blocks,
             std::size_t prefix_length, std::size_t d_model);
  PrefixBank(const PrefixBank& other);
  PrefixBank& operator=(const PrefixBank&) = delete;

  std::size_t encoder_blocks() const { return enc_; }
  std::size_t decoder_blocks() const { return dec_; }
  std::size_t prefix_length() const { return len_; }
  std::size_t d_model() const { return d_; }

  Parameter& key(bool is_encoder, std::size_t block);
  Parameter& value(bool is_encoder, std::size_t block);
  const Parameter& key(bool is_encoder, std::size_t block) const;
  const Parameter& value(bool is_encoder, std::size_t block) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  /// Total scalar count: d_model * prefix_length * blocks * 2.
  std::size_t parameter_count() const;

 private:
  std::size_t index(bool is_encoder, std::size_t block, bool value) const;

  std::size_t enc_;
  std::size_t dec_;
  std::size_t len_;
  std::size_t d_;
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Builds a prefix bank whose rows are seeded from the most frequent
/// analysis tokens of a project corpus: each of the top prefix_length words
/// contributes the mean of its subword embedding rows; if the corpus has
/// fewer distinct words, remaining rows fall back to the mean embedding.
/// The same matrix initializes the key and value streams of every block.
PrefixBank init_prefix(const ProjectCorpus& corpus, const Model& model,
                       const SubwordVocabulary& vocab,
                       std::size_t prefix_length);

/// Mean absolute parameter change per block between two snapshots, ordered
/// embeddings, encoder blocks, decoder blocks, output, prefix.
struct DriftReport {
  struct Row {
    BlockLabel block;
    double mean_abs_change = 0.0;
    std::size_t count = 0;
  };
  std::vector<Row> rows;
};

DriftReport drift_report(const std::vector<CheckpointEntry>& before,
                         const std::vector<CheckpointEntry>& after);

void write_drift_csv(const DriftReport& report, const std::string& path);

}  // namespace tunelab
