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
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tunelab/beam.hpp"
#include "tunelab/config.hpp"
#include "tunelab/graph.hpp"
#include "tunelab/parameter.hpp"
#include "tunelab/strategy.hpp"

namespace tunelab {

/// Architecture of the sequence-to-sequence model: a pre-layernorm
/// encoder-decoder transformer with learned positional embeddings (separate
/// encoder and decoder tables) and an output projection optionally tied to
/// the token embedding.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 0;
  std::size_t num_heads = 0;
  std::size_t ffn_dim = 0;
  std::size_t encoder_layers = 0;
  std::size_t decoder_layers = 0;
  std::size_t max_positions = 0;
  bool tie_output_to_embedding = true;

  void validate() const;
  static ModelConfig from_kv(const KeyValueFile& kv);
};

struct ParamCounts {
  std::uint64_t total = 0;
  std::uint64_t trainable = 0;
};

/// Closed-form parameter census for a configuration under a strategy. For
/// the prefix strategy the bank parameters are included in the total.
ParamCounts count_parameters(const ModelConfig& config, StrategyKind strategy,
                             std::size_t prefix_length = 0);

/// Parameter registry a model of this configuration would have, without
/// allocating any tensors. With a positive prefix_length the bank entries
/// are appended, mirroring an attached prefix. Useful for deriving freeze
/// plans and compute estimates for configurations too large to instantiate.
ParameterRegistry config_registry(const ModelConfig& config,
                                  std::size_t prefix_length = 0);

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return cfg_; }

  /// Deep copy of parameter values and frozen flags. Prefix bank
  /// attachment is not carried over.
  Model clone() const;

  /// All parameters in registration order (embeddings, encoder blocks,
  /// decoder blocks, output); an attached prefix bank is appended.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find_parameter(const std::string& id);

  ParameterRegistry registry() const;
  const Tensor& token_embedding() const;

  void apply_freeze_plan(const FreezePlan& plan);

  /// Attaches a bank of prefix key/value rows to every self-attention.
  /// The bank must match this model's shape and must outlive the model's
  /// use of it.
  void attach_prefix(PrefixBank* bank);
  void detach_prefix() { prefix_ = nullptr; }
  PrefixBank* attached_prefix() const { return prefix_; }

  /// Test-only ablation: keeps the prefix rows in the attention inputs but
  /// masks them out of every attention distribution.
  void set_prefix_masked(bool masked) { prefix_masked_ = masked; }

  /// Builds the full training graph for one (source, target) pair and
  /// returns the scalar loss node (mean per-token negative log likelihood).
  /// The target must not be empty; the decoder consumes bos + target[:-1].
  Graph::NodeId loss_node(Graph& g, std::span<const int> source,
                          std::span<const int> target, int bos_id = 1) const;

  /// Loss value plus per-token negative log likelihoods, without backward.
  std::pair<double, std::vector<double>> forward_loss(
      std::span<const int> source, std::span<const int> target,
      int bos_id = 1) const;

  /// Encoder output for a source sequence (no gradients retained).
  Tensor encode(std::span<const int> source) const;

  /// Log probabilities over the vocabulary for the next position given
  /// decoder input tokens (bos followed by emitted tokens).
  std::vector<double> step_logprobs(const Tensor& encoder_out,
                                    std::span<const int> decoder_tokens) const;

  std::vector<BeamHypothesis> beam_decode(std::span<const int> source,
                                          std::size_t beam_width,
                                          std::size_t max_len, int bos_id = 1,
                                          int eos_id = 2) const;

 private:
  struct AttnParams {
    Parameter* wq;
    Parameter* bq;
    Parameter* wk;
    Parameter* bk;
    Parameter* wv;
    Parameter* bv;
    Parameter* wo;
    Parameter* bo;
  };
  struct BlockParams {
    Parameter* ln1_gain;
    Parameter* ln1_bias;
    AttnParams self_attn;
    Parameter* ln2_gain;
    Parameter* ln2_bias;
    AttnParams cross_attn;  // decoder only
    Parameter* ln3_gain;    // decoder only
    Parameter* ln3_bias;    // decoder only
    Parameter* ffn_w1;
    Parameter* ffn_b1;
    Parameter* ffn_w2;
    Parameter* ffn_b2;
  };

  Parameter* add_param(const std::string& id, BlockLabel block,
                       std::size_t rows, std::size_t cols);
  AttnParams add_attention(const std::string& stem, BlockLabel block);
  Graph::NodeId attention(Graph& g, const AttnParams& p, Graph::NodeId queries,
                          Graph::NodeId keys_values, bool causal,
                          const Parameter* prefix_key,
                          const Parameter* prefix_value) const;
  Graph::NodeId encoder_forward(Graph& g, std::span<const int> source) const;
  Graph::NodeId decoder_forward(Graph& g, Graph::NodeId encoder_out,
                                std::span<const int> decoder_tokens) const;
  Graph::NodeId logits_node(Graph& g, Graph::NodeId decoder_out) const;

  ModelConfig cfg_;
  std::vector<std::unique_ptr<Parameter>> params_;
  Parameter* tok_emb_ = nullptr;
  Parameter* enc_pos_ = nullptr;
  Parameter* dec_pos_ = nullptr;
  Parameter* out_proj_ = nullptr;  // null when tied
  std::vector<BlockParams> encoder_;
  std::vector<BlockParams> decoder_;
  PrefixBank* prefix_ = nullptr;
  bool prefix_masked_ = false;
};

}  // namespace tunelab
