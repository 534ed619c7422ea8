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
#include <vector>

#include "tunelab/model.hpp"
#include "tunelab/strategy.hpp"

namespace tunelab {

/// Analytic floating-point-operation model for training and inference.
///
/// The forward cost per token is two operations per non-embedding weight
/// parameter plus a small correction for the embedding lookups; attention
/// score terms that scale with context length are deliberately left out of
/// the headline figure and exposed separately. The backward cost is split
/// into an activation-gradient pass over every block that sits between the
/// loss and some trainable parameter, and a parameter-gradient pass over the
/// trainable blocks themselves, and is capped at twice the forward cost,
/// which is what a full backward pass costs when everything trains.
class FlopModel {
 public:
  static FlopModel from_config(const ModelConfig& config);

  /// Per-token forward cost of one full encoder-decoder pass.
  std::uint64_t forward_per_token() const;

  /// Per-token cost attributed to a single encoder / decoder block
  /// (two operations per parameter in the block).
  std::uint64_t encoder_block_flops() const;
  std::uint64_t decoder_block_flops() const;

  /// Correction for the embedding lookup and positional add.
  std::uint64_t embedding_correction() const;

  /// Per-token cost of the output projection weight gradient.
  std::uint64_t output_weight_grad() const;

  /// Per-token attention overhead of a prefix of the given length attached
  /// to every self-attention (score and value terms).
  std::uint64_t prefix_extra_per_token(std::size_t prefix_length) const;

  /// Informational: per-token attention score cost at a given context
  /// length, summed over all attention modules. Not included in totals.
  std::uint64_t attention_score_flops(std::size_t context_tokens) const;

  const ModelConfig& config() const { return cfg_; }

 private:
  explicit FlopModel(const ModelConfig& config) : cfg_(config) {}
  ModelConfig cfg_;
};

/// Convenience wrapper for the headline forward figure.
std::uint64_t flops_forward_per_token(const ModelConfig& config);

struct TrainStepFlops {
  std::uint64_t forward_per_token = 0;
  std::uint64_t backward_per_token = 0;
  std::uint64_t total_per_token = 0;
  std::uint64_t total = 0;  // total_per_token scaled by the token count
};

/// Cost of one optimizer step over `tokens` tokens under a freeze plan.
/// Frozen subnetworks contribute to the backward pass only where activation
/// gradients must flow through them to reach something trainable.
TrainStepFlops flops_train_step(const ModelConfig& config,
                                const FreezePlan& plan, std::uint64_t tokens);

/// Accumulates training compute and snapshots (compute, validation loss)
/// pairs. Validation passes themselves are never added to the ledger.
class FlopLedger {
 public:
  struct Point {
    std::uint64_t cumulative_flops = 0;
    double pf_seconds = 0.0;
    double val_loss = 0.0;
  };

  void record(std::uint64_t flops) { cumulative_ += flops; }

  /// Marks a validation measurement at the current cumulative compute.
  void mark_validation(double val_loss);

  std::uint64_t cumulative() const { return cumulative_; }

  /// Cumulative compute expressed in petaflop-seconds (total operations
  /// divided by 1e15 operations per petaflop-second).
  double pf_seconds() const { return static_cast<double>(cumulative_) / 1e15; }

  const std::vector<Point>& curve() const { return points_; }

 private:
  std::uint64_t cumulative_ = 0;
  std::vector<Point> points_;
};

}  // namespace tunelab
