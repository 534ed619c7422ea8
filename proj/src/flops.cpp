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

#include "tunelab/flops.hpp"

#include <algorithm>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

std::uint64_t encoder_block_params(const ModelConfig& c) {
  const std::uint64_t d = c.d_model;
  const std::uint64_t f = c.ffn_dim;
  return (4 * d * d + 4 * d) + 2 * (2 * d) + (d * f + f + f * d + d);
}

std::uint64_t decoder_block_params(const ModelConfig& c) {
  const std::uint64_t d = c.d_model;
  const std::uint64_t f = c.ffn_dim;
  return 2 * (4 * d * d + 4 * d) + 3 * (2 * d) + (d * f + f + f * d + d);
}

bool plan_trainable(const FreezePlan& plan, const BlockLabel& label) {
  auto it = plan.frozen.find(label);
  return it != plan.frozen.end() && !it->second;
}

}  // namespace

FlopModel FlopModel::from_config(const ModelConfig& config) {
  config.validate();
  return FlopModel(config);
}

std::uint64_t FlopModel::encoder_block_flops() const {
  return 2 * encoder_block_params(cfg_);
}

std::uint64_t FlopModel::decoder_block_flops() const {
  return 2 * decoder_block_params(cfg_);
}

std::uint64_t FlopModel::embedding_correction() const {
  return 4 * static_cast<std::uint64_t>(cfg_.d_model);
}

std::uint64_t FlopModel::output_weight_grad() const {
  return 2 * static_cast<std::uint64_t>(cfg_.d_model) * cfg_.vocab_size;
}

std::uint64_t FlopModel::forward_per_token() const {
  return cfg_.encoder_layers * encoder_block_flops() +
         cfg_.decoder_layers * decoder_block_flops() + embedding_correction();
}

std::uint64_t FlopModel::prefix_extra_per_token(
    std::size_t prefix_length) const {
  // Every self-attention pays a score term and a value term against the
  // prefix rows: 2 * Lp * d each.
  const std::uint64_t attns = cfg_.encoder_layers + cfg_.decoder_layers;
  return attns * 4 * static_cast<std::uint64_t>(prefix_length) * cfg_.d_model;
}

std::uint64_t FlopModel::attention_score_flops(
    std::size_t context_tokens) const {
  const std::uint64_t attns =
      cfg_.encoder_layers + 2 * cfg_.decoder_layers;  // self + cross
  return attns * 2 * static_cast<std::uint64_t>(context_tokens) * cfg_.d_model;
}

std::uint64_t flops_forward_per_token(const ModelConfig& config) {
  return FlopModel::from_config(config).forward_per_token();
}

TrainStepFlops flops_train_step(const ModelConfig& config,
                                const FreezePlan& plan, std::uint64_t tokens) {
  const FlopModel m = FlopModel::from_config(config);
  const std::uint64_t f_enc = m.encoder_block_flops();
  const std::uint64_t f_dec = m.decoder_block_flops();
  const std::uint64_t e = m.embedding_correction();
  const std::uint64_t o = m.output_weight_grad();

  const bool emb_train =
      plan_trainable(plan, BlockLabel::token_embedding()) ||
      plan_trainable(plan, BlockLabel::positional_embedding());
  const bool prefix_train = plan_trainable(plan, BlockLabel::prefix());
  if (prefix_train && plan.prefix_length == 0) {
    fail(ErrorCode::InvalidArgument,
         "flops: trainable prefix requires a positive prefix length");
  }
  const bool out_train =
      config.tie_output_to_embedding
          ? plan_trainable(plan, BlockLabel::token_embedding())
          : plan_trainable(plan, BlockLabel::output_layer());
  const std::uint64_t delta =
      prefix_train ? m.prefix_extra_per_token(plan.prefix_length) : 0;

  // Which blocks must transport activation gradients. A trainable encoder
  // block implicates everything downstream of it, including the whole
  // decoder via cross-attention; trainable embeddings or a prefix implicate
  // every block.
  std::vector<bool> enc_path(config.encoder_layers, false);
  std::vector<bool> dec_path(config.decoder_layers, false);
  if (emb_train || prefix_train) {
    std::fill(enc_path.begin(), enc_path.end(), true);
    std::fill(dec_path.begin(), dec_path.end(), true);
  }
  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    if (plan_trainable(plan, BlockLabel::encoder_block(static_cast<int>(i)))) {
      for (std::size_t k = i; k < config.encoder_layers; ++k)
        enc_path[k] = true;
      std::fill(dec_path.begin(), dec_path.end(), true);
      break;
    }
  }
  for (std::size_t j = 0; j < config.decoder_layers; ++j) {
    if (plan_trainable(plan, BlockLabel::decoder_block(static_cast<int>(j)))) {
      for (std::size_t k = j; k < config.decoder_layers; ++k)
        dec_path[k] = true;
      break;
    }
  }

  std::uint64_t act = 0;
  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    if (enc_path[i]) act += f_enc;
  }
  for (std::size_t j = 0; j < config.decoder_layers; ++j) {
    if (dec_path[j]) act += f_dec;
  }
  if (emb_train) act += e;
  if (prefix_train) act += delta;

  std::uint64_t param = 0;
  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    if (plan_trainable(plan, BlockLabel::encoder_block(static_cast<int>(i)))) {
      param += f_enc;
    }
  }
  for (std::size_t j = 0; j < config.decoder_layers; ++j) {
    if (plan_trainable(plan, BlockLabel::decoder_block(static_cast<int>(j)))) {
      param += f_dec;
    }
  }
  if (emb_train) param += e;
  if (out_train) param += o;
  if (prefix_train) param += delta;

  TrainStepFlops out;
  out.forward_per_token = m.forward_per_token() + delta;
  out.backward_per_token = std::min(act + param, 2 * out.forward_per_token);
  out.total_per_token = out.forward_per_token + out.backward_per_token;
  out.total = out.total_per_token * tokens;
  return out;
}

void FlopLedger::mark_validation(double val_loss) {
  Point p;
  p.cumulative_flops = cumulative_;
  p.pf_seconds = pf_seconds();
  p.val_loss = val_loss;
  points_.push_back(p);
}

}  // namespace tunelab
