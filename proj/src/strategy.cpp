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

#include "tunelab/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "tunelab/bpe.hpp"
#include "tunelab/corpus.hpp"
#include "tunelab/error.hpp"
#include "tunelab/model.hpp"

namespace tunelab {

std::string strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Custom:
      return "custom";
    case StrategyKind::LEO:
      return "l-eo";
    case StrategyKind::LLDB:
      return "l-ldb";
    case StrategyKind::Prefix:
      return "prefix";
  }
  fail(ErrorCode::Internal, "unknown strategy kind");
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "custom") return StrategyKind::Custom;
  if (name == "l-eo" || name == "leo") return StrategyKind::LEO;
  if (name == "l-ldb" || name == "lldb") return StrategyKind::LLDB;
  if (name == "prefix") return StrategyKind::Prefix;
  fail(ErrorCode::InvalidArgument, "unknown strategy name: " + name);
}

std::vector<StrategyKind> all_strategies() {
  return {StrategyKind::Custom, StrategyKind::LEO, StrategyKind::LLDB,
          StrategyKind::Prefix};
}

bool FreezePlan::trainable(const BlockLabel& block) const {
  auto it = frozen.find(block);
  if (it == frozen.end()) {
    fail(ErrorCode::InvalidArgument,
         "freeze plan has no entry for block " + block.str());
  }
  return !it->second;
}

FreezePlan make_freeze_plan(StrategyKind kind,
                            const ParameterRegistry& registry,
                            std::size_t prefix_length) {
  if (registry.empty()) {
    fail(ErrorCode::InvalidArgument, "make_freeze_plan: empty registry");
  }
  FreezePlan plan;
  plan.strategy = kind;
  plan.prefix_length = kind == StrategyKind::Prefix ? prefix_length : 0;
  if (kind == StrategyKind::Prefix && prefix_length == 0) {
    fail(ErrorCode::InvalidArgument,
         "make_freeze_plan: prefix strategy requires prefix_length > 0");
  }

  int last_decoder = -1;
  for (const RegistryEntry& entry : registry) {
    if (entry.block.kind == BlockLabel::Kind::DecoderBlock) {
      last_decoder = std::max(last_decoder, entry.block.index);
    }
  }
  if (kind == StrategyKind::LLDB && last_decoder < 0) {
    fail(ErrorCode::InvalidArgument,
         "make_freeze_plan: registry has no decoder blocks");
  }

  for (const RegistryEntry& entry : registry) {
    const BlockLabel& block = entry.block;
    bool frozen = false;
    switch (kind) {
      case StrategyKind::Custom:
        frozen = false;
        break;
      case StrategyKind::LEO:
        frozen = !(block.kind == BlockLabel::Kind::TokenEmbedding ||
                   block.kind == BlockLabel::Kind::PositionalEmbedding ||
                   block.kind == BlockLabel::Kind::OutputLayer);
        break;
      case StrategyKind::LLDB:
        frozen = !(block.kind == BlockLabel::Kind::DecoderBlock &&
                   block.index == last_decoder);
        break;
      case StrategyKind::Prefix:
        frozen = block.kind != BlockLabel::Kind::Prefix;
        break;
    }
    plan.frozen[block] = frozen;
  }
  if (kind == StrategyKind::Prefix) {
    plan.frozen[BlockLabel::prefix()] = false;
  }
  return plan;
}

PrefixBank::PrefixBank(std::size_t encoder_blocks, std::size_t decoder_blocks,
                       std::size_t prefix_length, std::size_t d_model)
    : enc_(encoder_blocks),
      dec_(decoder_blocks),
      len_(prefix_length),
      d_(d_model) {
  if (enc_ + dec_ == 0 || len_ == 0 || d_ == 0) {
    fail(ErrorCode::InvalidArgument, "prefix bank: dimensions must be positive");
  }
  params_.resize(2 * (enc_ + dec_));
  for (std::size_t i = 0; i < enc_ + dec_; ++i) {
    const bool is_encoder = i < enc_;
    const std::size_t block = is_encoder ? i : i - enc_;
    const std::string stem =
        std::string("prefix.") +
        (is_encoder ? BlockLabel::encoder_block(static_cast<int>(block)).str()
                    : BlockLabel::decoder_block(static_cast<int>(block)).str());
    params_[2 * i] = std::make_unique<Parameter>(
        stem + ".key", BlockLabel::prefix(), Tensor(len_, d_));
    params_[2 * i + 1] = std::make_unique<Parameter>(
        stem + ".value", BlockLabel::prefix(), Tensor(len_, d_));
  }
}

PrefixBank::PrefixBank(const PrefixBank& other)
    : enc_(other.enc_), dec_(other.dec_), len_(other.len_), d_(other.d_) {
  params_.reserve(other.params_.size());
  for (const std::unique_ptr<Parameter>& p : other.params_) {
    auto copy = std::make_unique<Parameter>(p->id, p->block, p->value);
    copy->frozen = p->frozen;
    params_.push_back(std::move(copy));
  }
}

std::size_t PrefixBank::index(bool is_encoder, std::size_t block,
                              bool value) const {
  if (is_encoder ? block >= enc_ : block >= dec_) {
    fail(ErrorCode::InvalidArgument, "prefix bank: block index out of range");
  }
  const std::size_t base = is_encoder ? block : enc_ + block;
  return 2 * base + (value ? 1 : 0);
}

Parameter& PrefixBank::key(bool is_encoder, std::size_t block) {
  return *params_[index(is_encoder, block, false)];
}

Parameter& PrefixBank::value(bool is_encoder, std::size_t block) {
  return *params_[index(is_encoder, block, true)];
}

const Parameter& PrefixBank::key(bool is_encoder, std::size_t block) const {
  return *params_[index(is_encoder, block, false)];
}

const Parameter& PrefixBank::value(bool is_encoder, std::size_t block) const {
  return *params_[index(is_encoder, block, true)];
}

std::vector<Parameter*> PrefixBank::parameters() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (std::unique_ptr<Parameter>& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> PrefixBank::parameters() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const std::unique_ptr<Parameter>& p : params_) out.push_back(p.get());
  return out;
}

std::size_t PrefixBank::parameter_count() const {
  return 2 * (enc_ + dec_) * len_ * d_;
}

PrefixBank init_prefix(const ProjectCorpus& corpus, const Model& model,
                       const SubwordVocabulary& vocab,
                       std::size_t prefix_length) {
  const ModelConfig& cfg = model.config();
  if (prefix_length == 0 || prefix_length > cfg.max_positions) {
    fail(ErrorCode::InvalidArgument,
         "init_prefix: prefix_length must be in [1, max_positions]");
  }
  if (corpus.files.empty()) {
    fail(ErrorCode::InvalidArgument, "init_prefix: empty corpus");
  }
  const std::map<std::string, std::size_t> counts =
      analysis_token_counts(corpus);
  if (counts.empty()) {
    fail(ErrorCode::InvalidArgument,
         "init_prefix: corpus '" + corpus.id + "' has no analysis tokens");
  }

  // Most frequent first; ties resolved toward the lexicographically
  // smaller word (counts iterate in that order already).
  std::vector<std::pair<std::string, std::size_t>> words(counts.begin(),
                                                         counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });

  const Tensor& emb = model.token_embedding();
  const std::size_t d = cfg.d_model;

  Tensor mean_row(1, d);
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) mean_row(0, c) += emb(r, c);
  }
  for (std::size_t c = 0; c < d; ++c) {
    mean_row(0, c) /= static_cast<double>(emb.rows());
  }

  Tensor rows(prefix_length, d);
  for (std::size_t r = 0; r < prefix_length; ++r) {
    if (r < words.size()) {
      const std::vector<int> ids = vocab.encode(words[r].first);
      if (!ids.empty()) {
        for (int id : ids) {
          if (id < 0 || static_cast<std::size_t>(id) >= emb.rows()) {
            fail(ErrorCode::Internal,
                 "init_prefix: vocabulary larger than embedding table");
          }
          for (std::size_t c = 0; c < d; ++c) {
            rows(r, c) += emb(static_cast<std::size_t>(id), c);
          }
        }
        for (std::size_t c = 0; c < d; ++c) {
          rows(r, c) /= static_cast<double>(ids.size());
        }
        continue;
      }
    }
    for (std::size_t c = 0; c < d; ++c) rows(r, c) = mean_row(0, c);
  }

  PrefixBank bank(cfg.encoder_layers, cfg.decoder_layers, prefix_length, d);
  for (Parameter* p : bank.parameters()) {
    p->value = rows;
  }
  return bank;
}

DriftReport drift_report(const std::vector<CheckpointEntry>& before,
                         const std::vector<CheckpointEntry>& after) {
  if (before.size() != after.size()) {
    fail(ErrorCode::InvalidArgument,
         "drift_report: checkpoints have different parameter counts");
  }
  std::map<std::string, const CheckpointEntry*> after_by_id;
  for (const CheckpointEntry& e : after) after_by_id[e.id] = &e;

  std::map<BlockLabel, std::pair<double, std::size_t>> acc;
  for (const CheckpointEntry& b : before) {
    auto it = after_by_id.find(b.id);
    if (it == after_by_id.end()) {
      fail(ErrorCode::InvalidArgument,
           "drift_report: parameter '" + b.id + "' missing from second "
           "checkpoint");
    }
    const CheckpointEntry& a = *it->second;
    if (a.rows != b.rows || a.cols != b.cols || a.block != b.block) {
      fail(ErrorCode::InvalidArgument,
           "drift_report: registry mismatch for parameter '" + b.id + "'");
    }
    auto& [total, count] = acc[b.block];
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      total += std::abs(a.data[i] - b.data[i]);
    }
    count += b.data.size();
  }

  DriftReport report;
  for (const auto& [block, pair] : acc) {
    DriftReport::Row row;
    row.block = block;
    row.count = pair.second;
    row.mean_abs_change =
        pair.second == 0 ? 0.0 : pair.first / static_cast<double>(pair.second);
    report.rows.push_back(row);
  }
  // std::map ordering over BlockLabel already yields embeddings, encoder
  // blocks, decoder blocks, output, prefix.
  return report;
}

void write_drift_csv(const DriftReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "drift csv: cannot open for writing: " + path);
  }
  out << "block_label,mean_abs_change\n";
  out.precision(12);
  for (const DriftReport::Row& row : report.rows) {
    out << row.block.str() << "," << row.mean_abs_change << "\n";
  }
  if (!out.flush()) {
    fail(ErrorCode::Io, "drift csv: write failed: " + path);
  }
}

}  // namespace tunelab
