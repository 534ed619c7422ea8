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

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "tunelab/tensor.hpp"

namespace tunelab {

/// Fixed taxonomy of model blocks. Every parameter belongs to exactly one
/// block; freeze plans, drift reports and the compute model are all keyed by
/// these labels.
struct BlockLabel {
  enum class Kind {
    TokenEmbedding,
    PositionalEmbedding,
    EncoderBlock,
    DecoderBlock,
    OutputLayer,
    Prefix,
  };

  Kind kind = Kind::TokenEmbedding;
  int index = -1;  // block index for EncoderBlock / DecoderBlock, else -1

  static BlockLabel token_embedding() { return {Kind::TokenEmbedding, -1}; }
  static BlockLabel positional_embedding() {
    return {Kind::PositionalEmbedding, -1};
  }
  static BlockLabel encoder_block(int i) { return {Kind::EncoderBlock, i}; }
  static BlockLabel decoder_block(int i) { return {Kind::DecoderBlock, i}; }
  static BlockLabel output_layer() { return {Kind::OutputLayer, -1}; }
  static BlockLabel prefix() { return {Kind::Prefix, -1}; }

  /// Canonical text form, e.g. "token-embedding", "encoder-block[3]".
  std::string str() const;
  static BlockLabel parse(const std::string& text);

  auto operator<=>(const BlockLabel&) const = default;
};

/// A named, labelled trainable (or frozen) tensor. Frozen parameters never
/// allocate gradient storage.
struct Parameter {
  std::string id;
  BlockLabel block;
  Tensor value;
  bool frozen = false;
  std::optional<Tensor> grad;  // empty until backward touches it

  Parameter() = default;
  Parameter(std::string id_, BlockLabel block_, Tensor value_)
      : id(std::move(id_)), block(block_), value(std::move(value_)) {}

  /// Adds g into the stored gradient, allocating zeros on first use.
  /// It is an error to call this on a frozen parameter.
  void accumulate_grad(const Tensor& g);
  void clear_grad() { grad.reset(); }
};

/// One row of a model's parameter census.
struct RegistryEntry {
  std::string id;
  BlockLabel block;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t count = 0;
  bool frozen = false;
};

using ParameterRegistry = std::vector<RegistryEntry>;

}  // namespace tunelab
