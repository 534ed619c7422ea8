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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tunelab {

/// Byte-level byte-pair-encoding vocabulary for the model-side tokenizer.
///
/// Ids 0..3 are the special markers (pad, bos, eos, unk); ids 4..259 are the
/// 256 raw byte tokens, so every input is representable and
/// decode(encode(text)) == text for arbitrary byte strings. Merges are
/// learned by pair frequency, most frequent first, ties broken by the
/// lexicographically smaller (left bytes, right bytes) pair. Merges never
/// cross the boundary between whitespace and non-whitespace runs.
class SubwordVocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kBosId = 1;
  static constexpr int kEosId = 2;
  static constexpr int kUnkId = 3;
  static constexpr int kSpecialCount = 4;
  static constexpr int kByteBase = kSpecialCount;  // first raw byte id

  /// Learns merges from the given texts until the vocabulary reaches
  /// vocab_size tokens (or no pair occurs twice). vocab_size must be at
  /// least kSpecialCount + 256.
  static SubwordVocabulary train(const std::vector<std::string>& texts,
                                 std::size_t vocab_size);

  std::vector<int> encode(std::string_view text) const;
  std::string decode(const std::vector<int>& ids) const;

  std::size_t size() const { return token_bytes_.size(); }
  std::size_t merge_count() const { return merges_.size(); }

  /// Raw bytes of a token (empty for the special markers).
  const std::string& token_bytes(int id) const;

  void save(const std::string& path) const;
  static SubwordVocabulary load(const std::string& path);

 private:
  SubwordVocabulary();
  void add_merge(int left, int right);
  void apply_best_merges(std::vector<int>& ids) const;

  std::vector<std::pair<int, int>> merges_;   // in rank order
  std::vector<std::string> token_bytes_;      // indexed by id
};

}  // namespace tunelab
