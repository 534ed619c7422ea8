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

#include "tunelab/bpe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

/// Splits text into maximal runs of whitespace / non-whitespace bytes.
std::vector<std::string_view> chunk_runs(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t begin = 0;
  while (begin < text.size()) {
    const bool space = is_space_byte(text[begin]);
    std::size_t end = begin + 1;
    while (end < text.size() && is_space_byte(text[end]) == space) ++end;
    chunks.push_back(text.substr(begin, end - begin));
    begin = end;
  }
  return chunks;
}

/// Replaces every non-overlapping (left, right) adjacency with merged,
/// scanning left to right.
void apply_merge(std::vector<int>& ids, int left, int right, int merged) {
  std::size_t write = 0;
  std::size_t read = 0;
  while (read < ids.size()) {
    if (read + 1 < ids.size() && ids[read] == left && ids[read + 1] == right) {
      ids[write++] = merged;
      read += 2;
    } else {
      ids[write++] = ids[read++];
    }
  }
  ids.resize(write);
}

}  // namespace

SubwordVocabulary::SubwordVocabulary() {
  token_bytes_.resize(kByteBase + 256);
  for (int b = 0; b < 256; ++b) {
    token_bytes_[kByteBase + b] = std::string(1, static_cast<char>(b));
  }
}

void SubwordVocabulary::add_merge(int left, int right) {
  const int max_id = static_cast<int>(token_bytes_.size());
  if (left < kByteBase || left >= max_id || right < kByteBase ||
      right >= max_id) {
    fail(ErrorCode::InvalidArgument, "bpe: merge references unknown token");
  }
  merges_.emplace_back(left, right);
  token_bytes_.push_back(token_bytes_[left] + token_bytes_[right]);
}

SubwordVocabulary SubwordVocabulary::train(
    const std::vector<std::string>& texts, std::size_t vocab_size) {
  if (vocab_size < kSpecialCount + 256) {
    fail(ErrorCode::InvalidArgument,
         "bpe: vocab_size must be at least " +
             std::to_string(kSpecialCount + 256));
  }
  SubwordVocabulary vocab;

  // Distinct chunks with occurrence counts; merges operate on these.
  std::map<std::string, std::size_t> chunk_freq;
  for (const std::string& text : texts) {
    for (std::string_view chunk : chunk_runs(text)) {
      ++chunk_freq[std::string(chunk)];
    }
  }
  struct Chunk {
    std::vector<int> ids;
    std::size_t freq;
  };
  std::vector<Chunk> chunks;
  chunks.reserve(chunk_freq.size());
  for (const auto& [text, freq] : chunk_freq) {
    Chunk c;
    c.freq = freq;
    c.ids.reserve(text.size());
    for (char ch : text) {
      c.ids.push_back(kByteBase + static_cast<unsigned char>(ch));
    }
    chunks.push_back(std::move(c));
  }

  while (vocab.size() < vocab_size) {
    // Count adjacent pairs, weighting each chunk by its frequency.
    std::map<std::pair<int, int>, std::size_t> pair_count;
    for (const Chunk& c : chunks) {
      for (std::size_t i = 0; i + 1 < c.ids.size(); ++i) {
        pair_count[{c.ids[i], c.ids[i + 1]}] += c.freq;
      }
    }
    if (pair_count.empty()) break;

    std::pair<int, int> best{-1, -1};
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_count) {
      if (count > best_count) {
        best = pair;
        best_count = count;
        continue;
      }
      if (count == best_count) {
        const std::string& bl = vocab.token_bytes_[best.first];
        const std::string& br = vocab.token_bytes_[best.second];
        const std::string& cl = vocab.token_bytes_[pair.first];
        const std::string& cr = vocab.token_bytes_[pair.second];
        if (std::tie(cl, cr) < std::tie(bl, br)) best = pair;
      }
    }
    if (best_count < 2) break;  // nothing left worth merging

    const int merged = static_cast<int>(vocab.size());
    vocab.add_merge(best.first, best.second);
    for (Chunk& c : chunks) {
      apply_merge(c.ids, best.first, best.second, merged);
    }
  }
  return vocab;
}

void SubwordVocabulary::apply_best_merges(std::vector<int>& ids) const {
  if (ids.size() < 2) return;
  std::map<std::pair<int, int>, int> rank;
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    rank[merges_[r]] = static_cast<int>(r);
  }
  while (true) {
    int best_rank = -1;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      auto it = rank.find({ids[i], ids[i + 1]});
      if (it != rank.end() && (best_rank < 0 || it->second < best_rank)) {
        best_rank = it->second;
      }
    }
    if (best_rank < 0) break;
    const auto [left, right] = merges_[static_cast<std::size_t>(best_rank)];
    apply_merge(ids, left, right,
                kByteBase + 256 + best_rank);
    if (ids.size() < 2) break;
  }
}

std::vector<int> SubwordVocabulary::encode(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (std::string_view chunk : chunk_runs(text)) {
    std::vector<int> ids;
    ids.reserve(chunk.size());
    for (char ch : chunk) {
      ids.push_back(kByteBase + static_cast<unsigned char>(ch));
    }
    apply_best_merges(ids);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::string SubwordVocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= token_bytes_.size()) {
      fail(ErrorCode::InvalidArgument,
           "bpe: id " + std::to_string(id) + " outside vocabulary");
    }
    out += token_bytes_[static_cast<std::size_t>(id)];
  }
  return out;
}

const std::string& SubwordVocabulary::token_bytes(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= token_bytes_.size()) {
    fail(ErrorCode::InvalidArgument,
         "bpe: id " + std::to_string(id) + " outside vocabulary");
  }
  return token_bytes_[static_cast<std::size_t>(id)];
}

void SubwordVocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "bpe: cannot open for writing: " + path);
  }
  out << "tunelab-bpe v1 vocab=" << size() << "\n";
  for (const auto& [left, right] : merges_) {
    out << "merge " << left << " " << right << "\n";
  }
  if (!out.flush()) {
    fail(ErrorCode::Io, "bpe: write failed: " + path);
  }
}

SubwordVocabulary SubwordVocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::Io, "bpe: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line.rfind("tunelab-bpe v1 ", 0) != 0) {
    fail(ErrorCode::Io, "bpe: bad header in " + path);
  }
  SubwordVocabulary vocab;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    int left = -1;
    int right = -1;
    fields >> tag >> left >> right;
    if (tag != "merge" || fields.fail()) {
      fail(ErrorCode::Io, "bpe: bad merge line in " + path + ": " + line);
    }
    vocab.add_merge(left, right);
  }
  return vocab;
}

}  // namespace tunelab
