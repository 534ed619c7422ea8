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

#include "tunelab/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <set>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

bool is_word_char(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || c == '$';
}

// ---- BLEU ------------------------------------------------------------------

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngram_counts(const std::vector<std::string>& tokens,
                         std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + n);
    ++counts[std::move(gram)];
  }
  return counts;
}

struct NgramStats {
  std::size_t matched = 0;
  std::size_t total = 0;
};

NgramStats ngram_overlap(const std::vector<std::string>& cand,
                         const std::vector<std::string>& ref, std::size_t n) {
  NgramStats stats;
  stats.total = cand.size() >= n ? cand.size() - n + 1 : 0;
  if (stats.total == 0) return stats;
  const NgramCounts ref_counts = ngram_counts(ref, n);
  for (const auto& [gram, count] : ngram_counts(cand, n)) {
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) {
      stats.matched += std::min(count, it->second);
    }
  }
  return stats;
}

double bleu_from_stats(const NgramStats stats[4], std::size_t cand_len,
                       std::size_t ref_len) {
  if (cand_len == 0) return 0.0;
  // Raw unigram precision; a candidate sharing no tokens with the
  // reference scores zero outright.
  if (stats[0].matched == 0) return 0.0;

  double log_sum =
      std::log(static_cast<double>(stats[0].matched) /
               static_cast<double>(stats[0].total));
  for (std::size_t n = 1; n < 4; ++n) {
    const double smoothed =
        (static_cast<double>(stats[n].matched) + 1.0) /
        (static_cast<double>(stats[n].total) + 1.0);
    log_sum += std::log(smoothed);
  }
  const double geo_mean = std::exp(log_sum / 4.0);

  double brevity = 1.0;
  if (cand_len < ref_len) {
    brevity = std::exp(1.0 - static_cast<double>(ref_len) /
                                 static_cast<double>(cand_len));
  }
  return brevity * geo_mean;
}

// ---- abstraction lexer -----------------------------------------------------

enum class LexKind {
  Keyword,
  Identifier,
  IntLit,
  FloatLit,
  StringLit,
  CharLit,
  BoolLit,
  NullLit,
  Punct,
};

struct LexToken {
  LexKind kind;
  std::string text;
};

const std::set<std::string>& java_keywords_for_lexer() {
  static const std::set<std::string> kKeywords = {
      "abstract", "assert",       "boolean",  "break",      "byte",
      "case",     "catch",        "char",     "class",      "const",
      "continue", "default",      "do",       "double",     "else",
      "enum",     "extends",      "final",    "finally",    "float",
      "for",      "goto",         "if",       "implements", "import",
      "instanceof", "int",        "interface", "long",      "native",
      "new",      "package",      "private",  "protected",  "public",
      "return",   "short",        "static",   "strictfp",   "super",
      "switch",   "synchronized", "this",     "throw",      "throws",
      "transient", "try",         "void",     "volatile",   "while",
      "_",
  };
  return kKeywords;
}

// Longest first so greedy matching picks the full operator.
const std::vector<std::string>& multi_char_operators() {
  static const std::vector<std::string> kOps = {
      ">>>=", "<<=", ">>=", ">>>", "...", "->",  "::",  "==", "!=",
      "<=",   ">=",  "&&",  "||",  "++",  "--",  "+=",  "-=", "*=",
      "/=",   "%=",  "&=",  "|=",  "^=",  "<<",  ">>",
  };
  return kOps;
}

bool is_single_punct(char c) {
  static const std::string kPunct = "{}()[];,.=+-*/%!<>&|^~?:@";
  return kPunct.find(c) != std::string::npos;
}

/// Lexes Java-like source into tokens; empty optional when a character
/// sequence is not recognizable (stray bytes, unterminated literals).
std::optional<std::vector<LexToken>> lex_code(std::string_view text) {
  std::vector<LexToken> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      ++i;
      continue;
    }
    if (u >= 0x80) return std::nullopt;

    if (std::isalpha(u) || c == '_' || c == '$') {
      std::size_t j = i + 1;
      while (j < n && is_word_char(text[j])) ++j;
      std::string word(text.substr(i, j - i));
      i = j;
      if (word == "true" || word == "false") {
        tokens.push_back({LexKind::BoolLit, std::move(word)});
      } else if (word == "null") {
        tokens.push_back({LexKind::NullLit, std::move(word)});
      } else if (java_keywords_for_lexer().count(word) != 0) {
        tokens.push_back({LexKind::Keyword, std::move(word)});
      } else {
        tokens.push_back({LexKind::Identifier, std::move(word)});
      }
      continue;
    }

    const bool dot_number =
        c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (std::isdigit(u) || dot_number) {
      std::size_t j = i;
      bool is_float = false;
      if (text[j] == '0' && j + 1 < n && (text[j + 1] == 'x' || text[j + 1] == 'X')) {
        j += 2;
        while (j < n && (std::isxdigit(static_cast<unsigned char>(text[j])) ||
                         text[j] == '_')) {
          ++j;
        }
      } else if (text[j] == '0' && j + 1 < n &&
                 (text[j + 1] == 'b' || text[j + 1] == 'B')) {
        j += 2;
        while (j < n && (text[j] == '0' || text[j] == '1' || text[j] == '_')) ++j;
      } else {
        while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                         text[j] == '_')) {
          ++j;
        }
        if (j < n && text[j] == '.' &&
            (j + 1 >= n ||
             std::isdigit(static_cast<unsigned char>(text[j + 1])) ||
             !is_word_char(text[j + 1]))) {
          // A trailing dot that starts a float, not a member access.
          if (j + 1 < n && std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
            is_float = true;
            ++j;
            while (j < n &&
                   (std::isdigit(static_cast<unsigned char>(text[j])) ||
                    text[j] == '_')) {
              ++j;
            }
          }
        }
        if (j < n && (text[j] == 'e' || text[j] == 'E') && j + 1 < n &&
            (std::isdigit(static_cast<unsigned char>(text[j + 1])) ||
             ((text[j + 1] == '+' || text[j + 1] == '-') && j + 2 < n &&
              std::isdigit(static_cast<unsigned char>(text[j + 2]))))) {
          is_float = true;
          j += text[j + 1] == '+' || text[j + 1] == '-' ? 2 : 1;
          while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        }
      }
      if (j < n && (text[j] == 'f' || text[j] == 'F' || text[j] == 'd' ||
                    text[j] == 'D')) {
        is_float = true;
        ++j;
      } else if (j < n && (text[j] == 'l' || text[j] == 'L')) {
        ++j;
      }
      tokens.push_back({is_float ? LexKind::FloatLit : LexKind::IntLit,
                        std::string(text.substr(i, j - i))});
      i = j;
      continue;
    }

    if (c == '"' || c == '\'') {
      const char quote = c;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < n) {
        if (text[j] == '\\' && j + 1 < n) {
          j += 2;
          continue;
        }
        if (text[j] == quote) {
          closed = true;
          ++j;
          break;
        }
        ++j;
      }
      if (!closed) return std::nullopt;
      tokens.push_back({quote == '"' ? LexKind::StringLit : LexKind::CharLit,
                        std::string(text.substr(i, j - i))});
      i = j;
      continue;
    }

    bool matched_op = false;
    for (const std::string& op : multi_char_operators()) {
      if (text.substr(i, op.size()) == op) {
        tokens.push_back({LexKind::Punct, op});
        i += op.size();
        matched_op = true;
        break;
      }
    }
    if (matched_op) continue;

    if (is_single_punct(c)) {
      tokens.push_back({LexKind::Punct, std::string(1, c)});
      ++i;
      continue;
    }
    return std::nullopt;  // unrecognized character
  }
  return tokens;
}

std::string classify_identifier(const std::vector<LexToken>& tokens,
                                std::size_t idx) {
  const bool next_is_call =
      idx + 1 < tokens.size() && tokens[idx + 1].text == "(";
  if (next_is_call) return "METHOD";

  const bool after_new = idx > 0 && tokens[idx - 1].kind == LexKind::Keyword &&
                         tokens[idx - 1].text == "new";
  const bool before_identifier =
      idx + 1 < tokens.size() && tokens[idx + 1].kind == LexKind::Identifier;
  const bool capitalized =
      !tokens[idx].text.empty() &&
      std::isupper(static_cast<unsigned char>(tokens[idx].text[0])) != 0;
  if (after_new || before_identifier || capitalized) return "TYPE";
  return "VAR";
}

}  // namespace

std::vector<std::string> code_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char u = static_cast<unsigned char>(text[i]);
    if (std::isspace(u)) {
      ++i;
      continue;
    }
    if (is_word_char(text[i])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_word_char(text[j])) ++j;
      tokens.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      tokens.emplace_back(text.substr(i, 1));
      ++i;
    }
  }
  return tokens;
}

double bleu4(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> ref = code_tokens(reference);
  if (ref.empty()) {
    fail(ErrorCode::InvalidArgument, "bleu4: empty reference");
  }
  const std::vector<std::string> cand = code_tokens(candidate);
  NgramStats stats[4];
  for (std::size_t n = 1; n <= 4; ++n) {
    stats[n - 1] = ngram_overlap(cand, ref, n);
  }
  return bleu_from_stats(stats, cand.size(), ref.size());
}

double corpus_bleu4(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& references) {
  if (candidates.size() != references.size()) {
    fail(ErrorCode::InvalidArgument,
         "corpus_bleu4: candidate and reference counts differ");
  }
  if (candidates.empty()) {
    fail(ErrorCode::InvalidArgument, "corpus_bleu4: empty corpus");
  }
  NgramStats pooled[4];
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::vector<std::string> ref = code_tokens(references[i]);
    if (ref.empty()) {
      fail(ErrorCode::InvalidArgument, "corpus_bleu4: empty reference");
    }
    const std::vector<std::string> cand = code_tokens(candidates[i]);
    cand_len += cand.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramStats s = ngram_overlap(cand, ref, n);
      pooled[n - 1].matched += s.matched;
      pooled[n - 1].total += s.total;
    }
  }
  return bleu_from_stats(pooled, cand_len, ref_len);
}

double pooled_perplexity(const std::vector<double>& token_nlls) {
  if (token_nlls.empty()) {
    fail(ErrorCode::InvalidArgument, "perplexity: no tokens");
  }
  double mean = 0.0;
  for (double nll : token_nlls) mean += nll;
  mean /= static_cast<double>(token_nlls.size());
  return std::exp(mean);
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

bool exact_match(const std::string& a, const std::string& b) {
  return normalize_whitespace(a) == normalize_whitespace(b);
}

std::optional<std::string> abstract_code(std::string_view text) {
  std::optional<std::vector<LexToken>> tokens = lex_code(text);
  if (!tokens) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    const LexToken& tok = (*tokens)[i];
    std::string piece;
    switch (tok.kind) {
      case LexKind::Identifier:
        piece = classify_identifier(*tokens, i);
        break;
      case LexKind::IntLit:
        piece = "INT_LIT";
        break;
      case LexKind::FloatLit:
        piece = "FLOAT_LIT";
        break;
      case LexKind::StringLit:
        piece = "STRING_LIT";
        break;
      case LexKind::CharLit:
        piece = "CHAR_LIT";
        break;
      case LexKind::BoolLit:
        piece = "BOOL_LIT";
        break;
      case LexKind::NullLit:
      case LexKind::Keyword:
      case LexKind::Punct:
        piece = tok.text;
        break;
    }
    if (!out.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

bool abstract_match(const std::string& candidate,
                    const std::string& reference) {
  if (exact_match(candidate, reference)) return true;
  const std::optional<std::string> c = abstract_code(candidate);
  const std::optional<std::string> r = abstract_code(reference);
  return c.has_value() && r.has_value() && *c == *r;
}

double topk_match_rate(const std::vector<Prediction>& predictions,
                       const std::map<std::string, std::string>& references,
                       std::size_t k, bool use_abstract) {
  if (references.empty()) {
    fail(ErrorCode::InvalidArgument, "topk_match_rate: no references");
  }
  if (k == 0) {
    fail(ErrorCode::InvalidArgument, "topk_match_rate: k must be positive");
  }
  std::map<std::string, std::vector<const Prediction*>> by_focal;
  for (const Prediction& p : predictions) {
    if (references.count(p.focal_id) == 0) {
      fail(ErrorCode::InvalidArgument,
           "topk_match_rate: prediction for unknown focal id '" + p.focal_id +
               "'");
    }
    by_focal[p.focal_id].push_back(&p);
  }
  std::size_t hits = 0;
  for (const auto& [focal_id, reference] : references) {
    auto it = by_focal.find(focal_id);
    if (it == by_focal.end()) continue;
    std::vector<const Prediction*> ranked = it->second;
    std::sort(ranked.begin(), ranked.end(),
              [](const Prediction* a, const Prediction* b) {
                return a->rank < b->rank;
              });
    const std::size_t limit = std::min(k, ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
      const bool match = use_abstract
                             ? abstract_match(ranked[i]->text, reference)
                             : exact_match(ranked[i]->text, reference);
      if (match) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(references.size());
}

std::vector<std::string> identifier_tokens(std::string_view text) {
  std::optional<std::vector<LexToken>> tokens = lex_code(text);
  std::vector<std::string> out;
  if (!tokens) return out;
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    if ((*tokens)[i].kind != LexKind::Identifier) continue;
    const std::string role = classify_identifier(*tokens, i);
    if (role == "VAR" || role == "METHOD") out.push_back((*tokens)[i].text);
  }
  return out;
}

double style_similarity(const std::vector<std::string>& side_a,
                        const std::vector<std::string>& side_b) {
  std::map<std::string, double> tf_a;
  std::map<std::string, double> tf_b;
  for (const std::string& text : side_a) {
    for (std::string& id : identifier_tokens(text)) tf_a[std::move(id)] += 1.0;
  }
  for (const std::string& text : side_b) {
    for (std::string& id : identifier_tokens(text)) tf_b[std::move(id)] += 1.0;
  }
  if (tf_a.empty() || tf_b.empty()) {
    std::cerr << "tunelab: warning: style similarity has no identifiers on "
              << (tf_a.empty() ? "the first" : "the second")
              << " side; reporting 0\n";
    return 0.0;
  }

  // Two-document tf-idf with smoothed idf: ln((1 + N) / (1 + df)) + 1.
  auto idf = [&](const std::string& term) {
    const int df = (tf_a.count(term) != 0 ? 1 : 0) +
                   (tf_b.count(term) != 0 ? 1 : 0);
    return std::log(3.0 / (1.0 + static_cast<double>(df))) + 1.0;
  };

  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (const auto& [term, tf] : tf_a) {
    const double w = tf * idf(term);
    norm_a += w * w;
    auto it = tf_b.find(term);
    if (it != tf_b.end()) dot += w * (it->second * idf(term));
  }
  for (const auto& [term, tf] : tf_b) {
    const double w = tf * idf(term);
    norm_b += w * w;
  }
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

}  // namespace tunelab
