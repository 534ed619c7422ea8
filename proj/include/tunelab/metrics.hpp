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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tunelab {

/// Splits code-like text into comparison tokens: maximal identifier /
/// number runs ([A-Za-z0-9_$]) plus every other visible character as its
/// own token. Whitespace only separates.
std::vector<std::string> code_tokens(std::string_view text);

/// Sentence-level BLEU with n-gram orders one through four. Orders two and
/// higher use add-one smoothing; unigram precision is raw, so a candidate
/// with no unigram overlap scores zero. A brevity penalty discounts short
/// candidates. The reference must not be empty.
double bleu4(const std::string& candidate, const std::string& reference);

/// Corpus-level BLEU over parallel candidate/reference lists: n-gram
/// statistics are pooled before precisions are formed, with the same
/// smoothing rules as the sentence variant.
double corpus_bleu4(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& references);

/// Perplexity pooled over every token: the exponential of the mean
/// per-token negative log likelihood.
double pooled_perplexity(const std::vector<double>& token_nlls);

/// Collapses whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view text);

/// Equality up to whitespace normalization.
bool exact_match(const std::string& a, const std::string& b);

/// Rewrites lexable code into an abstracted form: identifiers become
/// METHOD (called), TYPE (after `new`, before another identifier, or
/// capitalized) or VAR; literals become STRING_LIT, CHAR_LIT, INT_LIT,
/// FLOAT_LIT or BOOL_LIT; keywords and punctuation stay as they are.
/// Returns nothing when the text cannot be lexed.
std::optional<std::string> abstract_code(std::string_view text);

/// True when the texts match exactly or both lex and their abstracted
/// forms agree.
bool abstract_match(const std::string& candidate, const std::string& reference);

/// One ranked generation for a focal input, as exchanged through
/// prediction files.
struct Prediction {
  std::string focal_id;
  int rank = 0;  // 1 is the best hypothesis
  std::string text;
  double score = 0.0;
};

/// Fraction of references whose top-k predictions contain a match. The
/// matcher is exact_match or abstract_match. References with no
/// predictions count as misses.
double topk_match_rate(const std::vector<Prediction>& predictions,
                       const std::map<std::string, std::string>& references,
                       std::size_t k, bool use_abstract);

/// Identifiers of one text in VAR or METHOD position (raw spelling, in
/// order). Empty when the text does not lex.
std::vector<std::string> identifier_tokens(std::string_view text);

/// Cosine similarity of tf-idf identifier profiles pooled over each side's
/// texts (smoothed idf, raw term frequency, l2 normalization). Returns zero
/// with a warning if either side has no identifiers.
double style_similarity(const std::vector<std::string>& side_a,
                        const std::vector<std::string>& side_b);

}  // namespace tunelab
