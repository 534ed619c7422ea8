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

#include <cstddef>
#include <functional>
#include <vector>

namespace tunelab {

/// One beam search result. `tokens` holds the emitted sequence without the
/// end-of-sequence marker; `finished` records whether the hypothesis ended
/// by emitting it (hypotheses still open at max_len are force-finished).
struct BeamHypothesis {
  std::vector<int> tokens;
  double sum_logp = 0.0;
  bool finished = false;

  /// Length-normalized score: total log probability divided by the number
  /// of emitted tokens (the end marker counts as emitted).
  double score() const;
};

/// Produces the distribution over the next token given the tokens emitted
/// so far (empty prefix for the first step). Must return one log
/// probability per vocabulary entry.
using StepScorer =
    std::function<std::vector<double>(const std::vector<int>& prefix)>;

/// Deterministic beam search over an arbitrary scorer. Expansion keeps the
/// best `beam_width` open hypotheses per step; candidates that emit eos_id
/// move to the finished pool. Ties in score break toward the smaller token
/// id sequence (lexicographic), so equal-probability vocabularies decode
/// reproducibly. Returns up to beam_width hypotheses, best first. A width
/// of one is exactly greedy decoding.
std::vector<BeamHypothesis> beam_search(const StepScorer& scorer, int eos_id,
                                        std::size_t beam_width,
                                        std::size_t max_len);

}  // namespace tunelab
