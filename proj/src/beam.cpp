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

#include "tunelab/beam.hpp"

#include <algorithm>
#include <limits>

#include "tunelab/error.hpp"

namespace tunelab {

double BeamHypothesis::score() const {
  const std::size_t emitted = tokens.size() + (finished ? 1 : 0);
  if (emitted == 0) return -std::numeric_limits<double>::infinity();
  return sum_logp / static_cast<double>(emitted);
}

namespace {

bool better(const BeamHypothesis& a, const BeamHypothesis& b) {
  const double sa = a.score();
  const double sb = b.score();
  if (sa != sb) return sa > sb;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(),
                                      b.tokens.begin(), b.tokens.end());
}

}  // namespace

std::vector<BeamHypothesis> beam_search(const StepScorer& scorer, int eos_id,
                                        std::size_t beam_width,
                                        std::size_t max_len) {
  if (!scorer) {
    fail(ErrorCode::InvalidArgument, "beam_search: missing scorer");
  }
  if (beam_width == 0) {
    fail(ErrorCode::InvalidArgument, "beam_search: beam_width must be >= 1");
  }
  if (max_len == 0) {
    fail(ErrorCode::InvalidArgument, "beam_search: max_len must be >= 1");
  }

  std::vector<BeamHypothesis> open{BeamHypothesis{}};
  std::vector<BeamHypothesis> done;

  for (std::size_t step = 0; step < max_len && !open.empty(); ++step) {
    std::vector<BeamHypothesis> candidates;
    for (const BeamHypothesis& hyp : open) {
      const std::vector<double> logp = scorer(hyp.tokens);
      if (logp.empty()) {
        fail(ErrorCode::InvalidArgument,
             "beam_search: scorer returned an empty distribution");
      }
      for (std::size_t tok = 0; tok < logp.size(); ++tok) {
        BeamHypothesis next = hyp;
        next.sum_logp += logp[tok];
        if (static_cast<int>(tok) == eos_id) {
          next.finished = true;
        } else {
          next.tokens.push_back(static_cast<int>(tok));
        }
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better);
    // Standard selection: only the top beam_width candidates survive the
    // step; finished ones retire to the done pool, the rest stay open.
    open.clear();
    std::size_t taken = 0;
    for (BeamHypothesis& cand : candidates) {
      if (taken == beam_width) break;
      ++taken;
      if (cand.finished) {
        done.push_back(std::move(cand));
      } else {
        open.push_back(std::move(cand));
      }
    }
  }

  // Anything still open when the length budget runs out is force-finished.
  for (BeamHypothesis& hyp : open) {
    done.push_back(std::move(hyp));
  }
  std::sort(done.begin(), done.end(), better);
  if (done.size() > beam_width) done.resize(beam_width);
  return done;
}

}  // namespace tunelab
