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

#include "tunelab/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "tunelab/error.hpp"

namespace tunelab {

double chi_square_survival(double x, std::size_t df) {
  if (df == 0) {
    fail(ErrorCode::InvalidArgument,
         "chi_square_survival: zero degrees of freedom");
  }
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

KruskalWallisResult kruskal_wallis(
    const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) {
    fail(ErrorCode::InvalidArgument, "kruskal_wallis: need at least 2 groups");
  }
  std::size_t total = 0;
  for (const std::vector<double>& g : groups) {
    if (g.empty()) {
      fail(ErrorCode::InvalidArgument, "kruskal_wallis: empty group");
    }
    for (double v : g) {
      if (!std::isfinite(v)) {
        fail(ErrorCode::Numeric, "kruskal_wallis: non-finite observation");
      }
    }
    total += g.size();
  }

  // Pool, sort, and assign mid-ranks to ties.
  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> pooled;
  pooled.reserve(total);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (double v : groups[gi]) pooled.push_back({v, gi});
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const Obs& a, const Obs& b) { return a.value < b.value; });

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;  // sum of t^3 - t over tie runs
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    const double mid_rank =
        0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      rank_sum[pooled[k].group] += mid_rank;
    }
    i = j;
  }

  KruskalWallisResult result;
  result.total_n = total;
  result.group_mean_ranks.resize(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    result.group_mean_ranks[gi] =
        rank_sum[gi] / static_cast<double>(groups[gi].size());
  }

  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double r = rank_sum[gi];
    h += r * r / static_cast<double>(groups[gi].size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) {
    // Every observation identical: no evidence of any difference.
    result.h = 0.0;
    result.p_value = 1.0;
    return result;
  }
  h /= correction;
  // Guard against tiny negative values from cancellation.
  if (h < 0.0 && h > -1e-9) h = 0.0;

  result.h = h;
  result.p_value = chi_square_survival(h, groups.size() - 1);
  return result;
}

}  // namespace tunelab
