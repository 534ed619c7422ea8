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
#include <vector>

namespace tunelab {

struct KruskalWallisResult {
  double h = 0.0;        // tie-corrected test statistic
  double p_value = 1.0;  // chi-square survival with k - 1 degrees of freedom
  std::size_t total_n = 0;
  std::vector<double> group_mean_ranks;
};

/// Kruskal-Wallis rank test across two or more groups. Ties receive
/// mid-ranks and the statistic is divided by the standard tie correction.
/// When every observation is identical the statistic is zero and the
/// p-value one.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_survival(double x, std::size_t df);

}  // namespace tunelab
