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
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tunelab {

/// Bumped whenever the analysis tokenizer's splitting rules or stoplist
/// change; recorded in every emitted artifact so token statistics stay
/// comparable.
inline constexpr const char* kAnalysisTokenizerVersion = "1";

/// One project's source corpus: an id plus its file texts in a stable
/// order. Token statistics are derived on demand so they always reflect the
/// current tokenizer version.
struct ProjectCorpus {
  std::string id;
  std::vector<std::string> files;       // raw file texts
  std::vector<std::string> file_names;  // optional, parallel to files
};

/// Removes line comments, block comments and (with them) comment-borne
/// license headers, leaving code — including string and character literals
/// that merely contain comment markers — untouched. Unterminated block
/// comments are stripped to the end of the text.
std::string strip_noise(std::string_view source);

/// Reserved-word stoplist used by the analysis tokenizer (Java SE 8).
const std::set<std::string>& java_keyword_stoplist();

/// Lowercase alphanumeric word tokens of noise-stripped text, in order of
/// appearance: maximal [a-z0-9] runs after lowercasing, keeping only runs
/// that contain a letter and are not stoplisted. camelCase is not split.
std::vector<std::string> analysis_tokens(std::string_view stripped_text);

/// Token frequency table across all files of a project (noise stripped
/// first).
std::map<std::string, std::size_t> analysis_token_counts(
    const ProjectCorpus& project);

/// Unique analysis tokens of a project.
std::set<std::string> analysis_token_set(const ProjectCorpus& project);

/// Pairwise shared-token ratio matrix. Projects are ordered by ascending
/// unique-token count; ratios[i][j] = |T_i intersect T_j| / |T_i|, so the
/// matrix is not symmetric and its diagonal is 1.
struct SharedTokenMatrix {
  std::vector<std::string> project_ids;
  std::vector<std::size_t> set_sizes;
  std::vector<std::vector<double>> ratios;

  double median_off_diagonal() const;
};

SharedTokenMatrix shared_token_matrix(
    const std::vector<ProjectCorpus>& projects);

std::string matrix_to_csv(const SharedTokenMatrix& matrix);
void write_matrix_csv(const SharedTokenMatrix& matrix,
                      const std::string& path);

/// Loads corpora either from a directory (each subdirectory is one project,
/// its regular files read in sorted order) or from a JSONL file with
/// records {"project_id", "path", "text"}.
std::vector<ProjectCorpus> load_corpora(const std::string& path);

}  // namespace tunelab
