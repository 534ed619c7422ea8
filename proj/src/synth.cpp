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

// Synthetic multi-project corpus generation plus the JSONL exchange formats
// for datasets and predictions.

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tunelab/error.hpp"
#include "tunelab/experiment.hpp"

namespace tunelab {

namespace {

using nlohmann::json;

// Vocabulary every project draws its non-private identifiers from. Entries
// deliberately avoid the consonant-vowel shape of generated private words.
const char* kSharedWordPool[] = {
    "value", "result", "input",  "count", "item",
    "total", "index",  "buffer", "limit", "state",
};
constexpr std::size_t kSharedPoolSize =
    sizeof(kSharedWordPool) / sizeof(kSharedWordPool[0]);

// Random pronounceable word of three consonant-vowel syllables, e.g.
// "bodaku". Lowercase letters only so each word is a single analysis token.
std::string make_word(std::mt19937_64& rng) {
  static const char* consonants = "bdgklmnprstvz";
  static const char* vowels = "aeiou";
  std::uniform_int_distribution<int> pick_c(0, 12);
  std::uniform_int_distribution<int> pick_v(0, 4);
  std::string word;
  for (int s = 0; s < 3; ++s) {
    word.push_back(consonants[pick_c(rng)]);
    word.push_back(vowels[pick_v(rng)]);
  }
  return word;
}

std::string fresh_word(std::mt19937_64& rng, std::set<std::string>& used) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string word = make_word(rng);
    if (used.insert(word).second) return word;
  }
  fail(ErrorCode::Internal, "synthetic generator ran out of fresh words");
}

std::string require_string_field(const json& record, const char* key,
                                 const std::string& where) {
  if (!record.contains(key) || !record[key].is_string()) {
    fail(ErrorCode::Io, where + ": missing string field \"" + key + "\"");
  }
  return record[key].get<std::string>();
}

json parse_line(const std::string& line, const std::string& where) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, where + ": " + e.what());
  }
}

}  // namespace

std::vector<std::vector<FocalExample>> generate_synthetic_projects(
    const SyntheticOptions& options) {
  if (options.projects < 2) {
    fail(ErrorCode::InvalidArgument,
         "synthetic corpus needs at least two projects");
  }
  if (options.examples_per_project == 0) {
    fail(ErrorCode::InvalidArgument,
         "synthetic corpus needs at least one example per project");
  }
  if (options.shared_words == 0 || options.shared_words > kSharedPoolSize) {
    fail(ErrorCode::InvalidArgument,
         "shared_words must be between 1 and " +
             std::to_string(kSharedPoolSize));
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> digit(2, 9);

  std::set<std::string> used;
  for (std::size_t s = 0; s < kSharedPoolSize; ++s) {
    used.insert(kSharedWordPool[s]);
  }

  std::vector<std::vector<FocalExample>> projects;
  projects.reserve(options.projects);
  for (std::size_t p = 0; p < options.projects; ++p) {
    const std::string project_id = "proj-" + std::to_string(p);
    // Three designated words make up a project's naming style: the test-name
    // prefix, the name of the captured local, and the assertion helper. They
    // recur in every test of the project and nowhere else, so they are what
    // personalization can learn and a pooled model cannot know.
    const std::string prefix = fresh_word(rng, used);
    const std::string slot = fresh_word(rng, used);
    const std::string checker = fresh_word(rng, used);

    std::vector<FocalExample> examples;
    examples.reserve(options.examples_per_project);
    for (std::size_t e = 0; e < options.examples_per_project; ++e) {
      const std::string method = fresh_word(rng, used);
      const std::string local = fresh_word(rng, used);
      const std::string shared = kSharedWordPool[e % options.shared_words];
      const int c1 = digit(rng);
      const int c2 = digit(rng);

      // The reference test is a fixed rewrite of the focal method: it reuses
      // the focal's local in the test name, the two literals as argument and
      // expectation, and wraps them in the project's three style words. A
      // model can therefore produce it from the focal text alone once it
      // knows the project style.
      std::ostringstream focal;
      focal << "int " << method << "(int " << shared << ") { int " << local
            << " = " << shared << " * " << c1 << " + " << c2 << "; return "
            << local << "; }";
      std::ostringstream test;
      test << "void " << prefix << "_" << local << "() { int " << slot
           << " = " << method << "(" << c1 << "); " << checker << "(" << c2
           << ", " << slot << "); }";

      examples.push_back({project_id, focal.str(), test.str()});
    }
    projects.push_back(std::move(examples));
  }
  return projects;
}

std::vector<FocalExample> load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open dataset file: " + path);
  std::vector<FocalExample> examples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json record = parse_line(line, where);
    FocalExample example;
    example.project_id = require_string_field(record, "project_id", where);
    example.focal_method = require_string_field(record, "focal_method", where);
    example.test_case = require_string_field(record, "test_case", where);
    examples.push_back(std::move(example));
  }
  return examples;
}

void write_dataset_jsonl(const std::vector<FocalExample>& examples,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write dataset file: " + path);
  for (const FocalExample& example : examples) {
    json record;
    record["project_id"] = example.project_id;
    record["focal_method"] = example.focal_method;
    record["test_case"] = example.test_case;
    out << record.dump() << "\n";
  }
  if (!out) fail(ErrorCode::Io, "failed while writing dataset file: " + path);
}

std::vector<Prediction> load_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open predictions file: " + path);
  std::vector<Prediction> predictions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json record = parse_line(line, where);
    Prediction prediction;
    prediction.focal_id = require_string_field(record, "focal_id", where);
    if (!record.contains("rank") || !record["rank"].is_number_integer()) {
      fail(ErrorCode::Io, where + ": missing integer field \"rank\"");
    }
    prediction.rank = record["rank"].get<int>();
    prediction.text = require_string_field(record, "text", where);
    if (!record.contains("score") || !record["score"].is_number()) {
      fail(ErrorCode::Io, where + ": missing numeric field \"score\"");
    }
    prediction.score = record["score"].get<double>();
    predictions.push_back(std::move(prediction));
  }
  return predictions;
}

void write_predictions_jsonl(const std::vector<Prediction>& predictions,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write predictions file: " + path);
  for (const Prediction& prediction : predictions) {
    json record;
    record["focal_id"] = prediction.focal_id;
    record["rank"] = prediction.rank;
    record["text"] = prediction.text;
    record["score"] = prediction.score;
    // A byte-level decoder can emit text that is not valid UTF-8; replace
    // such bytes instead of refusing to serialize the record.
    out << record.dump(-1, ' ', false, json::error_handler_t::replace)
        << "\n";
  }
  if (!out) {
    fail(ErrorCode::Io, "failed while writing predictions file: " + path);
  }
}

std::vector<std::vector<FocalExample>> group_by_project(
    const std::vector<FocalExample>& examples) {
  std::vector<std::vector<FocalExample>> groups;
  std::map<std::string, std::size_t> slot;
  for (const FocalExample& example : examples) {
    auto it = slot.find(example.project_id);
    if (it == slot.end()) {
      it = slot.emplace(example.project_id, groups.size()).first;
      groups.emplace_back();
    }
    groups[it->second].push_back(example);
  }
  return groups;
}

ProjectCorpus corpus_from_examples(const std::vector<FocalExample>& examples) {
  if (examples.empty()) {
    fail(ErrorCode::InvalidArgument,
         "cannot build a corpus from zero examples");
  }
  ProjectCorpus corpus;
  corpus.id = examples.front().project_id;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].project_id != corpus.id) {
      fail(ErrorCode::InvalidArgument,
           "corpus_from_examples saw mixed project ids: " + corpus.id +
               " and " + examples[i].project_id);
    }
    corpus.files.push_back(examples[i].focal_method);
    corpus.file_names.push_back("example" + std::to_string(i) + ".focal");
    corpus.files.push_back(examples[i].test_case);
    corpus.file_names.push_back("example" + std::to_string(i) + ".test");
  }
  return corpus;
}

}  // namespace tunelab
