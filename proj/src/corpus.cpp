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

#include "tunelab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

namespace fs = std::filesystem;

}  // namespace

std::string strip_noise(std::string_view source) {
  enum class State { Code, LineComment, BlockComment, String, Char };
  State state = State::Code;
  std::string out;
  out.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const char c = source[i];
    const char next = i + 1 < source.size() ? source[i + 1] : '\0';
    switch (state) {
      case State::Code:
        if (c == '/' && next == '/') {
          state = State::LineComment;
          ++i;
        } else if (c == '/' && next == '*') {
          state = State::BlockComment;
          ++i;
        } else if (c == '"') {
          state = State::String;
          out.push_back(c);
        } else if (c == '\'') {
          state = State::Char;
          out.push_back(c);
        } else {
          out.push_back(c);
        }
        break;
      case State::LineComment:
        if (c == '\n') {
          out.push_back(c);
          state = State::Code;
        }
        break;
      case State::BlockComment:
        if (c == '*' && next == '/') {
          ++i;
          state = State::Code;
        }
        break;
      case State::String:
        out.push_back(c);
        if (c == '\\' && next != '\0') {
          out.push_back(next);
          ++i;
        } else if (c == '"') {
          state = State::Code;
        }
        break;
      case State::Char:
        out.push_back(c);
        if (c == '\\' && next != '\0') {
          out.push_back(next);
          ++i;
        } else if (c == '\'') {
          state = State::Code;
        }
        break;
    }
  }
  return out;
}

const std::set<std::string>& java_keyword_stoplist() {
  // The 51 reserved words of Java SE 8 era sources: the 50 language
  // keywords plus the reserved identifier "_".
  static const std::set<std::string> kStoplist = {
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
  return kStoplist;
}

std::vector<std::string> analysis_tokens(std::string_view stripped_text) {
  const std::set<std::string>& stoplist = java_keyword_stoplist();
  std::vector<std::string> tokens;
  std::string current;
  bool has_letter = false;
  auto flush = [&]() {
    if (!current.empty() && has_letter && stoplist.count(current) == 0) {
      tokens.push_back(current);
    }
    current.clear();
    has_letter = false;
  };
  for (char raw : stripped_text) {
    unsigned char u = static_cast<unsigned char>(raw);
    if (std::isalpha(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
      has_letter = true;
    } else if (std::isdigit(u)) {
      current.push_back(raw);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::map<std::string, std::size_t> analysis_token_counts(
    const ProjectCorpus& project) {
  std::map<std::string, std::size_t> counts;
  for (const std::string& file : project.files) {
    for (const std::string& token : analysis_tokens(strip_noise(file))) {
      ++counts[token];
    }
  }
  return counts;
}

std::set<std::string> analysis_token_set(const ProjectCorpus& project) {
  std::set<std::string> tokens;
  for (const std::string& file : project.files) {
    for (std::string& token : analysis_tokens(strip_noise(file))) {
      tokens.insert(std::move(token));
    }
  }
  return tokens;
}

double SharedTokenMatrix::median_off_diagonal() const {
  std::vector<double> values;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      if (i != j) values.push_back(ratios[i][j]);
    }
  }
  if (values.empty()) {
    fail(ErrorCode::InvalidArgument,
         "matrix median: need at least two projects");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SharedTokenMatrix shared_token_matrix(
    const std::vector<ProjectCorpus>& projects) {
  if (projects.size() < 2) {
    fail(ErrorCode::InvalidArgument,
         "shared_token_matrix: need at least two projects");
  }
  struct Entry {
    const ProjectCorpus* project;
    std::set<std::string> tokens;
  };
  std::vector<Entry> entries;
  entries.reserve(projects.size());
  for (const ProjectCorpus& p : projects) {
    Entry e{&p, analysis_token_set(p)};
    if (e.tokens.empty()) {
      fail(ErrorCode::InvalidArgument,
           "shared_token_matrix: project '" + p.id +
               "' has an empty token set");
    }
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.tokens.size() != b.tokens.size()) {
      return a.tokens.size() < b.tokens.size();
    }
    return a.project->id < b.project->id;
  });

  SharedTokenMatrix m;
  const std::size_t n = entries.size();
  m.project_ids.reserve(n);
  m.set_sizes.reserve(n);
  for (const Entry& e : entries) {
    m.project_ids.push_back(e.project->id);
    m.set_sizes.push_back(e.tokens.size());
  }
  m.ratios.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        m.ratios[i][j] = 1.0;
        continue;
      }
      std::size_t shared = 0;
      for (const std::string& t : entries[i].tokens) {
        if (entries[j].tokens.count(t) != 0) ++shared;
      }
      m.ratios[i][j] = static_cast<double>(shared) /
                       static_cast<double>(entries[i].tokens.size());
    }
  }
  return m;
}

std::string matrix_to_csv(const SharedTokenMatrix& matrix) {
  std::ostringstream out;
  out << "# tokenizer_version=" << kAnalysisTokenizerVersion << "\n";
  out << "project";
  for (const std::string& id : matrix.project_ids) out << "," << id;
  out << "\n";
  out.precision(6);
  out << std::fixed;
  for (std::size_t i = 0; i < matrix.project_ids.size(); ++i) {
    out << matrix.project_ids[i];
    for (double v : matrix.ratios[i]) out << "," << v;
    out << "\n";
  }
  return out.str();
}

void write_matrix_csv(const SharedTokenMatrix& matrix,
                      const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "matrix csv: cannot open for writing: " + path);
  }
  out << matrix_to_csv(matrix);
  if (!out.flush()) {
    fail(ErrorCode::Io, "matrix csv: write failed: " + path);
  }
}

std::vector<ProjectCorpus> load_corpora(const std::string& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<ProjectCorpus> projects;
    std::vector<fs::path> project_dirs;
    for (const fs::directory_entry& entry : fs::directory_iterator(path)) {
      if (entry.is_directory()) project_dirs.push_back(entry.path());
    }
    std::sort(project_dirs.begin(), project_dirs.end());
    for (const fs::path& dir : project_dirs) {
      ProjectCorpus project;
      project.id = dir.filename().string();
      std::vector<fs::path> files;
      for (const fs::directory_entry& entry :
           fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() &&
            entry.path().filename().string().front() != '.') {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
          fail(ErrorCode::Io, "corpus: cannot read " + file.string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        project.files.push_back(buf.str());
        project.file_names.push_back(
            fs::relative(file, dir, ec).generic_string());
      }
      if (!project.files.empty()) projects.push_back(std::move(project));
    }
    if (projects.empty()) {
      fail(ErrorCode::InvalidArgument,
           "corpus: no project subdirectories with files under " + path);
    }
    return projects;
  }

  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::Io, "corpus: cannot open " + path);
  }
  std::vector<ProjectCorpus> projects;
  std::map<std::string, std::size_t> index_of;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Io, "corpus jsonl: parse error at line " +
                              std::to_string(lineno) + ": " + e.what());
    }
    if (!record.contains("project_id") || !record.contains("text")) {
      fail(ErrorCode::Io, "corpus jsonl: line " + std::to_string(lineno) +
                              " missing project_id or text");
    }
    const std::string id = record["project_id"].get<std::string>();
    auto it = index_of.find(id);
    if (it == index_of.end()) {
      index_of[id] = projects.size();
      projects.push_back(ProjectCorpus{id, {}, {}});
      it = index_of.find(id);
    }
    ProjectCorpus& project = projects[it->second];
    project.files.push_back(record["text"].get<std::string>());
    project.file_names.push_back(
        record.value("path", "line" + std::to_string(lineno)));
  }
  if (projects.empty()) {
    fail(ErrorCode::InvalidArgument, "corpus: no records in " + path);
  }
  return projects;
}

}  // namespace tunelab
