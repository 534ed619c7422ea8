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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "tunelab/bpe.hpp"
#include "tunelab/corpus.hpp"
#include "tunelab/error.hpp"

using namespace tunelab;

namespace {

namespace fs = std::filesystem;

ProjectCorpus make_project(std::string id, std::vector<std::string> files) {
  ProjectCorpus p;
  p.id = std::move(id);
  p.files = std::move(files);
  return p;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tunelab_corpus_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("comment stripping") {
  CHECK(strip_noise("int x; // hi") == "int x; ");
  CHECK(strip_noise("int x; // hi\nint y;") == "int x; \nint y;");
  CHECK(strip_noise("/* a */ y") == " y");
  CHECK(strip_noise("a /* x\ny */ b") == "a  b");
  CHECK(strip_noise("a /* never closed") == "a ");

  // Comment markers inside literals are code, not comments.
  CHECK(strip_noise("String s = \"// not a comment\";") ==
        "String s = \"// not a comment\";");
  CHECK(strip_noise("String s = \"/* neither */\";") ==
        "String s = \"/* neither */\";");
  CHECK(strip_noise("char c = '\"'; // x") == "char c = '\"'; ");
  CHECK(strip_noise("String s = \"quote \\\" // still\";") ==
        "String s = \"quote \\\" // still\";");
  CHECK(strip_noise("char c = '\\''; // x") == "char c = '\\''; ");

  // A leading license banner disappears with the other comments.
  const std::string licensed =
      "/*\n * Copyright Example Corp.\n */\npackage a.b;\n";
  CHECK(strip_noise(licensed) == "\npackage a.b;\n");

  CHECK(strip_noise("") == "");
}

TEST_CASE("analysis tokenization") {
  CHECK(analysis_tokens("public Foo getFoo()") ==
        std::vector<std::string>{"foo", "getfoo"});
  CHECK(analysis_tokens("if while for").empty());
  CHECK(analysis_tokens("foo_bar") == std::vector<std::string>{"foo", "bar"});
  CHECK(analysis_tokens("x2 42 2x") ==
        std::vector<std::string>{"x2", "2x"});
  CHECK(analysis_tokens("getFoo") == std::vector<std::string>{"getfoo"});
  CHECK(analysis_tokens("HTTPServer") ==
        std::vector<std::string>{"httpserver"});
  CHECK(analysis_tokens("_ _x") == std::vector<std::string>{"x"});

  const std::set<std::string>& stop = java_keyword_stoplist();
  CHECK(stop.size() == 51);
  CHECK(stop.count("class") == 1);
  CHECK(stop.count("goto") == 1);
  CHECK(stop.count("const") == 1);
  CHECK(stop.count("_") == 1);
  // Literals are ordinary words, not reserved words.
  CHECK(stop.count("true") == 0);
  CHECK(stop.count("false") == 0);
  CHECK(stop.count("null") == 0);
}

TEST_CASE("token frequency and set extraction strip noise first") {
  ProjectCorpus p = make_project(
      "p", {"int alpha; // alpha alpha alpha", "alpha beta /* beta */"});
  auto counts = analysis_token_counts(p);
  CHECK(counts.at("alpha") == 2);  // commented occurrences do not count
  CHECK(counts.at("beta") == 1);
  CHECK(counts.count("int") == 0);

  std::set<std::string> set = analysis_token_set(p);
  CHECK(set == std::set<std::string>{"alpha", "beta"});
}

TEST_CASE("shared token matrix ratios, ordering and median") {
  // Unique sets: big = {aa, bb, cc, dd}, small = {cc, dd}.
  ProjectCorpus big = make_project("big", {"aa bb cc dd"});
  ProjectCorpus small = make_project("small", {"cc dd"});

  SharedTokenMatrix m = shared_token_matrix({big, small});
  REQUIRE(m.project_ids.size() == 2);
  // Ascending by unique token count, so the smaller set comes first.
  CHECK(m.project_ids == std::vector<std::string>{"small", "big"});
  CHECK(m.set_sizes == std::vector<std::size_t>{2, 4});
  CHECK(m.ratios[0][0] == 1.0);
  CHECK(m.ratios[1][1] == 1.0);
  CHECK(m.ratios[0][1] == doctest::Approx(1.0));   // |small ∩ big| / |small|
  CHECK(m.ratios[1][0] == doctest::Approx(0.5));   // |big ∩ small| / |big|
  CHECK(m.median_off_diagonal() == doctest::Approx(0.75));

  SUBCASE("disjoint projects share nothing") {
    ProjectCorpus other = make_project("other", {"xx yy"});
    SharedTokenMatrix d = shared_token_matrix({big, other});
    CHECK(d.ratios[0][1] == 0.0);
    CHECK(d.ratios[1][0] == 0.0);
    CHECK(d.median_off_diagonal() == 0.0);
  }

  SUBCASE("ties in set size break by project id") {
    ProjectCorpus a2 = make_project("zeta", {"cc dd"});
    SharedTokenMatrix t = shared_token_matrix({big, a2, small});
    CHECK(t.project_ids ==
          std::vector<std::string>{"small", "zeta", "big"});
  }

  SUBCASE("a project with no analysis tokens is an error") {
    ProjectCorpus empty = make_project("empty", {"// only comments"});
    CHECK_THROWS_AS(shared_token_matrix({big, empty}), Error);
  }

  SUBCASE("fewer than one project is an error") {
    CHECK_THROWS_AS(shared_token_matrix({}), Error);
  }

  SUBCASE("csv serialization carries the tokenizer version") {
    const std::string csv = matrix_to_csv(m);
    CHECK(csv.find("# tokenizer_version=1") != std::string::npos);
    CHECK(csv.find("small") != std::string::npos);
    CHECK(csv.find("0.500000") != std::string::npos);
  }
}

TEST_CASE("corpus loading from a directory tree") {
  TempDir tmp;
  fs::create_directories(tmp.path / "beta_proj" / "src");
  fs::create_directories(tmp.path / "alpha_proj");
  std::ofstream(tmp.path / "alpha_proj" / "A.java") << "class A { alpha } ";
  std::ofstream(tmp.path / "beta_proj" / "src" / "B.java") << "beta one";
  std::ofstream(tmp.path / "beta_proj" / "a.txt") << "beta two";

  std::vector<ProjectCorpus> projects = load_corpora(tmp.path.string());
  REQUIRE(projects.size() == 2);
  CHECK(projects[0].id == "alpha_proj");
  CHECK(projects[1].id == "beta_proj");
  REQUIRE(projects[1].files.size() == 2);
  // Files are read in sorted path order.
  CHECK(projects[1].files[0] == "beta two");
  CHECK(projects[1].files[1] == "beta one");

  CHECK_THROWS_AS(load_corpora((tmp.path / "missing").string()), Error);
}

TEST_CASE("corpus loading from a jsonl manifest") {
  TempDir tmp;
  const fs::path file = tmp.path / "corpus.jsonl";
  std::ofstream out(file);
  out << R"({"project_id": "p1", "path": "A.java", "text": "alpha"})"
      << "\n";
  out << R"({"project_id": "p2", "text": "beta"})" << "\n";
  out << R"({"project_id": "p1", "path": "B.java", "text": "gamma"})"
      << "\n";
  out.close();

  std::vector<ProjectCorpus> projects = load_corpora(file.string());
  REQUIRE(projects.size() == 2);
  CHECK(projects[0].id == "p1");  // first-appearance order
  CHECK(projects[0].files == std::vector<std::string>{"alpha", "gamma"});
  CHECK(projects[0].file_names == std::vector<std::string>{"A.java", "B.java"});
  CHECK(projects[1].files == std::vector<std::string>{"beta"});

  const fs::path bad = tmp.path / "bad.jsonl";
  std::ofstream(bad) << R"({"path": "A.java", "text": "no project id"})"
                     << "\n";
  CHECK_THROWS_AS(load_corpora(bad.string()), Error);
}

TEST_CASE("subword vocabulary basics") {
  SubwordVocabulary v =
      SubwordVocabulary::train({"aaaa aaaa", "aaaa"}, 261);
  CHECK(v.size() == 261);
  REQUIRE(v.merge_count() == 1);

  // One learned merge (a,a) applied left to right and non-overlapping turns
  // "aaaa" into exactly two tokens.
  std::vector<int> ids = v.encode("aaaa");
  CHECK(ids.size() == 2);
  CHECK(ids[0] == ids[1]);
  CHECK(ids[0] == SubwordVocabulary::kByteBase + 256);
  CHECK(v.decode(ids) == "aaaa");

  CHECK(v.encode("").empty());
  CHECK_THROWS_AS(SubwordVocabulary::train({"abc"}, 259), Error);
}

TEST_CASE("merge training is deterministic with lexicographic tie-breaks") {
  // Pairs (c,d) and (a,b) both occur twice; the lexicographically smaller
  // left side must merge first.
  SubwordVocabulary v = SubwordVocabulary::train({"cd cd ab ab"}, 261);
  REQUIRE(v.merge_count() == 1);
  const int merged = SubwordVocabulary::kByteBase + 256;
  CHECK(v.token_bytes(merged) == "ab");
}

TEST_CASE("rare pairs are never merged") {
  // Every adjacent pair occurs once, below the minimum count of two.
  SubwordVocabulary v = SubwordVocabulary::train({"abcdef"}, 300);
  CHECK(v.merge_count() == 0);
  CHECK(v.encode("abcdef").size() == 6);
}

TEST_CASE("encoding round-trips arbitrary bytes") {
  SubwordVocabulary v = SubwordVocabulary::train(
      {"für jeden Käufer", "assertEquals(a, b);", "\xf0\x9f\x98\x80 emoji"},
      320);
  std::mt19937 rng(404);
  std::uniform_int_distribution<int> len(0, 40);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int iter = 0; iter < 200; ++iter) {
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>(byte(rng)));
    CHECK(v.decode(v.encode(s)) == s);
  }
  CHECK(v.decode(v.encode("für jeden Käufer")) == "für jeden Käufer");
}

TEST_CASE("vocabulary save and load round-trip") {
  TempDir tmp;
  SubwordVocabulary v = SubwordVocabulary::train(
      {"public void testFoo() { assertEquals(foo, foo); }",
       "public void testBar() { assertEquals(bar, bar); }"},
      400);
  const std::string path = (tmp.path / "vocab.txt").string();
  v.save(path);
  SubwordVocabulary loaded = SubwordVocabulary::load(path);

  CHECK(loaded.size() == v.size());
  CHECK(loaded.merge_count() == v.merge_count());
  const std::string sample = "public void testBaz() { assertEquals(a, b); }";
  CHECK(loaded.encode(sample) == v.encode(sample));
  CHECK(loaded.decode(loaded.encode(sample)) == sample);

  CHECK_THROWS_AS(SubwordVocabulary::load((tmp.path / "nope.txt").string()),
                  Error);
}
