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

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "tunelab/error.hpp"
#include "tunelab/metrics.hpp"
#include "tunelab/stats.hpp"

using namespace tunelab;

namespace {

// Reference BLEU computed from first principles over token lists, written
// independently of the library implementation.
double bleu_oracle(const std::vector<std::string>& cand,
                   const std::vector<std::string>& ref) {
  if (cand.empty()) return 0.0;
  auto gram_counts = [](const std::vector<std::string>& toks, std::size_t n) {
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key;
      for (std::size_t k = 0; k < n; ++k) {
        key += toks[i + k];
        key.push_back('\x1f');
      }
      ++counts[key];
    }
    return counts;
  };
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cg = gram_counts(cand, n);
    const auto rg = gram_counts(ref, n);
    int matched = 0;
    int total = 0;
    for (const auto& [key, count] : cg) {
      total += count;
      auto it = rg.find(key);
      if (it != rg.end()) matched += std::min(count, it->second);
    }
    if (n == 1) {
      if (matched == 0) return 0.0;
      log_sum += std::log(static_cast<double>(matched) / total);
    } else {
      log_sum += std::log((matched + 1.0) / (total + 1.0));
    }
  }
  double bleu = std::exp(log_sum / 4.0);
  if (cand.size() < ref.size()) {
    bleu *= std::exp(1.0 - static_cast<double>(ref.size()) /
                               static_cast<double>(cand.size()));
  }
  return bleu;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

TEST_CASE("code token splitting") {
  CHECK(code_tokens("foo(a, b)") ==
        std::vector<std::string>{"foo", "(", "a", ",", "b", ")"});
  CHECK(code_tokens("x+=2;") == std::vector<std::string>{"x", "+", "=", "2", ";"});
  CHECK(code_tokens("  spaced\tout\n") ==
        std::vector<std::string>{"spaced", "out"});
  CHECK(code_tokens("snake_case $dollar") ==
        std::vector<std::string>{"snake_case", "$dollar"});
  CHECK(code_tokens("").empty());
}

TEST_CASE("sentence bleu hand-checked values") {
  // Four of five unigrams, three of four bigrams, two of three trigrams and
  // one of two 4-grams overlap; smoothing adds one to orders above one.
  const double expect =
      std::pow(0.8 * (4.0 / 5.0) * (3.0 / 4.0) * (2.0 / 3.0), 0.25);
  CHECK(bleu4("a b c d e", "a b c d f") ==
        doctest::Approx(expect).epsilon(1e-12));

  CHECK(bleu4("a b c d", "a b c d") == doctest::Approx(1.0));
  CHECK(bleu4("x y z", "a b c") == 0.0);  // zero unigram overlap
  CHECK(bleu4("", "a b") == 0.0);

  // Short candidates pay the brevity penalty: all precisions are one, the
  // penalty is exp(1 - 4/2).
  CHECK(bleu4("a b", "a b c d") == doctest::Approx(std::exp(-1.0)));

  CHECK_THROWS_AS(bleu4("a", ""), Error);
}

TEST_CASE("sentence bleu agrees with a brute-force oracle on random pairs") {
  std::mt19937 rng(8675309);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e",
                                       "f", "g", "h", "i", "j"};
  std::uniform_int_distribution<std::size_t> len(1, 12);
  std::uniform_int_distribution<std::size_t> cand_len(0, 12);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<std::size_t> small(0, 3);  // force overlap

  for (int iter = 0; iter < 100; ++iter) {
    std::vector<std::string> ref;
    std::vector<std::string> cand;
    const std::size_t rl = len(rng);
    for (std::size_t i = 0; i < rl; ++i) ref.push_back(vocab[pick(rng)]);
    const std::size_t cl = cand_len(rng);
    for (std::size_t i = 0; i < cl; ++i) {
      // Half the tokens come from a small slice so overlap is common.
      cand.push_back(iter % 2 == 0 ? vocab[small(rng)] : vocab[pick(rng)]);
    }
    const double got = bleu4(join(cand), join(ref));
    const double want = bleu_oracle(cand, ref);
    CAPTURE(iter);
    CHECK(std::abs(got - want) < 1e-9);
  }
}

TEST_CASE("corpus bleu pools statistics across pairs") {
  const std::vector<std::string> cands{"a b c d", "x y"};
  const std::vector<std::string> refs{"a b c d", "x y"};
  CHECK(corpus_bleu4(cands, refs) == doctest::Approx(1.0));

  // Pooling differs from averaging sentence scores: a total miss drags the
  // pooled precision down instead of zeroing one sentence.
  const std::vector<std::string> cands2{"a b c d", "q r s t"};
  const double pooled = corpus_bleu4(cands2, refs);
  CHECK(pooled > 0.0);
  CHECK(pooled < 1.0);

  CHECK_THROWS_AS(corpus_bleu4({"a"}, {}), Error);
  CHECK_THROWS_AS(corpus_bleu4({"a"}, {""}), Error);
}

TEST_CASE("pooled perplexity") {
  const double ln2 = std::log(2.0);
  const double ln8 = std::log(8.0);
  CHECK(pooled_perplexity({ln2, ln8}) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(pooled_perplexity({0.0, 0.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pooled_perplexity({}), Error);
}

TEST_CASE("whitespace-insensitive exact match") {
  CHECK(exact_match("int  x ;", "int x ;"));
  CHECK(exact_match("a\n\tb", " a b "));
  CHECK(normalize_whitespace("  a\n b\t") == "a b");
  CHECK(!exact_match("int x ;", "int y ;"));
  CHECK(exact_match("", "   "));
}

TEST_CASE("code abstraction rewrites identifiers and literals") {
  CHECK(*abstract_code("int x = foo(5);") ==
        "int VAR = METHOD ( INT_LIT ) ;");
  CHECK(*abstract_code("assertEquals(a, b)") == "METHOD ( VAR , VAR )");
  CHECK(*abstract_code("Foo bar = new Foo();") ==
        "TYPE VAR = new METHOD ( ) ;");
  CHECK(*abstract_code("String s = \"hi\";") == "TYPE VAR = STRING_LIT ;");
  CHECK(*abstract_code("char c = 'x';") == "char VAR = CHAR_LIT ;");
  CHECK(*abstract_code("double d = 3.14;") == "double VAR = FLOAT_LIT ;");
  CHECK(*abstract_code("float f = 1f;") == "float VAR = FLOAT_LIT ;");
  CHECK(*abstract_code("long l = 0x1FL;") == "long VAR = INT_LIT ;");
  CHECK(*abstract_code("boolean t = true;") == "boolean VAR = BOOL_LIT ;");
  CHECK(*abstract_code("Object o = null;") == "TYPE VAR = null ;");
  CHECK(*abstract_code("x.size()") == "VAR . METHOD ( )");
  CHECK(*abstract_code("a == b && c") == "VAR == VAR && VAR");
  CHECK(*abstract_code("List<String> xs") == "TYPE < TYPE > VAR");
  CHECK(*abstract_code("") == "");

  // Unlexable inputs yield nothing.
  CHECK(!abstract_code("int x = #;").has_value());
  CHECK(!abstract_code("String s = \"unterminated").has_value());
  CHECK(!abstract_code("char c = 'x").has_value());
  CHECK(!abstract_code("caf\xc3\xa9").has_value());
}

TEST_CASE("abstract match accepts consistent renamings") {
  CHECK(abstract_match("int a = f(1);", "int b = g(2);"));
  CHECK(abstract_match("assertEquals(x, y)", "assertEquals(left, right)"));
  CHECK(!abstract_match("int a = f(1);", "int b = g(2, 3);"));
  CHECK(!abstract_match("return a;", "return a + b;"));

  // Exact matches pass even if the text cannot be lexed.
  CHECK(abstract_match("weird # stuff", "weird  #  stuff"));
  CHECK(!abstract_match("weird # stuff", "other # stuff"));
}

TEST_CASE("exact match implies abstract match on fuzzed lexable code") {
  std::mt19937 rng(271828);
  const std::vector<std::string> pieces{
      "int",  "x",      "y",   "foo", "Bar", "=",    "+",  "(", ")",
      "{",    "}",      ";",   ",",   "42",  "3.5",  "\"s\"", "'c'",
      "true", "null",   "==",  "&&",  "new", "return", ".",  "<", ">",
  };
  std::uniform_int_distribution<std::size_t> len(1, 14);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  for (int iter = 0; iter < 300; ++iter) {
    std::string a;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) {
      a += pieces[pick(rng)];
      a.push_back(' ');
    }
    // A whitespace variant is exact-equal, so it must abstract-match too.
    std::string b;
    for (char c : a) {
      b.push_back(c);
      if (c == ' ' && iter % 3 == 0) b.push_back(' ');
    }
    CAPTURE(a);
    REQUIRE(exact_match(a, b));
    CHECK(abstract_match(a, b));
    CHECK(abstract_match(a, a));
  }
}

TEST_CASE("top-k match rates over ranked predictions") {
  std::map<std::string, std::string> refs{
      {"e1", "return foo();"},
      {"e2", "return bar();"},
      {"e3", "return baz();"},
      {"e4", "return qux();"},
  };
  std::vector<Prediction> preds;
  // e1 matches only at rank 3; the other examples never match.
  for (int r = 1; r <= 5; ++r) {
    preds.push_back({"e1", r, r == 3 ? "return foo();" : "wrong();", -0.1 * r});
    preds.push_back({"e2", r, "wrong();", -0.1 * r});
    preds.push_back({"e3", r, "wrong();", -0.1 * r});
  }
  // e4 has no predictions at all and counts as a miss.

  CHECK(topk_match_rate(preds, refs, 1, false) == doctest::Approx(0.0));
  CHECK(topk_match_rate(preds, refs, 5, false) == doctest::Approx(0.25));
  // Abstract matching can only help: "wrong();" abstracts to METHOD ( ) ;
  // which none of the references share... except they all abstract to
  // return METHOD ( ) ; among themselves, so rank-1 "wrong();" still misses.
  CHECK(topk_match_rate(preds, refs, 5, true) >=
        topk_match_rate(preds, refs, 5, false));

  CHECK_THROWS_AS(topk_match_rate(preds, refs, 0, false), Error);
  CHECK_THROWS_AS(topk_match_rate(preds, {}, 5, false), Error);
  std::vector<Prediction> stray{{"missing", 1, "x", 0.0}};
  CHECK_THROWS_AS(topk_match_rate(stray, refs, 1, false), Error);
}

TEST_CASE("identifier extraction keeps only variable and call positions") {
  CHECK(identifier_tokens("int x = foo(5);") ==
        std::vector<std::string>{"x", "foo"});
  CHECK(identifier_tokens("Foo bar = new Foo();") ==
        std::vector<std::string>{"bar", "Foo"});
  CHECK(identifier_tokens("1 + 2").empty());
  CHECK(identifier_tokens("broken \"lex").empty());
}

TEST_CASE("style similarity is a tf-idf cosine over identifiers") {
  // Pooled identifier bags: {a:2, b:1} vs {a:1, b:2}. Both terms occur on
  // both sides, so idf is one and the cosine is 4/5.
  const std::vector<std::string> side_a{"a = 1; a = 2; b = 3;"};
  const std::vector<std::string> side_b{"a = 1; b = 2; b = 3;"};
  CHECK(style_similarity(side_a, side_b) == doctest::Approx(0.8).epsilon(1e-12));

  CHECK(style_similarity(side_a, side_a) == doctest::Approx(1.0));

  const std::vector<std::string> disjoint{"c = 1; d = 2;"};
  CHECK(style_similarity(side_a, disjoint) == doctest::Approx(0.0));

  const std::vector<std::string> no_ids{"1 + 2;"};
  CHECK(style_similarity(side_a, no_ids) == 0.0);
  CHECK(style_similarity(no_ids, no_ids) == 0.0);
}

TEST_CASE("kruskal-wallis on the textbook example") {
  KruskalWallisResult r = kruskal_wallis({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  CHECK(r.h == doctest::Approx(3.857142857).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.0495).epsilon(1e-2));
  CHECK(r.total_n == 6);
  REQUIRE(r.group_mean_ranks.size() == 2);
  CHECK(r.group_mean_ranks[0] == doctest::Approx(2.0));
  CHECK(r.group_mean_ranks[1] == doctest::Approx(5.0));

  // The one-degree-of-freedom p-value has a closed form.
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(r.h / 2.0))));
}

TEST_CASE("kruskal-wallis handles ties with mid-ranks") {
  KruskalWallisResult r = kruskal_wallis({{1.0, 2.0, 4.0}, {2.0, 3.0, 5.0}});
  // Hand-computed: rank sums 8.5 and 12.5 with one tie pair, tie
  // correction 1 - 6/210.
  CHECK(r.h == doctest::Approx(0.784313725).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(r.h / 2.0))));
}

TEST_CASE("kruskal-wallis degenerate and invariance properties") {
  KruskalWallisResult flat =
      kruskal_wallis({{2.0, 2.0, 2.0}, {2.0, 2.0}, {2.0}});
  CHECK(flat.h == 0.0);
  CHECK(flat.p_value == 1.0);

  // Rank tests ignore strictly monotone transformations.
  std::vector<std::vector<double>> groups{{0.3, 1.7, 2.2}, {0.9, 2.8, 3.4}};
  std::vector<std::vector<double>> transformed = groups;
  for (std::vector<double>& g : transformed) {
    for (double& v : g) v = std::exp(v);
  }
  KruskalWallisResult a = kruskal_wallis(groups);
  KruskalWallisResult b = kruskal_wallis(transformed);
  CHECK(a.h == doctest::Approx(b.h).epsilon(1e-12));
  CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));

  CHECK_THROWS_AS(kruskal_wallis({{1.0}}), Error);
  CHECK_THROWS_AS(kruskal_wallis({{1.0}, {}}), Error);
  CHECK_THROWS_AS(
      kruskal_wallis({{1.0}, {std::numeric_limits<double>::infinity()}}),
      Error);
}

TEST_CASE("chi-square survival function") {
  // Two degrees of freedom has the closed form exp(-x/2).
  for (double x : {0.5, 1.0, 2.0, 5.0}) {
    CHECK(chi_square_survival(x, 2) ==
          doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
  }
  CHECK(chi_square_survival(0.0, 3) == 1.0);
  CHECK(chi_square_survival(-1.0, 3) == 1.0);
  CHECK(chi_square_survival(1.0, 1) ==
        doctest::Approx(std::erfc(std::sqrt(0.5))).epsilon(1e-12));
  CHECK_THROWS_AS(chi_square_survival(1.0, 0), Error);
}
