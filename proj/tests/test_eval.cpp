#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vadtl/eval.hpp"
#include "vadtl/rng.hpp"

using namespace vadtl;
using testutil::TempDir;

namespace {

constexpr FrameLabel S = FrameLabel::speech;
constexpr FrameLabel N = FrameLabel::nonspeech;

FeatureMatrix random_matrix(std::size_t rows, std::size_t dim,
                            std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  FeatureMatrix m(rows, dim);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t d = 0; d < dim; ++d)
      m.row(i)[d] = uniform_range(rng, lo, hi);
  return m;
}

// minimal well-formedness oracle: tags balance, attributes are quoted
bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  if (text.rfind("<?xml", 0) == 0) i = text.find("?>") + 2;
  while (i < text.size()) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    const std::size_t end = text.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = text.substr(i + 1, end - i - 1);
    if (tag.empty()) return false;
    if (tag[0] == '/') {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (tag.back() != '/') {
      const std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
      // quotes must pair up inside the tag
      if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
      stack.push_back(name);
    }
    i = end + 1;
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("accuracy examples") {
  const std::vector<FrameLabel> a = {S, N, S, N};
  CHECK(accuracy(a, a) == 100.0);

  const std::vector<FrameLabel> inv = {N, S, N, S};
  CHECK(accuracy(a, inv) == 0.0);

  const std::vector<FrameLabel> mostly = {S, N, S, S};
  CHECK(accuracy(mostly, a) == 75.0);
  // brute-force counting oracle
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (mostly[i] == a[i]) ++hits;
  CHECK(accuracy(mostly, a) == 100.0 * hits / a.size());

  const std::vector<FrameLabel> shorter = {N, S, N};
  CHECK_THROWS_AS(accuracy(a, shorter), std::invalid_argument);
  const std::vector<FrameLabel> empty;
  CHECK_THROWS_AS(accuracy(empty, empty), std::invalid_argument);
}

TEST_CASE("accuracy is invariant under joint permutations") {
  std::mt19937_64 rng(9);
  std::vector<FrameLabel> pred(50), ref(50);
  for (std::size_t i = 0; i < 50; ++i) {
    pred[i] = uniform01(rng) < 0.5 ? S : N;
    ref[i] = uniform01(rng) < 0.5 ? S : N;
  }
  const double base = accuracy(pred, ref);
  auto idx = shuffled_indices(50, rng);
  std::vector<FrameLabel> pred2(50), ref2(50);
  for (std::size_t i = 0; i < 50; ++i) {
    pred2[i] = pred[idx[i]];
    ref2[i] = ref[idx[i]];
  }
  CHECK(accuracy(pred2, ref2) == base);
}

TEST_CASE("similarity closed forms") {
  const std::vector<double> a = {0.0, 0.0};
  CHECK(similarity(a, a) == 1.0);

  const std::vector<double> b = {1.0, 1.0};  // squared distance 2
  CHECK(similarity(a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(similarity(a, b) == doctest::Approx(0.36788).epsilon(1e-4));
  CHECK(similarity(a, b) == similarity(b, a));

  const std::vector<double> c = {1.0};
  CHECK_THROWS_AS(similarity(a, c), std::invalid_argument);
}

TEST_CASE("similarity is monotone decreasing in distance") {
  double prev = 2.0;
  for (double d = 0.0; d <= 5.0; d += 0.25) {
    const std::vector<double> a = {0.0};
    const std::vector<double> b = {d};
    const double s = similarity(a, b);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("similarity matrix: structure and trivia") {
  const auto c1 = random_matrix(40, 8, 1);
  const auto c2 = random_matrix(40, 8, 2, 0.3, 1.4);
  const auto c3 = random_matrix(40, 8, 3, -0.5, 0.6);

  SUBCASE("duplicated corpus gives all ones") {
    const auto m = similarity_matrix({&c1, &c1}, {"a", "b"});
    for (double v : m.values) CHECK(v == 1.0);
  }

  SUBCASE("seven corpora give a symmetric unit-diagonal 7x7") {
    std::vector<FeatureMatrix> cs;
    for (std::uint64_t s = 0; s < 7; ++s)
      cs.push_back(random_matrix(30, 8, 100 + s, 0.0, 1.0 + 0.2 * s));
    std::vector<const FeatureMatrix*> ptrs;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < 7; ++i) {
      ptrs.push_back(&cs[i]);
      names.push_back("n" + std::to_string(i));
    }
    const auto m = similarity_matrix(ptrs, names);
    CHECK(m.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(m.at(i, i) == 1.0);
      for (std::size_t j = 0; j < 7; ++j) {
        CHECK(m.at(i, j) == m.at(j, i));
        if (i != j) {
          CHECK(m.at(i, j) < 1.0);
          CHECK(m.at(i, j) > 0.0);
        }
      }
    }
  }

  SUBCASE("permuting the corpora permutes the matrix") {
    const auto m = similarity_matrix({&c1, &c2, &c3}, {"a", "b", "c"});
    const auto p = similarity_matrix({&c3, &c1, &c2}, {"c", "a", "b"});
    const std::size_t perm[3] = {2, 0, 1};  // p[i][j] == m[perm[i]][perm[j]]
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(p.at(i, j) == m.at(perm[i], perm[j]));
  }

  SUBCASE("fewer than two corpora is an error") {
    CHECK_THROWS_AS(similarity_matrix({&c1}, {"a"}), std::invalid_argument);
  }
}

TEST_CASE("results csv round trip preserves means") {
  TempDir tmp("eval_csv");
  std::mt19937_64 rng(4);
  ResultTable t;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (const std::string& scheme : {"LB", "S2"})
      t.rows.push_back(ResultRow{"a->b", 2, scheme, seed,
                                 uniform_range(rng, 50.0, 99.0),
                                 uniform_range(rng, 1.0, 9.0),
                                 uniform_range(rng, 1.0, 9.0)});
  t.sort_rows();
  const auto p = tmp.path() / "results.csv";
  save_results_csv(p, t);
  const auto r = load_results_csv(p);
  REQUIRE(r.rows.size() == t.rows.size());
  CHECK(std::abs(r.cell_mean("a->b", 2, "LB") - t.cell_mean("a->b", 2, "LB")) <
        1e-9);
  CHECK(std::abs(r.cell_mean("a->b", 2, "S2") - t.cell_mean("a->b", 2, "S2")) <
        1e-9);
}

TEST_CASE("table rendering mirrors the published row structure") {
  ResultTable t;
  t.rows.push_back(ResultRow{"Babble", 1, "LB", 1, 74.95, 0, 0});
  t.rows.push_back(ResultRow{"Babble", 1, "S1", 1, 77.15, 0, 0});
  t.rows.push_back(ResultRow{"Babble", 1, "S2", 1, 76.44, 0, 0});
  t.rows.push_back(ResultRow{"Babble", 1, "UB", 1, 78.61, 0, 0});
  const std::string text = render_result_table(t);
  CHECK(text.find("-- 1 layer --") != std::string::npos);
  CHECK(text.find("Babble | LB 74.95 | S1 77.15 | S2 76.44 | UB 78.61") !=
        std::string::npos);

  ResultTable empty;
  CHECK_THROWS_AS(render_result_table(empty), std::invalid_argument);
}

TEST_CASE("single-cell table renders one data row") {
  ResultTable t;
  t.rows.push_back(ResultRow{"x->y", 3, "S3t", 7, 61.25, 0, 0});
  const std::string text = render_result_table(t);
  CHECK(text.find("x->y | S3(t) 61.25") != std::string::npos);
  CHECK(text.find("-- 3 layers --") != std::string::npos);
}

TEST_CASE("hinton svg: proportional sides, well-formed xml") {
  TempDir tmp("eval_svg");
  SimilarityMatrix m;
  m.names = {"one", "two & co"};
  m.values = {1.0, 0.25, 0.25, 1.0};
  const auto p = tmp.path() / "hinton.svg";
  emit_hinton_svg(p, m);
  const std::string svg = testutil::slurp(p);

  CHECK(xml_well_formed(svg));
  CHECK(svg.find("&amp; co") != std::string::npos);
  // side ratio equals the similarity ratio: 36 and 9 pixels
  CHECK(svg.find("width=\"36.000\"") != std::string::npos);
  CHECK(svg.find("width=\"9.000\"") != std::string::npos);
}

TEST_CASE("similarity csv writer") {
  TempDir tmp("eval_simcsv");
  SimilarityMatrix m;
  m.names = {"a", "b"};
  m.values = {1.0, 0.5, 0.5, 1.0};
  const auto p = tmp.path() / "sim.csv";
  save_similarity_csv(p, m);
  const std::string text = testutil::slurp(p);
  CHECK(text.find("corpus,a,b") == 0);
  CHECK(text.find("a,1.000000000000,0.500000000000") != std::string::npos);
}
