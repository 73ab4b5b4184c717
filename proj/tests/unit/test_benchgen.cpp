#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <set>

#include "core/benchgen.hpp"
#include "core/error.hpp"
#include "support/testlib.hpp"

using namespace lakeorg;

namespace {

const EmbeddingStore& small_store() {
  static const EmbeddingStore store = [] {
    SynthSpec s;
    s.dim = 16;
    s.domains = 4;
    s.topics_per_domain = 5;
    s.words_per_topic = 40;
    s.seed = 3;
    return synthesize_embeddings(s);
  }();
  return store;
}

BenchSpec small_spec() {
  BenchSpec b;
  b.n_tags = 12;
  b.n_tables = 25;
  b.min_values = 5;
  b.max_values = 30;
  b.min_attrs = 1;
  b.max_attrs = 6;
  b.seed = 11;
  return b;
}

}  // namespace

TEST_CASE("zipf_sample follows the truncated power law") {
  Rng rng(500);
  const std::size_t a = 1, b = 6;
  const double s = 1.32;
  double total = 0;
  for (std::size_t k = a; k <= b; ++k) total += std::pow(static_cast<double>(k), -s);
  std::map<std::size_t, int> counts;
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[zipf_sample(a, b, s, rng)];
  for (std::size_t k = a; k <= b; ++k) {
    const double expect = std::pow(static_cast<double>(k), -s) / total;
    CHECK(std::abs(counts[k] / static_cast<double>(n) - expect) < 0.01);
  }
  CHECK(counts.size() == b - a + 1);
}

TEST_CASE("zipf_sample edge cases") {
  Rng rng(501);
  CHECK(zipf_sample(4, 4, 2.0, rng) == 4);
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[zipf_sample(1, 3, 0.0, rng)];
  for (auto [k, c] : counts) CHECK(c / 30000.0 == doctest::Approx(1.0 / 3).epsilon(0.05));
  CHECK_THROWS_AS(zipf_sample(0, 3, 1.0, rng), Error);
  CHECK_THROWS_AS(zipf_sample(5, 3, 1.0, rng), Error);
  CHECK_THROWS_AS(zipf_sample(1, 3, -1.0, rng), Error);
}

TEST_CASE("synthetic vocabulary") {
  const auto& store = small_store();
  CHECK(store.size() == 4 * 5 * 40);
  CHECK(store.dim() == 16);
  for (std::size_t i = 0; i < store.size(); i += 37) {
    auto v = store.vector(i);
    CHECK(std::sqrt(dot(v, v)) == doctest::Approx(1.0));
  }
  // Words of one topic are closer to each other than to another domain.
  double same = 0, other = 0;
  for (std::size_t i = 0; i < 39; ++i) {
    same += dot(store.vector(i), store.vector(i + 1));
    other += dot(store.vector(i), store.vector(store.size() - 1 - i));
  }
  CHECK(same > other);
  SynthSpec s;
  s.dim = 16;
  s.domains = 4;
  s.topics_per_domain = 5;
  s.words_per_topic = 40;
  s.seed = 3;
  auto again = synthesize_embeddings(s);
  for (std::size_t i = 0; i < store.size(); i += 101) {
    CHECK(again.token(i) == store.token(i));
    auto a = again.vector(i), b = store.vector(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("tag words respect the separation cap") {
  const auto& store = small_store();
  auto words = pick_tag_words(store, 12, 0.5, 9);
  REQUIRE(words.size() == 12);
  CHECK(std::set<std::size_t>(words.begin(), words.end()).size() == 12);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      CHECK(dot(store.vector(words[i]), store.vector(words[j])) < 0.5);
    }
  }
  CHECK(pick_tag_words(store, 12, 0.5, 9) == words);
}

TEST_CASE("generated benchmark shape") {
  const auto& store = small_store();
  const auto spec = small_spec();
  auto bench = generate(store, spec);
  const auto& lake = bench.lake;
  CHECK(lake.tables().size() == spec.n_tables);
  CHECK(bench.truth.size() == lake.attributes().size());
  CHECK(lake.tag_count() <= spec.n_tags);
  for (const auto& t : lake.tables()) {
    CHECK(t.attributes.size() >= spec.min_attrs);
    CHECK(t.attributes.size() <= spec.max_attrs);
  }
  for (AttrIndex a = 0; a < lake.attributes().size(); ++a) {
    const auto& attr = lake.attribute(a);
    CHECK(attr.values.size() >= spec.min_values);
    CHECK(attr.values.size() <= spec.max_values);
    REQUIRE(bench.truth[a].size() == 1);
    REQUIRE(attr.tags.size() == 1);
    CHECK(lake.tag_name(attr.tags[0]) == bench.truth[a][0]);
    // Values are the nearest words of the tag word.
    const auto tag_vec = *store.find(bench.truth[a][0]);
    auto near = knn(store, tag_vec, attr.values.size());
    std::sort(near.begin(), near.end());
    CHECK(near == attr.values);
  }
}

TEST_CASE("benchmark generation is deterministic") {
  const auto& store = small_store();
  auto a = generate(store, small_spec());
  auto b = generate(store, small_spec());
  auto dir_a = testlib::temp_dir("bench_a"), dir_b = testlib::temp_dir("bench_b");
  write_bench(a, dir_a);
  write_bench(b, dir_b);
  CHECK(testlib::read_file(dir_a / "ground_truth.csv") == testlib::read_file(dir_b / "ground_truth.csv"));
  CHECK(testlib::read_file(dir_a / "metadata.jsonl") == testlib::read_file(dir_b / "metadata.jsonl"));
  auto other = small_spec();
  other.seed = 12;
  auto c = generate(store, other);
  auto dir_c = testlib::temp_dir("bench_c");
  write_bench(c, dir_c);
  CHECK(testlib::read_file(dir_a / "metadata.jsonl") != testlib::read_file(dir_c / "metadata.jsonl"));
}

TEST_CASE("extra tag goes to the nearest other tag word") {
  const auto& store = small_store();
  auto spec = small_spec();
  spec.extra_tag_per_attribute = true;
  auto bench = generate(store, spec);
  std::set<std::string> tag_words;
  for (const auto& t : bench.truth) tag_words.insert(t[0]);
  for (AttrIndex a = 0; a < bench.truth.size(); ++a) {
    REQUIRE(bench.truth[a].size() == 2);
    CHECK(bench.truth[a][0] != bench.truth[a][1]);
    CHECK(bench.lake.attribute(a).tags.size() == 2);
  }
}

TEST_CASE("ground truth round trip") {
  const auto& store = small_store();
  auto bench = generate(store, small_spec());
  auto dir = testlib::temp_dir("bench_truth");
  write_bench(bench, dir);
  auto rows = read_ground_truth(dir / "ground_truth.csv");
  REQUIRE(rows.size() == bench.truth.size());
  for (AttrIndex a = 0; a < bench.truth.size(); ++a) {
    CHECK(rows[a].first == bench.lake.attribute(a).id);
    CHECK(rows[a].second == bench.truth[a][0]);
  }
  CHECK_THROWS_AS(read_ground_truth(dir / "missing.csv"), Error);
}

TEST_CASE("generate rejects degenerate specs") {
  const auto& store = small_store();
  auto spec = small_spec();
  spec.n_tags = 0;
  CHECK_THROWS_AS(generate(store, spec), Error);
  spec = small_spec();
  spec.min_values = 40;
  CHECK_THROWS_AS(generate(store, spec), Error);
  spec = small_spec();
  spec.max_values = store.size() + 1;
  CHECK_THROWS_AS(generate(store, spec), Error);
}
