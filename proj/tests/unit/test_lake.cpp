#include <doctest.h>

#include <algorithm>
#include <set>

#include "core/benchgen.hpp"
#include "core/error.hpp"
#include "core/lake.hpp"
#include "support/testlib.hpp"

using namespace lakeorg;
using testlib::temp_dir;
using testlib::write_file;

namespace {

EmbeddingStore grain_store() {
  EmbeddingStore s(3);
  s.add("wheat", std::vector<double>{1, 0, 0});
  s.add("barley", std::vector<double>{0.9, 0.1, 0});
  s.add("oats", std::vector<double>{0.8, 0.2, 0});
  s.add("farm", std::vector<double>{0, 1, 0});
  s.add("field", std::vector<double>{0, 0.9, 0.1});
  return s;
}

}  // namespace

TEST_CASE("ingest propagates table tags to textual columns") {
  auto dir = temp_dir("lake_ingest");
  std::filesystem::create_directories(dir / "tables");
  write_file(dir / "tables" / "crops.csv", "crop,site,yield\nwheat,farm,12\nbarley,field,7\noats,farm,3\n");
  write_file(dir / "meta.jsonl", R"({"table_id":"crops","name":"Crop yields","csv_path":"crops.csv","tags":["grains"]})"
                                 "\n");
  std::vector<std::string> warnings;
  auto lake = ingest(dir / "tables", dir / "meta.jsonl", grain_store(), {}, &warnings);
  CHECK(warnings.empty());
  REQUIRE(lake.tables().size() == 1);
  REQUIRE(lake.attributes().size() == 2);
  for (const auto& a : lake.attributes()) {
    REQUIRE(a.tags.size() == 1);
    CHECK(lake.tag_name(a.tags[0]) == "grains");
    CHECK(a.topic.covered());
  }
  CHECK(lake.attribute(0).id == "crops.0");
  CHECK(lake.attribute(1).id == "crops.1");
  CHECK(lake.attribute(0).values == std::vector<std::string>{"barley", "oats", "wheat"});
  CHECK(lake.attribute(1).values == std::vector<std::string>{"farm", "field"});
  CHECK(lake.table(0).name == "Crop yields");
}

TEST_CASE("ingest excludes numeric-only tables and missing files with warnings") {
  auto dir = temp_dir("lake_numeric");
  std::filesystem::create_directories(dir / "tables");
  write_file(dir / "tables" / "nums.csv", "a,b\n1,2.5\n3,-4e2\n");
  write_file(dir / "tables" / "uncovered.csv", "a\nxyzzy\nplugh\n");
  write_file(dir / "tables" / "ok.csv", "a\nwheat\n");
  write_file(dir / "meta.jsonl",
             R"({"table_id":"nums","csv_path":"nums.csv","tags":["x"]})"
             "\n"
             R"({"table_id":"gone","csv_path":"gone.csv","tags":["x"]})"
             "\n"
             R"({"table_id":"uncovered","csv_path":"uncovered.csv","tags":["x"]})"
             "\n"
             R"({"table_id":"ok","csv_path":"ok.csv","tags":["y"]})"
             "\n");
  std::vector<std::string> warnings;
  auto lake = ingest(dir / "tables", dir / "meta.jsonl", grain_store(), {}, &warnings);
  REQUIRE(lake.tables().size() == 1);
  CHECK(lake.table(0).id == "ok");
  for (const char* id : {"nums", "gone", "uncovered"}) {
    CHECK(std::any_of(warnings.begin(), warnings.end(),
                      [&](const std::string& w) { return w.find(id) != std::string::npos; }));
  }
  // Tags whose attributes all vanished are not part of the vocabulary.
  CHECK(lake.tag_count() == 1);
}

TEST_CASE("ingest text threshold is configurable") {
  auto dir = temp_dir("lake_threshold");
  std::filesystem::create_directories(dir / "tables");
  write_file(dir / "tables" / "mix.csv", "a\nwheat\n1\n2\n");
  write_file(dir / "meta.jsonl", R"({"table_id":"mix","csv_path":"mix.csv","tags":["x"]})"
                                 "\n");
  CHECK(ingest(dir / "tables", dir / "meta.jsonl", grain_store()).attributes().empty());
  IngestOptions loose;
  loose.text_threshold = 0.3;
  CHECK(ingest(dir / "tables", dir / "meta.jsonl", grain_store(), loose).attributes().size() == 1);
}

TEST_CASE("ingest errors") {
  auto dir = temp_dir("lake_errors");
  try {
    ingest(dir, dir / "none.jsonl", grain_store());
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
  write_file(dir / "bad.jsonl", "{\"table_id\": 3\n");
  try {
    ingest(dir, dir / "bad.jsonl", grain_store());
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("column_tags override table tags per column") {
  auto dir = temp_dir("lake_coltags");
  std::filesystem::create_directories(dir / "tables");
  write_file(dir / "tables" / "t.csv", "crop,site\nwheat,farm\n");
  write_file(dir / "meta.jsonl",
             R"({"table_id":"t","csv_path":"t.csv","tags":["grains"],"column_tags":{"site":["places"]}})"
             "\n");
  auto lake = ingest(dir / "tables", dir / "meta.jsonl", grain_store());
  REQUIRE(lake.attributes().size() == 2);
  CHECK(lake.tag_name(lake.attribute(1).tags.at(0)) == "places");
  // Table tags absorb column tags.
  CHECK(lake.table(0).tags.size() == 2);
}

TEST_CASE("data_of_tag and the tag index") {
  Rng rng(4);
  auto lake = testlib::random_lake(rng, 6, 40);
  std::size_t total = 0;
  std::set<AttrIndex> seen;
  for (TagId t = 0; t < lake.tag_count(); ++t) {
    auto d = lake.data(t);
    total += d.size();
    for (AttrIndex a : d) {
      const auto& tags = lake.attribute(a).tags;
      CHECK(std::find(tags.begin(), tags.end(), t) != tags.end());
      seen.insert(a);
    }
    CHECK(lake.data_of_tag(lake.tag_name(t)).size() == d.size());
  }
  CHECK(total == lake.association_count());
  CHECK(seen.size() <= lake.attributes().size());
  CHECK(lake.data_of_tag("no-such-tag").empty());
  // Attribute tags are a subset of the owning table's.
  for (const auto& a : lake.attributes()) {
    const auto& tt = lake.table(a.table).tags;
    for (TagId t : a.tags) CHECK(std::find(tt.begin(), tt.end(), t) != tt.end());
  }
}

TEST_CASE("data_of_tag with three attributes") {
  auto lake = testlib::lake_of({{{1, 0}, {"x"}}, {{0, 1}, {"x"}}, {{1, 1}, {"x", "y"}}, {{1, 2}, {"y"}}});
  CHECK(lake.data_of_tag("x") == std::vector<std::string>{"t0.0", "t1.0", "t2.0"});
  CHECK(lake.data_of_tag("y").size() == 2);
}

TEST_CASE("save_lake / load_lake round trip") {
  Rng rng(6);
  auto lake = testlib::random_lake(rng, 5, 30);
  auto dir = temp_dir("lake_save");
  save_lake(lake, dir / "lake.json");
  auto back = load_lake(dir / "lake.json");
  REQUIRE(back.attributes().size() == lake.attributes().size());
  REQUIRE(back.tag_count() == lake.tag_count());
  for (std::size_t i = 0; i < lake.attributes().size(); ++i) {
    const auto& a = lake.attribute(i);
    const auto& b = back.attribute(i);
    CHECK(a.id == b.id);
    CHECK(a.tags == b.tags);
    CHECK(a.topic.support == b.topic.support);
    CHECK(a.topic.mean == b.topic.mean);
  }
  // Saving again yields identical bytes.
  save_lake(back, dir / "lake2.json");
  CHECK(testlib::read_file(dir / "lake.json") == testlib::read_file(dir / "lake2.json"));
}

TEST_CASE("generated lake round-trips through CSV export and ingest") {
  SynthSpec ss;
  ss.domains = 4;
  ss.topics_per_domain = 5;
  ss.words_per_topic = 60;
  auto store = synthesize_embeddings(ss);
  BenchSpec spec;
  spec.n_tags = 12;
  spec.n_tables = 15;
  spec.max_values = 60;
  spec.max_attrs = 6;
  auto bench = generate(store, spec);
  auto dir = temp_dir("lake_roundtrip");
  write_bench(bench, dir);
  auto back = ingest(dir / "tables", dir / "metadata.jsonl", store);
  const auto& lake = bench.lake;
  REQUIRE(back.tables().size() == lake.tables().size());
  REQUIRE(back.attributes().size() == lake.attributes().size());
  for (std::size_t i = 0; i < lake.attributes().size(); ++i) {
    const auto& a = lake.attribute(i);
    const auto& b = back.attribute(i);
    CHECK(a.id == b.id);
    CHECK(a.name == b.name);
    CHECK(a.values == b.values);
    CHECK(a.topic.support == b.topic.support);
    for (std::size_t d = 0; d < a.topic.dim(); ++d) CHECK(b.topic.mean[d] == doctest::Approx(a.topic.mean[d]));
    std::vector<std::string> ta, tb;
    for (TagId t : a.tags) ta.push_back(lake.tag_name(t));
    for (TagId t : b.tags) tb.push_back(back.tag_name(t));
    CHECK(ta == tb);
  }
  // Deterministic: ingesting again gives the same lake file.
  auto again = ingest(dir / "tables", dir / "metadata.jsonl", store);
  save_lake(back, dir / "a.json");
  save_lake(again, dir / "b.json");
  CHECK(testlib::read_file(dir / "a.json") == testlib::read_file(dir / "b.json"));
}

TEST_CASE("subset and strip_tags") {
  Rng rng(9);
  auto lake = testlib::random_lake(rng, 4, 20);
  std::vector<AttrIndex> keep{0, 3, 5};
  auto sub = subset(lake, keep);
  CHECK(sub.attributes().size() == 3);
  CHECK(sub.attribute(1).id == lake.attribute(3).id);
  auto bare = strip_tags(lake);
  CHECK(bare.tag_count() == 0);
  CHECK(bare.attributes().size() == lake.attributes().size());
}

TEST_CASE("parse_csv") {
  auto rows = parse_csv("\xEF\xBB\xBFh1,h2\r\n\"a,b\",\"say \"\"hi\"\"\"\r\nx,\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"h1", "h2"});
  CHECK(rows[1] == std::vector<std::string>{"a,b", "say \"hi\""});
  CHECK(rows[2] == std::vector<std::string>{"x", ""});
  CHECK(parse_csv("a\n\"multi\nline\"\n")[1][0] == "multi\nline");
  CHECK_THROWS_AS(parse_csv("\"open"), Error);
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("looks_numeric") {
  CHECK(looks_numeric("12"));
  CHECK(looks_numeric(" -3.5e2 "));
  CHECK_FALSE(looks_numeric("12abc"));
  CHECK_FALSE(looks_numeric("wheat"));
}
