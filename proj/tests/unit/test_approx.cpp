#include <doctest.h>

#include <cmath>
#include <set>

#include "core/approx.hpp"
#include "core/error.hpp"
#include "support/testlib.hpp"

using namespace lakeorg;
using testlib::lake_of;

namespace {

/// Any root-to-leaf path of the organization, following first children.
std::vector<StateId> first_path(const Organization& org) {
  std::vector<StateId> path{org.root()};
  while (!org.state(path.back()).children.empty()) path.push_back(org.state(path.back()).children.front());
  return path;
}

}  // namespace

TEST_CASE("representatives partition the scope") {
  Rng rng(300);
  for (int trial = 0; trial < 10; ++trial) {
    auto lake = testlib::random_lake(rng, 4, 20 + rng.below(60));
    const double f = 0.05 + 0.9 * rng.uniform();
    auto reps = select_representatives(lake, f, rng.next());
    const auto n = lake.attributes().size();
    CHECK(reps.reps.size() == static_cast<std::size_t>(std::ceil(f * n - 1e-9)));
    CHECK(reps.blocks.size() == reps.reps.size());
    std::set<AttrIndex> seen;
    for (std::size_t b = 0; b < reps.blocks.size(); ++b) {
      CHECK(std::find(reps.blocks[b].begin(), reps.blocks[b].end(), reps.reps[b]) != reps.blocks[b].end());
      for (AttrIndex a : reps.blocks[b]) CHECK(seen.insert(a).second);
    }
    CHECK(seen.size() == n);
  }
}

TEST_CASE("fraction one reproduces exact evaluation") {
  Rng rng(301);
  auto lake = testlib::random_lake(rng, 5, 40);
  auto org = initial_org(lake);
  auto reps = select_representatives(lake, 1.0);
  for (const auto& b : reps.blocks) CHECK(b.size() == 1);
  const auto attrs = org.attributes();
  Evaluator exact(lake, attrs, exact_groups(lake, attrs));
  Evaluator approx(lake, attrs, rep_groups(lake, attrs, reps));
  auto e = exact.full(org), a = approx.full(org);
  CHECK(a.effectiveness == doctest::Approx(e.effectiveness).epsilon(1e-12));
  for (std::size_t i = 0; i < attrs.size(); ++i) CHECK(a.discovery[i] == doctest::Approx(e.discovery[i]).epsilon(1e-12));
}

TEST_CASE("identical attributes collapse to one representative") {
  auto lake = lake_of({{{1, 0}, {"a"}}, {{1, 0}, {"a"}}, {{1, 0}, {"b"}}, {{1, 0}, {"b"}}, {{1, 0}, {"b"}}});
  auto reps = select_representatives(lake, 0.2);
  REQUIRE(reps.reps.size() == 1);
  CHECK(reps.blocks[0].size() == 5);
  // With one representative the approximate and exact discoveries agree.
  auto org = flat_org(lake);
  const auto attrs = org.attributes();
  Evaluator exact(lake, attrs, exact_groups(lake, attrs));
  Evaluator approx(lake, attrs, rep_groups(lake, attrs, reps));
  CHECK(approx.full(org).effectiveness == doctest::Approx(exact.full(org).effectiveness));
}

TEST_CASE("representative fraction must be in range") {
  auto lake = lake_of({{{1, 0}, {"a"}}});
  CHECK_THROWS_AS(select_representatives(lake, 0.0), Error);
  CHECK_THROWS_AS(select_representatives(lake, 1.5), Error);
}

TEST_CASE("rep_groups keeps only wanted attributes") {
  Rng rng(302);
  auto lake = testlib::random_lake(rng, 3, 20);
  auto reps = select_representatives(lake, 0.3, 1);
  std::vector<AttrIndex> subset{0, 3, 5, 7};
  auto groups = rep_groups(lake, subset, reps);
  std::set<AttrIndex> got;
  for (const auto& g : groups) {
    CHECK_FALSE(g.members.empty());
    for (AttrIndex a : g.members) CHECK(got.insert(a).second);
  }
  CHECK(got == std::set<AttrIndex>(subset.begin(), subset.end()));
  // Attributes outside every block become singletons.
  Representatives none;
  auto singles = rep_groups(lake, subset, none);
  CHECK(singles.size() == subset.size());
}

TEST_CASE("representatives JSON round trip") {
  Rng rng(303);
  auto lake = testlib::random_lake(rng, 3, 25);
  auto reps = select_representatives(lake, 0.2, 4);
  auto back = reps_from_json(to_json(reps, lake), lake);
  CHECK(back.fraction == reps.fraction);
  CHECK(back.reps == reps.reps);
  CHECK(back.blocks == reps.blocks);
  auto bad = to_json(reps, lake);
  bad["blocks"][0]["rep_attribute_id"] = "nope";
  CHECK_THROWS_AS(reps_from_json(bad, lake), Error);
  CHECK_THROWS_AS(reps_from_json(nlohmann::json{{"fraction", 0.1}}, lake), Error);
}

TEST_CASE("error factor examples") {
  CHECK(error_factor(3.0, 1.0) == 0.0);
  CHECK(error_factor(1e-12, 0.2) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(error_factor(2.0, 0.5) == doctest::Approx(1 - std::exp(-1.0)));
  // Monotone in both gamma' and 1 - kappa.
  CHECK(error_factor(2.0, 0.5) < error_factor(4.0, 0.5));
  CHECK(error_factor(2.0, 0.5) < error_factor(2.0, 0.2));
}

TEST_CASE("transition bound vanishes when the representative is the attribute") {
  Rng rng(304);
  auto lake = testlib::random_lake(rng, 4, 20);
  auto org = initial_org(lake);
  const auto a = testlib::query_of(lake, 0);
  for (StateId m : org.ids()) {
    for (StateId s : org.state(m).children) CHECK(transition_error_bound(org, m, s, a, a) == doctest::Approx(0.0));
  }
}

TEST_CASE("transition bound shrinks with gamma") {
  Rng rng(305);
  auto lake = testlib::random_lake(rng, 4, 20);
  const auto a = testlib::query_of(lake, 0), rho = testlib::query_of(lake, 1);
  auto hi = flat_org(lake, {}, 10.0), lo = flat_org(lake, {}, 1e-8);
  const StateId s = hi.state(hi.root()).children.front();
  CHECK(transition_error_bound(lo, lo.root(), s, a, rho) < 1e-8);
  CHECK(transition_error_bound(hi, hi.root(), s, a, rho) > transition_error_bound(lo, lo.root(), s, a, rho));
}

TEST_CASE("path bound with a single step equals the transition bound") {
  auto lake = lake_of({{{1, 0}, {"a"}}, {{0.6, 0.8}, {"b"}}});
  auto org = flat_org(lake);
  const std::vector<double> a{1, 0}, rho{0.8, 0.6};
  // The flat organization has two steps per path: root -> tag -> leaf; the
  // second step has one child and a factor of its own.
  auto path = first_path(org);
  REQUIRE(path.size() == 3);
  const double kappa = cosine(rho, a);
  const double expect = transition_prob(org, path[0], path[1], a) * error_factor(org.gamma() / 2, kappa) *
                        error_factor(org.gamma(), kappa);
  CHECK(path_error_bound(org, path, a, rho) == doctest::Approx(expect));
  std::vector<StateId> not_leaf{path[0], path[1]};
  CHECK_THROWS_AS(path_error_bound(org, not_leaf, a, rho), Error);
  std::vector<StateId> bad_start{path[1], path[2]};
  CHECK_THROWS_AS(path_error_bound(org, bad_start, a, rho), Error);
}

TEST_CASE("staleness bound") {
  auto lake = lake_of({{{1, 0}, {"a"}}, {{0, 1}, {"b"}}});
  auto org = flat_org(lake);
  const StateId s = org.state(org.root()).children.front();
  const auto& t = org.state(s).topic;
  CHECK(staleness_bound(org, org.root(), s, t, t, testlib::query_of(lake, 0)) == doctest::Approx(0.0));
  TopicVector moved{{0.7, 0.7}, 1};
  CHECK(staleness_bound(org, org.root(), s, t, moved, testlib::query_of(lake, 0)) > 0.0);
}

TEST_CASE("staleness grows monotonically with drift") {
  Rng rng(306);
  auto lake = testlib::random_lake(rng, 4, 30);
  auto org = initial_org(lake);
  const auto u = testlib::random_unit(rng, lake.dim());
  auto drifted = [&](double amount) {
    // Same lake with every topic shifted by amount * u, so each state topic
    // turns monotonically towards u.
    std::vector<TableRecord> recs;
    for (const auto& tb : lake.tables()) {
      TableRecord r;
      r.id = tb.id;
      r.name = tb.name;
      r.tags = {};
      for (AttrIndex ai : tb.attributes) {
        const auto& at = lake.attribute(ai);
        TableRecord::Column c;
        c.id = at.id;
        c.name = at.name;
        c.values = at.values;
        for (TagId t : at.tags) c.tags.push_back(lake.tag_name(t));
        auto m = at.topic.mean;
        for (std::size_t d = 0; d < m.size(); ++d) m[d] += amount * u[d];
        c.topic = TopicVector{m, at.topic.support};
        r.columns.push_back(std::move(c));
      }
      recs.push_back(std::move(r));
    }
    return DataLake(lake.dim(), std::move(recs));
  };
  CHECK(staleness(org, lake, drifted(0.0)).max_factor == doctest::Approx(0.0).epsilon(1e-9));
  double last = -1;
  for (double amount : {0.05, 0.2, 0.5, 1.0, 2.0}) {
    auto rep = staleness(org, lake, drifted(amount));
    CHECK(rep.max_factor >= last - 1e-12);
    last = rep.max_factor;
  }
  CHECK(staleness(org, lake, drifted(2.0), 0.05).rebuild);
  CHECK_FALSE(staleness(org, lake, drifted(0.0), 0.05).rebuild);
}
