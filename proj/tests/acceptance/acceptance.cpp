// Runs every primary acceptance criterion and prints one PASS/FAIL line per
// criterion. argv[1] is the path of the lakeorg CLI (used by the determinism
// check). Exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "core/approx.hpp"
#include "core/benchgen.hpp"
#include "core/enrich.hpp"
#include "core/navmodel.hpp"
#include "core/optimizer.hpp"
#include "support/testlib.hpp"

using namespace lakeorg;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void run(const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = seconds_since(t0);
  if (limit_s > 0 && t > limit_s) {
    o.pass = false;
    o.detail += fmt("; runtime %.1fs exceeds %.0fs", t, limit_s);
  }
  failures += !o.pass;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << fmt(" [%.1fs]", t) << std::endl;
}

/// Default seeded benchmark lake over the default synthetic vocabulary.
const Bench& benchmark_lake() {
  static const Bench bench = [] {
    const auto store = synthesize_embeddings(SynthSpec{});
    return generate(store, BenchSpec{});
  }();
  return bench;
}

std::pair<DataLake, Organization> small_org(Rng& rng, std::size_t max_states) {
  for (;;) {
    auto lake = testlib::random_lake(rng, 2 + rng.below(4), 3 + rng.below(10));
    auto org = testlib::random_org(rng, lake, 0.5 + 30 * rng.uniform(), rng.below(15));
    if (org.size() <= max_states) return {std::move(lake), std::move(org)};
  }
}

double mean_success(const std::vector<Organization>& orgs, const DataLake& lake, const SimilarityIndex& sims) {
  return evaluate(orgs, lake, sims).mean_success;
}

// --- criteria -------------------------------------------------------------------------

Outcome normalization() {
  Rng rng(1);
  double worst = 0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto [lake, org] = small_org(rng, 50);
    for (AttrIndex a = 0; a < lake.attributes().size(); ++a) {
      const auto x = testlib::query_of(lake, a);
      for (StateId s : org.ids()) {
        if (org.state(s).children.empty()) continue;
        auto p = transition_probs(org, s, x);
        worst = std::max(worst, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
        ++checked;
      }
    }
  }
  return {worst <= 1e-9, fmt("%zu (state, query) sums over 100 orgs, max |sum-1| = %.2e", checked, worst)};
}

Outcome oracle_equivalence() {
  Rng rng(2);
  double worst = 0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto [lake, org] = small_org(rng, 15);
    for (AttrIndex a = 0; a < lake.attributes().size(); ++a) {
      const auto x = testlib::query_of(lake, a);
      const auto r = reach_probs(org, x);
      for (StateId s : org.ids()) {
        worst = std::max(worst, std::abs(r[s] - brute_force_reach(org, s, x)));
        ++checked;
      }
    }
  }
  return {worst <= 1e-9, fmt("%zu reach values on 50 DAGs, max abs diff = %.2e", checked, worst)};
}

Outcome bound_soundness() {
  // Triples come from the benchmark's agglomerative organization with its
  // 10% representatives, so representatives are realistic neighbours.
  const auto& lake = benchmark_lake().lake;
  const auto org = initial_org(lake);
  const auto reps = select_representatives(lake, 0.1, 0);
  std::vector<AttrIndex> rep_of(lake.attributes().size());
  for (std::size_t b = 0; b < reps.blocks.size(); ++b) {
    for (AttrIndex a : reps.blocks[b]) rep_of[a] = reps.reps[b];
  }
  std::vector<StateId> inner;
  for (StateId id : org.ids()) {
    if (!org.state(id).children.empty()) inner.push_back(id);
  }
  Rng rng(3);
  std::size_t samples = 0, violations = 0, draws = 0;
  double worst_excess = 0;
  while (samples < 10000 && draws < 10000000) {
    ++draws;
    const StateId m = inner[rng.below(inner.size())];
    const auto& ch = org.state(m).children;
    const StateId si = ch[rng.below(ch.size())];
    const AttrIndex a = static_cast<AttrIndex>(rng.below(lake.attributes().size()));
    const AttrIndex rho = rep_of[a];
    const auto xa = unit(lake.attribute(a).topic.mean), xr = unit(lake.attribute(rho).topic.mean);
    const auto& dir = org.state(si).topic.mean;
    if (cosine(dir, xa) < cosine(dir, xr)) continue;
    ++samples;
    const double err = std::abs(transition_prob(org, m, si, xa) - transition_prob(org, m, si, xr));
    const double bound = transition_error_bound(org, m, si, xa, xr);
    if (err > bound + 1e-12) {
      ++violations;
      worst_excess = std::max(worst_excess, err - bound);
    }
  }
  return {samples == 10000 && violations == 0,
          fmt("%zu triples with k(s,A) >= k(s,rho); %zu exceed the bound (%.2f%%), max excess %.3g", samples,
              violations, 100.0 * violations / std::max<std::size_t>(samples, 1), worst_excess)};
}

struct Builds {
  double flat = 0, clustering = 0, one = 0, two = 0;
  std::vector<Organization> two_orgs;
  double two_seconds = 0;
  SearchTrace one_trace;
};
std::optional<Builds> builds;

Outcome benchmark_ordering() {
  const auto& lake = benchmark_lake().lake;
  SimilarityIndex sims(lake, 0.9);
  Builds b;
  SearchConfig cfg;  // defaults: representatives at 10%
  b.flat = mean_success({flat_org(lake, {}, cfg.gamma)}, lake, sims);
  b.clustering = mean_success({initial_org(lake, {}, cfg.gamma)}, lake, sims);
  {
    const auto reps = select_representatives(lake, cfg.representative_fraction, cfg.seed);
    auto r = build_multidim(lake, cfg, &reps);
    b.one = mean_success(r.orgs, lake, sims);
    b.one_trace = r.traces.front();
  }
  {
    const auto t0 = Clock::now();
    cfg.dimensions = 2;
    const auto reps = select_representatives(lake, cfg.representative_fraction, cfg.seed);
    auto r = build_multidim(lake, cfg, &reps);
    b.two_seconds = seconds_since(t0);
    b.two = mean_success(r.orgs, lake, sims);
    b.two_orgs = std::move(r.orgs);
  }
  builds = b;
  const bool order = b.flat < b.clustering && b.clustering < b.one && b.one <= b.two;
  const bool ratio = b.two >= 5 * b.flat;
  return {order && ratio,
          fmt("mean success flat %.4f, clustering %.4f, 1-dim %.4f, 2-dim %.4f; 2-dim/flat = %.1fx "
              "(ordering %s, ratio %s)",
              b.flat, b.clustering, b.one, b.two, b.two / b.flat, order ? "ok" : "violated",
              ratio ? "ok" : "below 5x")};
}

Outcome approx_fidelity() {
  const auto& lake = benchmark_lake().lake;
  if (!builds) benchmark_ordering();
  SimilarityIndex sims(lake, 0.9);
  // Same final organization evaluated exactly and through 10% representatives.
  const auto reps = select_representatives(lake, 0.1, 0);
  const auto exact = evaluate(builds->two_orgs, lake, sims);
  EvalOptions opt;
  opt.reps = &reps;
  const auto approx = evaluate(builds->two_orgs, lake, sims, opt);
  double diff = 0;
  for (std::size_t i = 0; i < exact.tables.size(); ++i) diff += std::abs(exact.table_success[i] - approx.table_success[i]);
  diff /= static_cast<double>(exact.tables.size());

  SearchConfig cfg;
  cfg.dimensions = 2;
  cfg.use_representatives = false;
  const auto t0 = Clock::now();
  auto r = build_multidim(lake, cfg, nullptr);
  const double exact_s = seconds_since(t0);
  const double ratio = builds->two_seconds / exact_s;
  return {diff <= 0.05 && ratio <= 0.5,
          fmt("mean |success diff| = %.4f (<= 0.05); build approx %.2fs vs exact %.2fs, ratio %.2f (<= 0.5)", diff,
              builds->two_seconds, exact_s, ratio)};
}

Outcome pruning() {
  Rng rng(4);
  double worst = 0;
  int applied = 0;
  while (applied < 20) {
    auto lake = testlib::random_lake(rng, 3 + rng.below(6), 10 + rng.below(15));
    auto org = testlib::random_org(rng, lake, 10.0, rng.below(10));
    if (org.size() > 50) continue;
    const auto attrs = org.attributes();
    Evaluator ev(lake, attrs, exact_groups(lake, attrs));
    const auto base = ev.full(org);
    const auto lv = levels(org);
    const auto reach = ev.reachability(org);
    auto ids = org.ids();
    const StateId s = ids[rng.below(ids.size())];
    auto c = rng.uniform() < 0.5 ? op_add_parent(org, s, lake, lv, reach) : op_delete_parent(org, s, reach);
    if (!c) continue;
    ++applied;
    const auto aff = affected_subgraph(c->org, c->pivots);
    const auto part = ev.partial(c->org, base, aff.attributes);
    const auto full = ev.full(c->org);
    worst = std::max(worst, std::abs(part.effectiveness - full.effectiveness));
    for (std::size_t i = 0; i < attrs.size(); ++i) worst = std::max(worst, std::abs(part.discovery[i] - full.discovery[i]));
  }
  if (!builds) benchmark_ordering();
  const double states = builds->one_trace.mean_visited_state_fraction();
  const double attrs = builds->one_trace.mean_visited_attribute_fraction();
  return {worst <= 1e-9 && states < 1.0,
          fmt("20 operations, max |partial-full| = %.2e; benchmark trace visits %.1f%% of states and %.1f%% of "
              "attributes on average",
              worst, 100 * states, 100 * attrs)};
}

Outcome acceptance_rule() {
  Rng rng(5);
  int yes = 0;
  for (int i = 0; i < 10000; ++i) yes += accept(0.1, 0.2, rng);
  const double freq = yes / 10000.0;
  bool uphill = true;
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(), x = y + (1 - y) * rng.uniform();
    uphill &= accept(x, y, rng);
  }
  return {std::abs(freq - 0.5) <= 0.02 && uphill,
          fmt("accept(0.1, 0.2) frequency %.4f; accept(x >= y) always true: %s", freq, uphill ? "yes" : "no")};
}

Outcome enrichment() {
  // 40 tags so each tag has enough distinct positives to train on.
  BenchSpec spec;
  spec.n_tags = 40;
  const auto bench = generate(synthesize_embeddings(SynthSpec{}), spec);
  const auto& lake = bench.lake;
  std::vector<TableIndex> order(lake.tables().size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(6);
  rng.shuffle(order);
  const std::size_t n_train = order.size() * 8 / 10;
  std::vector<AttrIndex> train, held;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (AttrIndex a : lake.table(order[i]).attributes) (i < n_train ? train : held).push_back(a);
  }
  std::sort(train.begin(), train.end());
  std::sort(held.begin(), held.end());
  std::map<std::string, std::string> truth;
  for (AttrIndex a : held) truth[lake.attribute(a).id] = bench.truth[a].front();

  const auto source = subset(lake, train);
  const auto target = strip_tags(subset(lake, held));
  EnrichConfig cfg;
  const auto cls = train_classifiers(source, cfg);
  const auto out = transfer_tags(cls, target);
  std::size_t hit = 0;
  for (const auto& attr : out.attributes()) {
    for (TagId t : attr.tags) {
      if (out.tag_name(t) == truth.at(attr.id)) {
        ++hit;
        break;
      }
    }
  }
  const double rate = static_cast<double>(hit) / static_cast<double>(out.attributes().size());
  return {rate >= 0.8, fmt("%zu classifiers; %zu of %zu held-out attributes received their generating tag (%.1f%%)",
                           cls.size(), hit, out.attributes().size(), 100 * rate)};
}

Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "CLI path not given"};
  auto pipeline = [&](const std::string& name) {
    const auto dir = testlib::temp_dir("determinism_" + name);
    const std::string d = dir.string();
    const std::string cmds[] = {
        cli + " gen-bench --out " + d + "/bench --lake-out " + d + "/lake.json --seed 7",
        cli + " build --lake " + d + "/lake.json --out " + d + "/org.json --dimensions 2 --seed 3 --trace " + d +
            "/trace.jsonl",
        cli + " eval --lake " + d + "/lake.json --org " + d + "/org.json --out " + d + "/eval.csv --summary " + d +
            "/summary.json",
    };
    for (const auto& c : cmds) {
      if (std::system((c + " > /dev/null").c_str()) != 0) throw std::runtime_error("command failed: " + c);
    }
    return dir;
  };
  const auto a = pipeline("a"), b = pipeline("b");
  std::string differ;
  for (const char* f : {"lake.json", "org.json", "trace.jsonl", "eval.csv", "summary.json", "bench/ground_truth.csv"}) {
    const auto x = testlib::read_file(a / f), y = testlib::read_file(b / f);
    if (x.empty() || x != y) differ += std::string(differ.empty() ? "" : ", ") + f;
  }
  return {differ.empty(), differ.empty() ? "gen-bench, build and eval outputs byte-identical across two runs"
                                         : "outputs differ or are empty: " + differ};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  run("probability normalization", 10, normalization);
  run("oracle equivalence", 30, oracle_equivalence);
  run("approximation bound soundness", 60, bound_soundness);
  run("benchmark ordering", 600, benchmark_ordering);
  run("approximation fidelity and speedup", 0, approx_fidelity);
  run("pruning correctness", 0, pruning);
  run("acceptance rule", 0, acceptance_rule);
  run("enrichment recovery", 300, enrichment);
  run("determinism", 0, [&] { return determinism(cli); });
  std::cout << (failures ? std::to_string(failures) + " of 9 criteria failed" : "all 9 criteria passed")
            << std::endl;
  return failures;
}
