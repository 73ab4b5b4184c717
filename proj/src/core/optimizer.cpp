#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "core/error.hpp"
#include "core/kmedoids.hpp"
#include "core/parallel.hpp"

namespace lakeorg {

using json = nlohmann::json;

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::none: return "none";
    case OpKind::add_parent: return "add_parent";
    case OpKind::delete_parent: return "delete_parent";
  }
  return "?";
}

SearchConfig config_from_json(const json& j, SearchConfig cfg) {
  try {
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.plateau_window = j.value("plateau_window", cfg.plateau_window);
    if (j.contains("plateau_epsilon") && j.at("plateau_epsilon").is_string()) {
      // JSON has no infinity literal.
      cfg.plateau_epsilon = std::stod(j.at("plateau_epsilon").get<std::string>());
    } else {
      cfg.plateau_epsilon = j.value("plateau_epsilon", cfg.plateau_epsilon);
    }
    cfg.seed = j.value("rng_seed", cfg.seed);
    cfg.use_representatives = j.value("use_representatives", cfg.use_representatives);
    cfg.representative_fraction = j.value("representative_fraction", cfg.representative_fraction);
    cfg.dimensions = j.value("dimensions", cfg.dimensions);
  } catch (const std::exception& e) {
    fail(ErrorCode::parse, std::string("search config: ") + e.what());
  }
  if (!(cfg.gamma > 0)) fail(ErrorCode::invalid_argument, "gamma must be positive");
  if (cfg.plateau_window < 1) fail(ErrorCode::invalid_argument, "plateau_window must be >= 1");
  if (!(cfg.representative_fraction > 0 && cfg.representative_fraction <= 1)) {
    fail(ErrorCode::invalid_argument, "representative_fraction must lie in (0, 1]");
  }
  if (cfg.dimensions < 1) fail(ErrorCode::invalid_argument, "dimensions must be >= 1");
  if (cfg.max_iterations < 1) fail(ErrorCode::invalid_argument, "max_iterations must be >= 1");
  return cfg;
}

json to_json(const SearchConfig& cfg) {
  return {{"gamma", cfg.gamma},
          {"max_iterations", cfg.max_iterations},
          {"plateau_window", cfg.plateau_window},
          {"plateau_epsilon", cfg.plateau_epsilon},
          {"rng_seed", cfg.seed},
          {"use_representatives", cfg.use_representatives},
          {"representative_fraction", cfg.representative_fraction},
          {"dimensions", cfg.dimensions}};
}

double SearchTrace::mean_visited_state_fraction() const {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.states_total) sum += static_cast<double>(r.states_visited) / static_cast<double>(r.states_total);
  }
  return sum / static_cast<double>(records.size());
}

double SearchTrace::mean_visited_attribute_fraction() const {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.attributes_total) {
      sum += static_cast<double>(r.attributes_visited) / static_cast<double>(r.attributes_total);
    }
  }
  return sum / static_cast<double>(records.size());
}

void write_trace(const SearchTrace& trace, std::ostream& out, std::size_t dimension) {
  for (const auto& r : trace.records) {
    json j = {{"dimension", dimension},
              {"iteration", r.iteration},
              {"state", r.state},
              {"op", op_name(r.op)},
              {"effectiveness_before", r.effectiveness_before},
              {"effectiveness_after", r.effectiveness_after},
              {"accepted", r.accepted},
              {"best", r.best},
              {"states_visited", r.states_visited},
              {"states_total", r.states_total},
              {"attributes_visited", r.attributes_visited},
              {"attributes_total", r.attributes_total},
              {"queries_evaluated", r.queries_evaluated}};
    out << j.dump() << '\n';
  }
  out << json{{"dimension", dimension},
              {"exit_reason", trace.exit_reason},
              {"initial_effectiveness", trace.initial_effectiveness},
              {"final_effectiveness", trace.final_effectiveness}}
             .dump()
      << '\n';
}

bool accept(double p_new, double p_old, Rng& rng) {
  if (p_old <= 0.0 || p_new >= p_old) return true;
  return rng.uniform() < p_new / p_old;
}

// --- operations ------------------------------------------------------------------------

std::optional<Candidate> op_add_parent(const Organization& org, StateId s, const DataLake& lake,
                                       const std::vector<int>& level, const std::vector<double>& reach) {
  const State& st = org.state(s);
  if (s == org.root() || st.kind == StateKind::leaf) return std::nullopt;
  const int l = level[s];
  if (l < 2) return std::nullopt;
  const auto below = descendants(org, std::span<const StateId>(&s, 1));
  StateId best = kNoState;
  for (StateId n : org.ids()) {
    if (level[n] != l - 1) continue;
    const State& cand = org.state(n);
    if (cand.kind != StateKind::interior) continue;
    if (std::binary_search(st.parents.begin(), st.parents.end(), n)) continue;
    if (std::binary_search(below.begin(), below.end(), n)) continue;
    if (best == kNoState || reach[n] > reach[best]) best = n;
  }
  if (best == kNoState) return std::nullopt;

  Candidate c{org, {best}};
  c.org.add_edge(best, s);
  // Repair inclusion on n and every ancestor of n.
  std::vector<StateId> stack{best};
  std::set<StateId> seen{best};
  while (!stack.empty()) {
    const StateId x = stack.back();
    stack.pop_back();
    const State& xs = c.org.state(x);
    const bool missing =
        !std::includes(xs.attributes.begin(), xs.attributes.end(), st.attributes.begin(), st.attributes.end());
    const bool missing_tags = !std::includes(xs.tags.begin(), xs.tags.end(), st.tags.begin(), st.tags.end());
    if (missing || missing_tags) {
      State& m = c.org.mutate(x);
      std::vector<AttrIndex> attrs;
      std::set_union(m.attributes.begin(), m.attributes.end(), st.attributes.begin(), st.attributes.end(),
                     std::back_inserter(attrs));
      std::vector<TagId> tags;
      std::set_union(m.tags.begin(), m.tags.end(), st.tags.begin(), st.tags.end(), std::back_inserter(tags));
      m.attributes = std::move(attrs);
      m.tags = std::move(tags);
      if (missing) {
        c.org.refresh_topic(x, lake);
        const auto& ps = c.org.state(x).parents;
        c.pivots.insert(c.pivots.end(), ps.begin(), ps.end());
      }
    }
    for (StateId p : c.org.state(x).parents) {
      if (seen.insert(p).second) stack.push_back(p);
    }
  }
  std::sort(c.pivots.begin(), c.pivots.end());
  c.pivots.erase(std::unique(c.pivots.begin(), c.pivots.end()), c.pivots.end());
  return c;
}

namespace {

bool eliminable(const State& x) {
  return x.kind == StateKind::interior && x.tags.size() != 1;
}

StateId least_reachable(std::span<const StateId> ids, const std::vector<double>& reach) {
  StateId best = kNoState;
  for (StateId id : ids) {
    if (best == kNoState || reach[id] < reach[best]) best = id;
  }
  return best;
}

}  // namespace

std::optional<Candidate> op_delete_parent(const Organization& org, StateId s,
                                          const std::vector<double>& reach) {
  const State& st = org.state(s);
  if (s == org.root() || st.kind == StateKind::leaf) return std::nullopt;
  std::vector<StateId> parents;
  for (StateId p : st.parents) {
    if (p != org.root()) parents.push_back(p);
  }
  if (parents.empty()) return std::nullopt;
  const StateId r = least_reachable(parents, reach);
  if (!eliminable(org.state(r))) return std::nullopt;

  std::set<StateId> doomed{r};
  for (StateId g : org.state(r).parents) {
    for (StateId sib : org.state(g).children) {
      if (sib != s && eliminable(org.state(sib))) doomed.insert(sib);
    }
  }

  Candidate c{org, {}};
  std::set<StateId> pivots;
  for (StateId e : doomed) {
    const State copy = c.org.state(e);
    for (StateId p : copy.parents) {
      for (StateId ch : copy.children) c.org.add_edge(p, ch);
      pivots.insert(p);
    }
    c.org.remove_state(e);
  }
  for (StateId p : pivots) {
    if (!doomed.contains(p)) c.pivots.push_back(p);
  }
  return c;
}

Affected affected_subgraph(const Organization& candidate, std::span<const StateId> pivots) {
  Affected out;
  out.states = descendants(candidate, pivots);
  for (StateId id : out.states) {
    const State& s = candidate.state(id);
    if (s.kind == StateKind::leaf) out.attributes.push_back(s.attributes.front());
  }
  std::sort(out.attributes.begin(), out.attributes.end());
  return out;
}

std::vector<StateId> level_order(const Organization& org, int level, const std::vector<int>& levels,
                                 const std::vector<double>& reach) {
  std::vector<StateId> out;
  for (StateId id : org.ids()) {
    const State& s = org.state(id);
    if (levels[id] == level && s.kind != StateKind::leaf && s.kind != StateKind::root) out.push_back(id);
  }
  std::stable_sort(out.begin(), out.end(), [&](StateId a, StateId b) {
    if (reach[a] != reach[b]) return reach[a] < reach[b];
    return a < b;
  });
  return out;
}

// --- search ------------------------------------------------------------------------------

namespace {

struct Evaluated {
  Candidate cand;
  OpKind op;
  Evaluator::Result result;
  Affected affected;
  EvalStats stats;
};

}  // namespace

SearchResult organize(const DataLake& lake, const Organization& init, const SearchConfig& cfg,
                      const Representatives* reps) {
  if (auto report = validate(init); !report.empty()) {
    fail(ErrorCode::validation, "initial organization invalid: " + report.front());
  }
  Organization current = init;
  current.set_gamma(cfg.gamma);
  const auto attrs = current.attributes();
  Evaluator ev(lake, attrs, reps ? rep_groups(lake, attrs, *reps) : exact_groups(lake, attrs));
  Rng rng(cfg.seed);

  auto cur = ev.full(current);
  auto lv = levels(current);
  auto reach = ev.reachability(current);

  SearchResult out{current, {}};
  out.trace.initial_effectiveness = cur.effectiveness;
  double best = cur.effectiveness;
  std::size_t last_gain = 0;

  int max_level = *std::max_element(lv.begin(), lv.end());
  int scan_level = 1;
  std::vector<StateId> queue = level_order(current, scan_level, lv, reach);
  std::size_t pos = 0;
  bool sweep_had_move = false;

  std::size_t iter = 0;
  out.trace.exit_reason = "max_iterations";
  while (iter < cfg.max_iterations) {
    if (iter - last_gain >= cfg.plateau_window) {
      out.trace.exit_reason = "plateau";
      break;
    }
    // state_to_modify: level by level, least reachable first.
    if (pos >= queue.size()) {
      ++scan_level;
      if (scan_level > max_level) {
        if (!sweep_had_move) {
          out.trace.exit_reason = "no_moves";
          break;
        }
        sweep_had_move = false;
        scan_level = 1;
      }
      queue = level_order(current, scan_level, lv, reach);
      pos = 0;
      continue;
    }
    const StateId s = queue[pos++];

    // choose_apply_op: DELETE_PARENT is tried first and wins ties.
    std::optional<Evaluated> chosen;
    auto consider = [&](std::optional<Candidate> cand, OpKind op) {
      if (!cand) return;
      Evaluated e{std::move(*cand), op, {}, {}, {}};
      e.affected = affected_subgraph(e.cand.org, e.cand.pivots);
      e.result = ev.partial(e.cand.org, cur, e.affected.attributes, &e.stats);
      if (!chosen || e.result.effectiveness > chosen->result.effectiveness) chosen = std::move(e);
    };
    consider(op_delete_parent(current, s, reach), OpKind::delete_parent);
    consider(op_add_parent(current, s, lake, lv, reach), OpKind::add_parent);
    if (!chosen) continue;
    sweep_had_move = true;
    ++iter;

    if (cfg.validate_candidates) {
      if (auto report = validate(chosen->cand.org); !report.empty()) {
        fail(ErrorCode::validation, std::string(op_name(chosen->op)) + " produced an invalid organization: " +
                                        report.front());
      }
    }
    TraceRecord rec;
    rec.iteration = iter;
    rec.state = s;
    rec.op = chosen->op;
    rec.effectiveness_before = cur.effectiveness;
    rec.effectiveness_after = chosen->result.effectiveness;
    rec.states_visited = chosen->affected.states.size();
    rec.states_total = chosen->cand.org.size();
    rec.attributes_visited = chosen->affected.attributes.size();
    rec.attributes_total = attrs.size();
    rec.queries_evaluated = chosen->stats.groups_evaluated;
    rec.accepted = accept(chosen->result.effectiveness, cur.effectiveness, rng);

    if (rec.accepted) {
      current = std::move(chosen->cand.org);
      cur = std::move(chosen->result);
      lv = levels(current);
      reach = ev.reachability(current);
      max_level = *std::max_element(lv.begin(), lv.end());
      if (cur.effectiveness > best && cur.effectiveness - best > cfg.plateau_epsilon * best) {
        best = cur.effectiveness;
        last_gain = iter;
        out.org = current;
      }
      // Restart the scan of this level with refreshed reachabilities.
      scan_level = std::min(scan_level, max_level);
      queue = level_order(current, scan_level, lv, reach);
      pos = 0;
    }
    rec.best = best;
    out.trace.records.push_back(rec);
  }
  out.trace.final_effectiveness = best;
  return out;
}

// --- multi-dimensional -------------------------------------------------------------------

std::vector<std::vector<TagId>> partition_tags(const DataLake& lake, std::size_t k, std::uint64_t seed) {
  const std::size_t n = lake.tag_count();
  if (k == 0 || k > n) fail(ErrorCode::invalid_argument, "cannot partition " + std::to_string(n) +
                                                             " tags into " + std::to_string(k) + " groups");
  std::vector<std::vector<double>> dirs(n);
  for (TagId t = 0; t < n; ++t) dirs[t] = unit(merged_topic(lake, lake.data(t)).mean);
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = 1.0 - dot(dirs[i], dirs[j]);
  }
  const auto c = kmedoids(
      n, k, [&](std::size_t i, std::size_t j) { return dist[i * n + j]; }, seed, MedoidMethod::pam);
  std::vector<std::vector<TagId>> groups(k);
  for (std::size_t t = 0; t < n; ++t) groups[c.assignment[t]].push_back(static_cast<TagId>(t));
  std::sort(groups.begin(), groups.end());
  return groups;
}

MultiDimResult build_multidim(const DataLake& lake, const SearchConfig& cfg, const Representatives* reps) {
  MultiDimResult out;
  if (cfg.dimensions == 1) {
    std::vector<TagId> all;
    for (TagId t = 0; t < lake.tag_count(); ++t) all.push_back(t);
    out.partition.push_back(std::move(all));
  } else {
    out.partition = partition_tags(lake, cfg.dimensions, mix_seed(cfg.seed, 0x7061727469));
  }
  const std::size_t k = out.partition.size();
  std::vector<std::optional<SearchResult>> results(k);
  parallel_for(k, [&](std::size_t i) {
    const auto init = initial_org(lake, out.partition[i], cfg.gamma);
    SearchConfig dim_cfg = cfg;
    dim_cfg.seed = k == 1 ? cfg.seed : mix_seed(cfg.seed, i + 1);
    results[i] = organize(lake, init, dim_cfg, reps);
  });
  for (auto& r : results) {
    out.orgs.push_back(std::move(r->org));
    out.traces.push_back(std::move(r->trace));
  }
  return out;
}

}  // namespace lakeorg
