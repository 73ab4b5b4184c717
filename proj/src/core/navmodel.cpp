#include "core/navmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "core/approx.hpp"
#include "core/error.hpp"
#include "core/parallel.hpp"

namespace lakeorg {

// --- reference formulas ------------------------------------------------------------

std::vector<double> transition_probs(const Organization& org, StateId s, std::span<const double> x) {
  const State& st = org.state(s);
  const std::size_t n = st.children.size();
  std::vector<double> p(n);
  if (n == 0) return p;
  const double g = org.gamma() / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = cosine(org.state(st.children[i]).topic.mean, x);
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(g * (p[i] - top));
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

double transition_prob(const Organization& org, StateId s, StateId c, std::span<const double> x) {
  const auto& ch = org.state(s).children;
  auto it = std::lower_bound(ch.begin(), ch.end(), c);
  if (it == ch.end() || *it != c) {
    fail(ErrorCode::invalid_argument,
         "state " + std::to_string(c) + " is not a child of " + std::to_string(s));
  }
  return transition_probs(org, s, x)[static_cast<std::size_t>(it - ch.begin())];
}

std::vector<StateId> topological_order(const Organization& org) {
  std::vector<std::size_t> indeg(org.capacity(), 0);
  const auto ids = org.ids();
  for (StateId id : ids) {
    for (StateId c : org.state(id).children) ++indeg[c];
  }
  // Min-heap on id keeps the order deterministic and independent of storage.
  std::vector<StateId> heap;
  for (StateId id : ids) {
    if (indeg[id] == 0) heap.push_back(id);
  }
  std::make_heap(heap.begin(), heap.end(), std::greater<>());
  std::vector<StateId> order;
  order.reserve(ids.size());
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), std::greater<>());
    const StateId id = heap.back();
    heap.pop_back();
    order.push_back(id);
    for (StateId c : org.state(id).children) {
      if (--indeg[c] == 0) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end(), std::greater<>());
      }
    }
  }
  if (order.size() != ids.size()) fail(ErrorCode::validation, "organization has a cycle");
  return order;
}

std::vector<double> reach_probs(const Organization& org, std::span<const double> x) {
  std::vector<double> reach(org.capacity(), 0.0);
  reach[org.root()] = 1.0;
  for (StateId s : topological_order(org)) {
    const auto& ch = org.state(s).children;
    if (ch.empty() || reach[s] == 0.0) continue;
    const auto p = transition_probs(org, s, x);
    for (std::size_t i = 0; i < ch.size(); ++i) reach[ch[i]] += p[i] * reach[s];
  }
  return reach;
}

double brute_force_reach(const Organization& org, StateId target, std::span<const double> x,
                         std::size_t max_paths) {
  if (!org.exists(target)) fail(ErrorCode::not_found, "no state " + std::to_string(target));
  // Only walk states that can still reach the target.
  std::vector<bool> useful(org.capacity(), false);
  std::vector<StateId> stack{target};
  useful[target] = true;
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    for (StateId p : org.state(s).parents) {
      if (!useful[p]) {
        useful[p] = true;
        stack.push_back(p);
      }
    }
  }
  std::size_t paths = 0;
  double total = 0.0;
  std::function<void(StateId, double)> walk = [&](StateId s, double prob) {
    if (s == target) {
      if (++paths > max_paths) fail(ErrorCode::inapplicable, "path enumeration guard exceeded");
      total += prob;
      return;
    }
    const auto& ch = org.state(s).children;
    if (ch.empty()) return;
    const auto p = transition_probs(org, s, x);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (useful[ch[i]]) walk(ch[i], prob * p[i]);
    }
  };
  walk(org.root(), 1.0);
  return total;
}

double discovery_prob_attribute(const Organization& org, const DataLake& lake, AttrIndex a) {
  const StateId leaf = org.leaf_of(a);
  if (leaf == kNoState) fail(ErrorCode::not_found, "attribute " + lake.attribute(a).id + " is not organized");
  return reach_probs(org, lake.attribute(a).topic.mean)[leaf];
}

double complement_product(std::span<const double> probs) {
  double miss = 1.0;
  for (double p : probs) miss *= 1.0 - p;
  return 1.0 - miss;
}

std::vector<double> reachability(const Organization& org, const DataLake& lake) {
  std::vector<double> sum(org.capacity(), 0.0);
  const auto attrs = org.attributes();
  for (AttrIndex a : attrs) {
    const auto r = reach_probs(org, lake.attribute(a).topic.mean);
    for (std::size_t i = 0; i < r.size(); ++i) sum[i] += r[i];
  }
  for (auto& v : sum) v /= static_cast<double>(attrs.size());
  return sum;
}

// --- similarity index ------------------------------------------------------------------

SimilarityIndex::SimilarityIndex(const DataLake& lake, double theta) : theta_(theta) {
  const std::size_t n = lake.attributes().size();
  std::vector<std::vector<double>> dirs(n);
  for (std::size_t a = 0; a < n; ++a) dirs[a] = unit(lake.attribute(static_cast<AttrIndex>(a)).topic.mean);
  nbrs_.resize(n);
  parallel_for(n, [&](std::size_t a) {
    auto& out = nbrs_[a];
    out.push_back(static_cast<AttrIndex>(a));
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a && dot(dirs[a], dirs[b]) >= theta) out.push_back(static_cast<AttrIndex>(b));
    }
  });
}

// --- fast evaluator ----------------------------------------------------------------------

namespace {

std::atomic<std::uint64_t> next_context{1};

struct Scratch {
  std::vector<double> reach;
  std::vector<std::uint32_t> mark;
  std::uint32_t stamp = 0;
  std::vector<StateId> order;
  std::vector<std::pair<StateId, std::size_t>> stack;
  std::vector<double> weights;

  void begin(std::size_t capacity) {
    if (reach.size() < capacity) {
      reach.resize(capacity, 0.0);
      mark.resize(capacity, 0);
    }
    if (++stamp == 0) {
      std::fill(mark.begin(), mark.end(), 0);
      stamp = 1;
    }
    order.clear();
  }
};

thread_local Scratch scratch;

/// Transition probabilities of a state whose children are leaves, computed
/// from the children's unit directions.
void softmax_into(const Organization& org, const State& s, std::span<const double> query, double gp,
                  std::vector<double>& out) {
  double top = -2.0;
  for (std::size_t i = 0; i < s.children.size(); ++i) {
    out[i] = dot(org.state(s.children[i]).direction, query);
    top = std::max(top, out[i]);
  }
  double z = 0.0;
  for (double& v : out) {
    v = std::exp(gp * (v - top));
    z += v;
  }
  for (double& v : out) v /= z;
}

}  // namespace

std::vector<QueryGroup> exact_groups(const DataLake& lake, std::span<const AttrIndex> attrs) {
  std::vector<QueryGroup> out;
  out.reserve(attrs.size());
  for (AttrIndex a : attrs) out.push_back({unit(lake.attribute(a).topic.mean), {a}});
  return out;
}

Evaluator::Evaluator(const DataLake& lake, std::span<const AttrIndex> attrs,
                     std::vector<QueryGroup> groups)
    : lake_(&lake), attrs_(attrs.begin(), attrs.end()), groups_(std::move(groups)),
      context_(next_context.fetch_add(1)) {
  position_.assign(lake.attributes().size(), -1);
  for (std::size_t i = 0; i < attrs_.size(); ++i) position_[attrs_[i]] = static_cast<std::int64_t>(i);
  group_of_.assign(attrs_.size(), ~std::uint32_t{0});
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (AttrIndex a : groups_[g].members) {
      if (position_[a] < 0) fail(ErrorCode::invalid_argument, "group member outside evaluation scope");
      group_of_[static_cast<std::size_t>(position_[a])] = static_cast<std::uint32_t>(g);
    }
  }
  for (auto g : group_of_) {
    if (g == ~std::uint32_t{0}) fail(ErrorCode::invalid_argument, "attribute without a query group");
  }
  for (const auto& table : lake.tables()) {
    std::vector<std::size_t> members;
    for (AttrIndex a : table.attributes) {
      if (position_[a] >= 0) members.push_back(static_cast<std::size_t>(position_[a]));
    }
    if (!members.empty()) table_members_.push_back(std::move(members));
  }
}

const std::vector<double>& Evaluator::sims(const State& s) const { return s.sims->values; }

bool Evaluator::trans_valid(const Organization& org, const State& s) const {
  if (!s.trans || s.trans->context != context_ || s.trans->signature.size() != s.children.size()) return false;
  for (std::size_t i = 0; i < s.children.size(); ++i) {
    const auto& [id, stamp] = s.trans->signature[i];
    if (id != s.children[i] || stamp != org.state(id).topic_stamp) return false;
  }
  return true;
}

void Evaluator::ensure_cache(const Organization& org) const {
  std::vector<const State*> stale_sims, stale_trans;
  for (StateId id : org.ids()) {
    const State& s = org.state(id);
    if (s.kind == StateKind::interior || s.kind == StateKind::tag) {
      if (!s.sims || s.sims->context != context_) stale_sims.push_back(&s);
    }
    if ((s.kind == StateKind::interior || s.kind == StateKind::root) && !trans_valid(org, s)) {
      stale_trans.push_back(&s);
    }
  }
  parallel_for(stale_sims.size(), [&](std::size_t i) {
    auto row = std::make_shared<SimRow>();
    row->context = context_;
    row->values.resize(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) row->values[g] = dot(stale_sims[i]->direction, groups_[g].query);
    stale_sims[i]->sims = std::move(row);
  });
  // Children of root and interior states are never leaves, so their
  // similarity rows exist by now.
  parallel_for(stale_trans.size(), [&](std::size_t i) {
    const State& s = *stale_trans[i];
    const std::size_t n = s.children.size();
    auto row = std::make_shared<TransRow>();
    row->context = context_;
    for (StateId c : s.children) row->signature.emplace_back(c, org.state(c).topic_stamp);
    row->probs.resize(n * groups_.size());
    const double gp = org.gamma() / static_cast<double>(n);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      double* p = row->probs.data() + g * n;
      double top = -2.0;
      for (std::size_t i2 = 0; i2 < n; ++i2) {
        p[i2] = sims(org.state(s.children[i2]))[g];
        top = std::max(top, p[i2]);
      }
      double z = 0.0;
      for (std::size_t i2 = 0; i2 < n; ++i2) {
        p[i2] = std::exp(gp * (p[i2] - top));
        z += p[i2];
      }
      for (std::size_t i2 = 0; i2 < n; ++i2) p[i2] /= z;
    }
    s.trans = std::move(row);
  });
}

void Evaluator::propagate(const Organization& org, const QueryGroup& g, std::size_t gi,
                          std::vector<double>& out) const {
  Scratch& sc = scratch;
  sc.begin(org.capacity());
  // Upward DFS post-order over the ancestor closure of the group's leaves
  // yields parents before children.
  for (AttrIndex a : g.members) {
    const StateId leaf = org.leaf_of(a);
    if (sc.mark[leaf] == sc.stamp) continue;
    sc.mark[leaf] = sc.stamp;
    sc.stack.assign(1, {leaf, 0});
    while (!sc.stack.empty()) {
      const StateId x = sc.stack.back().first;
      const auto& ps = org.state(x).parents;
      const std::size_t i = sc.stack.back().second++;
      if (i < ps.size()) {
        const StateId p = ps[i];
        if (sc.mark[p] != sc.stamp) {
          sc.mark[p] = sc.stamp;
          sc.stack.push_back({p, 0});
        }
      } else {
        sc.order.push_back(x);
        sc.stack.pop_back();
      }
    }
  }
  for (StateId x : sc.order) sc.reach[x] = 0.0;
  sc.reach[org.root()] = 1.0;
  for (StateId x : sc.order) {
    const State& s = org.state(x);
    if (s.children.empty() || sc.reach[x] == 0.0) continue;
    const double rx = sc.reach[x];
    if (s.kind != StateKind::tag) {
      const double* p = s.trans->probs.data() + gi * s.children.size();
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        const StateId c = s.children[i];
        if (sc.mark[c] == sc.stamp) sc.reach[c] += p[i] * rx;
      }
      continue;
    }
    const double gp = org.gamma() / static_cast<double>(s.children.size());
    sc.weights.resize(s.children.size());
    softmax_into(org, s, g.query, gp, sc.weights);
    for (std::size_t i = 0; i < s.children.size(); ++i) {
      const StateId c = s.children[i];
      if (sc.mark[c] == sc.stamp) sc.reach[c] += sc.weights[i] * rx;
    }
  }
  for (AttrIndex a : g.members) {
    out[static_cast<std::size_t>(position_[a])] = sc.reach[org.leaf_of(a)];
  }
}

double Evaluator::effectiveness(std::span<const double> discovery) const {
  if (table_members_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& members : table_members_) {
    double miss = 1.0;
    for (std::size_t i : members) miss *= 1.0 - discovery[i];
    sum += 1.0 - miss;
  }
  return sum / static_cast<double>(table_members_.size());
}

Evaluator::Result Evaluator::full(const Organization& org, EvalStats* stats) const {
  for (AttrIndex a : attrs_) {
    if (org.leaf_of(a) == kNoState) fail(ErrorCode::invalid_argument, "attribute in scope has no leaf");
  }
  ensure_cache(org);
  Result r;
  r.discovery.assign(attrs_.size(), 0.0);
  parallel_for(groups_.size(), [&](std::size_t g) { propagate(org, groups_[g], g, r.discovery); });
  r.effectiveness = effectiveness(r.discovery);
  if (stats) {
    stats->attributes_evaluated = attrs_.size();
    stats->groups_evaluated = groups_.size();
  }
  return r;
}

Evaluator::Result Evaluator::partial(const Organization& org, const Result& base,
                                     std::span<const AttrIndex> affected, EvalStats* stats) const {
  ensure_cache(org);
  std::vector<std::uint32_t> todo;
  for (AttrIndex a : affected) {
    if (a >= position_.size() || position_[a] < 0) continue;
    todo.push_back(group_of_[static_cast<std::size_t>(position_[a])]);
  }
  std::sort(todo.begin(), todo.end());
  todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
  Result r;
  r.discovery = base.discovery;
  parallel_for(todo.size(), [&](std::size_t i) { propagate(org, groups_[todo[i]], todo[i], r.discovery); });
  r.effectiveness = effectiveness(r.discovery);
  if (stats) {
    stats->groups_evaluated = todo.size();
    stats->attributes_evaluated = 0;
    for (auto g : todo) stats->attributes_evaluated += groups_[g].members.size();
  }
  return r;
}

std::vector<double> Evaluator::reachability(const Organization& org, bool include_leaves) const {
  ensure_cache(org);
  // Only states that distribute probability are visited; tag states are
  // skipped unless leaves are wanted, since their children are leaves.
  std::vector<const State*> inner;
  std::vector<StateId> targets;
  for (StateId x : topological_order(org)) {
    const State& s = org.state(x);
    if (s.kind != StateKind::leaf || include_leaves) targets.push_back(x);
    if (s.kind == StateKind::root || s.kind == StateKind::interior ||
        (s.kind == StateKind::tag && include_leaves)) {
      inner.push_back(&s);
    }
  }
  const std::size_t cap = org.capacity();
  const std::size_t chunks = std::min<std::size_t>(groups_.size(), 64);
  std::vector<std::vector<double>> partial_sums(chunks, std::vector<double>(cap, 0.0));
  parallel_for(chunks, [&](std::size_t k) {
    const std::size_t lo = k * groups_.size() / chunks;
    const std::size_t hi = (k + 1) * groups_.size() / chunks;
    std::vector<double> reach(cap, 0.0);
    std::vector<double> w;
    auto& acc = partial_sums[k];
    for (std::size_t gi = lo; gi < hi; ++gi) {
      const auto& g = groups_[gi];
      for (StateId x : targets) reach[x] = 0.0;
      reach[org.root()] = 1.0;
      for (const State* s : inner) {
        const double rx = reach[s->id];
        if (rx == 0.0) continue;
        if (s->kind != StateKind::tag) {
          const double* p = s->trans->probs.data() + gi * s->children.size();
          for (std::size_t i = 0; i < s->children.size(); ++i) reach[s->children[i]] += p[i] * rx;
          continue;
        }
        const double gp = org.gamma() / static_cast<double>(s->children.size());
        w.resize(s->children.size());
        softmax_into(org, *s, g.query, gp, w);
        for (std::size_t i = 0; i < s->children.size(); ++i) reach[s->children[i]] += w[i] * rx;
      }
      const double weight = static_cast<double>(g.members.size());
      for (StateId x : targets) acc[x] += weight * reach[x];
    }
  });
  std::vector<double> out(cap, 0.0);
  for (const auto& part : partial_sums) {
    for (StateId x : targets) out[x] += part[x];
  }
  for (auto& v : out) v /= static_cast<double>(attrs_.size());
  return out;
}

// --- reports ------------------------------------------------------------------------------

std::vector<double> attribute_discovery(const Organization& org, const DataLake& lake,
                                        const Representatives* reps) {
  const auto attrs = org.attributes();
  Evaluator ev(lake, attrs, reps ? rep_groups(lake, attrs, *reps) : exact_groups(lake, attrs));
  const auto r = ev.full(org);
  std::vector<double> out(lake.attributes().size(), -1.0);
  for (std::size_t i = 0; i < attrs.size(); ++i) out[attrs[i]] = r.discovery[i];
  return out;
}

EvalReport evaluate(std::span<const Organization> orgs, const DataLake& lake,
                    const SimilarityIndex& sims, const EvalOptions& options) {
  const std::size_t n_attrs = lake.attributes().size();
  std::vector<std::vector<double>> disc;
  for (const auto& org : orgs) disc.push_back(attribute_discovery(org, lake, options.reps));

  EvalReport rep;
  rep.attr_discovery.assign(n_attrs, -1.0);
  for (std::size_t a = 0; a < n_attrs; ++a) {
    double miss = 1.0;
    bool any = false;
    for (const auto& d : disc) {
      if (d[a] >= 0) {
        any = true;
        miss *= 1.0 - d[a];
      }
    }
    if (any) rep.attr_discovery[a] = 1.0 - miss;
  }

  // Success of an attribute within one dimension, counting only organized
  // neighbours of that dimension.
  std::vector<std::vector<double>> success(disc.size(), std::vector<double>(n_attrs, 0.0));
  for (std::size_t i = 0; i < disc.size(); ++i) {
    parallel_for(n_attrs, [&](std::size_t a) {
      double miss = 1.0;
      for (AttrIndex b : sims.neighbours(static_cast<AttrIndex>(a))) {
        if (disc[i][b] >= 0) miss *= 1.0 - disc[i][b];
      }
      success[i][a] = 1.0 - miss;
    });
  }

  double sum_d = 0.0, sum_s = 0.0;
  for (TableIndex t = 0; t < lake.tables().size(); ++t) {
    const auto& table = lake.table(t);
    bool in_scope = false;
    double miss_d = 1.0, miss_s = 1.0;
    for (std::size_t i = 0; i < disc.size(); ++i) {
      double md = 1.0, ms = 1.0;
      for (AttrIndex a : table.attributes) {
        if (disc[i][a] >= 0) {
          in_scope = true;
          md *= 1.0 - disc[i][a];
        }
        ms *= 1.0 - success[i][a];
      }
      miss_d *= md;
      miss_s *= ms;
    }
    if (!in_scope) continue;
    rep.tables.push_back(t);
    rep.table_discovery.push_back(1.0 - miss_d);
    rep.table_success.push_back(1.0 - miss_s);
    sum_d += 1.0 - miss_d;
    sum_s += 1.0 - miss_s;
  }
  if (!rep.tables.empty()) {
    rep.effectiveness = sum_d / static_cast<double>(rep.tables.size());
    rep.mean_success = sum_s / static_cast<double>(rep.tables.size());
  }
  return rep;
}

}  // namespace lakeorg
