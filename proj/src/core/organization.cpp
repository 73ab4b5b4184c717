#include "core/organization.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace lakeorg {

using json = nlohmann::json;

const char* kind_name(StateKind kind) {
  switch (kind) {
    case StateKind::root: return "root";
    case StateKind::interior: return "interior";
    case StateKind::tag: return "tag";
    case StateKind::leaf: return "leaf";
  }
  return "?";
}

namespace {

std::atomic<std::uint64_t> next_topic_stamp{1};

std::optional<StateKind> parse_kind(const std::string& s) {
  if (s == "root") return StateKind::root;
  if (s == "interior") return StateKind::interior;
  if (s == "tag") return StateKind::tag;
  if (s == "leaf") return StateKind::leaf;
  return std::nullopt;
}

template <class T>
void insert_sorted(std::vector<T>& v, T x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}

template <class T>
void erase_sorted(std::vector<T>& v, T x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) v.erase(it);
}

}  // namespace

// --- Organization -------------------------------------------------------------

std::vector<StateId> Organization::ids() const {
  std::vector<StateId> out;
  out.reserve(live_);
  for (StateId i = 0; i < states_.size(); ++i) {
    if (states_[i]) out.push_back(i);
  }
  return out;
}

StateId Organization::leaf_of(AttrIndex a) const {
  auto it = leaves_->find(a);
  return it == leaves_->end() ? kNoState : it->second;
}

std::vector<AttrIndex> Organization::attributes() const {
  std::vector<AttrIndex> out;
  out.reserve(leaves_->size());
  for (const auto& [a, s] : *leaves_) out.push_back(a);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TagId> Organization::tags() const {
  std::vector<TagId> out;
  for (const auto& s : states_) {
    if (s && s->kind == StateKind::tag) out.push_back(s->tags.front());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StateId Organization::add_state(State s) {
  const auto id = static_cast<StateId>(states_.size());
  s.id = id;
  s.sims.reset();
  s.trans.reset();
  if (s.kind == StateKind::leaf) {
    if (s.attributes.size() != 1) fail(ErrorCode::invalid_argument, "leaf must hold one attribute");
    if (leaves_.use_count() > 1) leaves_ = std::make_shared<std::unordered_map<AttrIndex, StateId>>(*leaves_);
    if (!leaves_->emplace(s.attributes.front(), id).second) {
      fail(ErrorCode::invalid_argument, "attribute already has a leaf");
    }
  }
  if (s.kind == StateKind::root) root_ = id;
  states_.push_back(std::make_shared<State>(std::move(s)));
  ++live_;
  return id;
}

State& Organization::mutate(StateId id) {
  auto& ptr = states_.at(id);
  if (!ptr) fail(ErrorCode::not_found, "no state " + std::to_string(id));
  if (ptr.use_count() > 1) ptr = std::make_shared<State>(*ptr);
  return *ptr;
}

void Organization::remove_state(StateId id) {
  const State copy = state(id);
  for (StateId p : copy.parents) erase_sorted(mutate(p).children, id);
  for (StateId c : copy.children) erase_sorted(mutate(c).parents, id);
  if (copy.kind == StateKind::leaf) {
    if (leaves_.use_count() > 1) leaves_ = std::make_shared<std::unordered_map<AttrIndex, StateId>>(*leaves_);
    leaves_->erase(copy.attributes.front());
  }
  if (id == root_) root_ = kNoState;
  states_[id].reset();
  --live_;
}

void Organization::add_edge(StateId parent, StateId child) {
  insert_sorted(mutate(parent).children, child);
  insert_sorted(mutate(child).parents, parent);
}

void Organization::remove_edge(StateId parent, StateId child) {
  erase_sorted(mutate(parent).children, child);
  erase_sorted(mutate(child).parents, parent);
}

void Organization::refresh_topic(StateId id, const DataLake& lake) {
  State& s = mutate(id);
  s.topic = merged_topic(lake, s.attributes);
  s.direction = unit(s.topic.mean);
  s.topic_stamp = next_topic_stamp.fetch_add(1);
  s.sims.reset();
}

TopicVector merged_topic(const DataLake& lake, std::span<const AttrIndex> attrs) {
  TopicVector t;
  t.mean.assign(lake.dim(), 0.0);
  for (AttrIndex a : attrs) {
    const auto& at = lake.attribute(a).topic;
    const auto w = static_cast<double>(at.support);
    for (std::size_t k = 0; k < t.mean.size(); ++k) t.mean[k] += w * at.mean[k];
    t.support += at.support;
  }
  if (t.support > 0) {
    for (auto& x : t.mean) x /= static_cast<double>(t.support);
  }
  return t;
}

// --- builders ---------------------------------------------------------------------

namespace {

struct TagLevel {
  Organization org;
  std::vector<StateId> tag_states;  // parallel to the selected tags
};

/// Root, tag states and leaves without any root edges yet.
TagLevel tag_level(const DataLake& lake, std::span<const TagId> selected, double gamma) {
  if (lake.tag_count() == 0) {
    fail(ErrorCode::invalid_argument, "lake has no tags; run enrich to transfer tags first");
  }
  std::vector<TagId> tags(selected.begin(), selected.end());
  if (tags.empty()) {
    for (TagId t = 0; t < lake.tag_count(); ++t) tags.push_back(t);
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  for (TagId t : tags) {
    if (t >= lake.tag_count()) fail(ErrorCode::invalid_argument, "unknown tag id");
  }

  TagLevel out{Organization(gamma), {}};
  Organization& org = out.org;
  State root;
  root.kind = StateKind::root;
  root.tags = tags;
  const StateId root_id = org.add_state(std::move(root));

  std::set<AttrIndex> organized;
  for (TagId t : tags) {
    State s;
    s.kind = StateKind::tag;
    s.tags = {t};
    s.attributes.assign(lake.data(t).begin(), lake.data(t).end());
    organized.insert(s.attributes.begin(), s.attributes.end());
    out.tag_states.push_back(org.add_state(std::move(s)));
  }
  if (organized.empty()) fail(ErrorCode::invalid_argument, "selected tags carry no attributes");

  std::map<AttrIndex, StateId> leaf;
  for (AttrIndex a : organized) {
    State s;
    s.kind = StateKind::leaf;
    s.attributes = {a};
    for (TagId t : lake.attribute(a).tags) {
      if (std::binary_search(tags.begin(), tags.end(), t)) s.tags.push_back(t);
    }
    leaf[a] = org.add_state(std::move(s));
  }
  for (std::size_t i = 0; i < tags.size(); ++i) {
    for (AttrIndex a : lake.data(tags[i])) org.add_edge(out.tag_states[i], leaf.at(a));
  }
  org.mutate(root_id).attributes.assign(organized.begin(), organized.end());
  for (StateId id : org.ids()) org.refresh_topic(id, lake);
  return out;
}

}  // namespace

Organization flat_org(const DataLake& lake, std::span<const TagId> tags, double gamma) {
  TagLevel level = tag_level(lake, tags, gamma);
  for (StateId t : level.tag_states) level.org.add_edge(level.org.root(), t);
  return std::move(level.org);
}

Organization initial_org(const DataLake& lake, std::span<const TagId> tags, double gamma) {
  TagLevel level = tag_level(lake, tags, gamma);
  Organization& org = level.org;
  const std::size_t n = level.tag_states.size();
  if (n < 2) {
    for (StateId t : level.tag_states) org.add_edge(org.root(), t);
    return std::move(org);
  }

  // Average linkage via Lance-Williams updates on the cosine-distance matrix.
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = org.state(level.tag_states[i]).topic;
      const auto& b = org.state(level.tag_states[j]).topic;
      dist[i][j] = dist[j][i] = 1.0 - cosine(a, b);
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<StateId> node(level.tag_states.begin(), level.tag_states.end());

  for (std::size_t merge = 0; merge + 1 < n; ++merge) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && dist[i][j] < best) {
          best = dist[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    const bool last = merge + 2 == n;
    StateId merged = org.root();
    if (!last) {
      State s;
      s.kind = StateKind::interior;
      merged = org.add_state(std::move(s));
    }
    {
      State& m = org.mutate(merged);
      const State& a = org.state(node[bi]);
      const State& b = org.state(node[bj]);
      std::vector<TagId> tg;
      std::set_union(a.tags.begin(), a.tags.end(), b.tags.begin(), b.tags.end(),
                     std::back_inserter(tg));
      std::vector<AttrIndex> at;
      std::set_union(a.attributes.begin(), a.attributes.end(), b.attributes.begin(),
                     b.attributes.end(), std::back_inserter(at));
      m.tags = std::move(tg);
      m.attributes = std::move(at);
    }
    org.add_edge(merged, node[bi]);
    org.add_edge(merged, node[bj]);
    org.refresh_topic(merged, lake);

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double d = (static_cast<double>(size[bi]) * dist[k][bi] +
                        static_cast<double>(size[bj]) * dist[k][bj]) /
                       static_cast<double>(size[bi] + size[bj]);
      dist[k][bi] = dist[bi][k] = d;
    }
    size[bi] += size[bj];
    active[bj] = false;
    node[bi] = merged;
  }
  return std::move(org);
}

// --- structure queries ---------------------------------------------------------------

std::vector<std::string> validate(const Organization& org) {
  std::vector<std::string> report;
  auto bad = [&](std::string msg) { report.push_back(std::move(msg)); };
  const auto ids = org.ids();
  if (!org.exists(org.root())) {
    bad("root state missing");
    return report;
  }
  std::size_t parentless = 0;
  std::map<AttrIndex, int> leaf_count;
  // For the state id being checked: member[a] == id + 1 marks a in D_id,
  // found[a] == id + 1 marks a as found under some child.
  std::vector<StateId> member, found;
  for (StateId id : ids) {
    const State& s = org.state(id);
    const auto name_of = [id] { return "state " + std::to_string(id); };
    if (s.parents.empty()) ++parentless;
    for (StateId c : s.children) {
      if (!org.exists(c)) {
        bad(name_of() + ": dangling child " + std::to_string(c));
        continue;
      }
      if (!std::binary_search(org.state(c).parents.begin(), org.state(c).parents.end(), id)) {
        bad(name_of() + ": child " + std::to_string(c) + " does not list it as parent");
      }
    }
    for (StateId p : s.parents) {
      if (!org.exists(p)) {
        bad(name_of() + ": dangling parent " + std::to_string(p));
        continue;
      }
      if (!std::binary_search(org.state(p).children.begin(), org.state(p).children.end(), id)) {
        bad(name_of() + ": parent " + std::to_string(p) + " does not list it as child");
      }
    }
    const bool leaf = s.kind == StateKind::leaf;
    if (leaf != s.children.empty() || leaf != (s.attributes.size() == 1 && s.children.empty())) {
      bad(name_of() + ": leaf kind, empty children and single attribute disagree");
    }
    if (leaf) {
      ++leaf_count[s.attributes.empty() ? 0 : s.attributes.front()];
      for (StateId p : s.parents) {
        if (org.exists(p) && org.state(p).kind != StateKind::tag) {
          bad(name_of() + ": leaf parent " + std::to_string(p) + " is not a tag state");
        }
      }
    }
    if (s.kind == StateKind::tag) {
      if (s.tags.size() != 1) bad(name_of() + ": tag state must carry exactly one tag");
      for (StateId c : s.children) {
        if (org.exists(c) && org.state(c).kind != StateKind::leaf) {
          bad(name_of() + ": tag state child " + std::to_string(c) + " is not a leaf");
        }
      }
    }
    if (s.kind == StateKind::root && id != org.root()) bad(name_of() + ": second root");
    if (id == org.root() && !s.parents.empty()) bad("root has parents");
    if (!leaf) {
      // D_s equals the union of the children iff every child is a subset and
      // together they cover |D_s| distinct attributes.
      bool subset = true;
      std::size_t covered = 0;
      for (AttrIndex a : s.attributes) {
        if (a >= member.size()) member.resize(a + 1, 0);
        member[a] = id + 1;
      }
      for (StateId c : s.children) {
        if (!org.exists(c)) continue;
        for (AttrIndex a : org.state(c).attributes) {
          if (a >= member.size() || member[a] != id + 1) {
            subset = false;
            continue;
          }
          if (a >= found.size()) found.resize(member.size(), 0);
          if (found[a] != id + 1) {
            found[a] = id + 1;
            ++covered;
          }
        }
      }
      if (!subset || covered != s.attributes.size()) {
        bad(name_of() + ": inclusion property violated (D_s differs from union of children)");
      }
    }
  }
  if (parentless != 1) bad("expected exactly one parentless state, found " + std::to_string(parentless));
  for (const auto& [a, n] : leaf_count) {
    if (n != 1) bad("attribute " + std::to_string(a) + " appears in " + std::to_string(n) + " leaves");
  }

  // Kahn's algorithm for acyclicity, then reachability from the root.
  std::vector<std::size_t> indeg(org.capacity(), 0);
  for (StateId id : ids) {
    for (StateId c : org.state(id).children) {
      if (org.exists(c)) ++indeg[c];
    }
  }
  std::vector<StateId> stack;
  for (StateId id : ids) {
    if (indeg[id] == 0) stack.push_back(id);
  }
  std::size_t seen = 0;
  while (!stack.empty()) {
    const StateId id = stack.back();
    stack.pop_back();
    ++seen;
    for (StateId c : org.state(id).children) {
      if (org.exists(c) && --indeg[c] == 0) stack.push_back(c);
    }
  }
  if (seen != ids.size()) bad("cycle detected");

  std::vector<bool> reached(org.capacity(), false);
  stack = {org.root()};
  reached[org.root()] = true;
  while (!stack.empty()) {
    const StateId id = stack.back();
    stack.pop_back();
    for (StateId c : org.state(id).children) {
      if (org.exists(c) && !reached[c]) {
        reached[c] = true;
        stack.push_back(c);
      }
    }
  }
  for (StateId id : ids) {
    if (!reached[id]) bad("state " + std::to_string(id) + " unreachable from root (orphan)");
  }
  return report;
}

std::vector<int> levels(const Organization& org) {
  std::vector<int> level(org.capacity(), -1);
  std::queue<StateId> q;
  level[org.root()] = 0;
  q.push(org.root());
  while (!q.empty()) {
    const StateId id = q.front();
    q.pop();
    for (StateId c : org.state(id).children) {
      if (level[c] < 0) {
        level[c] = level[id] + 1;
        q.push(c);
      }
    }
  }
  for (StateId id : org.ids()) {
    if (level[id] < 0) fail(ErrorCode::validation, "state " + std::to_string(id) + " unreachable");
  }
  return level;
}

std::vector<StateId> descendants(const Organization& org, std::span<const StateId> from) {
  std::vector<bool> seen(org.capacity(), false);
  std::vector<StateId> stack;
  for (StateId s : from) {
    if (!seen[s]) {
      seen[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const StateId id = stack.back();
    stack.pop_back();
    for (StateId c : org.state(id).children) {
      if (!seen[c]) {
        seen[c] = true;
        stack.push_back(c);
      }
    }
  }
  std::vector<StateId> out;
  for (StateId i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(i);
  }
  return out;
}

// --- labels ------------------------------------------------------------------------

namespace {

void label_tags(const Organization& org, const DataLake& lake, StateId id,
                std::vector<std::optional<std::vector<TagId>>>& memo) {
  if (memo[id]) return;
  const State& s = org.state(id);
  std::vector<TagId> chosen;
  if (s.kind == StateKind::tag) {
    chosen = s.tags;
  } else if (s.kind == StateKind::interior) {
    std::map<TagId, std::size_t> freq;
    for (AttrIndex a : s.attributes) {
      for (TagId t : lake.attribute(a).tags) {
        if (std::binary_search(s.tags.begin(), s.tags.end(), t)) ++freq[t];
      }
    }
    std::vector<std::pair<std::size_t, TagId>> ranked;
    for (auto [t, n] : freq) ranked.push_back({n, t});
    std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      return lake.tag_name(x.second) < lake.tag_name(y.second);
    });
    std::vector<std::vector<TagId>> child_tags;
    for (StateId c : s.children) {
      label_tags(org, lake, c, memo);
      child_tags.push_back(*memo[c]);
    }
    auto same_child = [&](TagId a, TagId b) {
      for (const auto& ct : child_tags) {
        if (std::find(ct.begin(), ct.end(), a) != ct.end() &&
            std::find(ct.begin(), ct.end(), b) != ct.end()) {
          return true;
        }
      }
      return false;
    };
    if (!ranked.empty()) {
      const TagId first = ranked.front().second;
      chosen.push_back(first);
      for (std::size_t i = 1; i < ranked.size(); ++i) {
        if (!same_child(first, ranked[i].second)) {
          chosen.push_back(ranked[i].second);
          break;
        }
      }
      if (chosen.size() == 1 && ranked.size() > 1) chosen.push_back(ranked[1].second);
    }
  }
  memo[id] = std::move(chosen);
}

}  // namespace

std::vector<std::string> labels(const Organization& org, const DataLake& lake) {
  std::vector<std::optional<std::vector<TagId>>> memo(org.capacity());
  std::vector<std::string> out(org.capacity());
  for (StateId id : org.ids()) {
    const State& s = org.state(id);
    switch (s.kind) {
      case StateKind::root:
        out[id] = "root";
        break;
      case StateKind::leaf:
        out[id] = lake.table(lake.attribute(s.attributes.front()).table).name;
        break;
      default: {
        label_tags(org, lake, id, memo);
        std::string text;
        for (TagId t : *memo[id]) {
          if (!text.empty()) text += ", ";
          text += lake.tag_name(t);
        }
        out[id] = text;
      }
    }
  }
  return out;
}

std::string label(const Organization& org, StateId s, const DataLake& lake) {
  if (!org.exists(s)) fail(ErrorCode::not_found, "no state " + std::to_string(s));
  return labels(org, lake)[s];
}

std::vector<StateId> display_children(const Organization& org, StateId s) {
  std::vector<StateId> out = org.state(s).children;
  std::stable_sort(out.begin(), out.end(), [&](StateId a, StateId b) {
    const auto na = org.state(a).attributes.size();
    const auto nb = org.state(b).attributes.size();
    if (na != nb) return na > nb;
    return a < b;
  });
  return out;
}

// --- serialization -------------------------------------------------------------------

json to_json(const Organization& org, const DataLake& lake) {
  json states = json::array();
  for (StateId id : org.ids()) {
    const State& s = org.state(id);
    std::vector<std::string> tags;
    for (TagId t : s.tags) tags.push_back(lake.tag_name(t));
    std::vector<std::string> attrs;
    for (AttrIndex a : s.attributes) attrs.push_back(lake.attribute(a).id);
    states.push_back({{"id", id},
                      {"kind", kind_name(s.kind)},
                      {"tags", tags},
                      {"attributes", attrs},
                      {"children", display_children(org, id)}});
  }
  return {{"gamma", org.gamma()}, {"root", org.root()}, {"states", std::move(states)}};
}

Organization org_from_json(const json& j, const DataLake& lake) {
  try {
    Organization org(j.at("gamma").get<double>());
    if (!(org.gamma() > 0)) fail(ErrorCode::parse, "gamma must be positive");
    const auto root = j.at("root").get<StateId>();
    struct Pending {
      State state;
      std::vector<StateId> children;
    };
    std::map<StateId, Pending> pending;
    for (const auto& js : j.at("states")) {
      Pending p;
      p.state.id = js.at("id").get<StateId>();
      const auto kind = parse_kind(js.at("kind").get<std::string>());
      if (!kind) fail(ErrorCode::parse, "unknown state kind " + js.at("kind").dump());
      p.state.kind = *kind;
      for (const auto& t : js.at("tags")) {
        auto id = lake.find_tag(t.get<std::string>());
        if (!id) fail(ErrorCode::parse, "unknown tag " + t.dump());
        p.state.tags.push_back(*id);
      }
      std::sort(p.state.tags.begin(), p.state.tags.end());
      for (const auto& a : js.at("attributes")) {
        auto id = lake.find_attribute(a.get<std::string>());
        if (!id) fail(ErrorCode::parse, "unknown attribute " + a.dump());
        p.state.attributes.push_back(*id);
      }
      std::sort(p.state.attributes.begin(), p.state.attributes.end());
      p.children = js.at("children").get<std::vector<StateId>>();
      if (!pending.emplace(p.state.id, std::move(p)).second) {
        fail(ErrorCode::parse, "duplicate state id " + std::to_string(p.state.id));
      }
    }
    if (!pending.contains(root)) fail(ErrorCode::parse, "root id does not name a state");
    if (pending.at(root).state.kind != StateKind::root) fail(ErrorCode::parse, "root state has wrong kind");

    // Ids are preserved; gaps are filled with placeholders removed afterwards.
    const StateId cap = pending.rbegin()->first + 1;
    for (StateId id = 0; id < cap; ++id) {
      auto it = pending.find(id);
      if (it == pending.end()) {
        State hole;
        hole.kind = StateKind::interior;
        org.add_state(std::move(hole));
      } else {
        org.add_state(it->second.state);
      }
    }
    for (StateId id = 0; id < cap; ++id) {
      if (!pending.contains(id)) org.remove_state(id);
    }
    for (const auto& [id, p] : pending) {
      for (StateId c : p.children) {
        if (!pending.contains(c)) {
          fail(ErrorCode::parse, "state " + std::to_string(id) + " has dangling child " + std::to_string(c));
        }
        org.add_edge(id, c);
      }
    }
    org.set_root(root);
    for (StateId id : org.ids()) org.refresh_topic(id, lake);
    auto report = validate(org);
    if (!report.empty()) fail(ErrorCode::validation, "invalid organization: " + report.front());
    return org;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("organization schema: ") + e.what());
  }
}

void save_organizations(std::span<const Organization> orgs, const DataLake& lake,
                        const std::filesystem::path& path) {
  json j;
  if (orgs.size() == 1) {
    j = to_json(orgs.front(), lake);
  } else {
    j["dimensions"] = json::array();
    for (const auto& org : orgs) j["dimensions"].push_back(to_json(org, lake));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

std::vector<Organization> load_organizations(const std::filesystem::path& path,
                                             const DataLake& lake) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
  std::vector<Organization> out;
  if (j.contains("dimensions")) {
    for (const auto& d : j.at("dimensions")) out.push_back(org_from_json(d, lake));
  } else {
    out.push_back(org_from_json(j, lake));
  }
  return out;
}

}  // namespace lakeorg
