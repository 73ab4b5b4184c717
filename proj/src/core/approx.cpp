#include "core/approx.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "core/error.hpp"
#include "core/kmedoids.hpp"

namespace lakeorg {

using json = nlohmann::json;

Representatives select_representatives(const DataLake& lake, double fraction, std::uint64_t seed,
                                       std::span<const AttrIndex> scope) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::invalid_argument, "representative fraction must lie in (0, 1]");
  }
  std::vector<AttrIndex> attrs(scope.begin(), scope.end());
  if (attrs.empty()) {
    for (AttrIndex a = 0; a < lake.attributes().size(); ++a) attrs.push_back(a);
  }
  Representatives out;
  out.fraction = fraction;
  if (attrs.empty()) return out;
  const auto n = attrs.size();
  const auto k = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  std::vector<std::vector<double>> dirs(n);
  for (std::size_t i = 0; i < n; ++i) dirs[i] = unit(lake.attribute(attrs[i]).topic.mean);
  const auto c = kmedoids(
      n, std::max<std::size_t>(k, 1),
      [&](std::size_t i, std::size_t j) { return 1.0 - dot(dirs[i], dirs[j]); }, seed,
      MedoidMethod::alternate);
  out.blocks.resize(c.medoids.size());
  for (std::size_t m : c.medoids) out.reps.push_back(attrs[m]);
  for (std::size_t i = 0; i < n; ++i) out.blocks[c.assignment[i]].push_back(attrs[i]);
  return out;
}

std::vector<QueryGroup> rep_groups(const DataLake& lake, std::span<const AttrIndex> attrs,
                                   const Representatives& reps) {
  std::vector<bool> wanted(lake.attributes().size(), false);
  for (AttrIndex a : attrs) wanted[a] = true;
  std::vector<QueryGroup> out;
  for (std::size_t b = 0; b < reps.blocks.size(); ++b) {
    QueryGroup g;
    g.query = unit(lake.attribute(reps.reps[b]).topic.mean);
    for (AttrIndex a : reps.blocks[b]) {
      if (wanted[a]) {
        g.members.push_back(a);
        wanted[a] = false;
      }
    }
    if (!g.members.empty()) out.push_back(std::move(g));
  }
  for (AttrIndex a : attrs) {
    if (wanted[a]) out.push_back({unit(lake.attribute(a).topic.mean), {a}});
  }
  return out;
}

json to_json(const Representatives& reps, const DataLake& lake) {
  json blocks = json::array();
  for (std::size_t b = 0; b < reps.blocks.size(); ++b) {
    std::vector<std::string> members;
    for (AttrIndex a : reps.blocks[b]) members.push_back(lake.attribute(a).id);
    blocks.push_back({{"rep_attribute_id", lake.attribute(reps.reps[b]).id}, {"members", members}});
  }
  return {{"fraction", reps.fraction}, {"blocks", std::move(blocks)}};
}

Representatives reps_from_json(const json& j, const DataLake& lake) {
  auto find = [&](const json& id) {
    auto a = lake.find_attribute(id.get<std::string>());
    if (!a) fail(ErrorCode::parse, "unknown attribute " + id.dump());
    return *a;
  };
  try {
    Representatives out;
    out.fraction = j.at("fraction").get<double>();
    for (const auto& b : j.at("blocks")) {
      out.reps.push_back(find(b.at("rep_attribute_id")));
      std::vector<AttrIndex> members;
      for (const auto& m : b.at("members")) members.push_back(find(m));
      if (members.empty()) fail(ErrorCode::parse, "representative block without members");
      std::sort(members.begin(), members.end());
      out.blocks.push_back(std::move(members));
    }
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("representatives schema: ") + e.what());
  }
}

double error_factor(double gamma_prime, double kappa) {
  return 1.0 - std::exp(-gamma_prime * (1.0 - kappa));
}

namespace {

double gamma_prime(const Organization& org, StateId m) {
  return org.gamma() / static_cast<double>(org.state(m).children.size());
}

}  // namespace

double transition_error_bound(const Organization& org, StateId m, StateId s_i,
                              std::span<const double> a, std::span<const double> rho) {
  const double p = transition_prob(org, m, s_i, a);
  return p * error_factor(gamma_prime(org, m), cosine(rho, a));
}

double path_error_bound(const Organization& org, std::span<const StateId> path,
                        std::span<const double> a, std::span<const double> rho) {
  if (path.size() < 2 || path.front() != org.root()) {
    fail(ErrorCode::invalid_argument, "path must start at the root and take at least one step");
  }
  const double kappa = cosine(rho, a);
  double prob = 1.0, factor = 1.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    prob *= transition_prob(org, path[i], path[i + 1], a);
    factor *= error_factor(gamma_prime(org, path[i]), kappa);
  }
  if (!org.state(path.back()).children.empty()) fail(ErrorCode::invalid_argument, "path must end at a leaf");
  return prob * factor;
}

double staleness_bound(const Organization& org, StateId m, StateId s, const TopicVector& s_old,
                       const TopicVector& s_new, std::span<const double> a) {
  return transition_prob(org, m, s, a) * error_factor(gamma_prime(org, m), cosine(s_old, s_new));
}

StalenessReport staleness(const Organization& org, const DataLake& old_lake, const DataLake& new_lake,
                          double threshold) {
  StalenessReport rep;
  for (StateId id : org.ids()) {
    const State& s = org.state(id);
    if (s.parents.empty()) continue;
    std::vector<AttrIndex> now;
    for (AttrIndex a : s.attributes) {
      auto b = new_lake.find_attribute(old_lake.attribute(a).id);
      if (b) now.push_back(*b);
    }
    if (now.empty()) continue;
    const double kappa = cosine(s.topic, merged_topic(new_lake, now));
    for (StateId m : s.parents) {
      const double f = error_factor(gamma_prime(org, m), kappa);
      if (f > rep.max_factor) {
        rep.max_factor = f;
        rep.worst_state = id;
      }
    }
  }
  rep.rebuild = rep.max_factor > threshold;
  return rep;
}

}  // namespace lakeorg
