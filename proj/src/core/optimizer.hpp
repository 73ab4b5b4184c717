#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/approx.hpp"
#include "core/lake.hpp"
#include "core/navmodel.hpp"
#include "core/organization.hpp"
#include "core/rng.hpp"

namespace lakeorg {

struct SearchConfig {
  double gamma = 10.0;
  std::size_t max_iterations = 5000;
  std::size_t plateau_window = 50;
  double plateau_epsilon = 1e-4;
  std::uint64_t seed = 0;
  bool use_representatives = true;
  double representative_fraction = 0.10;
  std::size_t dimensions = 1;
  /// Run validate on every chosen candidate before the acceptance test.
  bool validate_candidates = true;
};

SearchConfig config_from_json(const nlohmann::json& j, SearchConfig base = {});
nlohmann::json to_json(const SearchConfig& cfg);

enum class OpKind { none, add_parent, delete_parent };
const char* op_name(OpKind op);

struct TraceRecord {
  std::size_t iteration = 0;
  StateId state = kNoState;
  OpKind op = OpKind::none;
  double effectiveness_before = 0.0;
  double effectiveness_after = 0.0;
  bool accepted = false;
  double best = 0.0;
  std::size_t states_visited = 0;
  std::size_t states_total = 0;
  std::size_t attributes_visited = 0;
  std::size_t attributes_total = 0;
  std::size_t queries_evaluated = 0;
};

struct SearchTrace {
  std::vector<TraceRecord> records;
  std::string exit_reason;  // plateau | max_iterations | no_moves
  double initial_effectiveness = 0.0;
  double final_effectiveness = 0.0;

  /// Mean over records of visited states / total states.
  double mean_visited_state_fraction() const;
  double mean_visited_attribute_fraction() const;
};

void write_trace(const SearchTrace& trace, std::ostream& out, std::size_t dimension = 0);

struct SearchResult {
  Organization org;
  SearchTrace trace;
};

/// Metropolis acceptance: always when p_new >= p_old or p_old <= 0, else with
/// probability p_new / p_old.
bool accept(double p_new, double p_old, Rng& rng);

/// A candidate organization plus the states whose outgoing transitions may
/// have changed.
struct Candidate {
  Organization org;
  std::vector<StateId> pivots;
};

/// Adds the most reachable eligible state one level above s as a new parent
/// and repairs the inclusion property upward. nullopt when inapplicable.
std::optional<Candidate> op_add_parent(const Organization& org, StateId s, const DataLake& lake,
                                       const std::vector<int>& level, const std::vector<double>& reach);

/// Eliminates the least reachable non-root parent of s together with its
/// eliminable siblings. nullopt when inapplicable.
std::optional<Candidate> op_delete_parent(const Organization& org, StateId s,
                                          const std::vector<double>& reach);

struct Affected {
  std::vector<StateId> states;
  std::vector<AttrIndex> attributes;
};

/// States whose reach can differ after the operation (everything below a
/// pivot) and the attributes at their leaves.
Affected affected_subgraph(const Organization& candidate, std::span<const StateId> pivots);

/// States in the order state_to_modify visits them within one level:
/// ascending reachability, ties by id. Leaves and the root are skipped.
std::vector<StateId> level_order(const Organization& org, int level, const std::vector<int>& levels,
                                 const std::vector<double>& reach);

/// Local search from `init`, returning the best organization seen.
SearchResult organize(const DataLake& lake, const Organization& init, const SearchConfig& cfg,
                      const Representatives* reps = nullptr);

/// k groups of tags by k-medoids (PAM) on tag topic vectors; groups ordered
/// by their smallest tag id.
std::vector<std::vector<TagId>> partition_tags(const DataLake& lake, std::size_t k,
                                               std::uint64_t seed);

struct MultiDimResult {
  std::vector<Organization> orgs;
  std::vector<SearchTrace> traces;
  std::vector<std::vector<TagId>> partition;
};

/// Partitions tags, builds the agglomerative initial organization of each
/// group and optimizes the dimensions concurrently.
MultiDimResult build_multidim(const DataLake& lake, const SearchConfig& cfg,
                              const Representatives* reps = nullptr);

}  // namespace lakeorg
