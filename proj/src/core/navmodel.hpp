#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "core/lake.hpp"
#include "core/organization.hpp"

namespace lakeorg {

// --- reference formulas ------------------------------------------------------------
// Direct transcriptions of the model, used for small organizations and as
// oracles for the evaluator below. Queries are raw topic means.

/// Softmax over ch(s) of (gamma/|ch(s)|) * cosine(child, x).
double transition_prob(const Organization& org, StateId s, StateId c, std::span<const double> x);

/// All transition probabilities out of s, in children order.
std::vector<double> transition_probs(const Organization& org, StateId s, std::span<const double> x);

/// Reach probability of every state (indexed by id; 0 for unused ids),
/// propagated in topological order from the root.
std::vector<double> reach_probs(const Organization& org, std::span<const double> x);

/// Sum over every root-to-s path of the product of its transitions. Refuses
/// (inapplicable) once more than max_paths paths have been enumerated.
double brute_force_reach(const Organization& org, StateId s, std::span<const double> x,
                         std::size_t max_paths = 1'000'000);

/// Reach of A's leaf under its own topic.
double discovery_prob_attribute(const Organization& org, const DataLake& lake, AttrIndex a);

/// 1 - prod(1 - p).
double complement_product(std::span<const double> probs);

/// Reach of every state averaged over the organized attributes as queries.
std::vector<double> reachability(const Organization& org, const DataLake& lake);

/// Topological order of live states (Kahn, ties by ascending id).
std::vector<StateId> topological_order(const Organization& org);

// --- evaluation reports ----------------------------------------------------------------

/// For every lake attribute, the attributes whose topic cosine to it is at
/// least theta. The attribute itself is always listed first.
class SimilarityIndex {
 public:
  SimilarityIndex(const DataLake& lake, double theta);
  std::span<const AttrIndex> neighbours(AttrIndex a) const { return nbrs_[a]; }
  double theta() const { return theta_; }

 private:
  double theta_;
  std::vector<std::vector<AttrIndex>> nbrs_;
};

struct EvalReport {
  std::vector<double> attr_discovery;  // by AttrIndex; -1 when not organized
  std::vector<TableIndex> tables;      // in-scope tables, ascending
  std::vector<double> table_discovery; // parallel to tables
  std::vector<double> table_success;   // parallel to tables
  double effectiveness = 0.0;
  double mean_success = 0.0;
};

struct Representatives;

struct EvalOptions {
  double theta = 0.9;
  /// When set, each attribute's query topic is its representative's.
  const Representatives* reps = nullptr;
};

/// Discovery and success of every table over one or more dimensions. Tables
/// with no organized attribute in any dimension are out of scope.
EvalReport evaluate(std::span<const Organization> orgs, const DataLake& lake,
                    const SimilarityIndex& sims, const EvalOptions& options = {});

/// Attribute discovery probabilities via the fast evaluator (by AttrIndex,
/// -1 when not organized).
std::vector<double> attribute_discovery(const Organization& org, const DataLake& lake,
                                        const Representatives* reps = nullptr);

// --- fast evaluator -----------------------------------------------------------------------

/// Attributes evaluated against one shared query topic.
struct QueryGroup {
  std::vector<double> query;          // unit direction
  std::vector<AttrIndex> members;
};

std::vector<QueryGroup> exact_groups(const DataLake& lake, std::span<const AttrIndex> attrs);

struct EvalStats {
  std::size_t attributes_evaluated = 0;
  std::size_t groups_evaluated = 0;
};

/// Effectiveness of organizations over a fixed attribute scope. Similarities
/// between non-leaf states and queries are cached on the states themselves,
/// so repeated evaluation of related organizations only pays for changed
/// states. Leaf similarities are computed on the fly.
class Evaluator {
 public:
  Evaluator(const DataLake& lake, std::span<const AttrIndex> attrs, std::vector<QueryGroup> groups);

  struct Result {
    std::vector<double> discovery;  // parallel to attrs()
    double effectiveness = 0.0;
  };

  std::span<const AttrIndex> attrs() const { return attrs_; }
  std::size_t group_count() const { return groups_.size(); }

  Result full(const Organization& org, EvalStats* stats = nullptr) const;
  /// Re-evaluates only groups with a member among `affected`; everything
  /// else is copied from `base`.
  Result partial(const Organization& org, const Result& base, std::span<const AttrIndex> affected,
                 EvalStats* stats = nullptr) const;

  /// Reach of every non-leaf state averaged over the scope (weighted by group
  /// size). Leaves get 0 unless include_leaves.
  std::vector<double> reachability(const Organization& org, bool include_leaves = false) const;

  double effectiveness(std::span<const double> discovery) const;

 private:
  /// Brings similarity and transition caches of every state up to date.
  void ensure_cache(const Organization& org) const;
  const std::vector<double>& sims(const State& s) const;
  bool trans_valid(const Organization& org, const State& s) const;
  void propagate(const Organization& org, const QueryGroup& g, std::size_t gi,
                 std::vector<double>& out) const;

  const DataLake* lake_;
  std::vector<AttrIndex> attrs_;
  std::vector<std::int64_t> position_;  // AttrIndex -> index in attrs_, -1 if absent
  std::vector<QueryGroup> groups_;
  std::vector<std::uint32_t> group_of_;  // by position
  std::vector<std::vector<std::size_t>> table_members_;  // positions per in-scope table
  std::uint64_t context_;
};

}  // namespace lakeorg
