#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "core/lake.hpp"
#include "core/navmodel.hpp"
#include "core/organization.hpp"

namespace lakeorg {

/// Partition of attributes into blocks, each stood in for by its medoid.
struct Representatives {
  double fraction = 1.0;
  std::vector<AttrIndex> reps;                 // medoid of each block
  std::vector<std::vector<AttrIndex>> blocks;  // members, ascending; parallel to reps
};

/// ceil(fraction * |scope|) blocks by k-medoids on attribute topic vectors
/// under cosine distance. An empty scope means every lake attribute.
Representatives select_representatives(const DataLake& lake, double fraction, std::uint64_t seed = 0,
                                       std::span<const AttrIndex> scope = {});

/// One query group per block restricted to `attrs`; blocks left empty are
/// dropped. Attributes outside every block become singleton groups.
std::vector<QueryGroup> rep_groups(const DataLake& lake, std::span<const AttrIndex> attrs,
                                   const Representatives& reps);

nlohmann::json to_json(const Representatives& reps, const DataLake& lake);
Representatives reps_from_json(const nlohmann::json& j, const DataLake& lake);

/// P * (1 - exp(-gamma' * (1 - kappa))): bound on the change of a transition
/// probability P when the query moves to a topic at cosine kappa.
double error_factor(double gamma_prime, double kappa);

/// Bound on |P(s_i|m,A) - P(s_i|m,rho)| with gamma' = gamma / |ch(m)|.
double transition_error_bound(const Organization& org, StateId m, StateId s_i,
                              std::span<const double> a, std::span<const double> rho);

/// Product of the path's transitions under A times the product of each
/// step's error factor. `path` runs from the root to a leaf.
double path_error_bound(const Organization& org, std::span<const StateId> path,
                        std::span<const double> a, std::span<const double> rho);

/// P(s|m,A) * (1 - exp(-gamma' * (1 - kappa(s_old, s_new)))).
double staleness_bound(const Organization& org, StateId m, StateId s, const TopicVector& s_old,
                       const TopicVector& s_new, std::span<const double> a);

struct StalenessReport {
  double max_factor = 0.0;  // largest relative transition error over all edges
  StateId worst_state = kNoState;
  bool rebuild = false;
};

/// Compares the organization's state topics with those implied by an updated
/// lake (same attribute ids). A rebuild is due when some transition can move
/// by more than `threshold` of its current value.
StalenessReport staleness(const Organization& org, const DataLake& old_lake, const DataLake& new_lake,
                          double threshold = 0.05);

}  // namespace lakeorg
