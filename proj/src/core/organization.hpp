#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "core/lake.hpp"

namespace lakeorg {

using StateId = std::uint32_t;
inline constexpr StateId kNoState = ~StateId{0};

enum class StateKind { root, interior, tag, leaf };

const char* kind_name(StateKind kind);

/// Similarities of one state to every query of an evaluation context. Owned by
/// the state so it dies with it; dropped whenever the topic changes.
struct SimRow {
  std::uint64_t context = 0;
  std::vector<double> values;
};

/// Transition probabilities of one state's children for every query of an
/// evaluation context, laid out query-major. Valid while the children and
/// their topic stamps match `signature`.
struct TransRow {
  std::uint64_t context = 0;
  std::vector<std::pair<StateId, std::uint64_t>> signature;
  std::vector<double> probs;
};

struct State {
  StateId id = kNoState;
  StateKind kind = StateKind::interior;
  std::vector<TagId> tags;              // M_s, sorted
  std::vector<AttrIndex> attributes;    // D_s, sorted
  std::vector<StateId> children;        // sorted
  std::vector<StateId> parents;         // sorted
  TopicVector topic;                    // support-weighted mean of member attributes
  std::vector<double> direction;        // unit(topic.mean)
  std::uint64_t topic_stamp = 0;        // changes whenever the topic does
  mutable std::shared_ptr<const SimRow> sims;
  mutable std::shared_ptr<const TransRow> trans;
};

/// Rooted DAG of states. Copies share state storage; a state is cloned the
/// first time a copy mutates it, so candidate organizations are cheap.
class Organization {
 public:
  Organization() = default;
  explicit Organization(double gamma) : gamma_(gamma) {}

  double gamma() const { return gamma_; }
  void set_gamma(double g) { gamma_ = g; }
  StateId root() const { return root_; }
  void set_root(StateId r) { root_ = r; }

  /// Upper bound on state ids; some ids below it may be unused.
  std::size_t capacity() const { return states_.size(); }
  std::size_t size() const { return live_; }
  bool exists(StateId id) const { return id < states_.size() && states_[id] != nullptr; }
  const State& state(StateId id) const { return *states_[id]; }
  std::vector<StateId> ids() const;

  /// Leaf holding an attribute, or kNoState.
  StateId leaf_of(AttrIndex a) const;
  /// Attributes with a leaf, ascending.
  std::vector<AttrIndex> attributes() const;
  /// Tags present at the tag level, ascending.
  std::vector<TagId> tags() const;

  StateId add_state(State s);
  State& mutate(StateId id);
  /// Detaches the state from all neighbours and frees its id.
  void remove_state(StateId id);
  void add_edge(StateId parent, StateId child);
  void remove_edge(StateId parent, StateId child);

  /// Recomputes topic and direction of a state from its attribute set.
  void refresh_topic(StateId id, const DataLake& lake);

 private:
  double gamma_ = 10.0;
  StateId root_ = kNoState;
  std::vector<std::shared_ptr<State>> states_;
  std::size_t live_ = 0;
  std::shared_ptr<std::unordered_map<AttrIndex, StateId>> leaves_ =
      std::make_shared<std::unordered_map<AttrIndex, StateId>>();
};

/// Support-weighted mean of the attributes' topic vectors.
TopicVector merged_topic(const DataLake& lake, std::span<const AttrIndex> attrs);

/// root -> one tag state per tag -> leaves. `tags` restricts the tag set
/// (empty = all tags of the lake); only attributes carrying a selected tag
/// are organized.
Organization flat_org(const DataLake& lake, std::span<const TagId> tags = {}, double gamma = 10.0);

/// Average-linkage agglomerative merge tree over the tag states under cosine
/// distance, with the leaf and tag levels of flat_org beneath it.
Organization initial_org(const DataLake& lake, std::span<const TagId> tags = {},
                         double gamma = 10.0);

/// Every violated structural invariant, one line each; empty when valid.
std::vector<std::string> validate(const Organization& org);

/// BFS depth from the root, indexed by state id (-1 for unused ids).
/// Throws validation when a live state is unreachable.
std::vector<int> levels(const Organization& org);

/// Ids of s and everything below it, ascending.
std::vector<StateId> descendants(const Organization& org, std::span<const StateId> from);

/// Display label of every state, indexed by state id.
std::vector<std::string> labels(const Organization& org, const DataLake& lake);
std::string label(const Organization& org, StateId s, const DataLake& lake);

/// Children in display order: descending attribute count, then id.
std::vector<StateId> display_children(const Organization& org, StateId s);

nlohmann::json to_json(const Organization& org, const DataLake& lake);
Organization org_from_json(const nlohmann::json& j, const DataLake& lake);

/// A single organization is written as one object; several as
/// {"dimensions": [...]}. Loading accepts both.
void save_organizations(std::span<const Organization> orgs, const DataLake& lake,
                        const std::filesystem::path& path);
std::vector<Organization> load_organizations(const std::filesystem::path& path,
                                             const DataLake& lake);

}  // namespace lakeorg
