#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "plg/binary_io.hpp"
#include "plg/graph.hpp"

namespace plg {

// Empirical next-node counts conditioned on (current node, target cluster).
class ConditionalTable {
 public:
  struct Entry {
    std::vector<std::pair<NodeId, std::uint64_t>> next;  // sorted by node id
    std::uint64_t total = 0;
  };

  void add(NodeId current, ClusterId cluster, NodeId next, std::uint64_t count = 1);
  // Entry for {current, cluster}, or nullptr when that conditional was never observed.
  const Entry* find(NodeId current, ClusterId cluster) const;
  bool contains(NodeId current, ClusterId cluster) const { return find(current, cluster) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::pair<NodeId, ClusterId>, Entry>& entries() const { return entries_; }

  friend bool operator==(const ConditionalTable& a, const ConditionalTable& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (auto ia = a.entries_.begin(), ib = b.entries_.begin(); ia != a.entries_.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.next != ib->second.next) return false;
    }
    return true;
  }

 private:
  std::map<std::pair<NodeId, ClusterId>, Entry> entries_;
};

ConditionalTable build_conditional_table(std::span<const NodalPath> paths);

// No cluster in the fallback ordering has data for the current node.
class DeadEnd : public std::runtime_error {
 public:
  explicit DeadEnd(NodeId node)
      : std::runtime_error("no observed successor for node " + std::to_string(node)), node_(node) {}
  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

struct NextStep {
  NodeId node = kNoNode;
  ClusterId cluster_used = kNoCluster;
  double log_prob = 0.0;
};

// One draw of p(next | current, c), walking the target's cluster ordering
// until an observed conditional is found. Throws DeadEnd when none is.
NextStep sample_next(const ConditionalTable& table, const Plg& plg, NodeId current,
                     ClusterId target, Rng& rng);

enum class PathEnd { kReachedTarget, kDeadEnd, kTruncated };

struct PlannedPath {
  std::vector<NodeId> nodes;
  std::vector<double> step_log_probs;  // one per transition
  ClusterId reached_cluster = kNoCluster;
  bool fallback_used = false;
  PathEnd end = PathEnd::kReachedTarget;

  double log_prob() const;
};

// Default step budget for a graph of `node_count` nodes.
int default_max_len(std::size_t node_count);

// Samples successors until the path enters the target cluster, dead-ends, or
// `max_len` steps elapse. A dead end before the first step throws DeadEnd.
PlannedPath plan_path(const ConditionalTable& table, const Plg& plg, NodeId start,
                      ClusterId target, int max_len, Rng& rng);

// Log-probability of a given node sequence under the same fallback rule used
// for sampling; -inf when a step has no support in the chosen conditional.
// Throws InvalidArgument for an empty path or a step absent from the graph.
double path_probability(const ConditionalTable& table, const Plg& plg,
                        std::span<const NodeId> path, ClusterId target);

// Deterministic most-likely continuation (argmax count, lower id on ties),
// used for predicting other vehicles' courses.
std::vector<NodeId> mode_path(const ConditionalTable& table, const Plg& plg, NodeId start,
                              ClusterId target, std::size_t steps);

inline constexpr Magic kTableMagic{'P', 'L', 'G', 'T'};
inline constexpr std::uint32_t kTableVersion = 1;

Bytes serialise_table(const ConditionalTable& table);
ConditionalTable deserialise_table(std::span<const std::uint8_t> bytes);

// The graph file: framed PLG followed by its conditional table.
inline constexpr Magic kBundleMagic{'P', 'L', 'G', 'B'};
inline constexpr std::uint32_t kBundleVersion = 1;

struct PlgBundle {
  Plg plg;
  ConditionalTable table;
};

Bytes serialise_bundle(const PlgBundle& bundle);
PlgBundle deserialise_bundle(std::span<const std::uint8_t> bytes);

}  // namespace plg
