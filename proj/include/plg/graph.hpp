#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plg/binary_io.hpp"
#include "plg/common.hpp"
#include "plg/kmeans.hpp"
#include "plg/spatial_index.hpp"
#include "plg/trajectory.hpp"

namespace plg {

struct Node {
  NodeId id = 0;
  Vec2 position;
  std::optional<int> lane_id;

  friend bool operator==(const Node&, const Node&) = default;
};

// Outgoing transition counts per source node, keyed by target id.
using CountRows = std::vector<std::map<NodeId, std::uint64_t>>;

struct Edge {
  NodeId to = kNoNode;
  std::uint64_t count = 0;
  double prob = 0.0;
};

// A nodal path: chronological, duplicate-free node sequence of one vehicle.
struct NodalPath {
  VehicleId vehicle_id = 0;
  std::vector<NodeId> nodes;
  std::vector<double> entry_times;
  ClusterId target_cluster = kNoCluster;
};

struct ClusterSet {
  std::vector<std::vector<NodeId>> clusters;          // sorted node ids
  std::vector<std::vector<ClusterId>> orderings;      // orderings[i][0] == i
};

// Probabilistic lane graph: node positions, directed transition counts with
// their row-normalised probabilities, and exit clusters.
class Plg {
 public:
  Plg() = default;
  Plg(std::vector<Node> nodes, double min_spacing);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  bool valid(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }
  double min_spacing() const { return min_spacing_; }

  // Replaces the counts; probabilities are recomputed for every row.
  void set_counts(const CountRows& counts);
  CountRows counts() const;

  // Outgoing edges sorted by target id.
  std::span<const Edge> successors(NodeId id) const;
  std::uint64_t count(NodeId from, NodeId to) const;
  double prob(NodeId from, NodeId to) const;
  std::uint64_t out_total(NodeId id) const;
  std::size_t edge_count() const;

  void set_clusters(ClusterSet clusters);
  const std::vector<std::vector<NodeId>>& clusters() const { return clusters_.clusters; }
  const std::vector<ClusterId>& ordering(ClusterId c) const {
    return clusters_.orderings.at(static_cast<std::size_t>(c));
  }
  const ClusterSet& cluster_set() const { return clusters_; }
  // Cluster containing the node, or kNoCluster.
  ClusterId cluster_of(NodeId id) const;
  bool in_cluster(NodeId id, ClusterId c) const { return c != kNoCluster && cluster_of(id) == c; }
  Vec2 cluster_centroid(ClusterId c) const;

  double edge_length(NodeId from, NodeId to) const {
    return distance(node(from).position, node(to).position);
  }

  // Nearest node, ties to the lower id.
  NodeId nearest(Vec2 p) const;

  friend bool operator==(const Plg& a, const Plg& b) {
    return a.nodes_ == b.nodes_ && a.counts() == b.counts() &&
           a.clusters_.clusters == b.clusters_.clusters &&
           a.clusters_.orderings == b.clusters_.orderings && a.min_spacing_ == b.min_spacing_;
  }

 private:
  void rebuild_index();

  std::vector<Node> nodes_;
  std::vector<std::vector<Edge>> rows_;
  std::vector<std::uint64_t> row_totals_;
  ClusterSet clusters_;
  std::vector<ClusterId> node_cluster_;
  double min_spacing_ = 0.0;
  std::optional<GridIndex> index_;
};

// Radius-gated node seeding over vehicles in id order and samples in time
// order: a sample becomes a node iff it lies further than `radius` from every
// existing node.
std::vector<Node> seed_nodes(const Dataset& data, double radius);

// Per-lane Lloyd refinement seeded with the lane's nodes. Identity when the
// dataset carries no lane ids. Lanes with data but no nodes are skipped with a
// warning.
std::vector<Node> smooth_lanes(std::vector<Node> nodes, const Dataset& data,
                               const KMeansOptions& options = {},
                               std::vector<std::string>* warnings = nullptr);

// Nearest-node discretisation; consecutive repeats collapse and later
// revisits of a node are dropped, keeping first arrival times.
NodalPath discretise_path(std::span<const TrajectorySample> samples, const Plg& plg);
NodalPath discretise_path(std::span<const TrajectorySample> samples, std::span<const Node> nodes);

struct Adjacency {
  CountRows counts;
  std::vector<std::map<NodeId, double>> probs;
};

// Frequentist transition counts over consecutive path nodes.
Adjacency learn_adjacency(std::span<const NodalPath> paths, std::size_t node_count);

// Single-linkage grouping of path terminals into exits; orderings sort all
// clusters by centroid distance from each cluster, self first.
ClusterSet extract_clusters(std::span<const NodalPath> paths, std::span<const Node> nodes,
                            double exit_radius);

struct BuildOptions {
  double radius = 2.5;
  double exit_radius = -1.0;  // <= 0: 4 * radius
  KMeansOptions kmeans;
};

// Per-vehicle discretisation kept for downstream fitting and seed extraction.
struct DiscreteTrack {
  std::size_t vehicle_index = 0;          // index into Dataset::vehicles()
  std::vector<NodeId> sample_nodes;       // nearest node per sample
  std::vector<std::size_t> path_index;    // position in `path.nodes` reached at each sample
  NodalPath path;
};

struct PlgBuild {
  Plg plg;
  std::vector<DiscreteTrack> tracks;
  std::vector<std::string> warnings;
  std::size_t seeded_nodes = 0;
};

// Full pipeline: seed, smooth, discretise, learn adjacency, extract exits.
PlgBuild build_plg(const Dataset& data, const BuildOptions& options);

// Re-discretises a dataset against an existing graph (paths get their
// terminal's cluster as target).
std::vector<DiscreteTrack> discretise_dataset(const Dataset& data, const Plg& plg);

inline constexpr Magic kPlgMagic{'P', 'L', 'G', 'N'};
inline constexpr std::uint32_t kPlgVersion = 1;

Bytes serialise_plg(const Plg& plg);
Plg deserialise_plg(std::span<const std::uint8_t> bytes);

}  // namespace plg
