#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plg/graph.hpp"
#include "plg/planner.hpp"
#include "plg/risk.hpp"
#include "plg/sim.hpp"
#include "plg/trajectory.hpp"

namespace plg::testing {

// Straight lanes of `per_lane` nodes spaced `spacing` apart along +x. Lane k
// sits at y = 3.7 k; node ids run lane-major. Every node links to its
// successor in the same lane; the last node of each lane is its own exit
// cluster.
struct Road {
  Plg plg;
  ConditionalTable table;
  int per_lane = 0;
  int lanes = 0;

  NodeId id(int lane, int k) const { return lane * per_lane + k; }
};

inline Road straight_road(int lanes, int per_lane, double spacing = 2.5, bool cross_links = false) {
  Road road;
  road.lanes = lanes;
  road.per_lane = per_lane;
  std::vector<Node> nodes;
  for (int l = 0; l < lanes; ++l) {
    for (int k = 0; k < per_lane; ++k) {
      nodes.push_back({static_cast<NodeId>(nodes.size()), {k * spacing, 3.7 * l}, l});
    }
  }
  road.plg = Plg(nodes, spacing);
  CountRows counts(nodes.size());
  for (int l = 0; l < lanes; ++l) {
    for (int k = 0; k + 1 < per_lane; ++k) {
      counts[static_cast<std::size_t>(road.id(l, k))][road.id(l, k + 1)] = 10;
      if (cross_links && l + 1 < lanes) {
        counts[static_cast<std::size_t>(road.id(l, k))][road.id(l + 1, k + 1)] = 1;
        counts[static_cast<std::size_t>(road.id(l + 1, k))][road.id(l, k + 1)] = 1;
      }
    }
  }
  road.plg.set_counts(counts);
  ClusterSet cs;
  for (int l = 0; l < lanes; ++l) cs.clusters.push_back({road.id(l, per_lane - 1)});
  for (int l = 0; l < lanes; ++l) {
    std::vector<ClusterId> order{l};
    for (int m = 0; m < lanes; ++m) {
      if (m != l) order.push_back(m);
    }
    cs.orderings.push_back(order);
  }
  road.plg.set_clusters(cs);
  for (int l = 0; l < lanes; ++l) {
    for (int k = 0; k + 1 < per_lane; ++k) {
      road.table.add(road.id(l, k), l, road.id(l, k + 1), 10);
      if (cross_links && l + 1 < lanes) {
        road.table.add(road.id(l, k), l + 1, road.id(l + 1, k + 1), 1);
        road.table.add(road.id(l + 1, k), l, road.id(l, k + 1), 1);
      }
    }
  }
  return road;
}

// Samples of one vehicle moving at constant speed along y = const.
inline std::vector<TrajectorySample> straight_track(VehicleId id, double x0, double y, double speed,
                                                    int n, double dt = 0.1,
                                                    std::optional<int> lane = std::nullopt) {
  std::vector<TrajectorySample> out;
  for (int k = 0; k < n; ++k) {
    out.push_back({id, k * dt, x0 + speed * k * dt, y, speed, 0.0, lane});
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("plg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace plg::testing
