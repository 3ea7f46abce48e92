#include <doctest.h>

#include <cmath>
#include <functional>

#include "plg/planner.hpp"
#include "support.hpp"

using namespace plg;

namespace {

// 0 -> {1, 2} with counts 3:1 towards the exit at node 3; 1 -> 3, 2 -> 3.
// Node 4 is a second exit reachable only from 2.
struct Junction {
  Plg plg;
  ConditionalTable table;
};

Junction junction() {
  Junction j;
  j.plg = Plg({{0, {0, 0}, 0}, {1, {5, 1}, 0}, {2, {5, -1}, 1}, {3, {10, 0}, 0}, {4, {10, -8}, 1}},
              2.5);
  CountRows counts(5);
  counts[0] = {{1, 3}, {2, 1}};
  counts[1] = {{3, 3}};
  counts[2] = {{3, 1}, {4, 2}};
  j.plg.set_counts(counts);
  j.plg.set_clusters({{{3}, {4}}, {{0, 1}, {1, 0}}});
  j.table.add(0, 0, 1, 3);
  j.table.add(0, 0, 2, 1);
  j.table.add(1, 0, 3, 3);
  j.table.add(2, 0, 3, 1);
  j.table.add(2, 1, 4, 2);
  return j;
}

}  // namespace

TEST_CASE("conditional table counts next nodes per target cluster") {
  std::vector<NodalPath> paths(3);
  paths[0].nodes = {0, 1, 3};
  paths[0].target_cluster = 0;
  paths[1].nodes = {0, 2, 3};
  paths[1].target_cluster = 0;
  paths[2].nodes = {0, 2, 4};
  paths[2].target_cluster = 1;
  const auto t = build_conditional_table(paths);
  const auto* e = t.find(0, 0);
  REQUIRE(e);
  CHECK(e->total == 2);
  CHECK(e->next == std::vector<std::pair<NodeId, std::uint64_t>>{{1, 1}, {2, 1}});
  CHECK(t.find(0, 1)->next == std::vector<std::pair<NodeId, std::uint64_t>>{{2, 1}});
  CHECK(t.find(3, 0) == nullptr);
  CHECK(t.size() == 5);
}

TEST_CASE("a 3:1 junction is sampled in proportion") {
  const auto j = junction();
  Rng rng(11);
  int left = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_next(j.table, j.plg, 0, 0, rng);
    CHECK(s.cluster_used == 0);
    if (s.node == 1) ++left;
  }
  CHECK(std::abs(left / static_cast<double>(n) - 0.75) <= 0.02);
}

TEST_CASE("sampling falls back along the cluster ordering and dead-ends without data") {
  const auto j = junction();
  Rng rng(1);
  const auto s = sample_next(j.table, j.plg, 1, 1, rng);
  CHECK(s.node == 3);
  CHECK(s.cluster_used == 0);
  CHECK(s.log_prob == 0.0);
  CHECK_THROWS_AS(sample_next(j.table, j.plg, 3, 0, rng), DeadEnd);
  try {
    sample_next(j.table, j.plg, 4, 0, rng);
  } catch (const DeadEnd& e) {
    CHECK(e.node() == 4);
  }
  CHECK_THROWS_AS(sample_next(j.table, j.plg, 99, 0, rng), InvalidArgument);
  CHECK_THROWS_AS(sample_next(j.table, j.plg, 0, 7, rng), InvalidArgument);
}

TEST_CASE("planning from inside the target returns the start node") {
  const auto j = junction();
  Rng rng(2);
  const auto p = plan_path(j.table, j.plg, 3, 0, 10, rng);
  CHECK(p.nodes == std::vector<NodeId>{3});
  CHECK(p.end == PathEnd::kReachedTarget);
  CHECK(p.reached_cluster == 0);
  CHECK(p.log_prob() == 0.0);
}

TEST_CASE("a dead end before the first step throws") {
  const auto j = junction();
  Rng rng(2);
  CHECK_THROWS_AS(plan_path(j.table, j.plg, 4, 0, 10, rng), DeadEnd);
  CHECK_THROWS_AS(plan_path(j.table, j.plg, 0, 0, 0, rng), InvalidArgument);
}

TEST_CASE("a chain road is planned deterministically with probability one") {
  const auto road = testing::straight_road(1, 12);
  Rng rng(3);
  const auto p = plan_path(road.table, road.plg, 0, 0, 100, rng);
  CHECK(p.nodes.size() == 12);
  CHECK(p.end == PathEnd::kReachedTarget);
  CHECK(p.log_prob() == 0.0);
  const auto t = plan_path(road.table, road.plg, 0, 0, 4, rng);
  CHECK(t.end == PathEnd::kTruncated);
  CHECK(t.nodes.size() == 5);
}

TEST_CASE("path probability matches the junction counts") {
  const auto j = junction();
  const std::vector<NodeId> a{0, 1, 3};
  const std::vector<NodeId> b{0, 2, 3};
  CHECK(path_probability(j.table, j.plg, a, 0) == doctest::Approx(std::log(0.75)));
  CHECK(path_probability(j.table, j.plg, b, 0) == doctest::Approx(std::log(0.25)));
  const std::vector<NodeId> unsupported{0, 2, 4};
  CHECK(path_probability(j.table, j.plg, unsupported, 0) == -INFINITY);
  const std::vector<NodeId> disconnected{0, 3};
  CHECK_THROWS_AS(path_probability(j.table, j.plg, disconnected, 0), InvalidArgument);
  CHECK_THROWS_AS(path_probability(j.table, j.plg, std::vector<NodeId>{}, 0), InvalidArgument);
}

TEST_CASE("complete path probabilities sum to one") {
  const auto road = testing::straight_road(2, 6, 2.5, true);
  for (ClusterId target = 0; target < 2; ++target) {
    double total = 0.0;
    std::vector<NodeId> path{road.id(0, 0)};
    std::function<void()> walk = [&] {
      const NodeId cur = path.back();
      if (road.plg.in_cluster(cur, target)) {
        total += std::exp(path_probability(road.table, road.plg, path, target));
        return;
      }
      for (const auto& e : road.plg.successors(cur)) {
        path.push_back(e.to);
        walk();
        path.pop_back();
      }
    };
    walk();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sampled paths respect the graph and reproduce their log-probabilities") {
  const auto road = testing::straight_road(2, 10, 2.5, true);
  Rng rng(5);
  const int max_len = default_max_len(road.plg.size());
  for (int i = 0; i < 1000; ++i) {
    const ClusterId target = i % 2;
    const NodeId start = road.id(i % 3 == 0 ? 1 : 0, i % 4);
    const auto p = plan_path(road.table, road.plg, start, target, max_len, rng);
    CHECK(static_cast<int>(p.step_log_probs.size()) <= max_len);
    CHECK(p.step_log_probs.size() + 1 == p.nodes.size());
    for (std::size_t k = 1; k < p.nodes.size(); ++k) CHECK(road.plg.count(p.nodes[k - 1], p.nodes[k]) > 0);
    if (p.end == PathEnd::kReachedTarget) {
      CHECK(road.plg.cluster_of(p.nodes.back()) == p.reached_cluster);
    }
    CHECK(path_probability(road.table, road.plg, p.nodes, target) == p.log_prob());
  }
}

TEST_CASE("planning is deterministic for a fixed generator seed") {
  const auto road = testing::straight_road(2, 10, 2.5, true);
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) {
    const auto p = plan_path(road.table, road.plg, 0, 1, 40, a);
    const auto q = plan_path(road.table, road.plg, 0, 1, 40, b);
    CHECK(p.nodes == q.nodes);
  }
}

TEST_CASE("mode path follows the most frequent successor") {
  const auto j = junction();
  CHECK(mode_path(j.table, j.plg, 0, 0, 5) == std::vector<NodeId>{0, 1, 3});
}

TEST_CASE("default step budget grows with the graph") {
  CHECK(default_max_len(0) >= 1);
  CHECK(default_max_len(100) >= default_max_len(10));
}

TEST_CASE("table and bundle serialisation round trip") {
  const auto j = junction();
  CHECK(deserialise_table(serialise_table(j.table)) == j.table);
  const auto bundle = deserialise_bundle(serialise_bundle({j.plg, j.table}));
  CHECK(bundle.plg == j.plg);
  CHECK(bundle.table == j.table);
  auto bytes = serialise_table(j.table);
  bytes.pop_back();
  CHECK_THROWS_AS(deserialise_table(bytes), FormatError);
}
