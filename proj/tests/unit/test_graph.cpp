#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "plg/graph.hpp"
#include "plg/kmeans.hpp"
#include "support.hpp"

using namespace plg;

namespace {

Dataset line_dataset(std::vector<double> xs, std::optional<int> lane = std::nullopt) {
  std::vector<TrajectorySample> s;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    s.push_back({1, 0.1 * static_cast<double>(k), xs[k], 0.0, 10.0, 0.0, lane});
  }
  return Dataset(std::move(s));
}

std::vector<double> xs_of(const std::vector<Node>& nodes) {
  std::vector<double> out;
  for (const auto& n : nodes) out.push_back(n.position.x);
  return out;
}

Dataset small_merge_corpus() {
  auto spec = SyntheticSpec::two_lane_merge();
  spec.vehicles = 30;
  spec.ticks = 900;
  return generate_synthetic_corpus(spec, 5);
}

}  // namespace

TEST_CASE("radius-gated seeding keeps samples further than R from all nodes") {
  const auto data = line_dataset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(xs_of(seed_nodes(data, 2.5)) == std::vector<double>{0, 3, 6, 9});
}

TEST_CASE("seeding handles a single sample and repeated positions") {
  CHECK(seed_nodes(line_dataset({4.0}), 2.5).size() == 1);
  const auto nodes = seed_nodes(line_dataset({1, 1, 1, 1}), 2.5);
  REQUIRE(nodes.size() == 1);
  CHECK(nodes[0].position.x == 1.0);
  CHECK(nodes[0].id == 0);
}

TEST_CASE("seeding exactly at distance R does not create a node") {
  CHECK(xs_of(seed_nodes(line_dataset({0, 2.5, 5.0 + 1e-9}), 2.5)) ==
        std::vector<double>{0, 5.0 + 1e-9});
}

TEST_CASE("lloyd refinement converges to the lane means") {
  const auto data = line_dataset({0, 1, 2, 3, 4, 5}, 1);
  auto nodes = seed_nodes(data, 2.5);
  CHECK(xs_of(nodes) == std::vector<double>{0, 3});
  nodes = smooth_lanes(nodes, data);
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0].position.x == doctest::Approx(1.0));
  CHECK(nodes[1].position.x == doctest::Approx(4.0));
  const auto again = smooth_lanes(nodes, data);
  CHECK(again[0].position.x == doctest::Approx(1.0));
  CHECK(again[1].position.x == doctest::Approx(4.0));
}

TEST_CASE("lane smoothing is the identity without lane ids") {
  const auto data = line_dataset({0, 1, 2, 3, 4, 5});
  const auto nodes = seed_nodes(data, 2.5);
  CHECK(smooth_lanes(nodes, data) == nodes);
}

TEST_CASE("kmeans keeps an emptied centre in place") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}};
  const auto r = lloyd_kmeans(pts, {{0.5, 0}, {100, 0}});
  REQUIRE(r.centres.size() == 2);
  CHECK(r.centres[0].x == doctest::Approx(0.5));
  CHECK(r.centres[1].x == 100.0);
  CHECK(r.converged);
}

TEST_CASE("discretisation collapses repeats and later revisits") {
  const std::vector<Node> nodes{{0, {0, 0}, 0}, {1, {10, 0}, 0}, {2, {20, 0}, 0}};
  auto samples = [](std::vector<double> xs) {
    std::vector<TrajectorySample> s;
    for (std::size_t k = 0; k < xs.size(); ++k) s.push_back({1, 0.1 * k, xs[k], 0, 1, 0, 0});
    return s;
  };
  const auto stationary = samples({1, 1, 1, 1});
  CHECK(discretise_path(stationary, nodes).nodes == std::vector<NodeId>{0});
  const auto aba = samples({0, 10, 0, 10});
  const auto path = discretise_path(aba, nodes);
  CHECK(path.nodes == std::vector<NodeId>{0, 1});
  CHECK(path.entry_times == std::vector<double>{0.0, 0.1});
  const auto tie = samples({5, 20});
  CHECK(discretise_path(tie, nodes).nodes == std::vector<NodeId>{0, 2});
}

TEST_CASE("adjacency counts consecutive path nodes") {
  std::vector<NodalPath> paths(2);
  paths[0].nodes = {0, 1, 2};
  paths[1].nodes = {0, 1, 3};
  const auto adj = learn_adjacency(paths, 4);
  CHECK(adj.counts[0].at(1) == 2);
  CHECK(adj.counts[1].at(2) == 1);
  CHECK(adj.counts[1].at(3) == 1);
  CHECK(adj.counts[2].empty());
  CHECK(adj.probs[1].at(2) == 0.5);
  CHECK(adj.probs[0].at(1) == 1.0);
}

TEST_CASE("adjacency is invariant to path order and matches direct counting") {
  std::mt19937_64 rng(9);
  std::vector<NodalPath> paths(50);
  std::map<std::pair<NodeId, NodeId>, std::uint64_t> direct;
  for (auto& p : paths) {
    NodeId n = static_cast<NodeId>(rng() % 5);
    p.nodes.push_back(n);
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < len; ++k) {
      n = n + 1 + static_cast<NodeId>(rng() % 2);
      ++direct[{p.nodes.back(), n}];
      p.nodes.push_back(n);
    }
  }
  const auto a = learn_adjacency(paths, 40);
  std::shuffle(paths.begin(), paths.end(), rng);
  const auto b = learn_adjacency(paths, 40);
  CHECK(a.counts == b.counts);
  for (const auto& [edge, c] : direct) CHECK(a.counts[edge.first].at(edge.second) == c);
  for (const auto& row : a.probs) {
    if (row.empty()) continue;
    double s = 0.0;
    for (const auto& [to, p] : row) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("exit clusters group terminals and order by centroid distance") {
  const std::vector<Node> nodes{{0, {0, 0}, 0}, {1, {10, 0}, 0}, {2, {15, 0}, 0}, {3, {16, 0}, 0}};
  std::vector<NodalPath> paths(4);
  paths[0].nodes = {0};
  paths[1].nodes = {1};
  paths[2].nodes = {2};
  paths[3].nodes = {3};
  const auto cs = extract_clusters(paths, nodes, 2.0);
  REQUIRE(cs.clusters.size() == 3);
  CHECK(cs.clusters[2] == std::vector<NodeId>{2, 3});
  CHECK(cs.orderings[0] == std::vector<ClusterId>{0, 1, 2});
  CHECK(cs.orderings[1] == std::vector<ClusterId>{1, 2, 0});
  CHECK(cs.orderings[2] == std::vector<ClusterId>{2, 1, 0});
}

TEST_CASE("graph probabilities are row-normalised counts") {
  auto road = testing::straight_road(2, 6, 2.5, true);
  for (std::size_t n = 0; n < road.plg.size(); ++n) {
    const auto id = static_cast<NodeId>(n);
    if (road.plg.out_total(id) == 0) continue;
    double s = 0.0;
    for (const auto& e : road.plg.successors(id)) s += e.prob;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  CHECK(road.plg.prob(0, 1) == doctest::Approx(10.0 / 11.0));
}

TEST_CASE("graph serialisation round trips and detects damage") {
  const auto road = testing::straight_road(2, 5);
  const auto bytes = serialise_plg(road.plg);
  CHECK(deserialise_plg(bytes) == road.plg);

  auto cut = bytes;
  cut.resize(cut.size() / 2);
  try {
    deserialise_plg(cut);
    FAIL("truncated graph accepted");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(deserialise_plg(flipped), FormatError);
  auto wrong = bytes;
  wrong[0] = 'X';
  CHECK_THROWS_AS(deserialise_plg(wrong), FormatError);

  Plg empty({{0, {0, 0}, std::nullopt}}, 2.5);
  empty.set_counts(CountRows(1));
  CHECK(deserialise_plg(serialise_plg(empty)) == empty);
}

TEST_CASE("seeded nodes of a merge corpus are pairwise further apart than R") {
  const auto data = small_merge_corpus();
  const double r = 2.5;
  const auto nodes = seed_nodes(data, r);
  REQUIRE(nodes.size() > 50);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      CHECK_MESSAGE(distance(nodes[i].position, nodes[j].position) > r, i << " " << j);
    }
  }
}

TEST_CASE("a learned merge graph has no edge against the direction of travel") {
  const auto data = small_merge_corpus();
  const auto build = build_plg(data, BuildOptions{});
  const auto& g = build.plg;
  std::size_t edges = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto from = static_cast<NodeId>(n);
    for (const auto& e : g.successors(from)) {
      const Vec2 d = g.node(e.to).position - g.node(from).position;
      CHECK_FALSE(d.x < -std::abs(d.y));
      ++edges;
    }
  }
  CHECK(edges == g.edge_count());
  CHECK(edges > 0);
  CHECK(g.clusters().size() >= 1);
  for (std::size_t c = 0; c < g.clusters().size(); ++c) {
    CHECK(g.ordering(static_cast<ClusterId>(c)).front() == static_cast<ClusterId>(c));
    CHECK(g.ordering(static_cast<ClusterId>(c)).size() == g.clusters().size());
  }
  for (const auto& t : build.tracks) {
    CHECK(t.path.target_cluster == g.cluster_of(t.path.nodes.back()));
  }
}
