#include "plg/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_set>

namespace plg {

Plg::Plg(std::vector<Node> nodes, double min_spacing)
    : nodes_(std::move(nodes)), min_spacing_(min_spacing) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id != static_cast<NodeId>(i)) throw InvalidArgument("node ids must be dense 0..N-1");
  }
  rows_.assign(nodes_.size(), {});
  row_totals_.assign(nodes_.size(), 0);
  node_cluster_.assign(nodes_.size(), kNoCluster);
  rebuild_index();
}

void Plg::rebuild_index() {
  index_.reset();
  if (nodes_.empty()) return;
  index_.emplace(min_spacing_ > 0.0 ? min_spacing_ : 1.0);
  for (const auto& n : nodes_) index_->insert(n.id, n.position);
}

void Plg::set_counts(const CountRows& counts) {
  if (counts.size() != nodes_.size()) throw InvalidArgument("count rows do not match node count");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    auto& row = rows_[i];
    row.clear();
    std::uint64_t total = 0;
    for (const auto& [to, c] : counts[i]) {
      if (!valid(to)) throw InvalidArgument("edge target out of range");
      if (c == 0) continue;
      row.push_back({to, c, 0.0});
      total += c;
    }
    for (auto& e : row) e.prob = static_cast<double>(e.count) / static_cast<double>(total);
    row_totals_[i] = total;
  }
}

CountRows Plg::counts() const {
  CountRows out(nodes_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& e : rows_[i]) out[i][e.to] = e.count;
  }
  return out;
}

std::span<const Edge> Plg::successors(NodeId id) const {
  return rows_.at(static_cast<std::size_t>(id));
}

std::uint64_t Plg::count(NodeId from, NodeId to) const {
  const auto row = successors(from);
  const auto it = std::lower_bound(row.begin(), row.end(), to,
                                   [](const Edge& e, NodeId t) { return e.to < t; });
  return it != row.end() && it->to == to ? it->count : 0;
}

double Plg::prob(NodeId from, NodeId to) const {
  const auto row = successors(from);
  const auto it = std::lower_bound(row.begin(), row.end(), to,
                                   [](const Edge& e, NodeId t) { return e.to < t; });
  return it != row.end() && it->to == to ? it->prob : 0.0;
}

std::uint64_t Plg::out_total(NodeId id) const { return row_totals_.at(static_cast<std::size_t>(id)); }

std::size_t Plg::edge_count() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

void Plg::set_clusters(ClusterSet clusters) {
  node_cluster_.assign(nodes_.size(), kNoCluster);
  for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
    for (NodeId n : clusters.clusters[c]) {
      if (!valid(n)) throw InvalidArgument("cluster node out of range");
      if (node_cluster_[static_cast<std::size_t>(n)] != kNoCluster) {
        throw InvalidArgument("clusters must be disjoint");
      }
      node_cluster_[static_cast<std::size_t>(n)] = static_cast<ClusterId>(c);
    }
  }
  if (clusters.orderings.size() != clusters.clusters.size()) {
    throw InvalidArgument("one ordering per cluster required");
  }
  for (std::size_t c = 0; c < clusters.orderings.size(); ++c) {
    const auto& o = clusters.orderings[c];
    if (o.empty() || o.front() != static_cast<ClusterId>(c)) {
      throw InvalidArgument("cluster ordering must start with the cluster itself");
    }
  }
  clusters_ = std::move(clusters);
}

ClusterId Plg::cluster_of(NodeId id) const {
  return valid(id) ? node_cluster_[static_cast<std::size_t>(id)] : kNoCluster;
}

Vec2 Plg::cluster_centroid(ClusterId c) const {
  const auto& members = clusters_.clusters.at(static_cast<std::size_t>(c));
  Vec2 sum;
  for (NodeId n : members) sum = sum + node(n).position;
  return (1.0 / static_cast<double>(members.size())) * sum;
}

NodeId Plg::nearest(Vec2 p) const {
  if (!index_) throw InvalidArgument("nearest-node query on an empty graph");
  return index_->nearest(p);
}

// ---------------------------------------------------------------------------

std::vector<Node> seed_nodes(const Dataset& data, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("node spacing R must be positive");
  if (data.empty()) throw InvalidArgument("cannot seed nodes from an empty dataset");
  std::vector<Node> nodes;
  GridIndex index(radius);
  for (const auto& vehicle : data.vehicles()) {
    for (const auto& s : vehicle.samples) {
      const Vec2 p = s.position();
      if (!index.empty() && index.any_within(p, radius)) continue;
      const auto id = static_cast<NodeId>(nodes.size());
      nodes.push_back({id, p, s.lane_id});
      index.insert(id, p);
    }
  }
  return nodes;
}

std::vector<Node> smooth_lanes(std::vector<Node> nodes, const Dataset& data,
                               const KMeansOptions& options, std::vector<std::string>* warnings) {
  if (!data.has_lane_ids()) return nodes;
  std::map<int, std::vector<std::size_t>> lane_nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].lane_id) lane_nodes[*nodes[i].lane_id].push_back(i);
  }
  for (const auto& [lane, points] : data.lane_positions()) {
    const auto it = lane_nodes.find(lane);
    if (it == lane_nodes.end()) {
      if (warnings) warnings->push_back("lane " + std::to_string(lane) + " has data but no nodes; skipped");
      continue;
    }
    std::vector<Vec2> initial;
    for (std::size_t i : it->second) initial.push_back(nodes[i].position);
    const auto fit = lloyd_kmeans(points, std::move(initial), options);
    for (std::size_t k = 0; k < it->second.size(); ++k) nodes[it->second[k]].position = fit.centres[k];
  }
  return nodes;
}

namespace {

template <typename Nearest>
NodalPath discretise_with(std::span<const TrajectorySample> samples, Nearest&& nearest,
                          std::vector<NodeId>* sample_nodes, std::vector<std::size_t>* path_index) {
  NodalPath path;
  if (!samples.empty()) path.vehicle_id = samples.front().vehicle_id;
  std::unordered_set<NodeId> seen;
  for (const auto& s : samples) {
    const NodeId n = nearest(s.position());
    if (sample_nodes) sample_nodes->push_back(n);
    if (seen.insert(n).second) {
      path.nodes.push_back(n);
      path.entry_times.push_back(s.time);
    }
    if (path_index) path_index->push_back(path.nodes.size() - 1);
  }
  return path;
}

}  // namespace

NodalPath discretise_path(std::span<const TrajectorySample> samples, const Plg& plg) {
  if (plg.size() == 0) throw InvalidArgument("cannot discretise against an empty node set");
  return discretise_with(samples, [&](Vec2 p) { return plg.nearest(p); }, nullptr, nullptr);
}

NodalPath discretise_path(std::span<const TrajectorySample> samples, std::span<const Node> nodes) {
  if (nodes.empty()) throw InvalidArgument("cannot discretise against an empty node set");
  return discretise_with(
      samples,
      [&](Vec2 p) {
        NodeId best = nodes.front().id;
        double best_d2 = squared_distance(nodes.front().position, p);
        for (const auto& n : nodes) {
          const double d2 = squared_distance(n.position, p);
          if (d2 < best_d2 || (d2 == best_d2 && n.id < best)) {
            best = n.id;
            best_d2 = d2;
          }
        }
        return best;
      },
      nullptr, nullptr);
}

Adjacency learn_adjacency(std::span<const NodalPath> paths, std::size_t node_count) {
  Adjacency adj;
  adj.counts.assign(node_count, {});
  adj.probs.assign(node_count, {});
  for (const auto& p : paths) {
    for (NodeId n : p.nodes) {
      if (n < 0 || static_cast<std::size_t>(n) >= node_count) {
        throw InvalidArgument("path node id out of range");
      }
    }
    for (std::size_t k = 1; k < p.nodes.size(); ++k) {
      ++adj.counts[static_cast<std::size_t>(p.nodes[k - 1])][p.nodes[k]];
    }
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    std::uint64_t total = 0;
    for (const auto& [to, c] : adj.counts[i]) total += c;
    for (const auto& [to, c] : adj.counts[i]) {
      adj.probs[i][to] = static_cast<double>(c) / static_cast<double>(total);
    }
  }
  return adj;
}

ClusterSet extract_clusters(std::span<const NodalPath> paths, std::span<const Node> nodes,
                            double exit_radius) {
  if (paths.empty()) throw InvalidArgument("exit extraction needs at least one path");
  std::set<NodeId> terminal_set;
  for (const auto& p : paths) {
    if (!p.nodes.empty()) terminal_set.insert(p.nodes.back());
  }
  const std::vector<NodeId> terminals(terminal_set.begin(), terminal_set.end());

  // Union-find over terminals linked within exit_radius.
  std::vector<std::size_t> parent(terminals.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const double r2 = exit_radius * exit_radius;
  for (std::size_t a = 0; a < terminals.size(); ++a) {
    for (std::size_t b = a + 1; b < terminals.size(); ++b) {
      const auto pa = nodes[static_cast<std::size_t>(terminals[a])].position;
      const auto pb = nodes[static_cast<std::size_t>(terminals[b])].position;
      if (squared_distance(pa, pb) <= r2) {
        const auto ra = find(a), rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }
  // Terminals are ascending, so clusters come out ordered by smallest member.
  ClusterSet out;
  std::map<std::size_t, std::size_t> root_to_cluster;
  for (std::size_t a = 0; a < terminals.size(); ++a) {
    const auto root = find(a);
    auto [it, inserted] = root_to_cluster.try_emplace(root, out.clusters.size());
    if (inserted) out.clusters.emplace_back();
    out.clusters[it->second].push_back(terminals[a]);
  }

  std::vector<Vec2> centroids;
  for (const auto& members : out.clusters) {
    Vec2 sum;
    for (NodeId n : members) sum = sum + nodes[static_cast<std::size_t>(n)].position;
    centroids.push_back((1.0 / static_cast<double>(members.size())) * sum);
  }
  const auto k = static_cast<ClusterId>(out.clusters.size());
  for (ClusterId i = 0; i < k; ++i) {
    std::vector<ClusterId> order;
    for (ClusterId j = 0; j < k; ++j) {
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](ClusterId a, ClusterId b) {
      return distance(centroids[static_cast<std::size_t>(i)], centroids[static_cast<std::size_t>(a)]) <
             distance(centroids[static_cast<std::size_t>(i)], centroids[static_cast<std::size_t>(b)]);
    });
    order.insert(order.begin(), i);
    out.orderings.push_back(std::move(order));
  }
  return out;
}

namespace {

DiscreteTrack discretise_track(const Dataset& data, std::size_t index, const Plg& plg) {
  DiscreteTrack track;
  track.vehicle_index = index;
  const auto& samples = data.vehicles()[index].samples;
  track.path = discretise_with(
      samples, [&](Vec2 p) { return plg.nearest(p); }, &track.sample_nodes, &track.path_index);
  return track;
}

}  // namespace

std::vector<DiscreteTrack> discretise_dataset(const Dataset& data, const Plg& plg) {
  std::vector<DiscreteTrack> tracks;
  tracks.reserve(data.vehicle_count());
  for (std::size_t i = 0; i < data.vehicle_count(); ++i) {
    tracks.push_back(discretise_track(data, i, plg));
    auto& path = tracks.back().path;
    if (!path.nodes.empty()) path.target_cluster = plg.cluster_of(path.nodes.back());
  }
  return tracks;
}

PlgBuild build_plg(const Dataset& data, const BuildOptions& options) {
  PlgBuild build;
  auto nodes = seed_nodes(data, options.radius);
  build.seeded_nodes = nodes.size();
  nodes = smooth_lanes(std::move(nodes), data, options.kmeans, &build.warnings);
  build.plg = Plg(nodes, options.radius);

  for (std::size_t i = 0; i < data.vehicle_count(); ++i) {
    build.tracks.push_back(discretise_track(data, i, build.plg));
  }
  std::vector<NodalPath> paths;
  paths.reserve(build.tracks.size());
  for (const auto& t : build.tracks) paths.push_back(t.path);

  const auto adjacency = learn_adjacency(paths, build.plg.size());
  build.plg.set_counts(adjacency.counts);
  const double exit_radius = options.exit_radius > 0.0 ? options.exit_radius : 4.0 * options.radius;
  build.plg.set_clusters(extract_clusters(paths, build.plg.nodes(), exit_radius));
  for (auto& t : build.tracks) {
    t.path.target_cluster = build.plg.cluster_of(t.path.nodes.back());
  }
  return build;
}

// ---------------------------------------------------------------------------

Bytes serialise_plg(const Plg& plg) {
  ByteWriter w;
  w.put(plg.min_spacing());
  w.put<std::uint64_t>(plg.size());
  for (const auto& n : plg.nodes()) {
    w.put(n.position.x);
    w.put(n.position.y);
    w.put<std::uint8_t>(n.lane_id ? 1 : 0);
    w.put<std::int32_t>(n.lane_id.value_or(0));
  }
  w.put<std::uint64_t>(plg.edge_count());
  for (NodeId i = 0; i < static_cast<NodeId>(plg.size()); ++i) {
    for (const auto& e : plg.successors(i)) {
      w.put<std::int32_t>(i);
      w.put<std::int32_t>(e.to);
      w.put<std::uint64_t>(e.count);
    }
  }
  const auto& cs = plg.cluster_set();
  w.put<std::uint64_t>(cs.clusters.size());
  for (const auto& c : cs.clusters) w.put_array<NodeId>(c);
  for (const auto& o : cs.orderings) w.put_array<ClusterId>(o);
  return frame(kPlgMagic, kPlgVersion, w.bytes());
}

Plg deserialise_plg(std::span<const std::uint8_t> bytes) {
  const Bytes payload = unframe(bytes, kPlgMagic, kPlgVersion, "PLG");
  ByteReader r(payload);
  const double spacing = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  if (n > payload.size()) throw FormatError("PLG: node count exceeds payload");
  std::vector<Node> nodes;
  nodes.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Node node;
    node.id = static_cast<NodeId>(i);
    node.position.x = r.get<double>();
    node.position.y = r.get<double>();
    const bool has_lane = r.get<std::uint8_t>() != 0;
    const auto lane = r.get<std::int32_t>();
    if (has_lane) node.lane_id = lane;
    nodes.push_back(node);
  }
  Plg plg(std::move(nodes), spacing);
  CountRows counts(n);
  const auto edges = r.get<std::uint64_t>();
  for (std::uint64_t e = 0; e < edges; ++e) {
    const auto from = r.get<std::int32_t>();
    const auto to = r.get<std::int32_t>();
    const auto c = r.get<std::uint64_t>();
    if (!plg.valid(from) || !plg.valid(to)) throw FormatError("PLG: edge endpoint out of range");
    counts[static_cast<std::size_t>(from)][to] = c;
  }
  plg.set_counts(counts);
  ClusterSet cs;
  const auto k = r.get<std::uint64_t>();
  if (k > payload.size()) throw FormatError("PLG: cluster count exceeds payload");
  for (std::uint64_t c = 0; c < k; ++c) cs.clusters.push_back(r.get_array<NodeId>());
  for (std::uint64_t c = 0; c < k; ++c) cs.orderings.push_back(r.get_array<ClusterId>());
  r.expect_end();
  try {
    plg.set_clusters(std::move(cs));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("PLG: ") + e.what());
  }
  return plg;
}

}  // namespace plg
