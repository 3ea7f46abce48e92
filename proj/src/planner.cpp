#include "plg/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plg {

namespace {

// Shared by sampling and path_probability so both produce identical values.
double step_log_prob(std::uint64_t count, std::uint64_t total) {
  return std::log(static_cast<double>(count) / static_cast<double>(total));
}

const ConditionalTable::Entry* first_observed(const ConditionalTable& table, const Plg& plg,
                                              NodeId current, ClusterId target,
                                              ClusterId* used) {
  for (ClusterId c : plg.ordering(target)) {
    if (const auto* entry = table.find(current, c)) {
      *used = c;
      return entry;
    }
  }
  return nullptr;
}

}  // namespace

void ConditionalTable::add(NodeId current, ClusterId cluster, NodeId next, std::uint64_t count) {
  if (count == 0) return;
  auto& entry = entries_[{current, cluster}];
  auto it = std::lower_bound(entry.next.begin(), entry.next.end(), next,
                             [](const auto& p, NodeId n) { return p.first < n; });
  if (it != entry.next.end() && it->first == next) {
    it->second += count;
  } else {
    entry.next.insert(it, {next, count});
  }
  entry.total += count;
}

const ConditionalTable::Entry* ConditionalTable::find(NodeId current, ClusterId cluster) const {
  const auto it = entries_.find({current, cluster});
  if (it == entries_.end() || it->second.total == 0) return nullptr;
  return &it->second;
}

ConditionalTable build_conditional_table(std::span<const NodalPath> paths) {
  ConditionalTable table;
  for (const auto& p : paths) {
    if (p.target_cluster == kNoCluster) continue;
    for (std::size_t k = 1; k < p.nodes.size(); ++k) {
      table.add(p.nodes[k - 1], p.target_cluster, p.nodes[k]);
    }
  }
  return table;
}

NextStep sample_next(const ConditionalTable& table, const Plg& plg, NodeId current,
                     ClusterId target, Rng& rng) {
  if (!plg.valid(current)) throw InvalidArgument("sample_next: node out of range");
  if (target < 0 || static_cast<std::size_t>(target) >= plg.clusters().size()) {
    throw InvalidArgument("sample_next: target cluster out of range");
  }
  NextStep step;
  const auto* entry = first_observed(table, plg, current, target, &step.cluster_used);
  if (!entry) throw DeadEnd(current);
  // Inverse-CDF draw over the integer counts.
  auto u = static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(entry->total));
  u = std::min(u, entry->total - 1);
  for (const auto& [next, count] : entry->next) {
    if (u < count) {
      step.node = next;
      step.log_prob = step_log_prob(count, entry->total);
      return step;
    }
    u -= count;
  }
  const auto& last = entry->next.back();
  step.node = last.first;
  step.log_prob = step_log_prob(last.second, entry->total);
  return step;
}

double PlannedPath::log_prob() const {
  double sum = 0.0;
  for (double lp : step_log_probs) sum += lp;
  return sum;
}

int default_max_len(std::size_t node_count) {
  return std::max(2 * static_cast<int>(node_count), 1);
}

PlannedPath plan_path(const ConditionalTable& table, const Plg& plg, NodeId start,
                      ClusterId target, int max_len, Rng& rng) {
  if (max_len < 1) throw InvalidArgument("plan_path: max_len must be at least 1");
  if (!plg.valid(start)) throw InvalidArgument("plan_path: start node out of range");
  PlannedPath path;
  path.nodes.push_back(start);
  NodeId current = start;
  while (!plg.in_cluster(current, target)) {
    if (static_cast<int>(path.step_log_probs.size()) >= max_len) {
      path.end = PathEnd::kTruncated;
      break;
    }
    NextStep step;
    try {
      step = sample_next(table, plg, current, target, rng);
    } catch (const DeadEnd&) {
      if (path.step_log_probs.empty()) throw;
      path.end = PathEnd::kDeadEnd;
      break;
    }
    if (step.cluster_used != target) path.fallback_used = true;
    path.nodes.push_back(step.node);
    path.step_log_probs.push_back(step.log_prob);
    current = step.node;
  }
  path.reached_cluster = plg.cluster_of(current);
  return path;
}

double path_probability(const ConditionalTable& table, const Plg& plg,
                        std::span<const NodeId> path, ClusterId target) {
  if (path.empty()) throw InvalidArgument("path_probability: empty path");
  for (NodeId n : path) {
    if (!plg.valid(n)) throw InvalidArgument("path_probability: node out of range");
  }
  double sum = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (plg.count(path[k - 1], path[k]) == 0) {
      throw InvalidArgument("path_probability: path is not connected in the graph");
    }
    ClusterId used = kNoCluster;
    const auto* entry = first_observed(table, plg, path[k - 1], target, &used);
    if (!entry) return -std::numeric_limits<double>::infinity();
    const auto it = std::find_if(entry->next.begin(), entry->next.end(),
                                 [&](const auto& p) { return p.first == path[k]; });
    if (it == entry->next.end()) return -std::numeric_limits<double>::infinity();
    sum += step_log_prob(it->second, entry->total);
  }
  return sum;
}

std::vector<NodeId> mode_path(const ConditionalTable& table, const Plg& plg, NodeId start,
                              ClusterId target, std::size_t steps) {
  std::vector<NodeId> out{start};
  NodeId current = start;
  for (std::size_t k = 0; k < steps && !plg.in_cluster(current, target); ++k) {
    ClusterId used = kNoCluster;
    const auto* entry = target == kNoCluster ? nullptr : first_observed(table, plg, current, target, &used);
    NodeId next = kNoNode;
    if (entry) {
      std::uint64_t best = 0;
      for (const auto& [n, c] : entry->next) {
        if (c > best) best = c, next = n;
      }
    } else {
      double best = 0.0;
      for (const auto& e : plg.successors(current)) {
        if (e.prob > best) best = e.prob, next = e.to;
      }
    }
    if (next == kNoNode || std::find(out.begin(), out.end(), next) != out.end()) break;
    out.push_back(next);
    current = next;
  }
  return out;
}

Bytes serialise_table(const ConditionalTable& table) {
  ByteWriter w;
  w.put<std::uint64_t>(table.entries().size());
  for (const auto& [key, entry] : table.entries()) {
    w.put<std::int32_t>(key.first);
    w.put<std::int32_t>(key.second);
    w.put<std::uint64_t>(entry.next.size());
    for (const auto& [n, c] : entry.next) {
      w.put<std::int32_t>(n);
      w.put<std::uint64_t>(c);
    }
  }
  return frame(kTableMagic, kTableVersion, w.bytes());
}

ConditionalTable deserialise_table(std::span<const std::uint8_t> bytes) {
  const Bytes payload = unframe(bytes, kTableMagic, kTableVersion, "conditional table");
  ByteReader r(payload);
  ConditionalTable table;
  const auto keys = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < keys; ++k) {
    const auto current = r.get<std::int32_t>();
    const auto cluster = r.get<std::int32_t>();
    const auto n = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto next = r.get<std::int32_t>();
      const auto c = r.get<std::uint64_t>();
      table.add(current, cluster, next, c);
    }
  }
  r.expect_end();
  return table;
}

Bytes serialise_bundle(const PlgBundle& bundle) {
  ByteWriter w;
  w.put_bytes(serialise_plg(bundle.plg));
  w.put_bytes(serialise_table(bundle.table));
  return frame(kBundleMagic, kBundleVersion, w.bytes());
}

PlgBundle deserialise_bundle(std::span<const std::uint8_t> bytes) {
  const Bytes payload = unframe(bytes, kBundleMagic, kBundleVersion, "PLG file");
  ByteReader r(payload);
  PlgBundle bundle;
  bundle.plg = deserialise_plg(r.get_bytes());
  bundle.table = deserialise_table(r.get_bytes());
  r.expect_end();
  for (const auto& [key, entry] : bundle.table.entries()) {
    for (const auto& [next, c] : entry.next) {
      if (!bundle.plg.valid(key.first) || bundle.plg.count(key.first, next) == 0) {
        throw FormatError("PLG file: conditional table references a missing edge");
      }
    }
  }
  return bundle;
}

}  // namespace plg
