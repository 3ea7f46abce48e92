#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plg/graph.hpp"
#include "plg/sim.hpp"

namespace plg {

// Lane changes by the colliding pair shortly before impact: none, one, or
// two and more in total.
enum class CaseClass { kCase1 = 1, kCase2 = 2, kCase3 = 3 };

std::string_view to_string(CaseClass c);

struct CornerCaseRecord {
  std::size_t episode_id = 0;
  std::size_t seed_index = 0;
  CaseClass classification = CaseClass::kCase1;
  int lane_changes = 0;
  VehicleId first = 0;
  VehicleId second = 0;
  NodeId node = kNoNode;
  int tick = 0;

  friend bool operator==(const CornerCaseRecord&, const CornerCaseRecord&) = default;
};

// Counts lane_id changes between consecutive logged nodes of both colliding
// vehicles over ticks [t_c - ceil(T/dt), t_c]. Throws InvalidArgument for an
// episode that did not end in a collision.
CornerCaseRecord classify(const Episode& episode, const Plg& plg, double horizon);

struct Summary {
  std::size_t episodes = 0;
  std::size_t collisions = 0;
  double corner_case_rate = 0.0;
  std::array<std::size_t, 3> case_counts{};
  std::optional<std::array<double, 3>> proportions;  // empty without collisions
  std::map<std::size_t, SeedRate> per_seed;
  std::map<std::string, std::size_t> terminations;
};

Summary summarise(std::span<const CornerCaseRecord> records, std::span<const Episode> episodes);

// Report document; `config_json` is echoed under "config".
std::string summary_json(const Summary& summary, const std::string& config_json);

// Centred moving average whose window shrinks symmetrically near the ends,
// so both endpoints are kept.
std::vector<Vec2> smooth_path(std::span<const Vec2> points, int window);

}  // namespace plg
