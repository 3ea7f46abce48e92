#include "plg/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace plg {

std::string_view to_string(CaseClass c) {
  switch (c) {
    case CaseClass::kCase2:
      return "case2";
    case CaseClass::kCase3:
      return "case3";
    case CaseClass::kCase1:
      break;
  }
  return "case1";
}

CornerCaseRecord classify(const Episode& episode, const Plg& plg, double horizon) {
  if (!episode.collided()) throw InvalidArgument("only collision episodes can be classified");
  if (!(horizon >= 0.0) || !(episode.dt > 0.0)) throw InvalidArgument("bad classification window");
  const auto& term = episode.termination;
  const int window = static_cast<int>(std::ceil(horizon / episode.dt - 1e-9));
  const int from = term.tick - window;

  int changes = 0;
  for (const VehicleId id : {term.first, term.second}) {
    std::optional<int> prev_lane;
    bool have_prev = false;
    for (const auto& r : episode.records) {
      if (r.vehicle_id != id || r.tick < from || r.tick > term.tick) continue;
      const auto lane = plg.valid(r.node) ? plg.node(r.node).lane_id : std::nullopt;
      if (have_prev && prev_lane && lane && *prev_lane != *lane) ++changes;
      prev_lane = lane;
      have_prev = true;
    }
  }

  CornerCaseRecord rec;
  rec.episode_id = episode.id;
  rec.seed_index = episode.seed_index;
  rec.lane_changes = changes;
  rec.classification = changes == 0 ? CaseClass::kCase1 : changes == 1 ? CaseClass::kCase2 : CaseClass::kCase3;
  rec.first = term.first;
  rec.second = term.second;
  rec.node = term.node;
  rec.tick = term.tick;
  return rec;
}

Summary summarise(std::span<const CornerCaseRecord> records, std::span<const Episode> episodes) {
  Summary s;
  s.episodes = episodes.size();
  for (const auto& ep : episodes) {
    auto& seed = s.per_seed[ep.seed_index];
    ++seed.episodes;
    if (ep.collided()) {
      ++seed.collisions;
      ++s.collisions;
    }
    ++s.terminations[std::string(to_string(ep.termination.kind))];
  }
  s.corner_case_rate = s.episodes ? static_cast<double>(s.collisions) / static_cast<double>(s.episodes) : 0.0;
  for (const auto& r : records) ++s.case_counts[static_cast<std::size_t>(r.classification) - 1];
  if (!records.empty()) {
    std::array<double, 3> p{};
    for (std::size_t i = 0; i < 3; ++i) {
      p[i] = static_cast<double>(s.case_counts[i]) / static_cast<double>(records.size());
    }
    s.proportions = p;
  }
  return s;
}

std::string summary_json(const Summary& s, const std::string& config_json) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["episodes"] = s.episodes;
  j["collisions"] = s.collisions;
  j["r_cc"] = s.corner_case_rate;
  j["case_counts"] = {{"case1", s.case_counts[0]}, {"case2", s.case_counts[1]}, {"case3", s.case_counts[2]}};
  if (s.proportions) {
    j["proportions"] = {{"case1", (*s.proportions)[0]},
                        {"case2", (*s.proportions)[1]},
                        {"case3", (*s.proportions)[2]}};
  } else {
    j["proportions"] = nullptr;
  }
  auto& term = j["terminations"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.terminations) term[k] = v;
  auto& seeds = j["per_seed"] = nlohmann::ordered_json::array();
  for (const auto& [idx, rate] : s.per_seed) {
    seeds.push_back({{"seed_index", idx},
                     {"episodes", rate.episodes},
                     {"collisions", rate.collisions},
                     {"r_cc", static_cast<double>(rate.collisions) / static_cast<double>(rate.episodes)}});
  }
  j["config"] = config_json.empty() ? nlohmann::ordered_json::object()
                                    : nlohmann::ordered_json::parse(config_json);
  return j.dump(2) + "\n";
}

std::vector<Vec2> smooth_path(std::span<const Vec2> points, int window) {
  if (window < 1) throw InvalidArgument("smoothing window must be at least 1");
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  const std::ptrdiff_t half = (window - 1) / 2;
  std::vector<Vec2> out(points.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t h = std::min({half, i, n - 1 - i});
    Vec2 sum;
    for (std::ptrdiff_t k = i - h; k <= i + h; ++k) sum = sum + points[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = (1.0 / static_cast<double>(2 * h + 1)) * sum;
  }
  return out;
}

}  // namespace plg
