#include "plg/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "plg/parallel.hpp"

namespace plg {

std::string_view to_string(PolicyAssignment a) {
  return a == PolicyAssignment::kEgoOnly ? "ego" : "all";
}

std::optional<PolicyAssignment> policy_assignment_from_string(std::string_view s) {
  if (s == "all") return PolicyAssignment::kAll;
  if (s == "ego") return PolicyAssignment::kEgoOnly;
  return std::nullopt;
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(v_max > 0.0)) throw InvalidArgument("v_max must be positive");
  if (max_ticks < 1) throw InvalidArgument("max_ticks must be at least 1");
  if (risk.k_bv < 1 || risk.lookahead_nodes < 1) throw InvalidArgument("risk widths must be positive");
}

std::string_view to_string(TerminationKind k) {
  switch (k) {
    case TerminationKind::kCollision:
      return "collision";
    case TerminationKind::kAllRetired:
      return "all_retired";
    case TerminationKind::kTimeout:
      break;
  }
  return "timeout";
}

std::optional<TerminationKind> termination_from_string(std::string_view s) {
  if (s == "collision") return TerminationKind::kCollision;
  if (s == "timeout") return TerminationKind::kTimeout;
  if (s == "all_retired") return TerminationKind::kAllRetired;
  return std::nullopt;
}

double reward(const RiskVector& risk, double cap) {
  const double t = risk.min_mttc();
  if (!std::isfinite(t)) return 0.0;
  if (t <= 0.0) return cap;
  return std::min(1.0 / t, cap);
}

// ---------------------------------------------------------------------------
// Seed extraction

SeedExtraction extract_seed_states(const Dataset& data, std::span<const DiscreteTrack> tracks,
                                   const Plg& plg, const RiskConfig& risk,
                                   const SeedOptions& options) {
  if (options.frame_stride < 1) throw InvalidArgument("frame stride must be at least 1");
  SeedExtraction out;
  out.trajectory_count = tracks.size();
  const auto frames = reconstruct_frames(data, tracks, plg, risk);
  const double r2 = options.neighbourhood * options.neighbourhood;

  for (std::size_t f = 0; f < frames.size(); f += static_cast<std::size_t>(options.frame_stride)) {
    const auto& frame = frames[f];
    ++out.frame_count;
    out.state_count += frame.vehicles.size();

    double best = std::numeric_limits<double>::infinity();
    std::size_t follower = 0;
    std::size_t leader = 0;
    for (std::size_t i = 0; i < frame.vehicles.size(); ++i) {
      for (std::size_t j = 0; j < frame.vehicles.size(); ++j) {
        if (i == j) continue;
        const auto& a = frame.vehicles[i].course;
        const auto& b = frame.vehicles[j].course;
        const auto gap = following_gap(plg, a, b);
        if (!gap) continue;
        const double t = mttc(std::max(*gap, 0.0), a.state.speed, b.state.speed, a.state.accel,
                              b.state.accel);
        if (t < best) {
          best = t;
          follower = i;
          leader = j;
        }
      }
    }
    if (!(best <= options.threshold)) continue;

    auto to_seed = [&](const FrameVehicle& fv) -> std::optional<SeedVehicle> {
      const auto& track = tracks[fv.track];
      if (track.path.target_cluster == kNoCluster) return std::nullopt;
      SeedVehicle v;
      v.vehicle_id = data.vehicles().at(track.vehicle_index).vehicle_id;
      v.node = fv.course.state.node;
      v.arc = fv.course.state.arc;
      v.speed = fv.course.state.speed;
      v.accel = fv.course.state.accel;
      v.target = track.path.target_cluster;
      return v;
    };
    const auto ego = to_seed(frame.vehicles[follower]);
    const auto lead = to_seed(frame.vehicles[leader]);
    if (!ego || !lead) continue;

    SeedState seed;
    seed.source_time = frame.time;
    seed.min_mttc = best;
    seed.vehicles = {*ego, *lead};
    const Vec2 pe = plg.node(ego->node).position;
    const Vec2 pl = plg.node(lead->node).position;
    for (std::size_t k = 0; k < frame.vehicles.size(); ++k) {
      if (k == follower || k == leader) continue;
      const Vec2 p = plg.node(frame.vehicles[k].course.state.node).position;
      if (squared_distance(p, pe) > r2 && squared_distance(p, pl) > r2) continue;
      if (auto v = to_seed(frame.vehicles[k])) seed.vehicles.push_back(*v);
    }
    out.seeds.push_back(std::move(seed));
  }
  return out;
}

Bytes serialise_seeds(const SeedExtraction& seeds) {
  ByteWriter w;
  w.put<std::uint64_t>(seeds.state_count);
  w.put<std::uint64_t>(seeds.frame_count);
  w.put<std::uint64_t>(seeds.trajectory_count);
  w.put<std::uint64_t>(seeds.seeds.size());
  for (const auto& s : seeds.seeds) {
    w.put(s.source_time);
    w.put(s.min_mttc);
    w.put<std::uint64_t>(s.vehicles.size());
    for (const auto& v : s.vehicles) {
      w.put<std::int64_t>(v.vehicle_id);
      w.put<std::int32_t>(v.node);
      w.put(v.arc);
      w.put(v.speed);
      w.put(v.accel);
      w.put<std::int32_t>(v.target);
    }
  }
  return frame(kSeedsMagic, kSeedsVersion, w.bytes());
}

SeedExtraction deserialise_seeds(std::span<const std::uint8_t> bytes) {
  const Bytes payload = unframe(bytes, kSeedsMagic, kSeedsVersion, "seed file");
  ByteReader r(payload);
  SeedExtraction out;
  out.state_count = r.get<std::uint64_t>();
  out.frame_count = r.get<std::uint64_t>();
  out.trajectory_count = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    SeedState s;
    s.source_time = r.get<double>();
    s.min_mttc = r.get<double>();
    const auto m = r.get<std::uint64_t>();
    for (std::uint64_t k = 0; k < m; ++k) {
      SeedVehicle v;
      v.vehicle_id = r.get<std::int64_t>();
      v.node = r.get<std::int32_t>();
      v.arc = r.get<double>();
      v.speed = r.get<double>();
      v.accel = r.get<double>();
      v.target = r.get<std::int32_t>();
      s.vehicles.push_back(v);
    }
    out.seeds.push_back(std::move(s));
  }
  r.expect_end();
  return out;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

int path_budget(const SimConfig& config, const Plg& plg) {
  return config.max_path_len > 0 ? config.max_path_len : default_max_len(plg.size());
}

double clamp_arc(const Plg& plg, const SimVehicle& v, double arc) {
  if (v.pos + 1 >= v.path.size()) return 0.0;
  const double len = plg.edge_length(v.path[v.pos], v.path[v.pos + 1]);
  if (len <= 0.0) return 0.0;
  return std::clamp(arc, 0.0, std::nextafter(len, 0.0));
}

Vec2 vehicle_position(const Plg& plg, const SimVehicle& v) {
  const Vec2 a = plg.node(v.path[v.pos]).position;
  if (v.pos + 1 >= v.path.size()) return a;
  const Vec2 b = plg.node(v.path[v.pos + 1]).position;
  const double len = distance(a, b);
  if (len <= 0.0) return a;
  return a + (v.state.arc / len) * (b - a);
}

const ActionPolicy& policy_for(const Policies& policies, const SimConfig& config, std::size_t slot) {
  const ActionPolicy* p = policies.primary;
  if (config.assignment == PolicyAssignment::kEgoOnly && slot != 0 && policies.background) {
    p = policies.background;
  }
  if (!p) throw InvalidArgument("simulation needs an action policy");
  return *p;
}

bool policy_driven(const SimConfig& config, std::size_t slot) {
  return config.assignment == PolicyAssignment::kAll || slot == 0;
}

// Successor of `node` in `lane` with the highest transition probability.
std::optional<NodeId> lane_successor(const Plg& plg, NodeId node, int lane) {
  std::optional<NodeId> best;
  double best_p = -1.0;
  for (const auto& e : plg.successors(node)) {
    const auto l = plg.node(e.to).lane_id;
    if (!l || *l != lane) continue;
    if (e.prob > best_p) {
      best_p = e.prob;
      best = e.to;
    }
  }
  return best;
}

void apply_lane_change(SimVehicle& v, LaneChange lc, const SimConfig& config,
                       const ConditionalTable& table, const Plg& plg, Rng& rng) {
  if (lc == LaneChange::kNone) return;
  const NodeId cur = v.path[v.pos];
  const auto lane = plg.node(cur).lane_id;
  if (!lane) return;
  const int want = *lane + (lc == LaneChange::kLeft ? -1 : 1);
  const auto next = lane_successor(plg, cur, want);
  if (!next) return;
  if (v.pos + 1 < v.path.size() && v.path[v.pos + 1] == *next) return;

  std::vector<NodeId> path{cur, *next};
  if (!plg.in_cluster(*next, v.target)) {
    try {
      const auto rest = plan_path(table, plg, *next, v.target, path_budget(config, plg), rng);
      path.insert(path.end(), rest.nodes.begin() + 1, rest.nodes.end());
    } catch (const DeadEnd&) {
      // Keeps the one-edge detour; the vehicle retires when it runs out.
    }
  }
  v.path = std::move(path);
  v.pos = 0;
  v.state.arc = clamp_arc(plg, v, v.state.arc);
}

// Moves along the path by the accumulated arc. Returns false when the
// vehicle retires (target reached or no continuation).
bool traverse(SimVehicle& v, const SimConfig& config, const ConditionalTable& table, const Plg& plg,
              Rng& rng, std::vector<NodeId>& entered) {
  constexpr int kMaxHops = 100000;
  for (int hop = 0; hop < kMaxHops; ++hop) {
    const NodeId cur = v.path[v.pos];
    if (plg.in_cluster(cur, v.target)) return false;
    if (v.pos + 1 >= v.path.size()) {
      try {
        v.path = plan_path(table, plg, cur, v.target, path_budget(config, plg), rng).nodes;
        v.pos = 0;
      } catch (const DeadEnd&) {
        return false;
      }
      if (v.path.size() < 2) return false;
    }
    const double len = plg.edge_length(v.path[v.pos], v.path[v.pos + 1]);
    if (v.state.arc < len) return true;
    v.state.arc -= len;
    ++v.pos;
    entered.push_back(v.path[v.pos]);
  }
  return true;
}

bool contains(const std::vector<NodeId>& nodes, NodeId n) {
  return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
}

}  // namespace

World initial_world(const SeedState& seed, const SimConfig& config, const ConditionalTable& table,
                    const Plg& plg, Rng& rng) {
  config.validate();
  if (seed.vehicles.empty()) throw InvalidArgument("seed state has no vehicles");
  World w;
  for (const auto& sv : seed.vehicles) {
    if (!plg.valid(sv.node)) throw InvalidArgument("seed vehicle on an unknown node");
    SimVehicle v;
    v.id = sv.vehicle_id;
    v.target = sv.target;
    v.state.node = sv.node;
    v.state.speed = std::clamp(sv.speed, 0.0, config.v_max);
    v.state.accel = sv.accel;
    v.state.lane_id = plg.node(sv.node).lane_id;
    v.path = {sv.node};
    if (!plg.in_cluster(sv.node, sv.target)) {
      try {
        v.path = plan_path(table, plg, sv.node, sv.target, path_budget(config, plg), rng).nodes;
      } catch (const DeadEnd&) {
        v.active = false;
      }
    }
    v.state.arc = clamp_arc(plg, v, sv.arc);
    w.vehicles.push_back(std::move(v));
  }
  return w;
}

std::vector<Course> courses(const World& world, const Plg& plg, const RiskConfig& config) {
  (void)plg;
  std::vector<Course> out(world.vehicles.size());
  const auto ahead = static_cast<std::size_t>(config.lookahead_nodes);
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    const auto& v = world.vehicles[i];
    out[i].state = v.state;
    if (!v.active) continue;
    const auto end = std::min(v.path.size(), v.pos + ahead + 1);
    out[i].lookahead.assign(v.path.begin() + static_cast<std::ptrdiff_t>(v.pos),
                            v.path.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<RiskVector> world_risks(const World& world, const Plg& plg, const RiskConfig& config) {
  const auto cs = courses(world, plg, config);
  std::vector<RiskVector> out(cs.size());
  std::vector<Course> others;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!world.vehicles[i].active) {
      out[i] = risk_vector(plg, Course{}, {}, config);
      continue;
    }
    others.clear();
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (j != i && world.vehicles[j].active) others.push_back(cs[j]);
    }
    out[i] = risk_vector(plg, cs[i], others, config);
  }
  return out;
}

StepResult step(World& world, const SimConfig& config, const Policies& policies,
                const ConditionalTable& table, const Plg& plg, Rng& rng,
                const std::vector<RiskVector>* pre_risks) {
  const std::size_t n = world.vehicles.size();
  StepResult res;
  res.risks = pre_risks ? *pre_risks : world_risks(world, plg, config.risk);
  res.actions.assign(n, ActionSample{});
  res.acted.assign(n, false);
  res.retired.assign(n, false);
  res.entered.assign(n, {});

  for (std::size_t i = 0; i < n; ++i) {
    if (!world.vehicles[i].active) continue;
    res.acted[i] = true;
    res.actions[i] = sample_action(policy_for(policies, config, i).distribution(res.risks[i]), rng);
  }

  std::vector<NodeId> pre(n, kNoNode);
  for (std::size_t i = 0; i < n; ++i) {
    if (!res.acted[i]) continue;
    auto& v = world.vehicles[i];
    pre[i] = v.path[v.pos];
    apply_lane_change(v, res.actions[i].lane_change, config, table, plg, rng);
    const double speed = std::clamp(v.state.speed + res.actions[i].accel() * config.dt, 0.0, config.v_max);
    v.state.accel = (speed - v.state.speed) / config.dt;
    v.state.speed = speed;
    v.state.arc += speed * config.dt;
    const bool moving = traverse(v, config, table, plg, rng, res.entered[i]);
    v.state.node = v.path[v.pos];
    v.state.lane_id = plg.node(v.state.node).lane_id;
    if (moving) {
      v.state.arc = clamp_arc(plg, v, v.state.arc);
    } else {
      res.retired[i] = true;
    }
  }

  // Node co-occupancy after the step, node swaps, and one vehicle driving
  // through the other's position within the tick.
  auto passed = [&](std::size_t a, std::size_t b) {
    return contains(res.entered[a], pre[b]) && contains(res.entered[a], world.vehicles[b].state.node) &&
           world.vehicles[b].state.node != world.vehicles[a].state.node;
  };
  for (std::size_t i = 0; i < n && !res.collision; ++i) {
    if (!res.acted[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!res.acted[j]) continue;
      const NodeId ni = world.vehicles[i].state.node;
      const NodeId nj = world.vehicles[j].state.node;
      NodeId at = kNoNode;
      if (ni == nj) {
        at = ni;
      } else if (pre[i] == nj && pre[j] == ni) {
        at = ni;
      } else if (passed(i, j)) {
        at = nj;
      } else if (passed(j, i)) {
        at = ni;
      }
      if (at == kNoNode) continue;
      Termination t;
      t.kind = TerminationKind::kCollision;
      t.tick = world.tick + 1;
      t.first = std::min(world.vehicles[i].id, world.vehicles[j].id);
      t.second = std::max(world.vehicles[i].id, world.vehicles[j].id);
      t.node = at;
      res.collision = t;
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (res.retired[i]) world.vehicles[i].active = false;
  }
  ++world.tick;
  return res;
}

Episode run_episode(const SeedState& seed, const SimConfig& config, const Policies& policies,
                    const ConditionalTable& table, const Plg& plg, std::uint64_t rng_seed,
                    bool record_transitions, double reward_cap) {
  Rng rng(rng_seed);
  World world = initial_world(seed, config, table, plg, rng);
  Episode ep;
  ep.rng_seed = rng_seed;
  ep.dt = config.dt;

  auto risks = world_risks(world, plg, config.risk);
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    const auto& v = world.vehicles[i];
    if (!v.active) continue;
    ep.records.push_back({0, v.id, v.state.node, vehicle_position(plg, v), v.state.speed,
                          v.state.accel, LaneChange::kNone, risks[i].leading()});
  }

  auto any_active = [&] {
    return std::any_of(world.vehicles.begin(), world.vehicles.end(),
                       [](const SimVehicle& v) { return v.active; });
  };
  if (!any_active()) {
    ep.termination.kind = TerminationKind::kAllRetired;
    return ep;
  }

  for (;;) {
    const auto res = step(world, config, policies, table, plg, rng, &risks);
    std::optional<Termination> done = res.collision;
    if (!done && !any_active()) done = Termination{TerminationKind::kAllRetired, world.tick};
    if (!done && world.tick >= config.max_ticks) done = Termination{TerminationKind::kTimeout, world.tick};

    risks = world_risks(world, plg, config.risk);
    for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
      if (!res.acted[i]) continue;
      const auto& v = world.vehicles[i];
      const bool in_pair = res.collision && (v.id == res.collision->first || v.id == res.collision->second);
      VehicleRecord rec{world.tick, v.id, v.state.node, vehicle_position(plg, v), v.state.speed,
                        v.state.accel, res.actions[i].lane_change, res.risks[i].leading()};
      if (in_pair) {
        rec.node = res.collision->node;
        rec.position = plg.node(rec.node).position;
      }
      ep.records.push_back(rec);

      if (record_transitions && policy_driven(config, i)) {
        Transition t;
        t.slot = i;
        t.tick = world.tick - 1;
        t.risk = res.risks[i];
        t.action = res.actions[i];
        t.reward = in_pair ? reward_cap : (res.retired[i] ? 0.0 : reward(risks[i], reward_cap));
        t.done = done.has_value() || res.retired[i];
        ep.transitions.push_back(std::move(t));
      }
    }
    if (done) {
      ep.termination = *done;
      return ep;
    }
  }
}

BatchResult batch_simulate(std::span<const SeedState> seeds, std::size_t episodes,
                           const SimConfig& config, const Policies& policies,
                           const ConditionalTable& table, const Plg& plg, int jobs) {
  if (seeds.empty()) throw InvalidArgument("batch simulation needs at least one seed state");
  BatchResult out;
  out.episodes.resize(episodes);
  parallel_for(episodes, jobs, [&](std::size_t e) {
    const std::size_t s = e % seeds.size();
    auto ep = run_episode(seeds[s], config, policies, table, plg, mix_seed(config.seed, e));
    ep.id = e;
    ep.seed_index = s;
    out.episodes[e] = std::move(ep);
  });
  out.per_seed.assign(seeds.size(), {});
  std::size_t collisions = 0;
  for (const auto& ep : out.episodes) {
    auto& rate = out.per_seed[ep.seed_index];
    ++rate.episodes;
    if (ep.collided()) {
      ++rate.collisions;
      ++collisions;
    }
  }
  out.corner_case_rate = episodes ? static_cast<double>(collisions) / static_cast<double>(episodes) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Log files

void write_episode_csv(std::ostream& out, std::span<const Episode> episodes) {
  out << "episode_id,tick,vehicle_id,node_id,x,y,speed,accel,lane_change,risk_max\n";
  char buf[512];
  for (const auto& ep : episodes) {
    for (const auto& r : ep.records) {
      std::snprintf(buf, sizeof buf, "%zu,%d,%lld,%d,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n", ep.id,
                    r.tick, static_cast<long long>(r.vehicle_id), r.node, r.position.x, r.position.y,
                    r.speed, r.accel, std::string(to_string(r.lane_change)).c_str(), r.risk_max);
      out << buf;
    }
  }
}

std::string episode_sidecar_json(std::span<const Episode> episodes, const std::string& config_json) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["config"] = config_json.empty() ? nlohmann::ordered_json::object()
                                    : nlohmann::ordered_json::parse(config_json);
  auto& list = j["episodes"] = nlohmann::ordered_json::array();
  for (const auto& ep : episodes) {
    nlohmann::ordered_json e;
    e["episode_id"] = ep.id;
    e["seed_index"] = ep.seed_index;
    e["rng_seed"] = ep.rng_seed;
    e["dt"] = ep.dt;
    nlohmann::ordered_json t;
    t["kind"] = std::string(to_string(ep.termination.kind));
    t["tick"] = ep.termination.tick;
    if (ep.collided()) {
      t["vehicles"] = {ep.termination.first, ep.termination.second};
      t["node"] = ep.termination.node;
    }
    e["termination"] = std::move(t);
    list.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

namespace {

template <typename T>
T parse_field(std::string_view s, const std::string& where) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError(where + ": cannot parse '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::vector<Episode> read_episodes(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
  std::ifstream side(sidecar);
  if (!side) throw DataError("cannot open " + sidecar.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar.string() + ": " + e.what());
  }
  std::vector<Episode> episodes;
  std::map<std::size_t, std::size_t> by_id;
  try {
    for (const auto& e : meta.at("episodes")) {
      Episode ep;
      ep.id = e.at("episode_id").get<std::size_t>();
      ep.seed_index = e.at("seed_index").get<std::size_t>();
      ep.rng_seed = e.at("rng_seed").get<std::uint64_t>();
      ep.dt = e.at("dt").get<double>();
      const auto& t = e.at("termination");
      const auto kind = termination_from_string(t.at("kind").get<std::string>());
      if (!kind) throw DataError(sidecar.string() + ": unknown termination kind");
      ep.termination.kind = *kind;
      ep.termination.tick = t.at("tick").get<int>();
      if (*kind == TerminationKind::kCollision) {
        ep.termination.first = t.at("vehicles").at(0).get<VehicleId>();
        ep.termination.second = t.at("vehicles").at(1).get<VehicleId>();
        ep.termination.node = t.at("node").get<NodeId>();
      }
      by_id[ep.id] = episodes.size();
      episodes.push_back(std::move(ep));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar.string() + ": " + e.what());
  }

  std::ifstream in(csv);
  if (!in) throw DataError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  std::vector<std::string_view> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    cells.clear();
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::string where = csv.string() + ":" + std::to_string(line_no);
    if (cells.size() != 10) throw DataError(where + ": expected 10 columns");
    const auto id = parse_field<std::size_t>(cells[0], where);
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(where + ": episode missing from sidecar");
    VehicleRecord r;
    r.tick = parse_field<int>(cells[1], where);
    r.vehicle_id = parse_field<VehicleId>(cells[2], where);
    r.node = parse_field<NodeId>(cells[3], where);
    r.position.x = parse_field<double>(cells[4], where);
    r.position.y = parse_field<double>(cells[5], where);
    r.speed = parse_field<double>(cells[6], where);
    r.accel = parse_field<double>(cells[7], where);
    const auto lc = lane_change_from_string(cells[8]);
    if (!lc) throw DataError(where + ": unknown lane change");
    r.lane_change = *lc;
    r.risk_max = parse_field<double>(cells[9], where);
    episodes[it->second].records.push_back(r);
  }
  return episodes;
}

}  // namespace plg
