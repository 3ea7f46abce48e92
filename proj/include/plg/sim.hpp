#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plg/binary_io.hpp"
#include "plg/empirical.hpp"
#include "plg/graph.hpp"
#include "plg/planner.hpp"
#include "plg/risk.hpp"

namespace plg {

// Which vehicles take their actions from the policy under study.
enum class PolicyAssignment { kAll, kEgoOnly };

std::string_view to_string(PolicyAssignment a);
std::optional<PolicyAssignment> policy_assignment_from_string(std::string_view s);

struct SimConfig {
  double dt = 0.5;
  double v_max = 25.0;
  int max_ticks = 60;
  int max_path_len = 0;  // <= 0: default_max_len(|N|)
  PolicyAssignment assignment = PolicyAssignment::kAll;
  RiskConfig risk;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SeedVehicle {
  VehicleId vehicle_id = 0;
  NodeId node = kNoNode;
  double arc = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  ClusterId target = kNoCluster;

  friend bool operator==(const SeedVehicle&, const SeedVehicle&) = default;
};

// A high-risk snapshot; vehicles[0] is the ego (trailing vehicle of the
// minimum-MTTC pair).
struct SeedState {
  std::vector<SeedVehicle> vehicles;
  double source_time = 0.0;
  double min_mttc = 0.0;

  friend bool operator==(const SeedState&, const SeedState&) = default;
};

struct SeedOptions {
  double threshold = 5.0;      // seconds
  double neighbourhood = 50.0;  // metres around the closest pair kept in the snapshot
  int frame_stride = 1;        // consider every n-th dataset timestamp
};

struct SeedExtraction {
  std::vector<SeedState> seeds;
  std::size_t state_count = 0;       // vehicle states examined
  std::size_t frame_count = 0;       // distinct timestamps examined
  std::size_t trajectory_count = 0;  // discretised vehicle paths
};

SeedExtraction extract_seed_states(const Dataset& data, std::span<const DiscreteTrack> tracks,
                                   const Plg& plg, const RiskConfig& risk,
                                   const SeedOptions& options);

inline constexpr Magic kSeedsMagic{'P', 'L', 'G', 'S'};
inline constexpr std::uint32_t kSeedsVersion = 1;

Bytes serialise_seeds(const SeedExtraction& seeds);
SeedExtraction deserialise_seeds(std::span<const std::uint8_t> bytes);

// One vehicle's logged state at one tick. The action columns describe the
// step that led into this tick (tick 0 carries no action).
struct VehicleRecord {
  int tick = 0;
  VehicleId vehicle_id = 0;
  NodeId node = kNoNode;
  Vec2 position;
  double speed = 0.0;
  double accel = 0.0;
  LaneChange lane_change = LaneChange::kNone;
  double risk_max = 0.0;

  friend bool operator==(const VehicleRecord&, const VehicleRecord&) = default;
};

enum class TerminationKind { kCollision, kTimeout, kAllRetired };

std::string_view to_string(TerminationKind k);
std::optional<TerminationKind> termination_from_string(std::string_view s);

struct Termination {
  TerminationKind kind = TerminationKind::kTimeout;
  int tick = 0;
  VehicleId first = 0;   // colliding pair, lower id first
  VehicleId second = 0;
  NodeId node = kNoNode;

  friend bool operator==(const Termination&, const Termination&) = default;
};

// A policy decision made during simulation, with the reward that followed.
struct Transition {
  std::size_t slot = 0;  // vehicle index within the episode
  int tick = 0;
  RiskVector risk;
  ActionSample action;
  double reward = 0.0;
  bool done = false;  // last decision of this vehicle
};

struct Episode {
  std::size_t id = 0;
  std::size_t seed_index = 0;
  std::uint64_t rng_seed = 0;
  double dt = 0.5;
  std::vector<VehicleRecord> records;  // tick-major, vehicle order within a tick
  Termination termination;
  std::vector<Transition> transitions;  // policy-driven vehicles only, when requested

  bool collided() const { return termination.kind == TerminationKind::kCollision; }
  friend bool operator==(const Episode& a, const Episode& b) {
    return a.id == b.id && a.seed_index == b.seed_index && a.rng_seed == b.rng_seed &&
           a.dt == b.dt && a.records == b.records && a.termination == b.termination;
  }
};

struct Policies {
  const ActionPolicy* primary = nullptr;     // the policy under study
  const ActionPolicy* background = nullptr;  // used by non-ego vehicles under kEgoOnly
};

// min(1 / smallest MTTC, cap), or 0 with nobody on course.
double reward(const RiskVector& risk, double cap);

struct SimVehicle {
  VehicleId id = 0;
  KinematicState state;
  ClusterId target = kNoCluster;
  std::vector<NodeId> path;  // path[pos] is the current node
  std::size_t pos = 0;
  bool active = true;
};

struct World {
  int tick = 0;
  std::vector<SimVehicle> vehicles;
};

struct StepResult {
  std::vector<RiskVector> risks;        // pre-step, per slot (empty for inactive)
  std::vector<ActionSample> actions;    // per slot
  std::vector<bool> acted;              // slot was active at step start
  std::vector<bool> retired;            // slot retired during this step
  std::vector<std::vector<NodeId>> entered;  // nodes entered this step, per slot
  std::optional<Termination> collision;
};

// Places the seed's vehicles and plans their initial paths. Vehicles whose
// start node already dead-ends are inactive from the outset.
World initial_world(const SeedState& seed, const SimConfig& config, const ConditionalTable& table,
                    const Plg& plg, Rng& rng);

// Advances every active vehicle by one tick. `pre_risks`, when given, must be
// the risk vectors of the current world (as computed by world_risks).
StepResult step(World& world, const SimConfig& config, const Policies& policies,
                const ConditionalTable& table, const Plg& plg, Rng& rng,
                const std::vector<RiskVector>* pre_risks = nullptr);

// Lookahead courses of all vehicles (inactive ones get an empty course).
std::vector<Course> courses(const World& world, const Plg& plg, const RiskConfig& config);
// Risk vector of every slot against all other active vehicles.
std::vector<RiskVector> world_risks(const World& world, const Plg& plg, const RiskConfig& config);

Episode run_episode(const SeedState& seed, const SimConfig& config, const Policies& policies,
                    const ConditionalTable& table, const Plg& plg, std::uint64_t rng_seed,
                    bool record_transitions = false, double reward_cap = 20.0);

struct SeedRate {
  std::size_t episodes = 0;
  std::size_t collisions = 0;
};

struct BatchResult {
  std::vector<Episode> episodes;
  std::vector<SeedRate> per_seed;
  double corner_case_rate = 0.0;
};

// Episode e starts from seeds[e % seeds.size()] with rng seed
// mix_seed(config.seed, e).
BatchResult batch_simulate(std::span<const SeedState> seeds, std::size_t episodes,
                           const SimConfig& config, const Policies& policies,
                           const ConditionalTable& table, const Plg& plg, int jobs = 1);

// Episode log: CSV rows plus a JSON sidecar with termination metadata.
void write_episode_csv(std::ostream& out, std::span<const Episode> episodes);
std::string episode_sidecar_json(std::span<const Episode> episodes, const std::string& config_json);
std::vector<Episode> read_episodes(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

}  // namespace plg
