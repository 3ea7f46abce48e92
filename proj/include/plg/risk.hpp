#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "plg/common.hpp"
#include "plg/graph.hpp"

namespace plg {

// Modified time-to-collision under constant accelerations: smallest positive
// t with 0.5*da*t^2 + dv*t = gap, where dv and da are follower minus leader.
// Returns +inf when the gap never closes; 0 for a zero gap.
double mttc(double gap, double v_follow, double v_lead, double a_follow, double a_lead);

struct KinematicState {
  NodeId node = kNoNode;
  double arc = 0.0;  // metres travelled from `node` towards the next course node
  double speed = 0.0;
  double accel = 0.0;
  std::optional<int> lane_id;
};

// A vehicle's state plus its expected course: lookahead[0] is the current node.
struct Course {
  KinematicState state;
  std::vector<NodeId> lookahead;
};

struct RiskConfig {
  int k_bv = 4;             // fixed risk-vector width
  int lookahead_nodes = 6;  // nodes ahead used to establish shared courses
  // Inverse-MTTC value stored for a zero MTTC, keeping features finite.
  double inverse_ceiling = 1e3;
};

struct RiskVector {
  std::vector<double> inverse_mttc;  // k_bv entries, descending, zero padded
  std::vector<double> mttc;          // raw values of contributing vehicles, same order

  double leading() const { return inverse_mttc.empty() ? 0.0 : inverse_mttc.front(); }
  // Smallest raw MTTC, +inf when no vehicle shares the course.
  double min_mttc() const;
  friend bool operator==(const RiskVector&, const RiskVector&) = default;
};

// Distance the ego trails `other` along their first shared course node, when
// the ego is the trailing vehicle; nullopt when courses are disjoint or the
// other vehicle is behind.
std::optional<double> following_gap(const Plg& plg, const Course& ego, const Course& other);

// Inverse MTTC against the k_bv nearest vehicles the ego trails on a shared
// course, sorted descending and zero padded.
RiskVector risk_vector(const Plg& plg, const Course& ego, std::span<const Course> others,
                       const RiskConfig& config);

// Acceleration grid (m/s^2) x lane action.
inline constexpr std::array<double, 6> kAccelGrid{-4.0, -2.0, -1.0, 0.0, 1.0, 2.0};
inline constexpr int kAccelBins = static_cast<int>(kAccelGrid.size());
inline constexpr int kLaneActions = 3;
inline constexpr int kJointActions = kAccelBins * kLaneActions;

// Left moves to lane_id - 1, right to lane_id + 1.
enum class LaneChange : std::uint8_t { kLeft = 0, kNone = 1, kRight = 2 };

std::string_view to_string(LaneChange lc);
std::optional<LaneChange> lane_change_from_string(std::string_view s);

struct ActionSample {
  int accel_bin = 3;
  LaneChange lane_change = LaneChange::kNone;

  double accel() const { return kAccelGrid.at(static_cast<std::size_t>(accel_bin)); }
  int joint() const { return accel_bin * kLaneActions + static_cast<int>(lane_change); }
  static ActionSample from_joint(int joint);
  friend bool operator==(const ActionSample&, const ActionSample&) = default;
};

int nearest_accel_bin(double accel);

// Leading inverse-MTTC thresholds (1/s) delimiting the empirical risk bins.
inline constexpr std::array<double, 6> kRiskBinEdges{0.0, 0.1, 0.2, 0.5, 1.0,
                                                     std::numeric_limits<double>::infinity()};
inline constexpr int kRiskBins = static_cast<int>(kRiskBinEdges.size()) - 1;

int risk_bin(const RiskVector& r);
// A risk vector whose leading entry sits inside `bin` (others zero).
RiskVector representative_risk(int bin, int k_bv);

using ActionDistribution = std::array<double, kJointActions>;

ActionSample sample_action(const ActionDistribution& dist, Rng& rng);

// Anything that maps a risk vector to a distribution over joint actions.
class ActionPolicy {
 public:
  virtual ~ActionPolicy() = default;
  virtual ActionDistribution distribution(const RiskVector& risk) const = 0;
};

}  // namespace plg
