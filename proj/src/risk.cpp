#include "plg/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double mttc(double gap, double v_follow, double v_lead, double a_follow, double a_lead) {
  if (gap < 0.0 || std::isnan(gap)) throw InvalidArgument("mttc: gap must be non-negative");
  if (gap == 0.0) return 0.0;
  const double dv = v_follow - v_lead;
  const double da = a_follow - a_lead;
  if (std::abs(da) < 1e-6) return dv > 0.0 ? gap / dv : kInf;

  // 0.5*da*t^2 + dv*t - gap = 0
  const double disc = dv * dv + 2.0 * da * gap;
  if (disc < 0.0) return kInf;
  const double root = std::sqrt(disc);
  // Cancellation-free pair of roots.
  const double q = -0.5 * (dv + std::copysign(root, dv));
  double best = kInf;
  auto consider = [&](double t) {
    if (t > 0.0 && std::isfinite(t)) best = std::min(best, t);
  };
  if (q != 0.0) {
    consider(q / (0.5 * da));
    consider(-gap / q);
  } else {
    consider(root / da);
    consider(-root / da);
  }
  return best;
}

double RiskVector::min_mttc() const {
  double m = kInf;
  for (double t : mttc) m = std::min(m, t);
  return m;
}

namespace {

// Arc length from lookahead[0] to lookahead[index].
double course_distance(const Plg& plg, const std::vector<NodeId>& nodes, std::size_t index) {
  double d = 0.0;
  for (std::size_t k = 1; k <= index; ++k) d += plg.edge_length(nodes[k - 1], nodes[k]);
  return d;
}

}  // namespace

std::optional<double> following_gap(const Plg& plg, const Course& ego, const Course& other) {
  if (ego.lookahead.empty() || other.lookahead.empty()) return std::nullopt;
  // Shared nodes lie within both course lengths of the two vehicles.
  const double reach = course_distance(plg, ego.lookahead, ego.lookahead.size() - 1) +
                       course_distance(plg, other.lookahead, other.lookahead.size() - 1);
  if (distance(plg.node(ego.lookahead[0]).position, plg.node(other.lookahead[0]).position) > reach) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < ego.lookahead.size(); ++i) {
    const auto it = std::find(other.lookahead.begin(), other.lookahead.end(), ego.lookahead[i]);
    if (it == other.lookahead.end()) continue;
    const auto j = static_cast<std::size_t>(it - other.lookahead.begin());
    const double ego_to_meet = course_distance(plg, ego.lookahead, i) - ego.state.arc;
    const double other_to_meet = course_distance(plg, other.lookahead, j) - other.state.arc;
    if (ego_to_meet < other_to_meet) return std::nullopt;
    return ego_to_meet - other_to_meet;
  }
  return std::nullopt;
}

RiskVector risk_vector(const Plg& plg, const Course& ego, std::span<const Course> others,
                       const RiskConfig& config) {
  struct Candidate {
    double gap;
    double mttc;
    double inverse;
  };
  std::vector<Candidate> candidates;
  for (const auto& other : others) {
    const auto gap = following_gap(plg, ego, other);
    if (!gap) continue;
    const double t = mttc(std::max(*gap, 0.0), ego.state.speed, other.state.speed, ego.state.accel,
                          other.state.accel);
    const double inverse = t == 0.0 ? config.inverse_ceiling : std::min(1.0 / t, config.inverse_ceiling);
    candidates.push_back({*gap, t, inverse});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.gap != b.gap) return a.gap < b.gap;
    return a.inverse > b.inverse;
  });
  if (candidates.size() > static_cast<std::size_t>(config.k_bv)) {
    candidates.resize(static_cast<std::size_t>(config.k_bv));
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.inverse != b.inverse) return a.inverse > b.inverse;
    return a.mttc < b.mttc;
  });
  RiskVector r;
  r.inverse_mttc.assign(static_cast<std::size_t>(config.k_bv), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    r.inverse_mttc[i] = candidates[i].inverse;
    r.mttc.push_back(candidates[i].mttc);
  }
  return r;
}

std::string_view to_string(LaneChange lc) {
  switch (lc) {
    case LaneChange::kLeft:
      return "left";
    case LaneChange::kRight:
      return "right";
    case LaneChange::kNone:
      break;
  }
  return "none";
}

std::optional<LaneChange> lane_change_from_string(std::string_view s) {
  if (s == "left") return LaneChange::kLeft;
  if (s == "none") return LaneChange::kNone;
  if (s == "right") return LaneChange::kRight;
  return std::nullopt;
}

ActionSample ActionSample::from_joint(int joint) {
  if (joint < 0 || joint >= kJointActions) throw InvalidArgument("joint action out of range");
  return {joint / kLaneActions, static_cast<LaneChange>(joint % kLaneActions)};
}

int nearest_accel_bin(double accel) {
  int best = 0;
  for (int b = 1; b < kAccelBins; ++b) {
    if (std::abs(kAccelGrid[static_cast<std::size_t>(b)] - accel) <
        std::abs(kAccelGrid[static_cast<std::size_t>(best)] - accel)) {
      best = b;
    }
  }
  return best;
}

int risk_bin(const RiskVector& r) {
  const double lead = r.leading();
  for (int b = 0; b < kRiskBins; ++b) {
    if (lead < kRiskBinEdges[static_cast<std::size_t>(b) + 1]) return b;
  }
  return kRiskBins - 1;
}

RiskVector representative_risk(int bin, int k_bv) {
  static constexpr std::array<double, kRiskBins> kCentres{0.05, 0.15, 0.35, 0.75, 2.0};
  RiskVector r;
  r.inverse_mttc.assign(static_cast<std::size_t>(k_bv), 0.0);
  const double lead = kCentres.at(static_cast<std::size_t>(bin));
  r.inverse_mttc[0] = lead;
  r.mttc.push_back(1.0 / lead);
  return r;
}

ActionSample sample_action(const ActionDistribution& dist, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int j = 0; j < kJointActions; ++j) {
    const double p = dist[static_cast<std::size_t>(j)];
    if (p > 0.0) last_positive = j;
    acc += p;
    if (u < acc) return ActionSample::from_joint(j);
  }
  return ActionSample::from_joint(last_positive);
}

}  // namespace plg
