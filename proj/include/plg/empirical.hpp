#pragma once

#include <array>
#include <span>
#include <vector>

#include "plg/binary_io.hpp"
#include "plg/graph.hpp"
#include "plg/risk.hpp"

namespace plg {

// One vehicle at one dataset timestamp, with its observed course ahead.
struct FrameVehicle {
  std::size_t track = 0;   // index into the DiscreteTrack list
  std::size_t sample = 0;  // index into that vehicle's samples
  Course course;
};

struct Frame {
  double time = 0.0;
  std::vector<FrameVehicle> vehicles;
};

// Groups discretised samples by timestamp. Each vehicle's lookahead is the
// next `config.lookahead_nodes` nodes of its own nodal path.
std::vector<Frame> reconstruct_frames(const Dataset& data, std::span<const DiscreteTrack> tracks,
                                      const Plg& plg, const RiskConfig& config);

struct Observation {
  RiskVector risk;
  ActionSample action;
};

// Per-tick (risk, action) pairs: acceleration from the data, lane change from
// lane_id transitions along the nodal path.
std::vector<Observation> extract_observations(const Dataset& data,
                                              std::span<const DiscreteTrack> tracks,
                                              const Plg& plg, const RiskConfig& config);

// Frequency table of joint actions per leading-risk bin, Laplace smoothed.
class EmpiricalPolicy : public ActionPolicy {
 public:
  using Counts = std::array<std::array<std::uint64_t, kJointActions>, kRiskBins>;

  EmpiricalPolicy() : EmpiricalPolicy(Counts{}, 1.0, RiskConfig{}.k_bv) {}
  EmpiricalPolicy(Counts counts, double alpha, int k_bv);

  ActionDistribution distribution(const RiskVector& risk) const override;
  const ActionDistribution& bin_distribution(int bin) const {
    return probs_.at(static_cast<std::size_t>(bin));
  }
  const Counts& counts() const { return counts_; }
  std::uint64_t bin_total(int bin) const;
  double alpha() const { return alpha_; }
  int k_bv() const { return k_bv_; }

 private:
  Counts counts_;
  std::array<ActionDistribution, kRiskBins> probs_{};
  double alpha_;
  int k_bv_;
};

// Throws InvalidArgument when there are no observations.
EmpiricalPolicy fit_empirical_policy(std::span<const Observation> observations, int k_bv,
                                     double alpha = 1.0);

inline constexpr Magic kEmpiricalMagic{'P', 'L', 'G', 'E'};
inline constexpr std::uint32_t kEmpiricalVersion = 1;

Bytes serialise_empirical(const EmpiricalPolicy& policy);
EmpiricalPolicy deserialise_empirical(std::span<const std::uint8_t> bytes);

}  // namespace plg
