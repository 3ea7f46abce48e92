#include "plg/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace plg {

namespace {

// Progress from `from` towards `to`, clamped to the edge.
double arc_along(const Plg& plg, NodeId from, NodeId to, Vec2 p) {
  const Vec2 a = plg.node(from).position;
  const Vec2 edge = plg.node(to).position - a;
  const double len = norm(edge);
  if (len == 0.0) return 0.0;
  const double t = dot(p - a, edge) / len;
  return std::clamp(t, 0.0, std::nextafter(len, 0.0));
}

}  // namespace

std::vector<Frame> reconstruct_frames(const Dataset& data, std::span<const DiscreteTrack> tracks,
                                      const Plg& plg, const RiskConfig& config) {
  std::map<std::int64_t, Frame> frames;
  const auto ahead = static_cast<std::size_t>(config.lookahead_nodes);
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& track = tracks[t];
    const auto& samples = data.vehicles().at(track.vehicle_index).samples;
    const auto& path = track.path.nodes;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto& s = samples[k];
      const std::size_t at = track.path_index[k];
      FrameVehicle fv;
      fv.track = t;
      fv.sample = k;
      const auto end = std::min(path.size(), at + ahead + 1);
      fv.course.lookahead.assign(path.begin() + static_cast<std::ptrdiff_t>(at),
                                 path.begin() + static_cast<std::ptrdiff_t>(end));
      const NodeId node = path[at];
      fv.course.state.node = node;
      fv.course.state.arc = fv.course.lookahead.size() > 1
                                ? arc_along(plg, node, fv.course.lookahead[1], s.position())
                                : 0.0;
      fv.course.state.speed = s.speed;
      fv.course.state.accel = s.accel;
      fv.course.state.lane_id = plg.node(node).lane_id;
      auto& frame = frames[std::llround(s.time * 1e6)];
      frame.time = s.time;
      frame.vehicles.push_back(std::move(fv));
    }
  }
  std::vector<Frame> out;
  out.reserve(frames.size());
  for (auto& [key, f] : frames) out.push_back(std::move(f));
  return out;
}

std::vector<Observation> extract_observations(const Dataset& data,
                                              std::span<const DiscreteTrack> tracks,
                                              const Plg& plg, const RiskConfig& config) {
  std::vector<Observation> out;
  std::vector<Course> others;
  for (const auto& frame : reconstruct_frames(data, tracks, plg, config)) {
    for (std::size_t i = 0; i < frame.vehicles.size(); ++i) {
      others.clear();
      for (std::size_t j = 0; j < frame.vehicles.size(); ++j) {
        if (j != i) others.push_back(frame.vehicles[j].course);
      }
      const auto& fv = frame.vehicles[i];
      const auto& track = tracks[fv.track];
      const auto& samples = data.vehicles().at(track.vehicle_index).samples;

      Observation obs;
      obs.risk = risk_vector(plg, fv.course, others, config);
      obs.action.accel_bin = nearest_accel_bin(samples[fv.sample].accel);
      if (fv.sample + 1 < samples.size()) {
        const auto lane_now = plg.node(track.path.nodes[track.path_index[fv.sample]]).lane_id;
        const auto lane_next = plg.node(track.path.nodes[track.path_index[fv.sample + 1]]).lane_id;
        if (lane_now && lane_next && *lane_now != *lane_next) {
          obs.action.lane_change = *lane_next < *lane_now ? LaneChange::kLeft : LaneChange::kRight;
        }
      }
      out.push_back(std::move(obs));
    }
  }
  return out;
}

EmpiricalPolicy::EmpiricalPolicy(Counts counts, double alpha, int k_bv)
    : counts_(counts), alpha_(alpha), k_bv_(k_bv) {
  if (!(alpha >= 0.0)) throw InvalidArgument("smoothing alpha must be non-negative");
  for (int b = 0; b < kRiskBins; ++b) {
    const auto& row = counts_[static_cast<std::size_t>(b)];
    double total = alpha_ * kJointActions;
    for (auto c : row) total += static_cast<double>(c);
    auto& probs = probs_[static_cast<std::size_t>(b)];
    for (std::size_t j = 0; j < probs.size(); ++j) {
      probs[j] = total > 0.0 ? (static_cast<double>(row[j]) + alpha_) / total : 1.0 / kJointActions;
    }
  }
}

ActionDistribution EmpiricalPolicy::distribution(const RiskVector& risk) const {
  return probs_.at(static_cast<std::size_t>(risk_bin(risk)));
}

std::uint64_t EmpiricalPolicy::bin_total(int bin) const {
  std::uint64_t n = 0;
  for (auto c : counts_.at(static_cast<std::size_t>(bin))) n += c;
  return n;
}

EmpiricalPolicy fit_empirical_policy(std::span<const Observation> observations, int k_bv,
                                     double alpha) {
  if (observations.empty()) throw InvalidArgument("cannot fit an action policy without observations");
  EmpiricalPolicy::Counts counts{};
  for (const auto& o : observations) {
    ++counts[static_cast<std::size_t>(risk_bin(o.risk))][static_cast<std::size_t>(o.action.joint())];
  }
  return EmpiricalPolicy(counts, alpha, k_bv);
}

Bytes serialise_empirical(const EmpiricalPolicy& policy) {
  ByteWriter w;
  w.put<std::int32_t>(policy.k_bv());
  w.put_array<double>(kRiskBinEdges);
  w.put_array<double>(kAccelGrid);
  w.put<std::int32_t>(kLaneActions);
  w.put(policy.alpha());
  for (const auto& row : policy.counts()) w.put_array<std::uint64_t>(row);
  return frame(kEmpiricalMagic, kEmpiricalVersion, w.bytes());
}

EmpiricalPolicy deserialise_empirical(std::span<const std::uint8_t> bytes) {
  const Bytes payload = unframe(bytes, kEmpiricalMagic, kEmpiricalVersion, "empirical policy");
  ByteReader r(payload);
  const auto k_bv = r.get<std::int32_t>();
  const auto edges = r.get_array<double>();
  const auto grid = r.get_array<double>();
  const auto lanes = r.get<std::int32_t>();
  if (!std::equal(edges.begin(), edges.end(), kRiskBinEdges.begin(), kRiskBinEdges.end()) ||
      !std::equal(grid.begin(), grid.end(), kAccelGrid.begin(), kAccelGrid.end()) ||
      lanes != kLaneActions) {
    throw FormatError("empirical policy: action grid or risk bins differ from this build");
  }
  const double alpha = r.get<double>();
  EmpiricalPolicy::Counts counts{};
  for (auto& row : counts) {
    const auto values = r.get_array<std::uint64_t>();
    if (values.size() != row.size()) throw FormatError("empirical policy: bad row width");
    std::copy(values.begin(), values.end(), row.begin());
  }
  r.expect_end();
  return EmpiricalPolicy(counts, alpha, k_bv);
}

}  // namespace plg
