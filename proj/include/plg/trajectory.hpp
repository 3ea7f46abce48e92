#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "plg/common.hpp"

namespace plg {

struct TrajectorySample {
  VehicleId vehicle_id = 0;
  double time = 0.0;  // seconds
  double x = 0.0;     // metres
  double y = 0.0;
  double speed = 0.0;  // m/s, >= 0
  double accel = 0.0;  // m/s^2
  std::optional<int> lane_id;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct VehicleTrack {
  VehicleId vehicle_id = 0;
  std::vector<TrajectorySample> samples;  // strictly increasing time
};

// Samples grouped per vehicle, vehicles in ascending id order.
class Dataset {
 public:
  Dataset() = default;
  // Groups and sorts by (vehicle_id, time). Samples repeating an existing
  // (vehicle, time) pair are dropped and counted in `duplicates_dropped`.
  explicit Dataset(std::vector<TrajectorySample> samples);

  const std::vector<VehicleTrack>& vehicles() const { return vehicles_; }
  std::size_t vehicle_count() const { return vehicles_.size(); }
  std::size_t sample_count() const;
  bool has_lane_ids() const;
  bool empty() const { return vehicles_.empty(); }

  // lane_id -> every sample carrying that lane (D_l), in vehicle/time order.
  std::map<int, std::vector<Vec2>> lane_positions() const;

  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

 private:
  std::vector<VehicleTrack> vehicles_;
  std::size_t duplicates_dropped_ = 0;
};

// A source column, selected by header name or by zero-based index.
using ColumnRef = std::variant<std::string, int>;

struct ColumnMapping {
  ColumnRef vehicle_id = std::string("vehicle_id");
  ColumnRef time = std::string("time");
  ColumnRef x = std::string("x");
  ColumnRef y = std::string("y");
  ColumnRef speed = std::string("speed");
  ColumnRef accel = std::string("accel");
  std::optional<ColumnRef> lane_id = ColumnRef(std::string("lane_id"));
  double length_scale = 1.0;  // applied to x, y, speed, accel
  double time_scale = 1.0;    // applied to time
  bool has_header = true;

  // Throws DataError when a scale is non-positive or name-based refs are used
  // without a header row.
  void validate() const;

  static ColumnMapping canonical() { return {}; }
  static ColumnMapping from_json_file(const std::filesystem::path& path);
  static ColumnMapping from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::vector<std::pair<std::size_t, std::string>> rejected;  // (line, reason)
};

// Reads a comma separated trajectory file. Malformed rows are skipped and
// reported; a missing mandatory column or an empty result throws DataError.
Dataset load_dataset(const std::filesystem::path& path, const ColumnMapping& mapping,
                     LoadReport* report = nullptr);
Dataset parse_dataset(std::istream& in, const ColumnMapping& mapping,
                      LoadReport* report = nullptr);

// Canonical SI export, readable back with ColumnMapping::canonical().
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

struct LaneSpec {
  int lane_id = 0;
  std::vector<Vec2> polyline;
  // Lane that ends: vehicles must move into `merges_into` before the end.
  std::optional<int> merges_into;
};

struct SyntheticSpec {
  std::vector<LaneSpec> lanes;
  int vehicles = 10;
  int ticks = 200;  // spawning horizon; vehicles then run until they exit
  double dt = 0.1;
  double lane_change_rate = 0.02;  // discretionary changes per vehicle-second
  double lane_change_duration = 3.0;
  double lateral_noise = 0.1;  // bound on the lateral offset, metres
  double accel_noise = 0.3;    // std of the acceleration perturbation, m/s^2
  double desired_speed_min = 10.0;
  double desired_speed_max = 16.0;
  double initial_speed = -1.0;    // < 0: start at desired speed
  bool car_following = true;      // false: every vehicle keeps constant speed
  double spawn_headway = 1.5;     // seconds between spawns into one lane, minimum
  // Per-driver car-following parameters are drawn uniformly from these ranges.
  double headway_min = 1.2, headway_max = 1.2;
  double comfort_decel_min = 2.0, comfort_decel_max = 2.0;
  double accepted_gap_min = 8.0, accepted_gap_max = 8.0;  // lane-change gap acceptance, metres

  static SyntheticSpec two_lane_merge();
};

// Deterministic for a fixed seed. Throws InvalidArgument for an empty lane set.
Dataset generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace plg
