#include "plg/trajectory.hpp"

#include "plg/binary_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace plg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::optional<double> parse_double(std::string_view cell) {
  double value = 0.0;
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> parse_integer(std::string_view cell) {
  // Integer columns are sometimes exported as "3.0".
  const auto d = parse_double(cell);
  if (!d || !std::isfinite(*d) || std::floor(*d) != *d) return std::nullopt;
  return static_cast<std::int64_t>(*d);
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string>& header,
                           const char* field) {
  if (const int* index = std::get_if<int>(&ref)) {
    if (*index < 0) throw DataError(std::string("negative column index for ") + field);
    return static_cast<std::size_t>(*index);
  }
  const auto& name = std::get<std::string>(ref);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DataError(std::string("missing mandatory column '") + name + "' for field " + field);
  }
  return static_cast<std::size_t>(it - header.begin());
}

nlohmann::json ref_to_json(const ColumnRef& ref) {
  if (const int* index = std::get_if<int>(&ref)) return *index;
  return std::get<std::string>(ref);
}

ColumnRef ref_from_json(const nlohmann::json& j, const char* field) {
  if (j.is_number_integer()) return ColumnRef(j.get<int>());
  if (j.is_string()) return ColumnRef(j.get<std::string>());
  throw DataError(std::string("column for ") + field + " must be a name or an index");
}

}  // namespace

Dataset::Dataset(std::vector<TrajectorySample> samples) {
  std::stable_sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
    return a.time < b.time;
  });
  for (auto& s : samples) {
    if (vehicles_.empty() || vehicles_.back().vehicle_id != s.vehicle_id) {
      vehicles_.push_back({s.vehicle_id, {}});
    }
    auto& track = vehicles_.back().samples;
    if (!track.empty() && track.back().time >= s.time) {
      ++duplicates_dropped_;
      continue;
    }
    track.push_back(std::move(s));
  }
}

std::size_t Dataset::sample_count() const {
  std::size_t n = 0;
  for (const auto& v : vehicles_) n += v.samples.size();
  return n;
}

bool Dataset::has_lane_ids() const {
  for (const auto& v : vehicles_) {
    for (const auto& s : v.samples) {
      if (s.lane_id) return true;
    }
  }
  return false;
}

std::map<int, std::vector<Vec2>> Dataset::lane_positions() const {
  std::map<int, std::vector<Vec2>> lanes;
  for (const auto& v : vehicles_) {
    for (const auto& s : v.samples) {
      if (s.lane_id) lanes[*s.lane_id].push_back(s.position());
    }
  }
  return lanes;
}

void ColumnMapping::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw DataError("length_scale must be strictly positive");
  }
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) {
    throw DataError("time_scale must be strictly positive");
  }
  if (!has_header) {
    auto by_name = [](const ColumnRef& r) { return std::holds_alternative<std::string>(r); };
    if (by_name(vehicle_id) || by_name(time) || by_name(x) || by_name(y) || by_name(speed) ||
        by_name(accel) || (lane_id && by_name(*lane_id))) {
      throw DataError("columns mapped by name require a header row");
    }
  }
}

ColumnMapping ColumnMapping::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("mapping is not valid JSON: ") + e.what());
  }
  ColumnMapping m;
  auto required = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw DataError(std::string("mapping lacks mandatory field ") + key);
    return j.at(key);
  };
  m.vehicle_id = ref_from_json(required("vehicle_id"), "vehicle_id");
  m.time = ref_from_json(required("time"), "time");
  m.x = ref_from_json(required("x"), "x");
  m.y = ref_from_json(required("y"), "y");
  m.speed = ref_from_json(required("speed"), "speed");
  m.accel = ref_from_json(required("accel"), "accel");
  if (j.contains("lane_id") && !j.at("lane_id").is_null()) {
    m.lane_id = ref_from_json(j.at("lane_id"), "lane_id");
  } else {
    m.lane_id.reset();
  }
  m.length_scale = j.value("length_scale", 1.0);
  m.time_scale = j.value("time_scale", 1.0);
  m.has_header = j.value("has_header", true);
  m.validate();
  return m;
}

ColumnMapping ColumnMapping::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mapping file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ColumnMapping::to_json_text() const {
  nlohmann::ordered_json j;
  j["vehicle_id"] = ref_to_json(vehicle_id);
  j["time"] = ref_to_json(time);
  j["x"] = ref_to_json(x);
  j["y"] = ref_to_json(y);
  j["speed"] = ref_to_json(speed);
  j["accel"] = ref_to_json(accel);
  if (lane_id) j["lane_id"] = ref_to_json(*lane_id); else j["lane_id"] = nullptr;
  j["length_scale"] = length_scale;
  j["time_scale"] = time_scale;
  j["has_header"] = has_header;
  return j.dump(2) + "\n";
}

Dataset parse_dataset(std::istream& in, const ColumnMapping& mapping, LoadReport* report) {
  mapping.validate();
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = {};

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  if (mapping.has_header) {
    if (!std::getline(in, line)) throw DataError("empty input: header row expected");
    ++line_no;
    for (auto cell : split_csv_line(line)) header.emplace_back(cell);
  }
  const std::size_t c_vehicle = resolve_column(mapping.vehicle_id, header, "vehicle_id");
  const std::size_t c_time = resolve_column(mapping.time, header, "time");
  const std::size_t c_x = resolve_column(mapping.x, header, "x");
  const std::size_t c_y = resolve_column(mapping.y, header, "y");
  const std::size_t c_speed = resolve_column(mapping.speed, header, "speed");
  const std::size_t c_accel = resolve_column(mapping.accel, header, "accel");
  std::optional<std::size_t> c_lane;
  if (mapping.lane_id) c_lane = resolve_column(*mapping.lane_id, header, "lane_id");

  std::vector<TrajectorySample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++rep.rows_read;
    const auto cells = split_csv_line(line);
    auto reject = [&](std::string reason) { rep.rejected.emplace_back(line_no, std::move(reason)); };
    auto cell = [&](std::size_t c) -> std::optional<std::string_view> {
      if (c >= cells.size()) return std::nullopt;
      return cells[c];
    };

    const auto vid_cell = cell(c_vehicle);
    const auto vid = vid_cell ? parse_integer(*vid_cell) : std::nullopt;
    if (!vid) {
      reject("vehicle_id is not an integer");
      continue;
    }
    TrajectorySample s;
    s.vehicle_id = *vid;
    struct Field {
      std::size_t column;
      double* target;
      double scale;
      const char* name;
    };
    const Field fields[] = {
        {c_time, &s.time, mapping.time_scale, "time"},
        {c_x, &s.x, mapping.length_scale, "x"},
        {c_y, &s.y, mapping.length_scale, "y"},
        {c_speed, &s.speed, mapping.length_scale, "speed"},
        {c_accel, &s.accel, mapping.length_scale, "accel"},
    };
    bool ok = true;
    for (const auto& f : fields) {
      const auto raw = cell(f.column);
      const auto value = raw ? parse_double(*raw) : std::nullopt;
      if (!value || !std::isfinite(*value)) {
        reject(std::string(f.name) + " is not a finite number");
        ok = false;
        break;
      }
      *f.target = *value * f.scale;
    }
    if (!ok) continue;
    if (s.speed < 0.0) {
      reject("negative speed");
      continue;
    }
    if (c_lane) {
      const auto raw = cell(*c_lane);
      if (raw && !raw->empty()) {
        const auto lane = parse_integer(*raw);
        if (!lane) {
          reject("lane_id is not an integer");
          continue;
        }
        s.lane_id = static_cast<int>(*lane);
      }
    }
    samples.push_back(s);
  }

  Dataset data(std::move(samples));
  for (std::size_t i = 0; i < data.duplicates_dropped(); ++i) {
    rep.rejected.emplace_back(0, "repeated timestamp for vehicle");
  }
  rep.rows_accepted = data.sample_count();
  if (data.empty()) throw DataError("no valid rows in trajectory data");
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnMapping& mapping,
                     LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  return parse_dataset(in, mapping, report);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "vehicle_id,time,x,y,speed,accel,lane_id\n";
  char buf[256];
  for (const auto& v : data.vehicles()) {
    for (const auto& s : v.samples) {
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,",
                    static_cast<long long>(s.vehicle_id), s.time, s.x, s.y, s.speed, s.accel);
      out << buf;
      if (s.lane_id) out << *s.lane_id;
      out << '\n';
    }
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream out;
  write_dataset(out, data);
  write_file_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// Synthetic corpus

SyntheticSpec SyntheticSpec::two_lane_merge() {
  SyntheticSpec spec;
  spec.lanes = {
      {1, {{0.0, 0.0}, {320.0, 0.0}}, std::nullopt},
      {2, {{0.0, 3.7}, {190.0, 3.7}}, 1},
  };
  spec.vehicles = 360;
  spec.ticks = 10800;
  spec.dt = 0.1;
  spec.lane_change_rate = 0.02;
  spec.lateral_noise = 0.15;
  spec.headway_min = 0.6;
  spec.headway_max = 1.6;
  spec.comfort_decel_min = 2.0;
  spec.comfort_decel_max = 5.0;
  spec.accepted_gap_min = 2.0;
  spec.accepted_gap_max = 8.0;
  return spec;
}

namespace {

struct Polyline {
  std::vector<Vec2> points;
  std::vector<double> cumulative;

  explicit Polyline(std::vector<Vec2> pts) : points(std::move(pts)) {
    cumulative.push_back(0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
      cumulative.push_back(cumulative.back() + distance(points[i - 1], points[i]));
    }
  }
  double length() const { return cumulative.back(); }

  // Point and unit direction at arc length s; extrapolates past either end.
  std::pair<Vec2, Vec2> at(double s) const {
    std::size_t seg = 0;
    while (seg + 2 < points.size() && s > cumulative[seg + 1]) ++seg;
    const Vec2 a = points[seg];
    const Vec2 b = points[seg + 1];
    const double len = cumulative[seg + 1] - cumulative[seg];
    const Vec2 dir = len > 0.0 ? (1.0 / len) * (b - a) : Vec2{1.0, 0.0};
    return {a + (s - cumulative[seg]) * dir, dir};
  }
};

struct SynthVehicle {
  VehicleId id = 0;
  int spawn_tick = 0;
  int lane = 0;
  int target_lane = 0;  // == lane when not changing
  double change_progress = 0.0;
  double s = 0.0;
  double v = 0.0;
  double desired_speed = 0.0;
  double headway = 1.2;        // IDM time headway, seconds
  double comfort_decel = 2.0;  // IDM comfortable deceleration
  double accepted_gap = 8.0;   // smallest gap taken for a lane change, metres
  double lateral = 0.0;
  bool active = false;
  bool done = false;
  std::vector<TrajectorySample> samples;

  bool occupies(int l) const { return lane == l || target_lane == l; }
  bool changing() const { return lane != target_lane; }
};

constexpr double kVehicleLength = 4.5;

}  // namespace

Dataset generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.lanes.empty()) throw InvalidArgument("synthetic corpus needs at least one lane");
  if (!(spec.dt > 0.0)) throw InvalidArgument("tick period must be positive");
  for (const auto& l : spec.lanes) {
    if (l.polyline.size() < 2) throw InvalidArgument("lane polyline needs two points");
  }

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::map<int, Polyline> lanes;
  std::map<int, const LaneSpec*> lane_specs;
  for (const auto& l : spec.lanes) {
    lanes.emplace(l.lane_id, Polyline(l.polyline));
    lane_specs[l.lane_id] = &l;
  }
  const double dt = spec.dt;
  const double accel_noise = spec.car_following ? spec.accel_noise : 0.0;

  std::vector<SynthVehicle> fleet(static_cast<std::size_t>(std::max(spec.vehicles, 0)));
  std::vector<int> lane_ids;
  for (const auto& l : spec.lanes) lane_ids.push_back(l.lane_id);
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    auto& v = fleet[i];
    v.id = static_cast<VehicleId>(i + 1);
    const double nominal = fleet.size() > 1
                               ? static_cast<double>(i) * spec.ticks / static_cast<double>(fleet.size())
                               : 0.0;
    v.spawn_tick = static_cast<int>(nominal + uniform01(rng) * 0.5 * spec.ticks /
                                                  std::max<double>(1.0, fleet.size()));
    v.lane = v.target_lane = lane_ids[i % lane_ids.size()];
    v.desired_speed = spec.desired_speed_min +
                      uniform01(rng) * (spec.desired_speed_max - spec.desired_speed_min);
    v.v = spec.initial_speed >= 0.0 ? spec.initial_speed : v.desired_speed;
    v.headway = spec.headway_min + uniform01(rng) * (spec.headway_max - spec.headway_min);
    v.comfort_decel =
        spec.comfort_decel_min + uniform01(rng) * (spec.comfort_decel_max - spec.comfort_decel_min);
    v.accepted_gap =
        spec.accepted_gap_min + uniform01(rng) * (spec.accepted_gap_max - spec.accepted_gap_min);
  }

  auto lane_exists = [&](int l) { return lanes.count(l) != 0; };
  // Nearest vehicle ahead of arc s in lane l, as (gap, speed).
  auto leader = [&](const SynthVehicle& self, int l) -> std::optional<std::pair<double, double>> {
    std::optional<std::pair<double, double>> best;
    for (const auto& o : fleet) {
      if (!o.active || o.id == self.id || !o.occupies(l) || o.s <= self.s) continue;
      const double gap = o.s - self.s - kVehicleLength;
      if (!best || gap < best->first) best = std::make_pair(gap, o.v);
    }
    return best;
  };
  auto follower_gap = [&](const SynthVehicle& self, int l) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : fleet) {
      if (!o.active || o.id == self.id || !o.occupies(l) || o.s > self.s) continue;
      best = std::min(best, self.s - o.s - kVehicleLength);
    }
    return best;
  };
  // Lane a vehicle in lane l merges into, when l is a merge lane.
  auto merge_target = [&](int l) { return lane_specs.at(l)->merges_into; };
  auto in_merge_zone = [&](const SynthVehicle& self) {
    return merge_target(self.lane) && !self.changing() &&
           self.s >= lanes.at(self.lane).length() - 2.5 * self.v * spec.lane_change_duration - 20.0;
  };
  auto idm = [&](const SynthVehicle& self) {
    if (!spec.car_following) return 0.0;
    constexpr double a_max = 1.5, s0 = 2.0;
    const double b = self.comfort_decel, headway = self.headway;
    const double free = a_max * (1.0 - std::pow(self.v / self.desired_speed, 4));
    double a = free;
    // `floor` bounds the braking a soft constraint may demand.
    auto follow = [&](double gap, double lead_speed, double floor = -8.0) {
      gap = std::max(gap, 0.1);
      const double dv = self.v - lead_speed;
      const double s_star = s0 + std::max(0.0, self.v * headway + self.v * dv / (2.0 * std::sqrt(a_max * b)));
      a = std::min(a, std::max(floor, free - a_max * (s_star / gap) * (s_star / gap)));
    };
    for (int l : {self.lane, self.target_lane}) {
      if (const auto lead = leader(self, l)) follow(lead->first, lead->second);
      if (l == self.target_lane) break;
    }
    if (in_merge_zone(self)) {
      // Line up behind main-lane traffic and do not run past the lane end.
      if (const auto lead = leader(self, *merge_target(self.lane))) follow(lead->first, lead->second, -b);
      follow(lanes.at(self.lane).length() - self.s - 1.0, 0.0);
    }
    // Leave room ahead for vehicles about to merge into this lane.
    for (const auto& o : fleet) {
      if (!o.active || o.id == self.id || o.s <= self.s || !in_merge_zone(o)) continue;
      if (merge_target(o.lane) != self.lane || self.changing()) continue;
      follow(o.s - self.s - kVehicleLength - 8.0, o.v, -b);
    }
    return std::clamp(a, -8.0, a_max);
  };
  auto gap_ok = [&](const SynthVehicle& self, int l, double clearance) {
    const auto lead = leader(self, l);
    return (!lead || lead->first > clearance) && follower_gap(self, l) > clearance;
  };

  const int tick_limit = spec.ticks + 1'000'000;
  for (int tick = 0; tick < tick_limit; ++tick) {
    bool any_pending = false;
    for (auto& v : fleet) {
      if (v.done) continue;
      any_pending = true;
      if (!v.active && tick >= v.spawn_tick) {
        // Enter only when the lane entry is clear.
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& o : fleet) {
          if (o.active && o.occupies(v.lane)) nearest = std::min(nearest, o.s);
        }
        if (nearest > std::max(10.0, v.v * spec.spawn_headway)) {
          v.active = true;
          v.s = 0.0;
        }
      }
    }
    if (!any_pending) break;

    // Emit the current state, then integrate; accel recorded is the one
    // applied over the following tick.
    for (auto& v : fleet) {
      if (!v.active) continue;
      const auto& from = lanes.at(v.lane);
      const auto [p_from, dir] = from.at(v.s);
      Vec2 pos = p_from;
      if (v.changing()) {
        const auto [p_to, unused] = lanes.at(v.target_lane).at(v.s);
        const double p = v.change_progress;
        const double w = p * p * (3.0 - 2.0 * p);
        pos = (1.0 - w) * p_from + w * p_to;
      }
      const Vec2 normal{-dir.y, dir.x};
      pos = pos + v.lateral * normal;

      double a = idm(v);
      if (accel_noise > 0.0) a += accel_noise * gauss(rng);
      a = std::clamp(a, -8.0, 3.0);
      if (v.v + a * dt < 0.0) a = -v.v / dt;

      const int reported_lane =
          v.changing() && v.change_progress >= 0.5 ? v.target_lane : v.lane;
      v.samples.push_back({v.id, tick * dt, pos.x, pos.y, v.v, a, reported_lane});

      v.s += v.v * dt + 0.5 * a * dt * dt;
      v.v += a * dt;
      if (spec.lateral_noise > 0.0) {
        v.lateral = std::clamp(v.lateral + 0.05 * gauss(rng), -spec.lateral_noise, spec.lateral_noise);
      }
    }

    for (auto& v : fleet) {
      if (!v.active) continue;
      if (v.changing()) {
        v.change_progress += dt / spec.lane_change_duration;
        if (v.change_progress >= 1.0) {
          v.lane = v.target_lane;
          v.change_progress = 0.0;
        }
        continue;
      }
      const LaneSpec& ls = *lane_specs.at(v.lane);
      const double len = lanes.at(v.lane).length();
      if (ls.merges_into) {
        const double horizon = v.v * spec.lane_change_duration;
        // Near the lane end a smaller gap is accepted.
        const bool forced = v.s >= len - horizon - 5.0;
        if (v.s >= len - 2.5 * horizon && gap_ok(v, *ls.merges_into, forced ? std::min(3.0, v.accepted_gap) : v.accepted_gap)) {
          v.target_lane = *ls.merges_into;
        }
        continue;
      }
      if (v.s >= len) {
        v.active = false;
        v.done = true;
        continue;
      }
      if (spec.lane_change_rate > 0.0 && uniform01(rng) < spec.lane_change_rate * dt) {
        const int side = uniform01(rng) < 0.5 ? -1 : 1;
        for (int candidate : {v.lane + side, v.lane - side}) {
          if (!lane_exists(candidate)) continue;
          const auto& target = *lane_specs.at(candidate);
          const double room = lanes.at(candidate).length() - v.s;
          const double needed = v.v * spec.lane_change_duration * (target.merges_into ? 3.5 : 1.0) + 10.0;
          if (room > needed && gap_ok(v, candidate, v.accepted_gap)) {
            v.target_lane = candidate;
            break;
          }
        }
      }
    }
  }

  std::vector<TrajectorySample> all;
  for (auto& v : fleet) {
    all.insert(all.end(), v.samples.begin(), v.samples.end());
  }
  return Dataset(std::move(all));
}

}  // namespace plg
