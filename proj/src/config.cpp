#include "plg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace plg {

namespace {

using Json = nlohmann::json;

// Reads `key` into `target` when present, rejecting unknown keys in `obj`.
class Section {
 public:
  Section(const Json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw DataError("config: '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw DataError("config: unknown key '" + name_ + "." + k + "'");
    }
  }
  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const Json::exception&) {
      throw DataError("config: bad value for '" + name_ + "." + key + "'");
    }
  }
  const Json* sub(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

 private:
  const Json& obj_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::resolve() {
  sim.risk = risk;
  sim.seed = mix_seed(seed, 1);
  train.seed = mix_seed(seed, 2);
}

void RunConfig::validate() const {
  if (!(build.radius > 0.0)) throw DataError("config: plg.radius must be positive");
  if (risk.k_bv < 1 || risk.lookahead_nodes < 1 || !(risk.inverse_ceiling > 0.0)) {
    throw DataError("config: risk settings must be positive");
  }
  if (!(policy_alpha >= 0.0)) throw DataError("config: policy.alpha must be non-negative");
  if (!(seeds.threshold > 0.0) || seeds.frame_stride < 1 || !(seeds.neighbourhood >= 0.0)) {
    throw DataError("config: bad seed extraction settings");
  }
  if (!(horizon >= 0.0)) throw DataError("config: analysis.T must be non-negative");
  try {
    sim.validate();
    train.validate();
    render.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  RunConfig c;
  {
    Section root(j, "");
    root.get("seed", c.seed);
    if (const auto* s = root.sub("plg")) {
      Section p(*s, "plg");
      p.get("radius", c.build.radius);
      p.get("exit_radius", c.build.exit_radius);
      p.get("kmeans_max_iters", c.build.kmeans.max_iters);
      p.get("kmeans_tolerance", c.build.kmeans.tolerance);
    }
    if (const auto* s = root.sub("risk")) {
      Section p(*s, "risk");
      p.get("k_bv", c.risk.k_bv);
      p.get("lookahead_nodes", c.risk.lookahead_nodes);
      p.get("inverse_ceiling", c.risk.inverse_ceiling);
    }
    if (const auto* s = root.sub("action_grid")) {
      Section p(*s, "action_grid");
      std::vector<double> accel(kAccelGrid.begin(), kAccelGrid.end());
      std::vector<double> edges(kRiskBinEdges.begin(), kRiskBinEdges.end() - 1);
      int lanes = kLaneActions;
      p.get("accel", accel);
      p.get("lane_actions", lanes);
      p.get("risk_bin_edges", edges);
      if (!std::equal(accel.begin(), accel.end(), kAccelGrid.begin(), kAccelGrid.end()) ||
          lanes != kLaneActions ||
          !std::equal(edges.begin(), edges.end(), kRiskBinEdges.begin(), kRiskBinEdges.end() - 1)) {
        throw DataError("config: action_grid differs from the grid built into this program");
      }
    }
    if (const auto* s = root.sub("policy")) {
      Section p(*s, "policy");
      p.get("alpha", c.policy_alpha);
      p.get("hidden", c.train.hidden);
    }
    if (const auto* s = root.sub("seeds")) {
      Section p(*s, "seeds");
      p.get("threshold", c.seeds.threshold);
      p.get("neighbourhood", c.seeds.neighbourhood);
      p.get("frame_stride", c.seeds.frame_stride);
    }
    if (const auto* s = root.sub("sim")) {
      Section p(*s, "sim");
      p.get("dt", c.sim.dt);
      p.get("v_max", c.sim.v_max);
      p.get("max_ticks", c.sim.max_ticks);
      p.get("max_path_len", c.sim.max_path_len);
      std::string assignment(to_string(c.sim.assignment));
      p.get("assignment", assignment);
      const auto a = policy_assignment_from_string(assignment);
      if (!a) throw DataError("config: sim.assignment must be 'all' or 'ego'");
      c.sim.assignment = *a;
    }
    if (const auto* s = root.sub("train")) {
      Section p(*s, "train");
      p.get("clip", c.train.clip);
      p.get("gamma", c.train.gamma);
      p.get("lambda", c.train.lambda);
      p.get("learning_rate", c.train.learning_rate);
      p.get("epochs", c.train.epochs);
      p.get("minibatch", c.train.minibatch);
      p.get("iterations", c.train.iterations);
      p.get("rollout_steps", c.train.rollout_steps);
      p.get("value_coef", c.train.value_coef);
      p.get("entropy_coef", c.train.entropy_coef);
      p.get("reward_cap", c.train.reward_cap);
      p.get("clone_tolerance", c.train.clone_tolerance);
      p.get("clone_learning_rate", c.train.clone_learning_rate);
      p.get("clone_max_steps", c.train.clone_max_steps);
    }
    if (const auto* s = root.sub("analysis")) {
      Section p(*s, "analysis");
      p.get("T", c.horizon);
    }
    if (const auto* s = root.sub("render")) {
      Section p(*s, "render");
      p.get("width", c.render.width);
      p.get("height", c.render.height);
      p.get("margin", c.render.margin);
      p.get("node_radius", c.render.node_radius);
      p.get("edge_width", c.render.edge_width);
      p.get("min_opacity", c.render.min_opacity);
      p.get("max_opacity", c.render.max_opacity);
      p.get("vehicle_colours", c.render.vehicle_colours);
      p.get("label_stride", c.render.label_stride);
      p.get("smoothing_window", c.render.smoothing_window);
    }
  }
  c.resolve();
  c.validate();
  return c;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["plg"] = {{"radius", build.radius},
              {"exit_radius", build.exit_radius},
              {"kmeans_max_iters", build.kmeans.max_iters},
              {"kmeans_tolerance", build.kmeans.tolerance}};
  j["risk"] = {{"k_bv", risk.k_bv},
               {"lookahead_nodes", risk.lookahead_nodes},
               {"inverse_ceiling", risk.inverse_ceiling}};
  j["action_grid"] = {{"accel", std::vector<double>(kAccelGrid.begin(), kAccelGrid.end())},
                      {"lane_actions", kLaneActions},
                      {"risk_bin_edges", std::vector<double>(kRiskBinEdges.begin(), kRiskBinEdges.end() - 1)}};
  j["policy"] = {{"alpha", policy_alpha}, {"hidden", train.hidden}};
  j["seeds"] = {{"threshold", seeds.threshold},
                {"neighbourhood", seeds.neighbourhood},
                {"frame_stride", seeds.frame_stride}};
  j["sim"] = {{"dt", sim.dt},
              {"v_max", sim.v_max},
              {"max_ticks", sim.max_ticks},
              {"max_path_len", sim.max_path_len},
              {"assignment", std::string(to_string(sim.assignment))}};
  j["train"] = {{"clip", train.clip},
                {"gamma", train.gamma},
                {"lambda", train.lambda},
                {"learning_rate", train.learning_rate},
                {"epochs", train.epochs},
                {"minibatch", train.minibatch},
                {"iterations", train.iterations},
                {"rollout_steps", train.rollout_steps},
                {"value_coef", train.value_coef},
                {"entropy_coef", train.entropy_coef},
                {"reward_cap", train.reward_cap},
                {"clone_tolerance", train.clone_tolerance},
                {"clone_learning_rate", train.clone_learning_rate},
                {"clone_max_steps", train.clone_max_steps}};
  j["analysis"] = {{"T", horizon}};
  j["render"] = {{"width", render.width},
                 {"height", render.height},
                 {"margin", render.margin},
                 {"node_radius", render.node_radius},
                 {"edge_width", render.edge_width},
                 {"min_opacity", render.min_opacity},
                 {"max_opacity", render.max_opacity},
                 {"vehicle_colours", render.vehicle_colours},
                 {"label_stride", render.label_stride},
                 {"smoothing_window", render.smoothing_window}};
  return j.dump(2) + "\n";
}

}  // namespace plg
