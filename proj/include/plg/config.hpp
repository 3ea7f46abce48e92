#pragma once

#include <filesystem>
#include <string>

#include "plg/graph.hpp"
#include "plg/ppo.hpp"
#include "plg/render.hpp"
#include "plg/sim.hpp"

namespace plg {

// Every tunable of the pipeline. Loaded from a JSON file whose keys overlay
// the defaults; command-line flags are applied on top by the caller.
struct RunConfig {
  std::uint64_t seed = 0;
  BuildOptions build;
  RiskConfig risk;
  double policy_alpha = 1.0;
  SeedOptions seeds;
  SimConfig sim;
  TrainConfig train;
  double horizon = 5.0;  // seconds before a collision examined by classify
  RenderStyle render;

  // Pushes the global seed and shared risk settings into the module configs.
  void resolve();
  void validate() const;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::filesystem::path& path);
  // Canonical, fully populated JSON echo.
  std::string to_json_text() const;
};

}  // namespace plg
