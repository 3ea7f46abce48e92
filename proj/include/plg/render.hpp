#pragma once

#include <string>
#include <vector>

#include "plg/graph.hpp"
#include "plg/sim.hpp"

namespace plg {

struct RenderStyle {
  double width = 1000.0;
  double height = 600.0;
  double margin = 20.0;
  double node_radius = 1.5;
  double edge_width = 0.8;
  // Edge opacity = min_opacity + (max_opacity - min_opacity) * probability.
  double min_opacity = 0.0;
  double max_opacity = 1.0;
  std::vector<std::string> vehicle_colours{"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  int label_stride = 5;
  int smoothing_window = 5;

  void validate() const;
};

// Nodes as circles, edges as lines shaded by transition probability.
std::string render_plg(const Plg& plg, const RenderStyle& style);

// The graph in light grey, each vehicle's smoothed node track with tick
// labels every `label_stride` ticks, and the collision node when present.
std::string render_scenario(const Episode& episode, const Plg& plg, const RenderStyle& style);

}  // namespace plg
