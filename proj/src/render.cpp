#include "plg/render.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>

#include "plg/analysis.hpp"

namespace plg {

void RenderStyle::validate() const {
  if (!(width > 0.0 && height > 0.0) || margin < 0.0 || 2.0 * margin >= std::min(width, height)) {
    throw InvalidArgument("render canvas too small for its margin");
  }
  if (!(min_opacity >= 0.0 && max_opacity <= 1.0 && min_opacity <= max_opacity)) {
    throw InvalidArgument("opacities must satisfy 0 <= min <= max <= 1");
  }
  if (smoothing_window < 1) throw InvalidArgument("smoothing window must be at least 1");
  if (label_stride < 1) throw InvalidArgument("label stride must be at least 1");
  if (vehicle_colours.empty()) throw InvalidArgument("at least one vehicle colour is needed");
}

namespace {

// World-to-canvas mapping preserving aspect ratio, y pointing up.
class Canvas {
 public:
  Canvas(const Plg& plg, const RenderStyle& style) : style_(style) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (const auto& n : plg.nodes()) {
      x0 = std::min(x0, n.position.x);
      y0 = std::min(y0, n.position.y);
      x1 = std::max(x1, n.position.x);
      y1 = std::max(y1, n.position.y);
    }
    if (plg.nodes().empty()) x0 = y0 = x1 = y1 = 0.0;
    const double dx = std::max(x1 - x0, 1e-9);
    const double dy = std::max(y1 - y0, 1e-9);
    scale_ = std::min((style.width - 2 * style.margin) / dx, (style.height - 2 * style.margin) / dy);
    ox_ = x0;
    oy_ = y0;
    used_h_ = dy * scale_;
  }

  Vec2 map(Vec2 p) const {
    return {style_.margin + (p.x - ox_) * scale_, style_.margin + used_h_ - (p.y - oy_) * scale_};
  }

 private:
  const RenderStyle& style_;
  double scale_ = 1.0;
  double ox_ = 0.0, oy_ = 0.0, used_h_ = 0.0;
};

void append(std::string& out, const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  out += buf;
}

void open_svg(std::string& out, const RenderStyle& style) {
  append(out,
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
         "viewBox=\"0 0 %.0f %.0f\">\n",
         style.width, style.height, style.width, style.height);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void draw_edges(std::string& out, const Plg& plg, const Canvas& c, const RenderStyle& style,
                bool shaded) {
  for (const auto& n : plg.nodes()) {
    for (const auto& e : plg.successors(n.id)) {
      const Vec2 a = c.map(n.position);
      const Vec2 b = c.map(plg.node(e.to).position);
      const double opacity =
          shaded ? style.min_opacity + (style.max_opacity - style.min_opacity) * e.prob : 0.35;
      append(out,
             "<line class=\"edge\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
             "stroke=\"%s\" stroke-width=\"%.3f\" stroke-opacity=\"%.4f\"/>\n",
             a.x, a.y, b.x, b.y, shaded ? "black" : "#bbbbbb", style.edge_width, opacity);
    }
  }
}

}  // namespace

std::string render_plg(const Plg& plg, const RenderStyle& style) {
  style.validate();
  const Canvas c(plg, style);
  std::string out;
  open_svg(out, style);
  draw_edges(out, plg, c, style, true);
  for (const auto& n : plg.nodes()) {
    const Vec2 p = c.map(n.position);
    append(out, "<circle class=\"node\" cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"#444444\"/>\n", p.x,
           p.y, style.node_radius);
  }
  out += "</svg>\n";
  return out;
}

std::string render_scenario(const Episode& episode, const Plg& plg, const RenderStyle& style) {
  style.validate();
  const Canvas c(plg, style);
  std::string out;
  open_svg(out, style);
  draw_edges(out, plg, c, style, false);

  // Vehicles in order of first appearance.
  std::vector<VehicleId> order;
  std::map<VehicleId, std::vector<const VehicleRecord*>> tracks;
  for (const auto& r : episode.records) {
    if (!plg.valid(r.node)) throw InvalidArgument("episode refers to a node outside the graph");
    auto& t = tracks[r.vehicle_id];
    if (t.empty()) order.push_back(r.vehicle_id);
    t.push_back(&r);
  }
  for (std::size_t v = 0; v < order.size(); ++v) {
    const auto& recs = tracks[order[v]];
    const std::string& colour = style.vehicle_colours[v % style.vehicle_colours.size()];
    std::vector<Vec2> pts;
    for (const auto* r : recs) pts.push_back(plg.node(r->node).position);
    const auto smooth = smooth_path(pts, style.smoothing_window);
    append(out, "<polyline class=\"vehicle\" data-vehicle=\"%lld\" fill=\"none\" stroke=\"%s\" "
                "stroke-width=\"2\" points=\"",
           static_cast<long long>(order[v]), colour.c_str());
    for (std::size_t k = 0; k < smooth.size(); ++k) {
      const Vec2 p = c.map(smooth[k]);
      append(out, k ? " %.3f,%.3f" : "%.3f,%.3f", p.x, p.y);
    }
    out += "\"/>\n";
    for (std::size_t k = 0; k < recs.size(); ++k) {
      if (recs[k]->tick % style.label_stride != 0 && k + 1 != recs.size()) continue;
      const Vec2 p = c.map(smooth[k]);
      append(out, "<text class=\"tick\" x=\"%.3f\" y=\"%.3f\" font-size=\"9\" fill=\"%s\">t=%d</text>\n",
             p.x + 3.0, p.y - 3.0, colour.c_str(), recs[k]->tick);
    }
  }
  if (episode.collided()) {
    const Vec2 p = c.map(plg.node(episode.termination.node).position);
    append(out,
           "<circle class=\"collision\" cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"none\" "
           "stroke=\"black\" stroke-width=\"2\"/>\n",
           p.x, p.y, 4.0 * style.node_radius + 4.0);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace plg
