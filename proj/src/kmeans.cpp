#include "plg/kmeans.hpp"

#include <algorithm>

#include "plg/spatial_index.hpp"

namespace plg {

namespace {

double cell_size_for(std::span<const Vec2> centres) {
  double lo_x = centres[0].x, hi_x = lo_x, lo_y = centres[0].y, hi_y = lo_y;
  for (const auto& c : centres) {
    lo_x = std::min(lo_x, c.x), hi_x = std::max(hi_x, c.x);
    lo_y = std::min(lo_y, c.y), hi_y = std::max(hi_y, c.y);
  }
  const double extent = std::max(hi_x - lo_x, hi_y - lo_y);
  const double cell = extent / std::sqrt(static_cast<double>(centres.size()));
  return std::max(cell, 1e-3);
}

}  // namespace

KMeansResult lloyd_kmeans(std::span<const Vec2> points, std::vector<Vec2> initial,
                          const KMeansOptions& options) {
  KMeansResult result;
  result.centres = std::move(initial);
  if (result.centres.empty() || points.empty()) {
    result.converged = true;
    return result;
  }
  const std::size_t k = result.centres.size();
  std::vector<double> sum_x(k), sum_y(k);
  std::vector<std::size_t> members(k);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    GridIndex index(cell_size_for(result.centres));
    for (std::size_t c = 0; c < k; ++c) index.insert(static_cast<int>(c), result.centres[c]);

    std::fill(sum_x.begin(), sum_x.end(), 0.0);
    std::fill(sum_y.begin(), sum_y.end(), 0.0);
    std::fill(members.begin(), members.end(), 0);
    for (const auto& p : points) {
      const auto c = static_cast<std::size_t>(index.nearest(p));
      sum_x[c] += p.x;
      sum_y[c] += p.y;
      ++members[c];
    }

    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c] == 0) continue;
      const double n = static_cast<double>(members[c]);
      const Vec2 updated{sum_x[c] / n, sum_y[c] / n};
      max_shift = std::max(max_shift, distance(updated, result.centres[c]));
      result.centres[c] = updated;
    }
    result.iterations = iter + 1;
    if (max_shift < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace plg
