#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "plg/common.hpp"

namespace plg {

// Uniform hash grid over 2-D points with exact nearest-neighbour queries.
class GridIndex {
 public:
  explicit GridIndex(double cell_size) : cell_(cell_size) {}

  void insert(int id, Vec2 p) {
    points_.resize(std::max<std::size_t>(points_.size(), static_cast<std::size_t>(id) + 1));
    points_[static_cast<std::size_t>(id)] = p;
    const auto ix = cell_of(p.x), iy = cell_of(p.y);
    cells_[key(ix, iy)].push_back(id);
    if (count_ == 0) {
      lo_x_ = hi_x_ = ix;
      lo_y_ = hi_y_ = iy;
    }
    lo_x_ = std::min(lo_x_, ix), hi_x_ = std::max(hi_x_, ix);
    lo_y_ = std::min(lo_y_, iy), hi_y_ = std::max(hi_y_, iy);
    ++count_;
  }

  bool empty() const { return count_ == 0; }

  // True when some indexed point lies within `radius` (inclusive) of p.
  bool any_within(Vec2 p, double radius) const {
    const auto span = static_cast<std::int64_t>(std::ceil(radius / cell_));
    const auto cx = cell_of(p.x), cy = cell_of(p.y);
    const double r2 = radius * radius;
    for (auto ix = cx - span; ix <= cx + span; ++ix) {
      for (auto iy = cy - span; iy <= cy + span; ++iy) {
        const auto it = cells_.find(key(ix, iy));
        if (it == cells_.end()) continue;
        for (int id : it->second) {
          if (squared_distance(points_[static_cast<std::size_t>(id)], p) <= r2) return true;
        }
      }
    }
    return false;
  }

  // Nearest indexed point; equal distances resolve to the lower id.
  int nearest(Vec2 p) const {
    if (count_ == 0) return -1;
    const auto cx = cell_of(p.x), cy = cell_of(p.y);
    int best = -1;
    double best_d2 = 0.0;
    for (std::int64_t ring = 0;; ++ring) {
      for (auto ix = cx - ring; ix <= cx + ring; ++ix) {
        for (auto iy = cy - ring; iy <= cy + ring; ++iy) {
          if (std::max(std::llabs(ix - cx), std::llabs(iy - cy)) != ring) continue;
          const auto it = cells_.find(key(ix, iy));
          if (it == cells_.end()) continue;
          for (int id : it->second) {
            const double d2 = squared_distance(points_[static_cast<std::size_t>(id)], p);
            if (best < 0 || d2 < best_d2 || (d2 == best_d2 && id < best)) {
              best = id;
              best_d2 = d2;
            }
          }
        }
      }
      // Every unvisited cell is at least ring * cell_ away.
      if (best >= 0) {
        const double reach = static_cast<double>(ring) * cell_;
        if (reach * reach > best_d2) return best;
      }
      const std::int64_t limit = std::max({std::llabs(cx - lo_x_), std::llabs(cx - hi_x_),
                                           std::llabs(cy - lo_y_), std::llabs(cy - hi_y_)});
      if (ring > limit) return best;
    }
  }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t ix, std::int64_t iy) {
    return (static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(iy);
  }

  double cell_;
  std::size_t count_ = 0;
  std::int64_t lo_x_ = 0, hi_x_ = 0, lo_y_ = 0, hi_y_ = 0;
  std::vector<Vec2> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace plg
