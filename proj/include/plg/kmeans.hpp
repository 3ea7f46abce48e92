#pragma once

#include <span>
#include <vector>

#include "plg/common.hpp"

namespace plg {

struct KMeansOptions {
  int max_iters = 50;
  double tolerance = 1e-4;  // stop when no centre moves further than this (metres)
};

struct KMeansResult {
  std::vector<Vec2> centres;
  int iterations = 0;
  bool converged = false;
};

// Lloyd's algorithm seeded with `initial` centres. A centre that loses all of
// its points keeps its previous position, so the centre count never changes.
// Assignment ties go to the lower centre index.
KMeansResult lloyd_kmeans(std::span<const Vec2> points, std::vector<Vec2> initial,
                          const KMeansOptions& options = {});

}  // namespace plg
