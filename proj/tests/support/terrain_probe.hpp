#pragma once

#include <cmath>
#include <random>

#include "sparsestep/terrain.hpp"

namespace sparsestep::testing {

// Fraction of steppable area measured by uniform point sampling over whole
// stone-grid pitches, away from the clipped course ends.
inline double monte_carlo_steppable(const TerrainGrid& grid, int samples, std::uint64_t seed) {
  const double pitch = grid.params.stone_size + grid.params.stone_gap;
  const int whole = static_cast<int>(std::floor((grid.course_end - grid.course_start) / pitch));
  const double x0 = grid.course_start + pitch;
  const double x1 = grid.course_start + (whole - 1) * pitch;
  // Any window spanning whole periods sees the exact area fraction.
  const double lateral = std::floor(3.8 / pitch) * pitch;
  const double y0 = -0.5 * lateral, y1 = 0.5 * lateral;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  int hits = 0;
  for (int i = 0; i < samples; ++i) hits += grid.height_at(ux(rng), uy(rng)).steppable;
  return static_cast<double>(hits) / samples;
}

}  // namespace sparsestep::testing
