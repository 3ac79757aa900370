#pragma once

#include "volume.hpp"

#include <array>
#include <cstdint>

namespace modip {

// Axis-aligned cuboids of uniform susceptibility painted over a zero background.
struct CuboidSpec
{
  Index count = 800;
  std::array<Index, 2> side_range{1, 64}; // voxels, inclusive
  std::array<double, 2> chi_range{-0.02, 0.02}; // ppm
  GridSpec grid = GridSpec::cube(128);
  std::uint64_t seed = 0;

  void validate() const;
};

/* Per cuboid, in order: side lengths (x, y, z), corner (x, y, z) uniform over the grid, then
 * the susceptibility. Cuboids are clipped to the field of view and later ones overwrite
 * earlier voxels.
 */
Volume cuboid_phantom(CuboidSpec const &spec);

struct LesionSpec
{
  Vec3 center{0, 0, 0}; // voxel coordinates
  double radius_mm = 2;
  double mean_ppm = 0.8;
  double std_ppm = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

// Voxels whose centre lies within radius_mm of the lesion centre (physical distance).
Mask lesion_region(GridSpec const &grid, LesionSpec const &spec);

// Replaces lesion voxels with independent N(mean, std^2) draws in linear index order.
Volume add_lesion(Volume chi, LesionSpec const &spec);

// A chi plus seeded Gaussian noise (ppm).
Volume simulate_field(Volume const &chi, double noise_std, std::uint64_t seed);

// Population standard deviation of a field over a mask.
double masked_std(Volume const &v, Mask const &mask);

} // namespace modip
