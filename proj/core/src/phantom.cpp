#include "modip/phantom.hpp"
#include "modip/dipole.hpp"
#include "modip/rng.hpp"

#include <algorithm>
#include <cmath>

namespace modip {

void CuboidSpec::validate() const
{
  if (count < 0) { throw ConfigError("cuboid count must be >= 0"); }
  Index const mmin = std::min({grid.nx(), grid.ny(), grid.nz()});
  if (side_range[0] < 1 || side_range[1] < side_range[0]) { throw ConfigError("cuboid side range must be 1 <= lo <= hi"); }
  if (side_range[1] > mmin) {
    throw ConfigError("cuboid side " + std::to_string(side_range[1]) + " exceeds the smallest matrix dimension " +
                      std::to_string(mmin));
  }
  if (!(chi_range[0] <= chi_range[1])) { throw ConfigError("cuboid susceptibility range must be ordered"); }
}

Volume cuboid_phantom(CuboidSpec const &spec)
{
  spec.validate();
  Volume chi(spec.grid);
  Rng rng(spec.seed);
  auto const &m = spec.grid.matrix();
  for (Index n = 0; n < spec.count; ++n) {
    std::array<Index, 3> side{}, lo{};
    for (int a = 0; a < 3; ++a) { side[a] = rng.uniform_int(spec.side_range[0], spec.side_range[1]); }
    for (int a = 0; a < 3; ++a) { lo[a] = rng.uniform_int(0, m[a] - 1); }
    Real const value = Real(rng.uniform(spec.chi_range[0], spec.chi_range[1]));
    Index const x1 = std::min(m[0], lo[0] + side[0]);
    Index const y1 = std::min(m[1], lo[1] + side[1]);
    Index const z1 = std::min(m[2], lo[2] + side[2]);
    for (Index z = lo[2]; z < z1; ++z) {
      for (Index y = lo[1]; y < y1; ++y) {
        for (Index x = lo[0]; x < x1; ++x) { chi(x, y, z) = value; }
      }
    }
  }
  return chi;
}

void LesionSpec::validate() const
{
  if (!(radius_mm > 0)) { throw ConfigError("lesion radius must be positive"); }
  if (!(std_ppm >= 0)) { throw ConfigError("lesion std must be >= 0"); }
}

Mask lesion_region(GridSpec const &grid, LesionSpec const &spec)
{
  spec.validate();
  auto const &v = grid.voxel_mm();
  double const r2 = spec.radius_mm * spec.radius_mm;
  Volume region(grid);
  Index inside = 0;
  for (Index z = 0; z < grid.nz(); ++z) {
    double const dz = (double(z) - spec.center[2]) * v[2];
    for (Index y = 0; y < grid.ny(); ++y) {
      double const dy = (double(y) - spec.center[1]) * v[1];
      for (Index x = 0; x < grid.nx(); ++x) {
        double const dx = (double(x) - spec.center[0]) * v[0];
        if (dx * dx + dy * dy + dz * dz <= r2) {
          region(x, y, z) = 1;
          ++inside;
        }
      }
    }
  }
  if (inside == 0) { throw ConfigError("lesion sphere contains no voxel of the field of view"); }
  return Mask(std::move(region));
}

Volume add_lesion(Volume chi, LesionSpec const &spec)
{
  Mask const region = lesion_region(chi.grid(), spec);
  Rng rng(spec.seed);
  for (Index i = 0; i < chi.size(); ++i) {
    if (region[i]) { chi[i] = Real(rng.normal(spec.mean_ppm, spec.std_ppm)); }
  }
  return chi;
}

Volume simulate_field(Volume const &chi, double noise_std, std::uint64_t seed)
{
  if (!(noise_std >= 0)) { throw ConfigError("noise standard deviation must be >= 0"); }
  chi.require_finite("susceptibility");
  Volume phi = apply_A(chi, build_kernel(chi.grid()));
  if (noise_std > 0) {
    Rng rng(seed);
    for (auto &v : phi.values()) { v += Real(noise_std * rng.normal()); }
  }
  return phi;
}

double masked_std(Volume const &v, Mask const &mask)
{
  require_same_geometry(v.grid(), mask.grid(), "masked_std");
  double mean = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (mask[i]) { mean += v[i]; }
  }
  mean /= double(mask.count());
  double var = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (mask[i]) { var += (v[i] - mean) * (v[i] - mean); }
  }
  return std::sqrt(var / double(mask.count()));
}

} // namespace modip
