#include "modip/grid.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace modip {

namespace {
bool close(double a, double b)
{
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}
} // namespace

GridSpec::GridSpec(Dims3 matrix, Vec3 voxel_mm, Vec3 b0_dir)
  : matrix_{matrix}
  , voxel_{voxel_mm}
  , b0_{b0_dir}
  , b0_input_{b0_dir}
{
  for (int a = 0; a < 3; ++a) {
    if (matrix_[a] < 2) {
      throw ConfigError("grid matrix entries must be >= 2, got " + std::to_string(matrix_[a]));
    }
    if (!(voxel_[a] > 0) || !std::isfinite(voxel_[a])) {
      throw ConfigError("voxel sizes must be positive and finite");
    }
    if (!std::isfinite(b0_[a])) { throw ConfigError("b0 direction must be finite"); }
  }
  double const n2 = b0_[0] * b0_[0] + b0_[1] * b0_[1] + b0_[2] * b0_[2];
  if (n2 == 0) { throw ConfigError("b0 direction must be non-zero"); }
  // Vectors that are already unit length keep their bits so headers round-trip.
  if (std::abs(n2 - 1.0) > 4 * std::numeric_limits<double>::epsilon()) {
    double const n = std::sqrt(n2);
    for (auto &p : b0_) { p /= n; }
  }
}

GridSpec GridSpec::cube(Index m) { return GridSpec({m, m, m}, {1, 1, 1}, {0, 0, 1}); }

bool GridSpec::same_geometry(GridSpec const &o) const
{
  if (matrix_ != o.matrix_) { return false; }
  for (int a = 0; a < 3; ++a) {
    if (!close(voxel_[a], o.voxel_[a]) || !close(b0_[a], o.b0_[a])) { return false; }
  }
  return true;
}

GridSpec GridSpec::with_matrix(Dims3 m) const
{
  GridSpec g(m, voxel_, b0_);
  g.b0_input_ = b0_input_;
  return g;
}

void require_same_geometry(GridSpec const &a, GridSpec const &b, char const *what)
{
  if (!a.same_geometry(b)) {
    throw ShapeError(std::string(what) + ": grid mismatch (" + to_string(a) + " vs " + to_string(b) + ")");
  }
}

std::string to_string(GridSpec const &g)
{
  std::ostringstream os;
  os << g.nx() << "x" << g.ny() << "x" << g.nz() << " @ " << g.voxel_mm()[0] << "," << g.voxel_mm()[1] << ","
     << g.voxel_mm()[2] << " mm, b0 " << g.b0_dir()[0] << "," << g.b0_dir()[1] << "," << g.b0_dir()[2];
  return os.str();
}

} // namespace modip
