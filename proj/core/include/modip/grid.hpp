#pragma once

#include "types.hpp"

#include <array>

namespace modip {

using Vec3 = std::array<double, 3>;
using Dims3 = std::array<Index, 3>;

/* Image geometry: matrix size, voxel size in mm and the unit B0 direction
 * projected on the image axes. Linear layout is x fastest:
 * index = x + Mx * (y + My * z).
 */
class GridSpec
{
public:
  GridSpec() = default;
  GridSpec(Dims3 matrix, Vec3 voxel_mm, Vec3 b0_dir);

  // 1 mm isotropic, pure axial.
  static GridSpec cube(Index m);

  Dims3 const &matrix() const { return matrix_; }
  Vec3 const &voxel_mm() const { return voxel_; }
  Vec3 const &b0_dir() const { return b0_; }
  Vec3 const &b0_input() const { return b0_input_; }

  Index nx() const { return matrix_[0]; }
  Index ny() const { return matrix_[1]; }
  Index nz() const { return matrix_[2]; }
  Index size() const { return matrix_[0] * matrix_[1] * matrix_[2]; }

  Index index(Index x, Index y, Index z) const { return x + matrix_[0] * (y + matrix_[1] * z); }

  // Same matrix; voxel size and B0 direction agree to 1e-9 relative.
  bool same_geometry(GridSpec const &o) const;
  bool operator==(GridSpec const &o) const = default;

  GridSpec with_matrix(Dims3 m) const;

private:
  Dims3 matrix_{2, 2, 2};
  Vec3 voxel_{1, 1, 1};
  Vec3 b0_{0, 0, 1};
  Vec3 b0_input_{0, 0, 1};
};

void require_same_geometry(GridSpec const &a, GridSpec const &b, char const *what);

std::string to_string(GridSpec const &g);

} // namespace modip
