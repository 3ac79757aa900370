#pragma once

#include "grid.hpp"

#include <span>
#include <vector>

namespace modip {

// Real-valued 3D volume bound to a grid.
class Volume
{
public:
  Volume() = default;
  explicit Volume(GridSpec grid, Real fill = 0);
  Volume(GridSpec grid, std::vector<Real> values);

  static Volume constant(GridSpec const &grid, Real c) { return Volume(grid, c); }

  GridSpec const &grid() const { return grid_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  Real &operator[](Index i) { return data_[static_cast<size_t>(i)]; }
  Real operator[](Index i) const { return data_[static_cast<size_t>(i)]; }
  Real &operator()(Index x, Index y, Index z) { return data_[static_cast<size_t>(grid_.index(x, y, z))]; }
  Real operator()(Index x, Index y, Index z) const { return data_[static_cast<size_t>(grid_.index(x, y, z))]; }

  std::span<Real> values() { return data_; }
  std::span<Real const> values() const { return data_; }
  Real *data() { return data_.data(); }
  Real const *data() const { return data_.data(); }

  bool all_finite() const;
  void require_finite(char const *what) const;

  Volume &operator+=(Volume const &o);
  Volume &operator-=(Volume const &o);
  Volume &operator*=(Real s);

private:
  GridSpec grid_;
  std::vector<Real> data_;
};

Volume operator+(Volume a, Volume const &b);
Volume operator-(Volume a, Volume const &b);
Volume operator*(Real s, Volume a);

double dot(Volume const &a, Volume const &b);
double norm2(Volume const &a);
double sum(Volume const &a);
double max_abs(Volume const &a);
// y += a * x
void axpy(Real a, Volume const &x, Volume &y);
Volume hadamard(Volume const &a, Volume const &b);

// Binary region of interest; values exactly 0 or 1 with at least one 1.
class Mask
{
public:
  explicit Mask(Volume v);
  static Mask all_ones(GridSpec const &grid);

  GridSpec const &grid() const { return v_.grid(); }
  Volume const &volume() const { return v_; }
  Index count() const { return count_; }
  bool is_all_ones() const { return count_ == v_.size(); }
  bool operator[](Index i) const { return v_[i] != 0; }

  // Zeroes voxels outside the mask in place.
  void apply(Volume &x) const;

private:
  Volume v_;
  Index count_ = 0;
};

// Full complex spectrum in unshifted DFT bin order, same layout as Volume.
class Spectrum
{
public:
  Spectrum() = default;
  explicit Spectrum(GridSpec grid);

  GridSpec const &grid() const { return grid_; }
  Index size() const { return static_cast<Index>(data_.size()); }
  Complex &operator[](Index i) { return data_[static_cast<size_t>(i)]; }
  Complex operator[](Index i) const { return data_[static_cast<size_t>(i)]; }
  Complex operator()(Index x, Index y, Index z) const { return data_[static_cast<size_t>(grid_.index(x, y, z))]; }
  Complex *data() { return data_.data(); }
  Complex const *data() const { return data_.data(); }

private:
  GridSpec grid_;
  std::vector<Complex> data_;
};

} // namespace modip
