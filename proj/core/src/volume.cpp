#include "modip/volume.hpp"

#include <algorithm>
#include <cmath>

namespace modip {

Volume::Volume(GridSpec grid, Real fill)
  : grid_{std::move(grid)}
  , data_(static_cast<size_t>(grid_.size()), fill)
{
}

Volume::Volume(GridSpec grid, std::vector<Real> values)
  : grid_{std::move(grid)}
  , data_{std::move(values)}
{
  if (static_cast<Index>(data_.size()) != grid_.size()) {
    throw ShapeError("volume has " + std::to_string(data_.size()) + " values, grid needs " +
                     std::to_string(grid_.size()));
  }
}

bool Volume::all_finite() const
{
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

void Volume::require_finite(char const *what) const
{
  if (!all_finite()) { throw NumericError(std::string(what) + " contains non-finite values"); }
}

Volume &Volume::operator+=(Volume const &o)
{
  require_same_geometry(grid_, o.grid_, "volume +=");
  for (size_t i = 0; i < data_.size(); ++i) { data_[i] += o.data_[i]; }
  return *this;
}

Volume &Volume::operator-=(Volume const &o)
{
  require_same_geometry(grid_, o.grid_, "volume -=");
  for (size_t i = 0; i < data_.size(); ++i) { data_[i] -= o.data_[i]; }
  return *this;
}

Volume &Volume::operator*=(Real s)
{
  for (auto &v : data_) { v *= s; }
  return *this;
}

Volume operator+(Volume a, Volume const &b) { return a += b; }
Volume operator-(Volume a, Volume const &b) { return a -= b; }
Volume operator*(Real s, Volume a) { return a *= s; }

double dot(Volume const &a, Volume const &b)
{
  require_same_geometry(a.grid(), b.grid(), "dot");
  double acc = 0;
  for (Index i = 0; i < a.size(); ++i) { acc += double(a[i]) * double(b[i]); }
  return acc;
}

double norm2(Volume const &a) { return std::sqrt(dot(a, a)); }

double sum(Volume const &a)
{
  double acc = 0;
  for (Real v : a.values()) { acc += v; }
  return acc;
}

double max_abs(Volume const &a)
{
  double m = 0;
  for (Real v : a.values()) { m = std::max(m, double(std::abs(v))); }
  return m;
}

void axpy(Real a, Volume const &x, Volume &y)
{
  require_same_geometry(x.grid(), y.grid(), "axpy");
  Real const *xp = x.data();
  Real *yp = y.data();
  for (Index i = 0; i < y.size(); ++i) { yp[i] += a * xp[i]; }
}

Volume hadamard(Volume const &a, Volume const &b)
{
  require_same_geometry(a.grid(), b.grid(), "hadamard");
  Volume out(a.grid());
  for (Index i = 0; i < a.size(); ++i) { out[i] = a[i] * b[i]; }
  return out;
}

Mask::Mask(Volume v)
  : v_{std::move(v)}
{
  for (Real x : v_.values()) {
    if (x == 1) {
      ++count_;
    } else if (x != 0) {
      throw ConfigError("mask values must be exactly 0 or 1");
    }
  }
  if (count_ == 0) { throw ConfigError("mask must contain at least one voxel"); }
}

Mask Mask::all_ones(GridSpec const &grid) { return Mask(Volume(grid, Real(1))); }

void Mask::apply(Volume &x) const
{
  require_same_geometry(grid(), x.grid(), "mask");
  if (is_all_ones()) { return; }
  Real const *m = v_.data();
  Real *p = x.data();
  for (Index i = 0; i < x.size(); ++i) { p[i] *= m[i]; }
}

Spectrum::Spectrum(GridSpec grid)
  : grid_{std::move(grid)}
  , data_(static_cast<size_t>(grid_.size()))
{
}

} // namespace modip
