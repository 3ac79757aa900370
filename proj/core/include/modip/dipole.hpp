#pragma once

#include "fft.hpp"
#include "volume.hpp"

#include <memory>

namespace modip {

/* Unit dipole kernel D(k) = 1/3 - (p.k)^2 / |k|^2 in unshifted DFT order, with
 * k = s(j, M) / (M v) per axis and s(j, M) = j for j < M/2, j - M otherwise.
 * D(0) is defined as 0, so the forward model annihilates constants. On even-length axes
 * the Nyquist bin stands for both +M/2 and -M/2; there D holds the mean of the two values so
 * that D(k) = D(-k mod M) and A stays real and self-adjoint.
 */
class DipoleKernel
{
public:
  explicit DipoleKernel(GridSpec const &grid);

  GridSpec const &grid() const { return d_.grid(); }
  Real operator()(Index x, Index y, Index z) const { return d_(x, y, z); }
  Volume const &values() const { return d_; }

  // Circular convolution with the dipole: ifft(D * fft(chi)).
  Volume apply(Volume const &chi) const;
  void apply(Real const *in, Real *out) const;

private:
  Volume d_;
  std::vector<Real> half_; // kernel on the r2c half spectrum, pre-scaled by 1/N
  std::shared_ptr<RealFFT const> fft_;
};

DipoleKernel build_kernel(GridSpec const &grid);

// Signed DFT frequency index.
inline Index signed_bin(Index j, Index m) { return j < (m + 1) / 2 ? j : j - m; }

Volume apply_A(Volume const &chi, DipoleKernel const &kernel);

// ||mask (A chi - phi)||_2^2
double fidelity_value(Volume const &chi, Volume const &phi, DipoleKernel const &kernel, Mask const &mask);

// 2 A(mask (A chi - phi)); A is self-adjoint.
Volume fidelity_gradient(Volume const &chi, Volume const &phi, DipoleKernel const &kernel, Mask const &mask);

} // namespace modip
