#include "modip/dipole.hpp"

namespace modip {

DipoleKernel::DipoleKernel(GridSpec const &grid)
  : d_{grid}
  , fft_{std::make_shared<RealFFT const>(grid.matrix())}
{
  auto const &m = grid.matrix();
  auto const &v = grid.voxel_mm();
  auto const &p = grid.b0_dir();
  auto raw = [&](Index sx, Index sy, Index sz) {
    double const kx = double(sx) / (double(m[0]) * v[0]);
    double const ky = double(sy) / (double(m[1]) * v[1]);
    double const kz = double(sz) / (double(m[2]) * v[2]);
    double const k2 = kx * kx + ky * ky + kz * kz;
    if (k2 == 0) { return 0.0; }
    double const pk = p[0] * kx + p[1] * ky + p[2] * kz;
    return 1.0 / 3.0 - pk * pk / k2;
  };
  // A Nyquist bin is both +M/2 and -M/2. Averaging the two readings keeps d even, so A maps
  // real volumes to real volumes; every other bin is unchanged.
  for (Index z = 0; z < m[2]; ++z) {
    Index const sz = signed_bin(z, m[2]), mz = signed_bin((m[2] - z) % m[2], m[2]);
    for (Index y = 0; y < m[1]; ++y) {
      Index const sy = signed_bin(y, m[1]), my = signed_bin((m[1] - y) % m[1], m[1]);
      for (Index x = 0; x < m[0]; ++x) {
        Index const sx = signed_bin(x, m[0]), mx = signed_bin((m[0] - x) % m[0], m[0]);
        d_(x, y, z) = Real(0.5 * (raw(sx, sy, sz) + raw(-mx, -my, -mz)));
      }
    }
  }

  Index const hnx = fft_->half_nx();
  half_.resize(size_t(fft_->half_size()));
  Real const scale = Real(1) / Real(grid.size());
  for (Index z = 0; z < m[2]; ++z) {
    for (Index y = 0; y < m[1]; ++y) {
      for (Index hx = 0; hx < hnx; ++hx) {
        half_[size_t(hx + hnx * (y + m[1] * z))] = d_(hx, y, z) * scale;
      }
    }
  }
}

void DipoleKernel::apply(Real const *in, Real *out) const
{
  std::vector<Complex> spec(half_.size());
  fft_->forward(in, spec.data());
  for (size_t i = 0; i < spec.size(); ++i) { spec[i] *= half_[i]; }
  fft_->inverse(spec.data(), out);
}

Volume DipoleKernel::apply(Volume const &chi) const
{
  require_same_geometry(chi.grid(), grid(), "dipole apply");
  Volume out(grid());
  apply(chi.data(), out.data());
  return out;
}

DipoleKernel build_kernel(GridSpec const &grid) { return DipoleKernel(grid); }

Volume apply_A(Volume const &chi, DipoleKernel const &kernel) { return kernel.apply(chi); }

namespace {

Volume masked_residual(Volume const &chi, Volume const &phi, DipoleKernel const &kernel, Mask const &mask)
{
  require_same_geometry(chi.grid(), phi.grid(), "fidelity");
  require_same_geometry(chi.grid(), mask.grid(), "fidelity mask");
  Volume r = kernel.apply(chi);
  r -= phi;
  mask.apply(r);
  return r;
}

} // namespace

double fidelity_value(Volume const &chi, Volume const &phi, DipoleKernel const &kernel, Mask const &mask)
{
  Volume const r = masked_residual(chi, phi, kernel, mask);
  return dot(r, r);
}

Volume fidelity_gradient(Volume const &chi, Volume const &phi, DipoleKernel const &kernel, Mask const &mask)
{
  Volume g = kernel.apply(masked_residual(chi, phi, kernel, mask));
  g *= Real(2);
  return g;
}

} // namespace modip
