#include "modip/loss.hpp"

#include <cmath>

namespace modip {

Volume laplacian(Volume const &v)
{
  auto const &g = v.grid();
  auto const [nx, ny, nz] = g.matrix();
  auto const &vox = g.voxel_mm();
  Real const wx = Real(1 / (vox[0] * vox[0]));
  Real const wy = Real(1 / (vox[1] * vox[1]));
  Real const wz = Real(1 / (vox[2] * vox[2]));
  Volume out(g);
  Real const *p = v.data();
  Real *o = out.data();
  Index const sy = nx, sz = nx * ny;
  for (Index z = 0; z < nz; ++z) {
    for (Index y = 0; y < ny; ++y) {
      for (Index x = 0; x < nx; ++x) {
        Index const i = x + sy * y + sz * z;
        Real const c = p[i];
        Real const xm = x > 0 ? p[i - 1] : Real(0);
        Real const xp = x + 1 < nx ? p[i + 1] : Real(0);
        Real const ym = y > 0 ? p[i - sy] : Real(0);
        Real const yp = y + 1 < ny ? p[i + sy] : Real(0);
        Real const zm = z > 0 ? p[i - sz] : Real(0);
        Real const zp = z + 1 < nz ? p[i + sz] : Real(0);
        o[i] = wx * (xp - 2 * c + xm) + wy * (yp - 2 * c + ym) + wz * (zp - 2 * c + zm);
      }
    }
  }
  return out;
}

namespace {
Real sign(Real x) { return x > 0 ? Real(1) : (x < 0 ? Real(-1) : Real(0)); }
} // namespace

LossEvaluation evaluate_outer(Volume const &chi_n, Volume const &phi, Volume const &lap_phi,
                              DipoleKernel const &kernel, Mask const &mask, bool want_grad)
{
  require_same_geometry(chi_n.grid(), phi.grid(), "outer loss");
  require_same_geometry(chi_n.grid(), mask.grid(), "outer loss mask");
  require_same_geometry(chi_n.grid(), lap_phi.grid(), "outer loss laplacian");
  Index const n = chi_n.size();
  double const nmask = double(mask.count());

  Volume const field = kernel.apply(chi_n);
  Volume const lap_field = laplacian(field);
  LossEvaluation e;
  double fid = 0, lap = 0, l2 = 0;
  Volume sr(chi_n.grid()), ss(chi_n.grid());
  for (Index i = 0; i < n; ++i) {
    if (!mask[i]) { continue; }
    Real const r = field[i] - phi[i];
    Real const s = lap_field[i] - lap_phi[i];
    fid += std::abs(r);
    lap += std::abs(s);
    l2 += double(r) * r;
    sr[i] = sign(r);
    ss[i] = sign(s);
  }
  e.report.fidelity_mae = fid / nmask;
  e.report.laplacian_mae = lap / nmask;
  e.report.total = e.report.fidelity_mae + e.report.laplacian_mae;
  e.fidelity_l2 = l2;
  if (want_grad) {
    sr += laplacian(ss);
    e.grad = kernel.apply(sr);
    e.grad *= Real(1 / nmask);
  }
  return e;
}

LossReport outer_loss(Volume const &chi_n, Volume const &phi, DipoleKernel const &kernel, Mask const &mask)
{
  return evaluate_outer(chi_n, phi, laplacian(phi), kernel, mask, false).report;
}

Volume outer_loss_grad(Volume const &chi_n, Volume const &phi, DipoleKernel const &kernel, Mask const &mask)
{
  return std::move(evaluate_outer(chi_n, phi, laplacian(phi), kernel, mask, true).grad);
}

} // namespace modip
