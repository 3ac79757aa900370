#pragma once

#include "dipole.hpp"

namespace modip {

// 7-point Laplacian with per-axis 1/v^2 scaling and zero padding outside the grid. The
// operator is symmetric.
Volume laplacian(Volume const &v);

struct LossReport
{
  double fidelity_mae = 0;
  double laplacian_mae = 0;
  double total = 0;
};

/* Mean absolute field error plus mean absolute error of the field Laplacians, both averaged
 * over masked voxels:
 *   r = M (A chi - phi),  s = M (lap(A chi) - lap(phi)).
 */
LossReport outer_loss(Volume const &chi_n, Volume const &phi, DipoleKernel const &kernel, Mask const &mask);

// (1/N_mask) A(M sign(r) + lap(M sign(s))), with sign(0) = 0.
Volume outer_loss_grad(Volume const &chi_n, Volume const &phi, DipoleKernel const &kernel, Mask const &mask);

struct LossEvaluation
{
  LossReport report;
  Volume grad;
  double fidelity_l2 = 0; // ||M (A chi - phi)||^2
};

// Loss, gradient and L2 fidelity in one pass. lap_phi must equal laplacian(phi).
LossEvaluation evaluate_outer(Volume const &chi_n, Volume const &phi, Volume const &lap_phi,
                              DipoleKernel const &kernel, Mask const &mask, bool want_grad = true);

} // namespace modip
