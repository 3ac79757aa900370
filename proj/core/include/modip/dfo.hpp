#pragma once

#include "dipole.hpp"

namespace modip {

// Gradient descent on ||mask (A chi - phi)||^2. The Hessian 2 A M A has spectral norm at
// most 8/9, so steps are stable and monotone for alpha in (0, 2.25).
struct DfoConfig
{
  static constexpr double kAlphaBound = 2.25;

  double alpha = 1.2;
  int n_steps = 10;

  void validate() const;
};

// chi <- chi - alpha * grad, n_steps times.
Volume dfo_run(Volume chi0, Volume const &phi, DipoleKernel const &kernel, Mask const &mask,
               DfoConfig const &cfg);

/* Vector-Jacobian product of dfo_run with respect to chi0. Each step is affine with the
 * symmetric linear part L = I - 2 alpha A M A, so the transpose of the unrolled Jacobian is
 * L^n itself and no intermediate iterates are needed.
 */
Volume dfo_vjp(Volume g, DipoleKernel const &kernel, Mask const &mask, DfoConfig const &cfg);

} // namespace modip
