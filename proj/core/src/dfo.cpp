#include "modip/dfo.hpp"

#include <cmath>
#include <sstream>

namespace modip {

void DfoConfig::validate() const
{
  if (!(alpha > 0 && alpha < kAlphaBound) || !std::isfinite(alpha)) {
    std::ostringstream os;
    os << "DFO step size alpha=" << alpha << " violates the stability bound 0 < alpha < 2.25 "
       << "(2 / ||2 A M A|| with ||A|| <= 2/3)";
    throw ConfigError(os.str());
  }
  if (n_steps < 0) { throw ConfigError("DFO n_steps must be >= 0"); }
}

Volume dfo_run(Volume chi, Volume const &phi, DipoleKernel const &kernel, Mask const &mask, DfoConfig const &cfg)
{
  cfg.validate();
  require_same_geometry(chi.grid(), kernel.grid(), "dfo_run");
  require_same_geometry(chi.grid(), phi.grid(), "dfo_run field");
  require_same_geometry(chi.grid(), mask.grid(), "dfo_run mask");
  Volume r(chi.grid());
  for (int i = 0; i < cfg.n_steps; ++i) {
    kernel.apply(chi.data(), r.data());
    r -= phi;
    mask.apply(r);
    kernel.apply(r.data(), r.data());
    axpy(Real(-2 * cfg.alpha), r, chi);
  }
  return chi;
}

Volume dfo_vjp(Volume g, DipoleKernel const &kernel, Mask const &mask, DfoConfig const &cfg)
{
  cfg.validate();
  require_same_geometry(g.grid(), kernel.grid(), "dfo_vjp");
  require_same_geometry(g.grid(), mask.grid(), "dfo_vjp mask");
  Volume t(g.grid());
  for (int i = 0; i < cfg.n_steps; ++i) {
    kernel.apply(g.data(), t.data());
    mask.apply(t);
    kernel.apply(t.data(), t.data());
    axpy(Real(-2 * cfg.alpha), t, g);
  }
  return g;
}

} // namespace modip
