#include "modip/adam.hpp"

#include <cmath>

namespace modip {

void AdamConfig::validate() const
{
  if (!(base_lr > 0)) { throw ConfigError("learning rate must be positive"); }
  if (!(decay > 0 && decay <= 1)) { throw ConfigError("lr decay must be in (0, 1]"); }
  if (decay_every < 1) { throw ConfigError("lr decay interval must be >= 1"); }
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) { throw ConfigError("Adam betas must be in [0, 1)"); }
  if (!(eps > 0)) { throw ConfigError("Adam eps must be positive"); }
}

double AdamConfig::lr_at(long step) const { return base_lr * std::pow(decay, double(step / decay_every)); }

AdamState::AdamState(AdamConfig c, ParameterSet const &params)
  : cfg{c}
  , m{params.zeros_like()}
  , v{params.zeros_like()}
{
  cfg.validate();
}

AdamOutcome adam_step(ParameterSet &params, ParamGrads const &grads, AdamState &state)
{
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v)) {
    throw ShapeError("adam_step: parameter, gradient and moment layouts differ");
  }
  if (!grads.all_finite()) { return AdamOutcome::SkippedNonFinite; }
  auto const &c = state.cfg;
  double const lr = c.lr_at(state.step);
  long const t = state.step + 1;
  double const bc1 = 1 - std::pow(c.beta1, double(t));
  double const bc2 = 1 - std::pow(c.beta2, double(t));
  for (size_t k = 0; k < params.tensors.size(); ++k) {
    auto &p = params.tensors[k].values;
    auto const &g = grads.tensors[k].values;
    auto &m = state.m.tensors[k].values;
    auto &v = state.v.tensors[k].values;
    for (size_t i = 0; i < p.size(); ++i) {
      double const gi = g[i];
      double const mi = c.beta1 * m[i] + (1 - c.beta1) * gi;
      double const vi = c.beta2 * v[i] + (1 - c.beta2) * gi * gi;
      m[i] = Real(mi);
      v[i] = Real(vi);
      double const mhat = mi / bc1;
      double const vhat = vi / bc2;
      p[i] -= Real(lr * mhat / (std::sqrt(vhat) + c.eps));
    }
  }
  state.step = t;
  return AdamOutcome::Applied;
}

} // namespace modip
