#pragma once

#include "unet.hpp"

namespace modip {

struct AdamConfig
{
  double base_lr = 5e-4;
  double decay = 0.8;
  int decay_every = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  // base_lr * decay^floor(step / decay_every), step counted from 0.
  double lr_at(long step) const;
};

struct AdamState
{
  AdamConfig cfg;
  ParameterSet m;
  ParameterSet v;
  long step = 0;

  AdamState() = default;
  AdamState(AdamConfig c, ParameterSet const &params);
};

enum class AdamOutcome
{
  Applied,
  SkippedNonFinite,
};

/* Bias-corrected Adam. A gradient with any non-finite entry leaves parameters, moments and
 * the step counter untouched.
 */
AdamOutcome adam_step(ParameterSet &params, ParamGrads const &grads, AdamState &state);

} // namespace modip
