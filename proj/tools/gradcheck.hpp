#pragma once

#include <modip/unet.hpp>

#include <string>
#include <vector>

namespace modip::cli {

struct GradcheckOptions
{
  Index size = 8;
  int depth = 1;
  int base_channels = 2;
  bool norm_enabled = true;
  std::uint64_t seed = 1;
};

struct SuiteResult
{
  std::string name;
  double max_rel_err = 0;
  double threshold = 0;
  Index checked = 0; // entries compared
  Index total = 0;   // entries evaluated
  bool pass = false;
};

// Analytic gradients of the fidelity, outer loss, unrolled DFO and network against central
// differences on a random problem.
std::vector<SuiteResult> run_gradchecks(GradcheckOptions const &opt);

} // namespace modip::cli
