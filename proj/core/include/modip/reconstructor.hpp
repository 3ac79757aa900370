#pragma once

#include "adam.hpp"
#include "dfo.hpp"
#include "loss.hpp"
#include "unet.hpp"

#include <functional>
#include <optional>

namespace modip {

enum class ReconMode
{
  Modip, // network -> DFO -> loss, gradients through the unrolled DFO
  Dip,   // modip with zero DFO steps
  Dfo,   // DFO alone from chi = 0, one step per iteration
};

enum class InputKind
{
  Field, // the local field itself
  Noise, // fixed unit Gaussian volume
};

std::string to_string(ReconMode m);
std::string to_string(InputKind k);
ReconMode parse_mode(std::string const &s);
InputKind parse_input_kind(std::string const &s);

struct ReconConfig
{
  static constexpr double kDefaultStopRelTol = 1e-5;

  ReconMode mode = ReconMode::Modip;
  InputKind input_kind = InputKind::Field;
  int max_iters = 200;
  std::optional<double> stop_rel_tol;
  std::vector<int> snapshot_iters{10, 20, 50, 100, 200};
  std::uint64_t seed = 7;
  // Treat DFO as identity in the backward pass (diagnostic).
  bool stop_grad_dfo = false;
  NetworkConfig network;
  DfoConfig dfo;
  AdamConfig adam;

  void validate() const;
  // Mode-implied settings applied: dip forces zero DFO steps, the seed drives the network.
  ReconConfig effective() const;
};

struct IterationRecord
{
  int iter = 0; // 1-based
  LossReport loss;
  double fidelity_l2_chi0 = 0;
  double fidelity_l2_chin = 0;
  double lr = 0;
  double wall_ms = 0;
  bool step_skipped = false;
};

struct Snapshot
{
  int iter = 0;
  Volume chi0;
  Volume chin;
};

struct ReconState
{
  Volume chi0;
  Volume chin;
  int iterations = 0;
  std::vector<IterationRecord> history;
  std::vector<Snapshot> snapshots;
  int best_iter = 0; // iteration with the lowest total loss
  bool converged = false;
  ParameterSet params; // final network weights (empty in dfo mode)
};

struct ReconResult
{
  Volume chi;
  ReconState state;
};

struct DivergenceError : NumericError
{
  int iter;
  DivergenceError(int it, std::string const &what)
    : NumericError(what)
    , iter{it}
  {
  }
};

struct ReconOptions
{
  std::function<void(IterationRecord const &)> on_iteration;
  ParameterSet const *initial_params = nullptr;
};

ReconResult reconstruct(Volume const &phi, Mask const &mask, ReconConfig const &cfg, ReconOptions const &opts = {});

// The network input for a given config.
Volume network_input(Volume const &phi, ReconConfig const &cfg);

} // namespace modip
