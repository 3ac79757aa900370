#include "modip/reconstructor.hpp"
#include "modip/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace modip {

std::string to_string(ReconMode m)
{
  switch (m) {
  case ReconMode::Modip: return "modip";
  case ReconMode::Dip: return "dip";
  case ReconMode::Dfo: return "dfo";
  }
  return "?";
}

std::string to_string(InputKind k) { return k == InputKind::Field ? "field" : "noise"; }

ReconMode parse_mode(std::string const &s)
{
  if (s == "modip") { return ReconMode::Modip; }
  if (s == "dip") { return ReconMode::Dip; }
  if (s == "dfo") { return ReconMode::Dfo; }
  throw ConfigError("unknown reconstruction method '" + s + "' (modip|dip|dfo)");
}

InputKind parse_input_kind(std::string const &s)
{
  if (s == "field") { return InputKind::Field; }
  if (s == "noise") { return InputKind::Noise; }
  throw ConfigError("unknown network input '" + s + "' (field|noise)");
}

void ReconConfig::validate() const
{
  if (max_iters < 1) { throw ConfigError("max_iters must be >= 1"); }
  if (stop_rel_tol && !(*stop_rel_tol > 0)) { throw ConfigError("stop_rel_tol must be positive"); }
  for (int s : snapshot_iters) {
    if (s < 1) { throw ConfigError("snapshot iterations must be >= 1"); }
  }
  dfo.validate();
  if (mode != ReconMode::Dfo) {
    network.validate();
    adam.validate();
  }
}

ReconConfig ReconConfig::effective() const
{
  ReconConfig e = *this;
  if (e.mode == ReconMode::Dip) { e.dfo.n_steps = 0; }
  e.network.seed = seed;
  return e;
}

Volume network_input(Volume const &phi, ReconConfig const &cfg)
{
  if (cfg.input_kind == InputKind::Field) { return phi; }
  // Separate stream from the weight initialisation.
  Rng rng(cfg.seed ^ 0x6e6f697365ULL);
  Volume z(phi.grid());
  for (auto &v : z.values()) { v = Real(rng.normal()); }
  return z;
}

namespace {

using Clock = std::chrono::steady_clock;

// A annihilates constants, so the mean of the network output is unobservable. Fixing it to
// zero leaves loss and gradients unchanged and keeps every mode's output mean-free.
void remove_mean(Volume &v)
{
  Real const m = Real(sum(v) / double(v.size()));
  for (auto &x : v.values()) { x -= m; }
}

bool wants_snapshot(ReconConfig const &cfg, int iter)
{
  return std::find(cfg.snapshot_iters.begin(), cfg.snapshot_iters.end(), iter) != cfg.snapshot_iters.end();
}

} // namespace

ReconResult reconstruct(Volume const &phi, Mask const &mask, ReconConfig const &user_cfg, ReconOptions const &opts)
{
  ReconConfig const cfg = user_cfg.effective();
  cfg.validate();
  require_same_geometry(phi.grid(), mask.grid(), "reconstruct");
  phi.require_finite("local field");
  bool const use_net = cfg.mode != ReconMode::Dfo;
  if (use_net) { cfg.network.check_input(phi.grid().matrix()); }

  DipoleKernel const kernel(phi.grid());
  Volume const lap_phi = laplacian(phi);
  ReconState st;

  ParameterSet params;
  AdamState adam;
  Volume input;
  if (use_net) {
    if (opts.initial_params) {
      params = *opts.initial_params;
      if (!params.same_layout(param_layout(cfg.network))) {
        throw ConfigError("initial parameters do not match the network configuration");
      }
    } else {
      params = init_params(cfg.network);
    }
    adam = AdamState(cfg.adam, params);
    input = network_input(phi, cfg);
  }

  Volume chi(phi.grid()); // dfo mode iterate
  double best = std::numeric_limits<double>::infinity();
  DfoConfig const one_step{cfg.dfo.alpha, 1};

  for (int it = 1; it <= cfg.max_iters; ++it) {
    auto const t0 = Clock::now();
    IterationRecord rec;
    rec.iter = it;
    Volume chi0, chin;
    if (use_net) {
      ForwardResult fwd = forward(input, params, cfg.network);
      chi0 = std::move(fwd.chi0);
      remove_mean(chi0);
      chin = cfg.dfo.n_steps > 0 ? dfo_run(chi0, phi, kernel, mask, cfg.dfo) : chi0;
      LossEvaluation ev = evaluate_outer(chin, phi, lap_phi, kernel, mask, true);
      rec.loss = ev.report;
      rec.fidelity_l2_chin = ev.fidelity_l2;
      rec.fidelity_l2_chi0 = cfg.dfo.n_steps > 0 ? fidelity_value(chi0, phi, kernel, mask) : ev.fidelity_l2;
      if (!std::isfinite(rec.loss.total)) {
        throw DivergenceError(it, "loss became non-finite at iteration " + std::to_string(it));
      }
      Volume g0 = (cfg.dfo.n_steps > 0 && !cfg.stop_grad_dfo) ? dfo_vjp(std::move(ev.grad), kernel, mask, cfg.dfo)
                                                               : std::move(ev.grad);
      remove_mean(g0);
      ParamGrads const grads = backward(g0, std::move(fwd.cache), params, cfg.network);
      rec.lr = adam.cfg.lr_at(adam.step);
      rec.step_skipped = adam_step(params, grads, adam) == AdamOutcome::SkippedNonFinite;
    } else {
      chi0 = chi;
      rec.fidelity_l2_chi0 = fidelity_value(chi, phi, kernel, mask);
      chi = dfo_run(std::move(chi), phi, kernel, mask, one_step);
      chin = chi;
      LossEvaluation const ev = evaluate_outer(chin, phi, lap_phi, kernel, mask, false);
      rec.loss = ev.report;
      rec.fidelity_l2_chin = ev.fidelity_l2;
      if (!std::isfinite(rec.loss.total)) {
        throw DivergenceError(it, "loss became non-finite at iteration " + std::to_string(it));
      }
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    if (rec.loss.total < best) {
      best = rec.loss.total;
      st.best_iter = it;
    }
    if (wants_snapshot(cfg, it)) { st.snapshots.push_back({it, chi0, chin}); }
    st.chi0 = std::move(chi0);
    st.chin = std::move(chin);
    st.iterations = it;
    st.history.push_back(rec);
    if (opts.on_iteration) { opts.on_iteration(rec); }

    if (cfg.stop_rel_tol && st.history.size() >= 2) {
      double const prev = st.history[st.history.size() - 2].loss.total;
      if (prev > 0 && std::abs(rec.loss.total - prev) / prev < *cfg.stop_rel_tol) {
        st.converged = true;
        break;
      }
    }
  }
  st.params = std::move(params);
  ReconResult r{st.chin, std::move(st)};
  return r;
}

} // namespace modip
