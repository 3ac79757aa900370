// Acceptance suite: one PASS/FAIL line per criterion.
//
//   modip_acceptance            run everything
//   modip_acceptance 1 4 9      run a subset
//
// A failure marked "known" is measured and reported but out of reach on a single desktop
// core or by construction. Exit status: 0 all pass, 77 only known failures, 1 otherwise.

#include "oracles.hpp"

#include <modip/dfo.hpp>
#include <modip/fft.hpp>
#include <modip/loss.hpp>
#include <modip/manifest.hpp>
#include <modip/metrics.hpp>
#include <modip/parallel.hpp>
#include <modip/phantom.hpp>
#include <modip/reconstructor.hpp>
#include <modip/rng.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace modip;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome
{
  bool pass = false;
  std::string detail;
  bool known = false; // failure is the declared, analysed kind
};

std::string fmt(char const *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(std::string const &s)
{
  std::fprintf(stderr, "  .. %s\n", s.c_str());
  std::fflush(stderr);
}

std::vector<double> to_vec(Volume const &v) { return {v.values().begin(), v.values().end()}; }

Volume from_vec(GridSpec const &g, std::vector<double> const &x)
{
  return Volume(g, std::vector<Real>(x.begin(), x.end()));
}

GridSpec oblique(Index m) { return GridSpec({m, m, m}, {1, 1, 2}, {0.5, 0.5, 0.71}); }

// ---------------------------------------------------------------------------------------

Outcome c1_kernel()
{
  auto const t0 = Clock::now();
  DipoleKernel const k = build_kernel(GridSpec({4, 4, 4}, {1, 1, 1}, {0, 0, 1}));
  double const e = std::max({std::abs(k(0, 0, 1) + 2.0 / 3.0), std::abs(k(1, 0, 0) - 1.0 / 3.0), std::abs(k(1, 1, 1)),
                             std::abs(k(0, 0, 0))});
  double const t = seconds_since(t0);
  return {e <= 1e-12 && t < 1, fmt("max deviation %.2e (tol 1e-12), %.3f s (limit 1 s)", e, t)};
}

Outcome c2_adjoint()
{
  auto const t0 = Clock::now();
  GridSpec const g = oblique(8);
  DipoleKernel const k(g);
  double worst_a = 0, worst_l = 0;
  for (int i = 0; i < 100; ++i) {
    Volume const x = oracle::random_volume(g, 2 * i + 1), y = oracle::random_volume(g, 2 * i + 2);
    double const s = std::sqrt(norm2(x) * norm2(y));
    worst_a = std::max(worst_a, std::abs(dot(apply_A(x, k), y) - dot(x, apply_A(y, k))) / s);
    worst_l = std::max(worst_l, std::abs(dot(laplacian(x), y) - dot(x, laplacian(y))) / s);
  }
  double const t = seconds_since(t0);
  return {worst_a <= 1e-10 && worst_l <= 1e-10 && t < 5,
          fmt("A %.2e, Laplacian %.2e (tol 1e-10 |x||y|), %.2f s (limit 5 s)", worst_a, worst_l, t)};
}

Outcome c3_fft()
{
  GridSpec const g = oblique(4);
  Volume const v = oracle::random_volume(g, 3);
  Spectrum const s = fft3(v);
  auto const ref = oracle::dft(v);
  double e = 0;
  for (Index i = 0; i < s.size(); ++i) { e = std::max(e, std::abs(std::complex<double>(s[i]) - ref[size_t(i)])); }
  return {e <= 1e-10, fmt("max abs error %.2e (tol 1e-10)", e)};
}

Outcome c4_dfo_monotone()
{
  GridSpec const g = oblique(16);
  DipoleKernel const k(g);
  DfoConfig one;
  one.alpha = 1.2;
  one.n_steps = 1;
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Mask const mask(oracle::random_mask(g, 1000 + trial, 0.8));
    Volume chi = oracle::random_volume(g, 2000 + trial);
    Volume const phi = oracle::random_volume(g, 3000 + trial);
    double prev = fidelity_value(chi, phi, k, mask);
    bool mono = true;
    for (int s = 0; s < 10; ++s) {
      chi = dfo_run(chi, phi, k, mask, one);
      double const f = fidelity_value(chi, phi, k, mask);
      mono = mono && f <= prev;
      prev = f;
    }
    ok += mono;
  }
  bool rejected = false;
  try {
    DfoConfig bad;
    bad.alpha = 2.3;
    ReconConfig cfg;
    cfg.dfo = bad;
    cfg.validate();
  } catch (ConfigError const &) {
    rejected = true;
  }
  return {ok == 100 && rejected, fmt("%d/100 trials monotone; alpha 2.3 %s", ok, rejected ? "rejected" : "ACCEPTED")};
}

Outcome c5_vjp()
{
  GridSpec const g = oblique(4);
  Index const n = g.size();
  DipoleKernel const k(g);
  Mask const mask(oracle::random_mask(g, 51, 0.7));
  Volume const phi = oracle::random_volume(g, 52);
  auto const a = oracle::dense_A(g);
  // L = I - 2 alpha A M A
  double const alpha = 1.2;
  std::vector<double> am(a);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) { am[size_t(i * n + j)] *= mask.volume()[j]; }
  std::vector<double> l = oracle::matmul(am, a, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) { l[size_t(i * n + j)] = (i == j ? 1.0 : 0.0) - 2 * alpha * l[size_t(i * n + j)]; }

  double dense_err = 0, fd_err = 0;
  for (int steps : {1, 2, 5}) {
    DfoConfig cfg;
    cfg.alpha = alpha;
    cfg.n_steps = steps;
    std::vector<double> jac(size_t(n * n), 0);
    for (Index i = 0; i < n; ++i) { jac[size_t(i * n + i)] = 1; }
    for (int s = 0; s < steps; ++s) { jac = oracle::matmul(l, jac, n); }
    Volume const gvec = oracle::random_volume(g, 60 + steps);
    std::vector<double> ref(size_t(n), 0);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) { ref[size_t(j)] += jac[size_t(i * n + j)] * gvec[i]; }
    auto const got = to_vec(dfo_vjp(gvec, k, mask, cfg));
    double scale = 0;
    for (double r : ref) { scale = std::max(scale, std::abs(r)); }
    dense_err = std::max(dense_err, oracle::max_rel_err(got, ref, 1e-8 * scale));

    Volume const chi = oracle::random_volume(g, 70 + steps);
    auto const fd = oracle::fd_gradient(
      [&](std::vector<double> const &x) { return oracle::dot(gvec, dfo_run(from_vec(g, x), phi, k, mask, cfg)); },
      to_vec(chi), 1e-3);
    fd_err = std::max(fd_err, oracle::max_rel_err(got, fd, 1e-8 * scale));
  }
  return {dense_err <= 1e-10 && fd_err <= 1e-5,
          fmt("dense transpose %.2e (tol 1e-10), finite differences %.2e (tol 1e-5), n in {1,2,5}", dense_err,
              fd_err)};
}

/* Central differences step through ReLU and max-pool switches. Each entry takes the first
 * step h whose quotients at h and 2h agree; an entry with no such step is reported.
 */
Outcome c6_network()
{
  auto const t0 = Clock::now();
  GridSpec const g = oblique(8);
  NetworkConfig net;
  net.depth = 1;
  net.base_channels = 2;
  net.seed = 11;
  net.zero_init_output = false; // a zero projection would zero every upstream gradient
  ParameterSet params = init_params(net);
  Rng rng(12);
  for (auto &t : params.tensors) {
    if (t.shape.size() == 5) { continue; }
    for (auto &x : t.values) { x += Real(0.3 * rng.normal()); }
  }
  Volume const input = oracle::random_volume(g, 13);
  Volume const gout = oracle::random_volume(g, 14);
  ParamGrads const grads = backward(gout, forward(input, params, net).cache, params, net);

  std::vector<double> theta, analytic;
  for (auto const &t : params.tensors) { theta.insert(theta.end(), t.values.begin(), t.values.end()); }
  for (auto const &t : grads.tensors) { analytic.insert(analytic.end(), t.values.begin(), t.values.end()); }
  auto f = [&](std::vector<double> const &x) {
    ParameterSet p = params;
    size_t c = 0;
    for (auto &t : p.tensors)
      for (auto &v : t.values) { v = Real(x[c++]); }
    return oracle::dot(gout, forward(input, p, net).chi0);
  };
  double scale = 0;
  for (double a : analytic) { scale = std::max(scale, std::abs(a)); }
  double const floor = 1e-4 * std::max(1.0, scale);

  double worst = 0;
  size_t unresolved = 0;
  std::vector<double> x = theta;
  auto quotient = [&](size_t i, double h) {
    x[i] = theta[i] + h;
    double const fp = f(x);
    x[i] = theta[i] - h;
    double const fm = f(x);
    x[i] = theta[i];
    return (fp - fm) / (2 * h);
  };
  for (size_t i = 0; i < theta.size(); ++i) {
    bool resolved = false;
    for (double h : {1e-6, 1e-7, 1e-5, 1e-8}) {
      double const q = quotient(i, h), q2 = quotient(i, 2 * h);
      if (std::abs(q - q2) > 1e-6 * std::max(std::abs(q), floor)) { continue; }
      worst = std::max(worst, std::abs(analytic[i] - q) / std::max({std::abs(analytic[i]), std::abs(q), floor}));
      resolved = true;
      break;
    }
    unresolved += !resolved;
  }
  double const t = seconds_since(t0);
  return {worst <= 1e-4 && unresolved == 0 && t < 120,
          fmt("%zu parameters, max rel error %.2e (tol 1e-4), %zu without a kink-free step, %.1f s (limit 120 s)",
              theta.size(), worst, unresolved, t)};
}

Outcome c7_params()
{
  NetworkConfig d1, d4;
  d4.depth = 4;
  Index const n1 = count_params(d1), n4 = count_params(d4);
  Index const m1 = init_params(d1).total_size(), m4 = init_params(d4).total_size();
  double const reduction = 1 - double(n1) / double(n4);
  return {n1 == m1 && n4 == m4 && reduction >= 0.95,
          fmt("depth 1: %td, depth 4: %td (materialized %td, %td), reduction %.2f%% (need >= 95%%)", n1, n4, m1, m4,
              100 * reduction)};
}

struct Problem
{
  Volume truth, phi;
};

Problem cuboid_problem(Index m, std::uint64_t seed)
{
  CuboidSpec cs;
  cs.count = 100;
  cs.grid = oblique(m);
  cs.side_range = {1, m};
  cs.seed = seed;
  Volume chi = cuboid_phantom(cs);
  Volume const clean = simulate_field(chi, 0, 0);
  double const sd = masked_std(clean, Mask::all_ones(chi.grid()));
  return {chi, simulate_field(chi, 0.05 * sd, seed + 1000)};
}

ReconResult run(Volume const &phi, ReconMode mode, int iters, std::uint64_t seed, std::string const &tag)
{
  ReconConfig cfg;
  cfg.mode = mode;
  cfg.max_iters = iters;
  cfg.seed = seed;
  cfg.snapshot_iters = {};
  ReconOptions opts;
  opts.on_iteration = [&](IterationRecord const &r) {
    if (r.iter % 25 == 0) { progress(fmt("%s iter %d loss %.4e (%.0f ms)", tag.c_str(), r.iter, r.loss.total, r.wall_ms)); }
  };
  return reconstruct(phi, Mask::all_ones(phi.grid()), cfg, opts);
}

Outcome c8_convergence()
{
  auto const t0 = Clock::now();
  bool loss_ok = true, nrmse_ok = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    Problem const p = cuboid_problem(64, seed);
    Mask const fov = Mask::all_ones(p.truth.grid());
    std::string const s = std::to_string(seed);
    ReconResult const mo = run(p.phi, ReconMode::Modip, 200, seed, "seed " + s + " modip");
    ReconResult const dip = run(p.phi, ReconMode::Dip, 50, seed, "seed " + s + " dip");
    ReconResult const dfo = run(p.phi, ReconMode::Dfo, 200, seed, "seed " + s + " dfo");
    double const lm = mo.state.history.at(49).loss.total, ld = dip.state.history.at(49).loss.total;
    double const em = nrmse(mo.chi, p.truth, fov), ed = nrmse(dfo.chi, p.truth, fov);
    loss_ok = loss_ok && lm < ld;
    nrmse_ok = nrmse_ok && em < ed;
    detail += fmt("seed %d: loss@50 modip %.3e vs dip %.3e, NRMSE@200 modip %.4f vs dfo %.4f; ", int(seed), lm, ld, em,
                  ed);
  }
  double const t = seconds_since(t0);
  bool const property = loss_ok && nrmse_ok;
  bool const fast = t < 1800;
  detail += fmt("%.0f s on %d thread(s) (limit 1800 s)", t, num_threads());
  return {property && fast, detail, property && !fast};
}

bool same_history(std::vector<IterationRecord> const &a, std::vector<IterationRecord> const &b)
{
  if (a.size() != b.size()) { return false; }
  for (size_t i = 0; i < a.size(); ++i) {
    auto const &x = a[i], &y = b[i];
    if (x.loss.total != y.loss.total || x.loss.fidelity_mae != y.loss.fidelity_mae ||
        x.loss.laplacian_mae != y.loss.laplacian_mae || x.fidelity_l2_chi0 != y.fidelity_l2_chi0 ||
        x.fidelity_l2_chin != y.fidelity_l2_chin || x.lr != y.lr) {
      return false;
    }
  }
  return true;
}

bool same_values(Volume const &a, Volume const &b)
{
  return std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

Outcome c9_mode_equivalence()
{
  set_num_threads(1);
  Problem const p = cuboid_problem(16, 9);
  Mask const fov = Mask::all_ones(p.phi.grid());
  ReconConfig dip;
  dip.mode = ReconMode::Dip;
  dip.max_iters = 20;
  dip.seed = 9;
  dip.snapshot_iters = {};
  ReconConfig zero = dip;
  zero.mode = ReconMode::Modip;
  zero.dfo.n_steps = 0;
  ReconResult const a = reconstruct(p.phi, fov, dip);
  ReconResult const b = reconstruct(p.phi, fov, zero);
  bool const hist = same_history(a.state.history, b.state.history);
  bool const vol = same_values(a.chi, b.chi) && same_values(a.state.chi0, b.state.chi0);
  return {hist && vol && a.state.iterations == 20,
          fmt("20 iterations, loss history %s, chi %s", hist ? "identical" : "DIFFERS", vol ? "identical" : "DIFFERS")};
}

Outcome c10_determinism()
{
  Problem const p = cuboid_problem(16, 10);
  Mask const fov = Mask::all_ones(p.phi.grid());
  bool bitwise = true;
  double worst = 0;
  for (ReconMode mode : {ReconMode::Modip, ReconMode::Dfo}) {
    ReconConfig cfg;
    cfg.mode = mode;
    cfg.max_iters = 20;
    cfg.seed = 10;
    cfg.snapshot_iters = {};
    cfg.network.depth = 2;
    set_num_threads(1);
    ReconResult const first = reconstruct(p.phi, fov, cfg);
    Json const manifest = run_manifest(cfg.effective(), p.phi.grid(), RunEnvironment{"recon", 1, {}, {}});
    ReconConfig const again = recon_config_from_json(Json::parse(manifest.dump()).at("config"));
    ReconResult const rerun = reconstruct(p.phi, fov, again);
    bitwise = bitwise && same_history(first.state.history, rerun.state.history) && same_values(first.chi, rerun.chi);
    set_num_threads(4);
    ReconResult const threaded = reconstruct(p.phi, fov, again);
    set_num_threads(1);
    double const e1 = nrmse(first.chi, p.truth, fov), e4 = nrmse(threaded.chi, p.truth, fov);
    worst = std::max(worst, std::abs(e4 - e1) / e1);
  }
  return {bitwise && worst <= 1e-6, fmt("manifest rerun %s at 1 thread; NRMSE relative change at 4 threads %.2e "
                                        "(tol 1e-6); modip and dfo modes",
                                        bitwise ? "bitwise identical" : "DIFFERS", worst)};
}

double mean_iteration_ms(int depth)
{
  Problem const p = cuboid_problem(64, 11);
  ReconConfig cfg;
  cfg.max_iters = 3;
  cfg.seed = 11;
  cfg.snapshot_iters = {};
  cfg.network.depth = depth;
  ReconResult const r = reconstruct(p.phi, Mask::all_ones(p.phi.grid()), cfg);
  // The first iteration also pays for plan and buffer setup.
  double s = 0;
  for (size_t i = 1; i < r.state.history.size(); ++i) { s += r.state.history[i].wall_ms; }
  return s / double(r.state.history.size() - 1);
}

Outcome c11_relative_cost()
{
  double const t1 = mean_iteration_ms(1);
  progress(fmt("depth 1: %.0f ms per iteration", t1));
  double const t4 = mean_iteration_ms(4);
  double const ratio = t4 / t1;
  std::printf("     declared not reproducible here: absolute lesion-study NRMSE values, in-vivo results, "
              "GPU memory and wall time\n");
  return {ratio >= 2,
          fmt("64^3 per-iteration wall time depth 1 %.0f ms, depth 4 %.0f ms, ratio %.2f (need >= 2)", t1, t4,
              ratio),
          ratio < 2};
}

struct Criterion
{
  int id;
  char const *name;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv)
{
  std::vector<Criterion> const all{
    {1, "dipole kernel exactness", c1_kernel},
    {2, "operator self-adjointness", c2_adjoint},
    {3, "FFT against direct DFT", c3_fft},
    {4, "DFO monotonicity and stability", c4_dfo_monotone},
    {5, "DFO vector-Jacobian product", c5_vjp},
    {6, "network gradient check", c6_network},
    {7, "parameter-count reduction", c7_params},
    {8, "convergence speed", c8_convergence},
    {9, "dip equals modip with zero DFO steps", c9_mode_equivalence},
    {10, "determinism", c10_determinism},
    {11, "relative cost of depth 4", c11_relative_cost},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) { only.insert(std::atoi(argv[i])); }

  std::printf("modip acceptance (%s arithmetic)\n", kPrecisionName);
  std::fflush(stdout);
  int hard = 0, known = 0;
  for (auto const &c : all) {
    if (!only.empty() && !only.count(c.id)) { continue; }
    set_num_threads(1);
    Outcome o;
    try {
      o = c.run();
    } catch (std::exception const &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    char const *tag = o.pass ? "PASS" : o.known ? "FAIL (known)" : "FAIL";
    std::printf("[%s] %2d %s: %s\n", tag, c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) { ++(o.known ? known : hard); }
  }
  std::printf("%d hard failure(s), %d known failure(s)\n", hard, known);
  return hard > 0 ? 1 : known > 0 ? 77 : 0;
}
