#include "gradcheck.hpp"

#include <modip/dfo.hpp>
#include <modip/loss.hpp>
#include <modip/rng.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace modip::cli {

namespace {

using Vec = std::vector<double>;
using Objective = std::function<double(Vec const &)>;

Vec central_differences(Objective const &f, Vec x, double h)
{
  Vec g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double const x0 = x[i];
    x[i] = x0 + h;
    double const fp = f(x);
    x[i] = x0 - h;
    double const fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

/* Compares entries whose difference quotients at h and 2h agree; a disagreement means a
 * ReLU, max-pool or |.| kink sits inside the stencil.
 */
SuiteResult compare(std::string name, Vec const &analytic, Objective const &f, Vec const &x, double h,
                    double threshold, bool kinked)
{
  SuiteResult r{std::move(name), 0, threshold, 0, Index(x.size()), false};
  Vec const fd = central_differences(f, x, h);
  Vec const fd2 = kinked ? central_differences(f, x, 2 * h) : fd;
  double scale = 0;
  for (double a : analytic) { scale = std::max(scale, std::abs(a)); }
  double const floor = 1e-4 * std::max(1.0, scale);
  for (size_t i = 0; i < x.size(); ++i) {
    if (std::abs(fd[i] - fd2[i]) > 1e-6 * std::max(std::abs(fd[i]), floor)) { continue; }
    double const den = std::max({std::abs(analytic[i]), std::abs(fd[i]), floor});
    r.max_rel_err = std::max(r.max_rel_err, std::abs(analytic[i] - fd[i]) / den);
    ++r.checked;
  }
  r.pass = r.max_rel_err <= threshold && double(r.checked) >= 0.95 * double(r.total);
  return r;
}

Volume random_volume(GridSpec const &g, Rng &rng, double sd = 1)
{
  Volume v(g);
  for (auto &x : v.values()) { x = Real(sd * rng.normal()); }
  return v;
}

Vec to_vec(Volume const &v) { return {v.values().begin(), v.values().end()}; }

Volume from_vec(GridSpec const &g, Vec const &x) { return Volume(g, std::vector<Real>(x.begin(), x.end())); }

Vec flatten(ParameterSet const &p)
{
  Vec v;
  for (auto const &t : p.tensors) { v.insert(v.end(), t.values.begin(), t.values.end()); }
  return v;
}

ParameterSet unflatten(ParameterSet p, Vec const &v)
{
  size_t k = 0;
  for (auto &t : p.tensors) {
    for (auto &x : t.values) { x = Real(v[k++]); }
  }
  return p;
}

} // namespace

std::vector<SuiteResult> run_gradchecks(GradcheckOptions const &opt)
{
  if (opt.size < 2) { throw ConfigError("gradcheck --size must be >= 2"); }
  Index const m = opt.size;
  GridSpec const g({m, m, m}, {1, 1, 1.5}, {0.3, 0.2, 0.93});
  DipoleKernel const k(g);
  Rng rng(opt.seed);

  Volume mv(g);
  for (auto &x : mv.values()) { x = rng.uniform() < 0.8 ? 1 : 0; }
  mv[0] = 1;
  Mask const mask(mv);
  Volume const chi = random_volume(g, rng);
  Volume const phi = random_volume(g, rng);

  std::vector<SuiteResult> out;

  out.push_back(compare(
    "fidelity", to_vec(fidelity_gradient(chi, phi, k, mask)),
    [&](Vec const &x) { return fidelity_value(from_vec(g, x), phi, k, mask); }, to_vec(chi), 1e-3, 1e-6, false));

  out.push_back(compare(
    "outer_loss", to_vec(outer_loss_grad(chi, phi, k, mask)),
    [&](Vec const &x) { return outer_loss(from_vec(g, x), phi, k, mask).total; }, to_vec(chi), 1e-4, 1e-5, true));

  DfoConfig const dfo;
  Volume const v = random_volume(g, rng);
  out.push_back(compare(
    "dfo_vjp", to_vec(dfo_vjp(v, k, mask, dfo)),
    [&](Vec const &x) { return dot(v, dfo_run(from_vec(g, x), phi, k, mask, dfo)); }, to_vec(chi), 1e-3, 1e-5,
    false));

  NetworkConfig net;
  net.depth = opt.depth;
  net.base_channels = opt.base_channels;
  net.norm_enabled = opt.norm_enabled;
  net.seed = opt.seed;
  net.zero_init_output = false;
  net.validate();
  net.check_input(g.matrix());
  // Perturb biases and affine terms so no path starts exactly flat.
  ParameterSet params = init_params(net);
  for (auto &t : params.tensors) {
    if (t.shape.size() == 5) { continue; }
    for (auto &x : t.values) { x += Real(0.3 * rng.normal()); }
  }
  Volume const input = random_volume(g, rng);
  Volume const gout = random_volume(g, rng);
  ParamGrads const grads = backward(gout, forward(input, params, net).cache, params, net);
  out.push_back(compare(
    "network", flatten(grads),
    [&](Vec const &x) { return dot(gout, forward(input, unflatten(params, x), net).chi0); }, flatten(params), 1e-6,
    1e-4, true));

  return out;
}

} // namespace modip::cli
