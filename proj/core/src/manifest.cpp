#include "modip/manifest.hpp"
#include "modip/rng.hpp"

#include <fstream>
#include <set>

namespace modip {

Json to_json(GridSpec const &g)
{
  return {{"matrix", g.matrix()}, {"voxel_mm", g.voxel_mm()}, {"b0_dir", g.b0_dir()}, {"b0_input", g.b0_input()}};
}

GridSpec grid_from_json(Json const &j)
{
  return GridSpec(j.at("matrix").get<Dims3>(), j.at("voxel_mm").get<Vec3>(),
                  j.contains("b0_input") ? j.at("b0_input").get<Vec3>() : j.at("b0_dir").get<Vec3>());
}

Json to_json(ReconConfig const &c)
{
  return {
    {"mode", to_string(c.mode)},
    {"input_kind", to_string(c.input_kind)},
    {"max_iters", c.max_iters},
    {"stop_rel_tol", c.stop_rel_tol ? Json(*c.stop_rel_tol) : Json(nullptr)},
    {"snapshot_iters", c.snapshot_iters},
    {"seed", c.seed},
    {"stop_grad_dfo", c.stop_grad_dfo},
    {"network",
     {{"depth", c.network.depth},
      {"base_channels", c.network.base_channels},
      {"norm_enabled", c.network.norm_enabled},
      {"zero_init_output", c.network.zero_init_output}}},
    {"dfo", {{"alpha", c.dfo.alpha}, {"n_steps", c.dfo.n_steps}}},
    {"adam",
     {{"base_lr", c.adam.base_lr},
      {"decay", c.adam.decay},
      {"decay_every", c.adam.decay_every},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"eps", c.adam.eps}}},
  };
}

namespace {

void check_keys(Json const &j, std::set<std::string> const &allowed, char const *where)
{
  if (!j.is_object()) { throw ConfigError(std::string(where) + " must be an object"); }
  for (auto const &[k, v] : j.items()) {
    if (!allowed.contains(k)) { throw ConfigError(std::string("unknown key '") + k + "' in " + where); }
  }
}

} // namespace

ReconConfig recon_config_from_json(Json const &j)
{
  check_keys(j, {"mode", "input_kind", "max_iters", "stop_rel_tol", "snapshot_iters", "seed", "stop_grad_dfo",
                 "network", "dfo", "adam"},
             "recon config");
  ReconConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.input_kind = parse_input_kind(j.at("input_kind").get<std::string>());
  c.max_iters = j.at("max_iters").get<int>();
  if (!j.at("stop_rel_tol").is_null()) { c.stop_rel_tol = j.at("stop_rel_tol").get<double>(); }
  c.snapshot_iters = j.at("snapshot_iters").get<std::vector<int>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.stop_grad_dfo = j.at("stop_grad_dfo").get<bool>();
  auto const &n = j.at("network");
  check_keys(n, {"depth", "base_channels", "norm_enabled", "zero_init_output"}, "network");
  c.network.depth = n.at("depth").get<int>();
  c.network.base_channels = n.at("base_channels").get<int>();
  c.network.norm_enabled = n.at("norm_enabled").get<bool>();
  c.network.zero_init_output = n.at("zero_init_output").get<bool>();
  auto const &d = j.at("dfo");
  check_keys(d, {"alpha", "n_steps"}, "dfo");
  c.dfo.alpha = d.at("alpha").get<double>();
  c.dfo.n_steps = d.at("n_steps").get<int>();
  auto const &a = j.at("adam");
  check_keys(a, {"base_lr", "decay", "decay_every", "beta1", "beta2", "eps"}, "adam");
  c.adam.base_lr = a.at("base_lr").get<double>();
  c.adam.decay = a.at("decay").get<double>();
  c.adam.decay_every = a.at("decay_every").get<int>();
  c.adam.beta1 = a.at("beta1").get<double>();
  c.adam.beta2 = a.at("beta2").get<double>();
  c.adam.eps = a.at("eps").get<double>();
  c.network.seed = c.seed;
  return c;
}

Json base_manifest(std::string const &command, int threads)
{
  return {
    {"software", {{"name", "modip"}, {"version", MODIP_VERSION}}},
    {"command", command},
    {"precision", kPrecisionName},
    {"prng", Rng::kName},
    {"threads", threads},
  };
}

Json run_manifest(ReconConfig const &cfg, GridSpec const &grid, RunEnvironment const &env)
{
  ReconConfig const eff = cfg.effective();
  Json m = base_manifest(env.command, env.threads);
  m["config"] = to_json(eff);
  m["grid"] = to_json(grid);
  m["inputs"] = env.inputs;
  m["outputs"] = env.outputs;
  m["conventions"] = {
    {"dft_order", "unshifted; forward unscaled, inverse 1/N"},
    {"dipole_dc", 0},
    {"chi_mean", "network output projected to zero mean over the FOV"},
    {"boundary", "periodic (circular convolution)"},
    {"mask", env.inputs.contains("mask") ? "file" : "all-ones"},
    {"loss", "mean |M(A chi - phi)| + mean |M(lap A chi - lap phi)| over mask voxels"},
    {"laplacian", "7-point, 1/v^2 per axis, zero padding"},
    {"dfo_backward", eff.stop_grad_dfo ? "identity (stop-grad diagnostic)" : "exact (I - 2 alpha A M A)^n"},
    {"network",
     {{"normalization", eff.network.norm_enabled ? "instance, eps 1e-5, affine" : "none"},
      {"init", std::string("He normal std sqrt(2/fan_in), zero bias, unit scale, zero shift") +
                 (eff.network.zero_init_output ? "; output projection zero" : "")},
      {"downsample", "max pool 2^3"},
      {"upsample", "nearest x2 then 3^3 conv"}}},
    {"nrmse", "||R(pred - truth)||_2 / ||R truth||_2"},
    {"output", "chi_n of the final iteration"},
  };
  return m;
}

void write_json(std::string const &path, Json const &j)
{
  std::ofstream f(path);
  if (!f) { throw IoError("cannot write " + path); }
  f << j.dump(2) << "\n";
  if (!f) { throw IoError("failed writing " + path); }
}

Json read_json(std::string const &path)
{
  std::ifstream f(path);
  if (!f) { throw IoError("cannot open " + path); }
  try {
    return Json::parse(f);
  } catch (Json::exception const &e) {
    throw IoError(path + ": " + e.what());
  }
}

} // namespace modip
