#include "commands.hpp"
#include "gradcheck.hpp"

#include <modip/manifest.hpp>
#include <modip/metrics.hpp>
#include <modip/parallel.hpp>
#include <modip/phantom.hpp>
#include <modip/volume_io.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

namespace modip::cli {

namespace fs = std::filesystem;

namespace {

Vec3 vec3(std::vector<double> const &v, char const *flag)
{
  if (v.size() != 3) { throw ConfigError(std::string(flag) + " needs three comma-separated values"); }
  return {v[0], v[1], v[2]};
}

Dims3 dims3(std::vector<Index> const &v, char const *flag)
{
  if (v.size() != 3) { throw ConfigError(std::string(flag) + " needs three comma-separated values"); }
  return {v[0], v[1], v[2]};
}

template <class T> std::array<T, 2> pair2(std::vector<T> const &v, char const *flag)
{
  if (v.size() != 2) { throw ConfigError(std::string(flag) + " needs two comma-separated values"); }
  return {v[0], v[1]};
}

CLI::Option *add_triple(CLI::App *s, std::string const &name, auto &v, std::string const &desc)
{
  return s->add_option(name, v, desc)->delimiter(',')->expected(3)->capture_default_str();
}

CLI::Option *add_threads(CLI::App *s, int &threads)
{
  return s->add_option("--threads", threads, "Worker threads for numeric kernels")
    ->check(CLI::PositiveNumber)
    ->capture_default_str();
}

CLI::Option *add_element(CLI::App *s, std::string &element)
{
  return s->add_option("--element", element, "Payload element type of written volumes")
    ->check(CLI::IsMember({"f32", "f64"}))
    ->capture_default_str();
}

std::string absolute(std::string const &p) { return fs::absolute(p).lexically_normal().string(); }

// k.qvol -> k.manifest.json
fs::path sidecar(fs::path const &out)
{
  fs::path p = out;
  p.replace_extension(".manifest.json");
  return p;
}

Json header(std::string const &command, int threads, std::vector<std::string> const &argv)
{
  Json m = base_manifest(command, threads);
  m["argv"] = argv;
  return m;
}

void ensure_parent(fs::path const &p)
{
  if (p.has_parent_path()) { fs::create_directories(p.parent_path()); }
}

Mask load_mask(std::string const &path, GridSpec const &grid)
{
  if (path.empty()) { return Mask::all_ones(grid); }
  Mask m(read_volume(path).volume);
  require_same_geometry(m.grid(), grid, "mask");
  return m;
}

// ---------------------------------------------------------------------------------------

void add_phantom_cuboids(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::vector<Index> grid{128, 128, 128};
    std::vector<double> voxel{1, 1, 1}, b0{0, 0, 1};
    Index count = 800;
    std::vector<Index> sides{1, 64};
    std::vector<double> chi{-0.02, 0.02};
    std::uint64_t seed = 0;
    std::string out, element = to_string(native_element());
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("phantom-cuboids", "Random overlapping cuboids of uniform susceptibility");
  add_triple(s, "--grid", o->grid, "Matrix size in voxels");
  add_triple(s, "--voxel", o->voxel, "Voxel size in mm");
  add_triple(s, "--b0", o->b0, "B0 direction in image axes (normalized)");
  s->add_option("--count", o->count, "Number of cuboids")->capture_default_str();
  s->add_option("--sides", o->sides, "Side length range in voxels, inclusive")
    ->delimiter(',')
    ->expected(2)
    ->capture_default_str();
  s->add_option("--chi-range", o->chi, "Susceptibility range in ppm")->delimiter(',')->expected(2)->capture_default_str();
  s->add_option("--seed", o->seed, "Generator seed")->capture_default_str();
  s->add_option("-o,--out", o->out, "Output volume")->required();
  add_element(s, o->element);
  add_threads(s, o->threads);
  s->callback([&action, o, &argv] {
    action = [o, &argv] {
      set_num_threads(o->threads);
      CuboidSpec spec;
      spec.grid = GridSpec(dims3(o->grid, "--grid"), vec3(o->voxel, "--voxel"), vec3(o->b0, "--b0"));
      spec.count = o->count;
      spec.side_range = pair2(o->sides, "--sides");
      spec.chi_range = pair2(o->chi, "--chi-range");
      spec.seed = o->seed;
      spec.validate();
      Volume const chi = cuboid_phantom(spec);
      ensure_parent(o->out);
      auto const raw = write_volume(o->out, chi, parse_element_type(o->element));

      Json m = header("phantom-cuboids", o->threads, argv);
      m["grid"] = to_json(spec.grid);
      m["params"] = {{"count", spec.count},
                     {"side_range", spec.side_range},
                     {"chi_range_ppm", spec.chi_range},
                     {"seed", spec.seed},
                     {"overlap", "later cuboids overwrite earlier voxels"}};
      m["outputs"] = {{"chi", absolute(o->out)}, {"payload", absolute(raw.string())}};
      write_json(sidecar(o->out), m);
      auto const [mn, mx] = std::minmax_element(chi.values().begin(), chi.values().end());
      std::printf("wrote %s (%s, range [%g, %g] ppm)\n", o->out.c_str(), to_string(spec.grid).c_str(), *mn, *mx);
      return 0;
    };
  });
}

void add_phantom_lesion(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::string chi, out, region_out, element = to_string(native_element());
    std::vector<double> center;
    double radius = 2, mean = 0.8, std = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("phantom-lesion", "Add a spherical Gaussian-valued lesion to a susceptibility map");
  s->add_option("--chi", o->chi, "Input susceptibility volume")->required()->check(CLI::ExistingFile);
  s->add_option("--center", o->center, "Lesion centre in voxel coordinates")->delimiter(',')->expected(3)->required();
  s->add_option("--radius", o->radius, "Radius in mm")->capture_default_str();
  s->add_option("--mean", o->mean, "Mean susceptibility in ppm")->capture_default_str();
  s->add_option("--std", o->std, "Standard deviation in ppm")->capture_default_str();
  s->add_option("--seed", o->seed, "Generator seed")->capture_default_str();
  s->add_option("-o,--out", o->out, "Output volume")->required();
  s->add_option("--region-out", o->region_out, "Also write the lesion mask here");
  add_element(s, o->element);
  add_threads(s, o->threads);
  s->callback([&action, o, &argv] {
    action = [o, &argv] {
      set_num_threads(o->threads);
      Volume const chi = read_volume(o->chi).volume;
      LesionSpec spec;
      spec.center = vec3(o->center, "--center");
      spec.radius_mm = o->radius;
      spec.mean_ppm = o->mean;
      spec.std_ppm = o->std;
      spec.seed = o->seed;
      spec.validate();
      Mask const region = lesion_region(chi.grid(), spec);
      Volume const out = add_lesion(chi, spec);
      ensure_parent(o->out);
      auto const el = parse_element_type(o->element);
      write_volume(o->out, out, el);

      Json m = header("phantom-lesion", o->threads, argv);
      m["grid"] = to_json(chi.grid());
      m["params"] = {{"center_voxel", spec.center},
                     {"radius_mm", spec.radius_mm},
                     {"mean_ppm", spec.mean_ppm},
                     {"std_ppm", spec.std_ppm},
                     {"seed", spec.seed},
                     {"voxels", region.count()}};
      m["inputs"] = {{"chi", absolute(o->chi)}};
      m["outputs"] = {{"chi", absolute(o->out)}};
      if (!o->region_out.empty()) {
        ensure_parent(o->region_out);
        write_volume(o->region_out, region.volume(), el, "mask");
        m["outputs"]["region"] = absolute(o->region_out);
      }
      write_json(sidecar(o->out), m);
      std::printf("lesion: %ld voxels, radius %g mm\n", long(region.count()), spec.radius_mm);
      return 0;
    };
  });
}

void add_simulate(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::string chi, mask, out, element = to_string(native_element());
    double noise_std = 0, noise_rel = 0.05;
    std::vector<double> voxel, b0;
    std::uint64_t seed = 0;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("simulate", "Local field from susceptibility: A chi plus Gaussian noise");
  s->add_option("--chi", o->chi, "Susceptibility volume")->required()->check(CLI::ExistingFile);
  s->add_option("--mask", o->mask, "Mask used for the relative noise level (default: all voxels)")
    ->check(CLI::ExistingFile);
  auto *abs = s->add_option("--noise-std", o->noise_std, "Noise standard deviation in ppm");
  s->add_option("--noise-rel", o->noise_rel, "Noise std as a fraction of the masked noiseless field std")
    ->capture_default_str()
    ->excludes(abs);
  s->add_option("--voxel", o->voxel, "Override the voxel size (mm)")->delimiter(',')->expected(3);
  s->add_option("--b0", o->b0, "Override the B0 direction, e.g. 0.5,0.5,0.71")->delimiter(',')->expected(3);
  s->add_option("--seed", o->seed, "Noise seed")->capture_default_str();
  s->add_option("-o,--out", o->out, "Output field volume")->required();
  add_element(s, o->element);
  add_threads(s, o->threads);
  s->callback([&action, o, abs, &argv] {
    bool const absolute_noise = abs->count() > 0;
    action = [o, absolute_noise, &argv] {
      set_num_threads(o->threads);
      Volume chi = read_volume(o->chi).volume;
      GridSpec const &g0 = chi.grid();
      GridSpec const g(g0.matrix(), o->voxel.empty() ? g0.voxel_mm() : vec3(o->voxel, "--voxel"),
                       o->b0.empty() ? g0.b0_input() : vec3(o->b0, "--b0"));
      if (!(g == g0)) { chi = Volume(g, std::vector<Real>(chi.values().begin(), chi.values().end())); }
      Mask const mask = load_mask(o->mask, g);
      Volume const clean = apply_A(chi, build_kernel(g));
      double const field_std = masked_std(clean, mask);
      if (!absolute_noise && !(o->noise_rel >= 0)) { throw ConfigError("--noise-rel must be >= 0"); }
      double const noise = absolute_noise ? o->noise_std : o->noise_rel * field_std;
      Volume const phi = simulate_field(chi, noise, o->seed);
      ensure_parent(o->out);
      write_volume(o->out, phi, parse_element_type(o->element));

      Json m = header("simulate", o->threads, argv);
      m["grid"] = to_json(g);
      m["params"] = {{"noise_std_ppm", noise},
                     {"noise_rel", absolute_noise ? Json(nullptr) : Json(o->noise_rel)},
                     {"field_std_ppm", field_std},
                     {"seed", o->seed},
                     {"model", "phi = A chi + N(0, noise_std^2), periodic boundary"}};
      m["inputs"] = {{"chi", absolute(o->chi)}};
      if (!o->mask.empty()) { m["inputs"]["mask"] = absolute(o->mask); }
      m["outputs"] = {{"field", absolute(o->out)}};
      write_json(sidecar(o->out), m);
      std::printf("field std %.6g ppm, noise std %.6g ppm\n", field_std, noise);
      return 0;
    };
  });
}

void add_recon(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::string method = "modip", field, mask, input = "field", out, manifest, init_params;
    std::string element = to_string(native_element()), stop_tol;
    int iters = 200, dfo_steps = 10, depth = 1, base = 32;
    double alpha = 1.2, lr = 5e-4;
    std::uint64_t seed = 7;
    std::vector<int> snapshots{10, 20, 50, 100, 200};
    bool no_snapshots = false, stop_grad = false, no_norm = false, he_out = false, save_params = false;
    bool quiet = false;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("recon", "Reconstruct susceptibility from a local field");
  auto *man = s->add_option("--manifest", o->manifest, "Re-run the configuration recorded in a recon manifest")
                ->check(CLI::ExistingFile);
  s->add_option("--field", o->field, "Local field volume (ppm)")->check(CLI::ExistingFile);
  s->add_option("--mask", o->mask, "Binary mask (default: all voxels)")->check(CLI::ExistingFile);
  s->add_option("-o,--out", o->out, "Output directory")->required();

  std::vector<CLI::Option *> config;
  config.push_back(s->add_option("--method", o->method, "modip | dip (no DFO) | dfo (no network)")
                     ->check(CLI::IsMember({"modip", "dip", "dfo"}))
                     ->capture_default_str());
  config.push_back(s->add_option("--iters", o->iters, "Outer iterations")->capture_default_str());
  auto *steps = s->add_option("--dfo-steps", o->dfo_steps, "Unrolled DFO steps per iteration")->capture_default_str();
  config.push_back(steps);
  config.push_back(s->add_option("--alpha", o->alpha, "DFO step size, 0 < alpha < 2.25")->capture_default_str());
  config.push_back(s->add_option("--lr", o->lr, "Adam base learning rate (x0.8 every 50 steps)")->capture_default_str());
  config.push_back(s->add_option("--depth", o->depth, "U-net pooling depth")->capture_default_str());
  config.push_back(s->add_option("--base-channels", o->base, "Channels of the first level")->capture_default_str());
  config.push_back(s->add_option("--input", o->input, "Network input: field | noise")
                     ->check(CLI::IsMember({"field", "noise"}))
                     ->capture_default_str());
  config.push_back(s->add_option("--seed", o->seed, "Weight and noise-input seed")->capture_default_str());
  config.push_back(
    s->add_option("--stop-rel-tol", o->stop_tol,
                  "Stop when the relative change of the total loss falls below this (off by default; 1e-5 when "
                  "given without a value)")
      ->expected(0, 1));
  config.push_back(
    s->add_option("--snapshots", o->snapshots, "Iterations whose chi0/chin are saved")->delimiter(',')->capture_default_str());
  config.push_back(s->add_flag("--no-snapshots", o->no_snapshots, "Save no snapshots"));
  config.push_back(s->add_flag("--stop-grad-dfo", o->stop_grad, "Treat DFO as identity in the backward pass"));
  config.push_back(s->add_flag("--no-norm", o->no_norm, "Disable instance normalization"));
  config.push_back(s->add_flag("--he-output-init", o->he_out, "He-initialise the output projection instead of zero"));
  for (auto *c : config) { c->excludes(man); }

  s->add_option("--init-params", o->init_params, "Start from saved network parameters")->check(CLI::ExistingFile);
  s->add_flag("--save-params", o->save_params, "Write the final network parameters to <out>/params.bin");
  s->add_flag("-q,--quiet", o->quiet, "No progress output");
  auto *threads = add_threads(s, o->threads);
  add_element(s, o->element);

  s->callback([&action, o, steps, threads, s, &argv] {
    bool const steps_given = steps->count() > 0;
    bool const stop_given = s->get_option("--stop-rel-tol")->count() > 0;
    bool const threads_given = threads->count() > 0;
    action = [o, steps_given, stop_given, threads_given, &argv] {
      ReconConfig cfg;
      Json recorded;
      std::string field = o->field, mask = o->mask, init = o->init_params;
      int nthreads = o->threads;
      if (!o->manifest.empty()) {
        recorded = read_json(o->manifest);
        if (!recorded.contains("config")) { throw ConfigError(o->manifest + " is not a recon manifest"); }
        cfg = recon_config_from_json(recorded.at("config"));
        auto const &in = recorded.at("inputs");
        if (field.empty() && in.contains("field")) { field = in.at("field").get<std::string>(); }
        if (mask.empty() && in.contains("mask")) { mask = in.at("mask").get<std::string>(); }
        if (init.empty() && in.contains("init_params")) { init = in.at("init_params").get<std::string>(); }
        if (!threads_given) { nthreads = recorded.at("threads").get<int>(); }
      } else {
        cfg.mode = parse_mode(o->method);
        if (cfg.mode == ReconMode::Dip && steps_given && o->dfo_steps != 0) {
          throw ConfigError("--method dip forces zero DFO steps; drop --dfo-steps or use --method modip");
        }
        cfg.input_kind = parse_input_kind(o->input);
        cfg.max_iters = o->iters;
        cfg.dfo.n_steps = o->dfo_steps;
        cfg.dfo.alpha = o->alpha;
        cfg.adam.base_lr = o->lr;
        cfg.network.depth = o->depth;
        cfg.network.base_channels = o->base;
        cfg.network.norm_enabled = !o->no_norm;
        cfg.network.zero_init_output = !o->he_out;
        cfg.seed = o->seed;
        cfg.stop_grad_dfo = o->stop_grad;
        cfg.snapshot_iters = o->no_snapshots ? std::vector<int>{} : o->snapshots;
        if (stop_given) {
          if (o->stop_tol.empty()) {
            cfg.stop_rel_tol = ReconConfig::kDefaultStopRelTol;
          } else {
            try {
              cfg.stop_rel_tol = std::stod(o->stop_tol);
            } catch (std::exception const &) {
              throw ConfigError("--stop-rel-tol expects a number, got '" + o->stop_tol + "'");
            }
          }
        }
      }
      cfg.effective().validate();
      if (field.empty()) { throw ConfigError("recon needs --field (or a manifest that records one)"); }
      set_num_threads(nthreads);

      Volume const phi = read_volume(field).volume;
      if (!recorded.is_null() && !grid_from_json(recorded.at("grid")).same_geometry(phi.grid())) {
        throw ConfigError("field grid differs from the grid recorded in " + o->manifest);
      }
      Mask const m = load_mask(mask, phi.grid());
      ParameterSet initial;
      ReconOptions ropts;
      if (!init.empty()) {
        initial = load_params(init);
        ropts.initial_params = &initial;
      }

      fs::path const dir = o->out;
      fs::create_directories(dir);
      auto const el = parse_element_type(o->element);
      RunEnvironment env{"recon", nthreads, {{"field", absolute(field)}}, Json::object()};
      if (!mask.empty()) { env.inputs["mask"] = absolute(mask); }
      if (!init.empty()) { env.inputs["init_params"] = absolute(init); }

      std::vector<IterationRecord> seen;
      bool const quiet = o->quiet;
      ropts.on_iteration = [&seen, quiet](IterationRecord const &r) {
        seen.push_back(r);
        if (!quiet && (r.iter == 1 || r.iter % 10 == 0)) {
          std::fprintf(stderr, "iter %4d  total %.6e  fidelity %.6e  laplacian %.6e  %.0f ms\n", r.iter, r.loss.total,
                       r.loss.fidelity_mae, r.loss.laplacian_mae, r.wall_ms);
        }
      };

      auto const t0 = std::chrono::steady_clock::now();
      ReconResult res;
      try {
        res = reconstruct(phi, m, cfg, ropts);
      } catch (DivergenceError const &e) {
        write_losses_csv(dir / "losses.csv", seen);
        env.outputs["losses"] = absolute((dir / "losses.csv").string());
        Json man = run_manifest(cfg, phi.grid(), env);
        man["argv"] = argv;
        man["result"] = {{"status", "diverged"}, {"iteration", e.iter}};
        write_json(dir / "manifest.json", man);
        throw;
      }
      double const wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      auto out_vol = [&](std::string const &key, std::string const &name, Volume const &v) {
        write_volume(dir / name, v, el);
        env.outputs[key] = absolute((dir / name).string());
      };
      out_vol("chi", "chi.qvol", res.chi);
      out_vol("chi0", "chi0.qvol", res.state.chi0);
      Json snaps = Json::array();
      for (auto const &sn : res.state.snapshots) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "snap_%04d", sn.iter);
        write_volume(dir / (std::string(tag) + "_chi0.qvol"), sn.chi0, el);
        write_volume(dir / (std::string(tag) + "_chin.qvol"), sn.chin, el);
        snaps.push_back({{"iter", sn.iter},
                         {"chi0", absolute((dir / (std::string(tag) + "_chi0.qvol")).string())},
                         {"chin", absolute((dir / (std::string(tag) + "_chin.qvol")).string())}});
      }
      env.outputs["snapshots"] = snaps;
      write_losses_csv(dir / "losses.csv", res.state.history);
      env.outputs["losses"] = absolute((dir / "losses.csv").string());
      if (o->save_params && cfg.mode != ReconMode::Dfo) {
        save_params((dir / "params.bin").string(), res.state.params);
        env.outputs["params"] = absolute((dir / "params.bin").string());
      }

      Json man = run_manifest(cfg, phi.grid(), env);
      man["argv"] = argv;
      auto const &last = res.state.history.back();
      man["result"] = {{"status", res.state.converged ? "converged" : "max_iters"},
                       {"iterations", res.state.iterations},
                       {"best_iter", res.state.best_iter},
                       {"final_loss",
                        {{"fidelity_mae", last.loss.fidelity_mae},
                         {"laplacian_mae", last.loss.laplacian_mae},
                         {"total", last.loss.total}}},
                       {"wall_s", wall}};
      write_json(dir / "manifest.json", man);
      if (!quiet) {
        std::fprintf(stderr, "%s: %d iterations in %.1f s, final total loss %.6e (lowest at iteration %d)\n",
                     to_string(cfg.mode).c_str(), res.state.iterations, wall, last.loss.total, res.state.best_iter);
      }
      return 0;
    };
  });
}

void add_eval(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::string chi, truth, mask, out, csv;
    std::vector<std::string> regions;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("eval", "Region-wise NRMSE and ROI statistics against a reference");
  s->add_option("--chi", o->chi, "Reconstruction")->required()->check(CLI::ExistingFile);
  s->add_option("--truth", o->truth, "Reference susceptibility")->required()->check(CLI::ExistingFile);
  s->add_option("--mask", o->mask, "Main region (default: all voxels)")->check(CLI::ExistingFile);
  s->add_option("--region", o->regions, "Extra region as name=mask.qvol (repeatable)");
  s->add_option("-o,--out", o->out, "JSON report")->required();
  s->add_option("--csv", o->csv, "Also write the table as CSV");
  add_threads(s, o->threads);
  s->callback([&action, o, &argv] {
    action = [o, &argv] {
      set_num_threads(o->threads);
      Volume const chi = read_volume(o->chi).volume;
      Volume const truth = read_volume(o->truth).volume;
      require_same_geometry(chi.grid(), truth.grid(), "eval");
      std::vector<NamedRegion> regions;
      regions.push_back({o->mask.empty() ? "fov" : "mask", load_mask(o->mask, truth.grid())});
      Json inputs = {{"chi", absolute(o->chi)}, {"truth", absolute(o->truth)}};
      if (!o->mask.empty()) { inputs["mask"] = absolute(o->mask); }
      for (auto const &r : o->regions) {
        auto const eq = r.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == r.size()) {
          throw ConfigError("--region expects name=path, got '" + r + "'");
        }
        std::string const name = r.substr(0, eq), path = r.substr(eq + 1);
        regions.push_back({name, load_mask(path, truth.grid())});
        inputs["regions"][name] = absolute(path);
      }
      auto const rows = region_reports(chi, truth, regions);

      Json report = Json::array();
      std::printf("%-16s %12s %12s %12s %10s\n", "region", "nrmse", "mean_ppm", "std_ppm", "voxels");
      for (auto const &r : rows) {
        std::printf("%-16s %12.6f %12.6f %12.6f %10ld\n", r.name.c_str(), r.nrmse, r.mean_ppm, r.std_ppm,
                    long(r.count));
        report.push_back(
          {{"name", r.name}, {"nrmse", r.nrmse}, {"mean_ppm", r.mean_ppm}, {"std_ppm", r.std_ppm}, {"count", r.count}});
      }
      ensure_parent(o->out);
      write_json(o->out, {{"regions", report}, {"nrmse", "||R(pred - truth)||_2 / ||R truth||_2"}});
      Json m = header("eval", o->threads, argv);
      m["inputs"] = inputs;
      m["outputs"] = {{"report", absolute(o->out)}};
      if (!o->csv.empty()) {
        ensure_parent(o->csv);
        std::FILE *f = std::fopen(o->csv.c_str(), "w");
        if (f == nullptr) { throw IoError("cannot write " + o->csv); }
        std::fprintf(f, "region,nrmse,mean_ppm,std_ppm,count\n");
        for (auto const &r : rows) {
          std::fprintf(f, "%s,%.17g,%.17g,%.17g,%ld\n", r.name.c_str(), r.nrmse, r.mean_ppm, r.std_ppm, long(r.count));
        }
        if (std::fclose(f) != 0) { throw IoError("failed writing " + o->csv); }
        m["outputs"]["csv"] = absolute(o->csv);
      }
      write_json(sidecar(o->out), m);
      return 0;
    };
  });
}

void add_kernel(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::vector<Index> grid{64, 64, 64};
    std::vector<double> voxel{1, 1, 1}, b0{0, 0, 1};
    std::string out, element = to_string(native_element());
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("kernel", "Write the dipole kernel in unshifted DFT order");
  add_triple(s, "--grid", o->grid, "Matrix size in voxels");
  add_triple(s, "--voxel", o->voxel, "Voxel size in mm");
  add_triple(s, "--b0", o->b0, "B0 direction in image axes (normalized)");
  s->add_option("-o,--out", o->out, "Output volume")->required();
  add_element(s, o->element);
  add_threads(s, o->threads);
  s->callback([&action, o, &argv] {
    action = [o, &argv] {
      GridSpec const g(dims3(o->grid, "--grid"), vec3(o->voxel, "--voxel"), vec3(o->b0, "--b0"));
      DipoleKernel const k(g);
      ensure_parent(o->out);
      write_volume(o->out, k.values(), parse_element_type(o->element), "unitless");
      Json m = header("kernel", o->threads, argv);
      m["grid"] = to_json(g);
      m["conventions"] = {{"dft_order", "unshifted"},
                          {"dc", 0},
                          {"nyquist", "mean of the +M/2 and -M/2 readings"}};
      m["outputs"] = {{"kernel", absolute(o->out)}};
      write_json(sidecar(o->out), m);
      std::printf("kernel %s: D(0,0,1) = %.17g\n", to_string(g).c_str(), double(k(0, 0, g.nz() > 1 ? 1 : 0)));
      return 0;
    };
  });
}

void add_gradcheck(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    GradcheckOptions g;
    bool no_norm = false;
    std::string out;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("gradcheck", "Finite-difference checks of every analytic gradient");
  s->add_option("--size", o->g.size, "Cube edge of the test grid")->capture_default_str();
  s->add_option("--depth", o->g.depth, "Network pooling depth")->capture_default_str();
  s->add_option("--base-channels", o->g.base_channels, "Network base channels")->capture_default_str();
  s->add_flag("--no-norm", o->no_norm, "Check the network without instance normalization");
  s->add_option("--seed", o->g.seed, "Problem seed")->capture_default_str();
  s->add_option("-o,--out", o->out, "Optional JSON report");
  add_threads(s, o->threads);
  s->callback([&action, o, &argv] {
    action = [o, &argv] {
      set_num_threads(o->threads);
      GradcheckOptions g = o->g;
      g.norm_enabled = !o->no_norm;
      auto const results = run_gradchecks(g);
      bool ok = true;
      Json rep = Json::array();
      for (auto const &r : results) {
        std::printf("%-12s max_rel_err %.3e  threshold %.0e  checked %ld/%ld  %s\n", r.name.c_str(), r.max_rel_err,
                    r.threshold, long(r.checked), long(r.total), r.pass ? "PASS" : "FAIL");
        ok = ok && r.pass;
        rep.push_back({{"suite", r.name},
                       {"max_rel_err", r.max_rel_err},
                       {"threshold", r.threshold},
                       {"checked", r.checked},
                       {"total", r.total},
                       {"pass", r.pass}});
      }
      if (!o->out.empty()) {
        ensure_parent(o->out);
        write_json(o->out, {{"suites", rep}, {"pass", ok}});
        Json m = header("gradcheck", o->threads, argv);
        m["params"] = {{"size", g.size},
                       {"depth", g.depth},
                       {"base_channels", g.base_channels},
                       {"norm_enabled", g.norm_enabled},
                       {"seed", g.seed}};
        m["outputs"] = {{"report", absolute(o->out)}};
        write_json(sidecar(o->out), m);
      }
      return ok ? 0 : 2;
    };
  });
}

void add_render(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  struct Opts
  {
    std::string in, out, axis = "z";
    Index index = -1;
    std::vector<double> window;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  auto *s = app.add_subcommand("render", "Write one slice as an 8-bit PGM image");
  s->add_option("--in", o->in, "Input volume")->required()->check(CLI::ExistingFile);
  s->add_option("--axis", o->axis, "Slice normal")->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
  s->add_option("--index", o->index, "Slice index (default: middle)");
  s->add_option("--window", o->window, "Display window lo,hi in ppm (default: data range)")
    ->delimiter(',')
    ->expected(2);
  s->add_option("-o,--out", o->out, "Output PGM")->required();
  add_threads(s, o->threads);
  s->callback([&action, o, &argv] {
    action = [o, &argv] {
      Volume const v = read_volume(o->in).volume;
      char const axis = o->axis[0];
      int const a = axis - 'x';
      Index const idx = o->index >= 0 ? o->index : v.grid().matrix()[size_t(a)] / 2;
      double lo = 0, hi = 0;
      if (o->window.empty()) {
        auto const [mn, mx] = std::minmax_element(v.values().begin(), v.values().end());
        lo = *mn;
        hi = *mx;
        if (!(hi > lo)) { throw ConfigError("volume is constant; pass --window lo,hi"); }
      } else {
        lo = o->window.at(0);
        hi = o->window.at(1);
      }
      GrayImage const img = render_slice(v, axis, idx, lo, hi);
      ensure_parent(o->out);
      write_pgm(o->out, img);
      Json m = header("render", o->threads, argv);
      m["params"] = {{"axis", o->axis}, {"index", idx}, {"window_ppm", {lo, hi}}, {"rounding", "half up"}};
      m["inputs"] = {{"volume", absolute(o->in)}};
      m["outputs"] = {{"image", absolute(o->out)}};
      write_json(sidecar(o->out), m);
      return 0;
    };
  });
}

} // namespace

void add_commands(CLI::App &app, Action &action, std::vector<std::string> const &argv)
{
  add_phantom_cuboids(app, action, argv);
  add_phantom_lesion(app, action, argv);
  add_simulate(app, action, argv);
  add_recon(app, action, argv);
  add_eval(app, action, argv);
  add_kernel(app, action, argv);
  add_gradcheck(app, action, argv);
  add_render(app, action, argv);
}

} // namespace modip::cli
