#include <modip/layers.hpp>
#include <modip/phantom.hpp>
#include <modip/reconstructor.hpp>
#include <modip/rng.hpp>

#include <benchmark/benchmark.h>

using namespace modip;

namespace {

struct ConvCase
{
  nn::FeatureMap x;
  nn::Conv conv;
  std::vector<Real> w, b;

  ConvCase(Index m, Index cin, Index cout)
    : x({m, m, m}, cin)
    , conv{cin, cout, 3}
  {
    Rng rng(1);
    for (auto &v : x.values()) { v = Real(rng.normal()); }
    w.resize(size_t(conv.weight_count()));
    for (auto &v : w) { v = Real(0.1 * rng.normal()); }
    b.assign(size_t(cout), 0);
  }

  double flops() const { return 2.0 * double(x.voxels()) * double(conv.cin * conv.cout * 27); }
};

// Args: edge, input channels, output channels.
void BM_ConvForward(benchmark::State &st)
{
  ConvCase const c(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) { benchmark::DoNotOptimize(nn::conv_forward(c.conv, c.x, c.w, c.b)); }
  st.counters["GFLOP/s"] = benchmark::Counter(c.flops() * 1e-9 * double(st.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ConvForward)->Args({32, 32, 32})->Args({64, 1, 32})->Args({64, 32, 32})->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State &st)
{
  ConvCase const c(st.range(0), st.range(1), st.range(2));
  nn::FeatureMap const dy = nn::conv_forward(c.conv, c.x, c.w, c.b);
  std::vector<Real> dw(c.w.size()), db(c.b.size());
  for (auto _ : st) { benchmark::DoNotOptimize(nn::conv_backward(c.conv, c.x, dy, c.w, dw, db, true)); }
  st.counters["GFLOP/s"] =
    benchmark::Counter(2 * c.flops() * 1e-9 * double(st.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ConvBackward)->Args({32, 32, 32})->Args({64, 32, 32})->Unit(benchmark::kMillisecond);

// One outer iteration per benchmark iteration. Args: edge, depth, DFO steps.
void BM_ReconIteration(benchmark::State &st)
{
  Index const m = st.range(0);
  CuboidSpec cs;
  cs.count = 100;
  cs.grid = GridSpec({m, m, m}, {1, 1, 2}, {0.5, 0.5, 0.71});
  cs.side_range = {1, m};
  cs.seed = 1;
  Volume const phi = simulate_field(cuboid_phantom(cs), 0, 0);
  ReconConfig cfg;
  cfg.max_iters = 2;
  cfg.snapshot_iters = {};
  cfg.network.depth = int(st.range(1));
  cfg.dfo.n_steps = int(st.range(2));
  for (auto _ : st) {
    ReconResult const r = reconstruct(phi, Mask::all_ones(phi.grid()), cfg);
    st.SetIterationTime(r.state.history.back().wall_ms * 1e-3);
  }
}
BENCHMARK(BM_ReconIteration)
  ->Args({32, 1, 10})
  ->Args({32, 1, 0})
  ->Args({32, 4, 10})
  ->Args({64, 1, 10})
  ->UseManualTime()
  ->Iterations(2)
  ->Unit(benchmark::kMillisecond);

} // namespace
