#include <modip/dfo.hpp>
#include <modip/fft.hpp>
#include <modip/loss.hpp>
#include <modip/rng.hpp>

#include <benchmark/benchmark.h>

using namespace modip;

namespace {

GridSpec grid(benchmark::State const &st)
{
  Index const m = st.range(0);
  return GridSpec({m, m, m}, {1, 1, 2}, {0.5, 0.5, 0.71});
}

Volume noise(GridSpec const &g, std::uint64_t seed)
{
  Rng rng(seed);
  Volume v(g);
  for (auto &x : v.values()) { x = Real(rng.normal()); }
  return v;
}

void BM_RealFFT(benchmark::State &st)
{
  GridSpec const g = grid(st);
  RealFFT const fft(g.matrix());
  Volume const v = noise(g, 1);
  std::vector<Complex> out(size_t(fft.half_size()));
  for (auto _ : st) {
    fft.forward(v.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * g.size());
}
BENCHMARK(BM_RealFFT)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ApplyA(benchmark::State &st)
{
  GridSpec const g = grid(st);
  DipoleKernel const k(g);
  Volume const v = noise(g, 2);
  for (auto _ : st) { benchmark::DoNotOptimize(k.apply(v)); }
  st.SetItemsProcessed(st.iterations() * g.size());
}
BENCHMARK(BM_ApplyA)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DfoRun(benchmark::State &st)
{
  GridSpec const g = grid(st);
  DipoleKernel const k(g);
  Mask const mask = Mask::all_ones(g);
  Volume const chi = noise(g, 3), phi = noise(g, 4);
  DfoConfig const cfg;
  for (auto _ : st) { benchmark::DoNotOptimize(dfo_run(chi, phi, k, mask, cfg)); }
}
BENCHMARK(BM_DfoRun)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DfoVjp(benchmark::State &st)
{
  GridSpec const g = grid(st);
  DipoleKernel const k(g);
  Mask const mask = Mask::all_ones(g);
  Volume const v = noise(g, 5);
  DfoConfig const cfg;
  for (auto _ : st) { benchmark::DoNotOptimize(dfo_vjp(v, k, mask, cfg)); }
}
BENCHMARK(BM_DfoVjp)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_OuterLossGrad(benchmark::State &st)
{
  GridSpec const g = grid(st);
  DipoleKernel const k(g);
  Mask const mask = Mask::all_ones(g);
  Volume const chi = noise(g, 6), phi = noise(g, 7);
  for (auto _ : st) { benchmark::DoNotOptimize(outer_loss_grad(chi, phi, k, mask)); }
}
BENCHMARK(BM_OuterLossGrad)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace
