#include "oracles.hpp"

#include <modip/dfo.hpp>

#include <gtest/gtest.h>

using namespace modip;

namespace {

GridSpec tiny() { return GridSpec({4, 4, 4}, {1, 1, 2}, {0.5, 0.5, 0.71}); }

// Dense (I - 2 alpha A M A)^n from the DFT-built matrix of A.
std::vector<double> dense_step_power(GridSpec const &g, Volume const &mask, double alpha, int n)
{
  Index const N = g.size();
  auto const a = oracle::dense_A(g);
  std::vector<double> ma(a);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) { ma[size_t(i * N + j)] *= mask[i]; }
  auto l = oracle::matmul(a, ma, N);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) { l[size_t(i * N + j)] = (i == j ? 1.0 : 0.0) - 2 * alpha * l[size_t(i * N + j)]; }
  std::vector<double> p(size_t(N * N), 0.0);
  for (Index i = 0; i < N; ++i) { p[size_t(i * N + i)] = 1; }
  for (int s = 0; s < n; ++s) { p = oracle::matmul(l, p, N); }
  return p;
}

} // namespace

TEST(DfoConfig, Validation)
{
  DfoConfig c;
  EXPECT_EQ(c.alpha, 1.2);
  EXPECT_EQ(c.n_steps, 10);
  EXPECT_NO_THROW(c.validate());
  for (double bad : {2.3, 2.25, 0.0, -1.0}) {
    c.alpha = bad;
    EXPECT_THROW(c.validate(), ConfigError) << bad;
  }
  c.alpha = 2.2;
  EXPECT_NO_THROW(c.validate());
  c.n_steps = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DfoConfig, MessageNamesStabilityBound)
{
  DfoConfig c;
  c.alpha = 2.3;
  try {
    c.validate();
    FAIL();
  } catch (ConfigError const &e) {
    EXPECT_NE(std::string(e.what()).find("2.25"), std::string::npos) << e.what();
  }
}

TEST(DfoRun, ZeroStepsAndFixedPoint)
{
  GridSpec const g = tiny();
  DipoleKernel const k(g);
  Mask const all = Mask::all_ones(g);
  Volume const chi = oracle::random_volume(g, 1);
  Volume const phi = apply_A(chi, k);
  EXPECT_EQ(max_abs(dfo_run(chi, oracle::random_volume(g, 2), k, all, {1.2, 0}) - chi), 0);
  EXPECT_LE(max_abs(dfo_run(chi, phi, k, all, {}) - chi), 1e-14);
}

TEST(DfoRun, MatchesExplicitSteps)
{
  GridSpec const g = tiny();
  DipoleKernel const k(g);
  Mask const m(oracle::random_mask(g, 3));
  Volume const phi = oracle::random_volume(g, 4);
  Volume chi = oracle::random_volume(g, 5);
  Volume const out = dfo_run(chi, phi, k, m, {0.7, 3});
  for (int s = 0; s < 3; ++s) { axpy(-0.7, fidelity_gradient(chi, phi, k, m), chi); }
  EXPECT_LE(max_abs(out - chi), 1e-13);
}

TEST(DfoRun, FidelityNonIncreasing)
{
  GridSpec const g({16, 16, 16}, {1, 1, 2}, {0.5, 0.5, 0.71});
  DipoleKernel const k(g);
  for (std::uint64_t t = 0; t < 5; ++t) {
    Mask const m(oracle::random_mask(g, 10 + t));
    Volume const phi = oracle::random_volume(g, 20 + t);
    Volume chi = oracle::random_volume(g, 30 + t);
    double prev = fidelity_value(chi, phi, k, m);
    for (int s = 0; s < 10; ++s) {
      chi = dfo_run(chi, phi, k, m, {1.2, 1});
      double const f = fidelity_value(chi, phi, k, m);
      ASSERT_LE(f, prev);
      prev = f;
    }
  }
}

TEST(DfoVjp, IdentityCases)
{
  GridSpec const g = tiny();
  DipoleKernel const k(g);
  Volume const gv = oracle::random_volume(g, 6);
  EXPECT_EQ(max_abs(dfo_vjp(gv, k, Mask::all_ones(g), {1.2, 0}) - gv), 0);
  Volume const c = Volume::constant(g, 0.25);
  EXPECT_LE(max_abs(dfo_vjp(c, k, Mask::all_ones(g), {}) - c), 1e-14);
}

TEST(DfoVjp, MatchesDenseTransposeOracle)
{
  GridSpec const g = tiny();
  DipoleKernel const k(g);
  Volume const mv = oracle::random_mask(g, 7);
  Mask const m(mv);
  Index const N = g.size();
  for (int n : {1, 2, 5}) {
    auto const p = dense_step_power(g, mv, 1.2, n);
    std::vector<double> got, want;
    for (Index j = 0; j < N; ++j) {
      Volume e(g);
      e[j] = 1;
      Volume const v = dfo_vjp(e, k, m, {1.2, n});
      for (Index i = 0; i < N; ++i) {
        got.push_back(v[i]);
        want.push_back(p[size_t(j * N + i)]); // column j of the transpose
      }
    }
    EXPECT_LE(oracle::max_rel_err(got, want, 1e-3), 1e-10) << "n=" << n;
  }
}

TEST(DfoVjp, AgreesWithFiniteDifferenceJacobian)
{
  GridSpec const g = tiny();
  DipoleKernel const k(g);
  Mask const m(oracle::random_mask(g, 8));
  Volume const phi = oracle::random_volume(g, 9);
  Volume const chi = oracle::random_volume(g, 10);
  DfoConfig const cfg{1.2, 3};
  Index const N = g.size();
  double const h = 1e-4;
  // Row i of J equals vjp(e_i).
  std::vector<double> fd, vj;
  std::vector<Volume> cols;
  for (Index j = 0; j < N; ++j) {
    Volume p = chi, q = chi;
    p[j] += h;
    q[j] -= h;
    Volume c = dfo_run(p, phi, k, m, cfg) - dfo_run(q, phi, k, m, cfg);
    c *= Real(1 / (2 * h));
    cols.push_back(std::move(c));
  }
  for (Index i = 0; i < N; ++i) {
    Volume e(g);
    e[i] = 1;
    Volume const r = dfo_vjp(e, k, m, cfg);
    for (Index j = 0; j < N; ++j) {
      vj.push_back(r[j]);
      fd.push_back(cols[size_t(j)][i]);
    }
  }
  EXPECT_LE(oracle::max_rel_err(vj, fd, 1e-3), 1e-5);
}

TEST(DfoVjp, NonExpansive)
{
  GridSpec const g({8, 8, 8}, {1, 1, 1}, {0, 0, 1});
  DipoleKernel const k(g);
  Mask const m(oracle::random_mask(g, 11));
  for (double alpha : {0.5, 1.2, 2.2}) {
    Volume const gv = oracle::random_volume(g, 12);
    EXPECT_LE(norm2(dfo_vjp(gv, k, m, {alpha, 1})), norm2(gv) * (1 + 1e-12));
  }
}

TEST(Dfo, GridMismatch)
{
  DipoleKernel const k(tiny());
  Volume const v(GridSpec::cube(4));
  EXPECT_THROW(dfo_run(v, v, k, Mask::all_ones(v.grid()), {}), ShapeError);
  EXPECT_THROW(dfo_vjp(v, k, Mask::all_ones(v.grid()), {}), ShapeError);
}
