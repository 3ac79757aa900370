#include "oracles.hpp"

#include <modip/fft.hpp>
#include <modip/volume.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace modip;

namespace {

GridSpec grid4() { return GridSpec({4, 4, 4}, {1, 1, 1}, {0, 0, 1}); }

} // namespace

TEST(GridSpec, NormalizesB0AndKeepsRawInput)
{
  GridSpec const g({4, 4, 8}, {1, 1, 2}, {0.5, 0.5, 0.71});
  auto const &p = g.b0_dir();
  EXPECT_NEAR(std::hypot(p[0], p[1], p[2]), 1.0, 1e-15);
  EXPECT_EQ(g.b0_input()[2], 0.71);
  EXPECT_NEAR(p[0] / p[2], 0.5 / 0.71, 1e-15);
}

TEST(GridSpec, RejectsInvalidGeometry)
{
  EXPECT_THROW(GridSpec({1, 4, 4}, {1, 1, 1}, {0, 0, 1}), ConfigError);
  EXPECT_THROW(GridSpec({4, 4, 4}, {1, 0, 1}, {0, 0, 1}), ConfigError);
  EXPECT_THROW(GridSpec({4, 4, 4}, {1, -1, 1}, {0, 0, 1}), ConfigError);
  EXPECT_THROW(GridSpec({4, 4, 4}, {1, 1, 1}, {0, 0, 0}), ConfigError);
  EXPECT_THROW(GridSpec({4, 4, 4}, {1, 1, 1}, {0, NAN, 1}), ConfigError);
}

TEST(Volume, LayoutIsXFastest)
{
  GridSpec const g({3, 4, 5}, {1, 1, 1}, {0, 0, 1});
  Volume v(g);
  v(2, 1, 3) = 7;
  EXPECT_EQ(v[2 + 3 * (1 + 4 * 3)], 7);
  for (Index i = 0; i < v.size(); ++i) { v[i] = Real(i); }
  for (Index z = 0; z < 5; ++z)
    for (Index y = 0; y < 4; ++y)
      for (Index x = 0; x < 3; ++x) { ASSERT_EQ(v(x, y, z), Real(x + 3 * (y + 4 * z))); }
}

TEST(Volume, RejectsWrongValueCountAndNonFinite)
{
  EXPECT_THROW(Volume(grid4(), std::vector<Real>(63)), ShapeError);
  Volume v(grid4());
  v[5] = NAN;
  EXPECT_FALSE(v.all_finite());
  EXPECT_THROW(v.require_finite("test"), NumericError);
}

TEST(Volume, DotMatchesHandSum)
{
  GridSpec const g({2, 2, 2}, {1, 1, 1}, {0, 0, 1});
  Volume const a = oracle::random_volume(g, 1), b = oracle::random_volume(g, 2);
  double hand = 0;
  for (Index i = 0; i < 8; ++i) { hand += a[i] * b[i]; }
  EXPECT_DOUBLE_EQ(dot(a, b), hand);
  EXPECT_GE(dot(a, a), 0);
  EXPECT_NEAR(dot(a, a), norm2(a) * norm2(a), 1e-14);
  EXPECT_EQ(dot(Volume(g), b), 0);
}

TEST(Volume, GridMismatchIsAnError)
{
  Volume const a(grid4());
  Volume const b(GridSpec({4, 4, 4}, {1, 1, 2}, {0, 0, 1}));
  EXPECT_THROW(dot(a, b), ShapeError);
  Volume c = a;
  EXPECT_THROW(c += b, ShapeError);
}

TEST(Volume, Arithmetic)
{
  Volume const a = oracle::random_volume(grid4(), 3), b = oracle::random_volume(grid4(), 4);
  Volume y = b;
  axpy(2, a, y);
  Volume const h = hadamard(a, b);
  Volume const s = a + b;
  Volume const d = a - b;
  Volume const m = Real(3) * a;
  for (Index i = 0; i < a.size(); ++i) {
    EXPECT_DOUBLE_EQ(y[i], b[i] + 2 * a[i]);
    EXPECT_DOUBLE_EQ(h[i], a[i] * b[i]);
    EXPECT_DOUBLE_EQ(s[i], a[i] + b[i]);
    EXPECT_DOUBLE_EQ(d[i], a[i] - b[i]);
    EXPECT_DOUBLE_EQ(m[i], 3 * a[i]);
  }
}

TEST(Mask, ValidatesBinaryAndNonEmpty)
{
  Volume v(grid4());
  EXPECT_THROW(Mask{v}, ConfigError);
  v[3] = 0.5;
  EXPECT_THROW(Mask{v}, ConfigError);
  v[3] = 1;
  v[9] = 1;
  Mask const m(v);
  EXPECT_EQ(m.count(), 2);
  EXPECT_FALSE(m.is_all_ones());
  EXPECT_TRUE(Mask::all_ones(grid4()).is_all_ones());
  Volume x = Volume::constant(grid4(), 2);
  m.apply(x);
  EXPECT_EQ(sum(x), 4);
}

TEST(Fft, ZerosAndConstant)
{
  Spectrum const z = fft3(Volume(grid4()));
  for (Index i = 0; i < z.size(); ++i) { EXPECT_EQ(std::abs(z[i]), 0); }
  EXPECT_EQ(max_abs(ifft3_real(z)), 0);

  Spectrum const c = fft3(Volume::constant(grid4(), 1.5));
  EXPECT_NEAR(c[0].real(), 1.5 * 64, 1e-12);
  for (Index i = 1; i < c.size(); ++i) { EXPECT_LT(std::abs(c[i]), 1e-12); }
}

TEST(Fft, MatchesNaiveDft)
{
  Volume const v = oracle::random_volume(grid4(), 11);
  Spectrum const s = fft3(v);
  auto const ref = oracle::dft(v);
  double err = 0;
  for (Index i = 0; i < s.size(); ++i) {
    err = std::max(err, std::abs(std::complex<double>(s[i]) - ref[size_t(i)]));
  }
  EXPECT_LE(err, 1e-10);
}

TEST(Fft, MatchesNaiveDftOnNonCubicGrid)
{
  GridSpec const g({5, 4, 3}, {1, 1, 1}, {0, 0, 1});
  Volume const v = oracle::random_volume(g, 12);
  Spectrum const s = fft3(v);
  auto const ref = oracle::dft(v);
  for (Index i = 0; i < s.size(); ++i) { ASSERT_LE(std::abs(std::complex<double>(s[i]) - ref[size_t(i)]), 1e-10); }
}

TEST(Fft, RoundTrip)
{
  GridSpec const g({8, 6, 10}, {1, 1, 1}, {0, 0, 1});
  Volume const v = oracle::random_volume(g, 13);
  Volume const r = ifft3_real(fft3(v));
  EXPECT_LE(max_abs(r - v), 1e-12 * max_abs(v));
}

TEST(Fft, ParsevalAndHermitianSymmetry)
{
  GridSpec const g({6, 8, 4}, {1, 1, 1}, {0, 0, 1});
  Volume const v = oracle::random_volume(g, 14);
  Spectrum const s = fft3(v);
  double e = 0;
  for (Index i = 0; i < s.size(); ++i) { e += std::norm(s[i]); }
  EXPECT_NEAR(dot(v, v) * double(g.size()), e, 1e-6 * e);

  double scale = 0;
  for (Index i = 0; i < s.size(); ++i) { scale = std::max(scale, double(std::abs(s[i]))); }
  for (Index z = 0; z < g.nz(); ++z)
    for (Index y = 0; y < g.ny(); ++y)
      for (Index x = 0; x < g.nx(); ++x) {
        Complex const a = s(x, y, z);
        Complex const b = s((g.nx() - x) % g.nx(), (g.ny() - y) % g.ny(), (g.nz() - z) % g.nz());
        ASSERT_LE(std::abs(a - std::conj(b)), 1e-10 * scale);
      }
}

TEST(Fft, RejectsSpectrumOfComplexVolume)
{
  Spectrum s(grid4());
  s[1] = Complex(1, 0); // spectrum without its Hermitian partner
  EXPECT_THROW(ifft3_real(s), NumericError);
}

TEST(Fft, RejectsNonFiniteInput)
{
  Volume v(grid4());
  v[0] = INFINITY;
  EXPECT_THROW(fft3(v), NumericError);
}
