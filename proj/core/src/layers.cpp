#include "modip/layers.hpp"
#include "modip/parallel.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace modip::nn {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<RowMat const>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<RowMat const, 0, Eigen::OuterStride<>>;

FeatureMap::FeatureMap(Dims3 dims, Index channels)
  : dims_{dims}
  , channels_{channels}
  , data_(size_t(dims[0] * dims[1] * dims[2] * channels), Real(0))
{
}

void FeatureMap::set_zero() { std::fill(data_.begin(), data_.end(), Real(0)); }

void FeatureMap::release()
{
  data_ = {};
  channels_ = 0;
}

Dims3 half_dims(Dims3 d) { return {d[0] / 2, d[1] / 2, d[2] / 2}; }
Dims3 double_dims(Dims3 d) { return {d[0] * 2, d[1] * 2, d[2] * 2}; }

namespace {

// Chunks are runs of whole x-rows sized so that one im2col block stays near kBlockBytes.
// They depend only on the layer shape, never on the thread count.
constexpr Index kBlockBytes = Index(4) << 20;
// Weight-gradient partials are summed per fixed group of chunks, then across groups in order.
constexpr Index kGradGroups = 16;

struct Chunks
{
  Index nx = 0;
  Index rows = 0;      // ny * nz
  Index per_chunk = 0; // rows per chunk
  Index count = 0;

  Chunks(Dims3 d, Index kk)
    : nx{d[0]}
    , rows{d[1] * d[2]}
    , per_chunk{std::clamp<Index>(kBlockBytes / Index(sizeof(Real)) / std::max<Index>(kk, 1) / d[0], 1, d[1] * d[2])}
    , count{(rows + per_chunk - 1) / per_chunk}
  {
  }

  Index r0(Index c) const { return c * per_chunk; }
  Index r1(Index c) const { return std::min(rows, (c + 1) * per_chunk); }
  Index offset(Index c) const { return r0(c) * nx; }
  Index cols(Index c) const { return (r1(c) - r0(c)) * nx; }
};

std::vector<Real> &scratch()
{
  thread_local std::vector<Real> buf;
  return buf;
}

// Rows (ci, dz, dy, dx); columns are the voxels of x-rows [r0, r1), row = y + ny * z.
void im2col(FeatureMap const &x, int k, Index r0, Index r1, Real *cols)
{
  auto const [nx, ny, nz] = x.dims();
  Index const ncols = (r1 - r0) * nx;
  int const r = k / 2;
  Real *row = cols;
  for (Index ci = 0; ci < x.channels(); ++ci) {
    Real const *src = x.channel(ci);
    for (int dz = 0; dz < k; ++dz) {
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx, row += ncols) {
          Index const ox = dx - r, oy = dy - r, oz = dz - r;
          Index const xb = std::max<Index>(0, -ox), xe = std::min<Index>(nx, nx - ox);
          Real *dst = row;
          for (Index rr = r0; rr < r1; ++rr, dst += nx) {
            Index const ys = rr % ny + oy, zs = rr / ny + oz;
            if (ys < 0 || ys >= ny || zs < 0 || zs >= nz) {
              std::fill(dst, dst + nx, Real(0));
              continue;
            }
            Real const *s = src + (zs * ny + ys) * nx + ox;
            std::fill(dst, dst + xb, Real(0));
            std::copy(s + xb, s + xe, dst + xb);
            std::fill(dst + xe, dst + nx, Real(0));
          }
        }
      }
    }
  }
}

void check_weights(Conv const &c, FeatureMap const &x, std::span<Real const> w)
{
  if (x.channels() != c.cin) {
    throw ShapeError("conv expects " + std::to_string(c.cin) + " input channels, got " +
                     std::to_string(x.channels()));
  }
  if (Index(w.size()) != c.weight_count()) { throw ShapeError("conv weight size mismatch"); }
  if (c.k < 1 || c.k % 2 == 0) { throw ConfigError("conv kernel size must be odd"); }
}

} // namespace

FeatureMap conv_forward(Conv const &c, FeatureMap const &x, std::span<Real const> w, std::span<Real const> b)
{
  check_weights(c, x, w);
  if (!b.empty() && Index(b.size()) != c.cout) { throw ShapeError("conv bias size mismatch"); }
  FeatureMap y(x.dims(), c.cout);
  Index const n = x.voxels();
  Index const kk = c.cin * c.k * c.k * c.k;
  Chunks const chunks(x.dims(), kk);
  ConstMap const W(w.data(), c.cout, kk);

  parallel_for(chunks.count, [&](Index ch) {
    Index const off = chunks.offset(ch);
    Index const ncols = chunks.cols(ch);
    StridedMap Y(y.data() + off, c.cout, ncols, Eigen::OuterStride<>(n));
    if (c.k == 1) {
      ConstStridedMap const X(x.data() + off, c.cin, ncols, Eigen::OuterStride<>(n));
      Y.noalias() = W * X;
    } else {
      auto &buf = scratch();
      buf.resize(size_t(kk * ncols));
      im2col(x, c.k, chunks.r0(ch), chunks.r1(ch), buf.data());
      Y.noalias() = W * ConstMap(buf.data(), kk, ncols);
    }
    if (!b.empty()) {
      for (Index co = 0; co < c.cout; ++co) { Y.row(co).array() += b[size_t(co)]; }
    }
  });
  return y;
}

FeatureMap conv_backward(Conv const &c, FeatureMap const &x, FeatureMap const &dy, std::span<Real const> w,
                         std::span<Real> dw, std::span<Real> db, bool want_dx)
{
  check_weights(c, x, w);
  if (dy.channels() != c.cout || dy.dims() != x.dims()) { throw ShapeError("conv backward: dy shape mismatch"); }
  if (Index(dw.size()) != c.weight_count()) { throw ShapeError("conv backward: dw size mismatch"); }
  Index const n = x.voxels();
  Index const kk = c.cin * c.k * c.k * c.k;
  Chunks const chunks(x.dims(), kk);
  Index const groups = std::min(kGradGroups, chunks.count);

  std::vector<RowMat> partial(size_t(groups), RowMat::Zero(c.cout, kk));
  parallel_for(groups, [&](Index g) {
    RowMat &P = partial[size_t(g)];
    for (Index ch = g * chunks.count / groups; ch < (g + 1) * chunks.count / groups; ++ch) {
      Index const off = chunks.offset(ch);
      Index const ncols = chunks.cols(ch);
      ConstStridedMap const DY(dy.data() + off, c.cout, ncols, Eigen::OuterStride<>(n));
      if (c.k == 1) {
        ConstStridedMap const X(x.data() + off, c.cin, ncols, Eigen::OuterStride<>(n));
        P.noalias() += DY * X.transpose();
      } else {
        auto &buf = scratch();
        buf.resize(size_t(kk * ncols));
        im2col(x, c.k, chunks.r0(ch), chunks.r1(ch), buf.data());
        P.noalias() += DY * ConstMap(buf.data(), kk, ncols).transpose();
      }
    }
  });
  Eigen::Map<RowMat> DW(dw.data(), c.cout, kk);
  RowMat acc = std::move(partial[0]);
  for (size_t g = 1; g < partial.size(); ++g) { acc += partial[g]; }
  DW += acc;

  if (!db.empty()) {
    if (Index(db.size()) != c.cout) { throw ShapeError("conv backward: db size mismatch"); }
    for (Index co = 0; co < c.cout; ++co) {
      Real const *p = dy.channel(co);
      double s = 0;
      for (Index i = 0; i < n; ++i) { s += p[i]; }
      db[size_t(co)] += Real(s);
    }
  }

  if (!want_dx) { return {}; }
  // The adjoint of a zero-padded stride-1 convolution is the convolution with the kernel
  // flipped in space and transposed in channels.
  int const k3 = c.k * c.k * c.k;
  std::vector<Real> wt(w.size());
  for (Index co = 0; co < c.cout; ++co) {
    for (Index ci = 0; ci < c.cin; ++ci) {
      Real const *src = w.data() + (co * c.cin + ci) * k3;
      Real *dst = wt.data() + (ci * c.cout + co) * k3;
      for (int t = 0; t < k3; ++t) { dst[t] = src[k3 - 1 - t]; }
    }
  }
  Conv const adj{c.cout, c.cin, c.k};
  return conv_forward(adj, dy, wt, {});
}

NormState instance_norm_forward(FeatureMap &x, std::span<Real const> gamma, std::span<Real const> beta)
{
  Index const nc = x.channels();
  if (Index(gamma.size()) != nc || Index(beta.size()) != nc) { throw ShapeError("instance norm affine size mismatch"); }
  NormState s{FeatureMap(x.dims(), nc), std::vector<Real>(size_t(nc))};
  Index const n = x.voxels();
  parallel_for(nc, [&](Index c) {
    Real *p = x.channel(c);
    Real *h = s.xhat.channel(c);
    double mean = 0;
    for (Index i = 0; i < n; ++i) { mean += p[i]; }
    mean /= double(n);
    double var = 0;
    for (Index i = 0; i < n; ++i) {
      double const d = p[i] - mean;
      var += d * d;
    }
    var /= double(n);
    Real const inv = Real(1.0 / std::sqrt(var + double(kNormEps)));
    s.inv_std[size_t(c)] = inv;
    Real const m = Real(mean), g = gamma[size_t(c)], b = beta[size_t(c)];
    for (Index i = 0; i < n; ++i) {
      h[i] = (p[i] - m) * inv;
      p[i] = g * h[i] + b;
    }
  });
  return s;
}

void instance_norm_backward(NormState const &s, FeatureMap &dy, std::span<Real const> gamma, std::span<Real> dgamma,
                            std::span<Real> dbeta)
{
  Index const nc = dy.channels();
  Index const n = dy.voxels();
  parallel_for(nc, [&](Index c) {
    Real *d = dy.channel(c);
    Real const *h = s.xhat.channel(c);
    double sd = 0, sdh = 0;
    for (Index i = 0; i < n; ++i) {
      sd += d[i];
      sdh += double(d[i]) * h[i];
    }
    dgamma[size_t(c)] += Real(sdh);
    dbeta[size_t(c)] += Real(sd);
    Real const g = gamma[size_t(c)];
    Real const inv = s.inv_std[size_t(c)];
    // dxhat = g * dy; dx = inv * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
    Real const mean_d = Real(sd / double(n)) * g;
    Real const mean_dh = Real(sdh / double(n)) * g;
    for (Index i = 0; i < n; ++i) { d[i] = inv * (g * d[i] - mean_d - h[i] * mean_dh); }
  });
}

void relu_forward(FeatureMap &x)
{
  for (auto &v : x.values()) { v = v > 0 ? v : Real(0); }
}

void relu_backward(FeatureMap const &y, FeatureMap &dy)
{
  Real const *p = y.data();
  Real *d = dy.data();
  for (Index i = 0; i < dy.size(); ++i) {
    if (!(p[i] > 0)) { d[i] = 0; }
  }
}

FeatureMap maxpool_forward(FeatureMap const &x, PoolState &state)
{
  auto const [nx, ny, nz] = x.dims();
  if (nx % 2 || ny % 2 || nz % 2) { throw ShapeError("max pooling needs even dimensions"); }
  Dims3 const od = half_dims(x.dims());
  FeatureMap y(od, x.channels());
  state.in_dims = x.dims();
  state.argmax.assign(size_t(y.size()), 0);
  Index const on = y.voxels();
  parallel_for(x.channels(), [&](Index c) {
    Real const *src = x.channel(c);
    Real *dst = y.channel(c);
    std::int32_t *arg = state.argmax.data() + c * on;
    for (Index z = 0; z < od[2]; ++z) {
      for (Index yy = 0; yy < od[1]; ++yy) {
        for (Index xx = 0; xx < od[0]; ++xx) {
          Index best = -1;
          Real bv = 0;
          for (int dz = 0; dz < 2; ++dz) {
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                Index const i = (2 * xx + dx) + nx * ((2 * yy + dy) + ny * (2 * z + dz));
                if (best < 0 || src[i] > bv) {
                  best = i;
                  bv = src[i];
                }
              }
            }
          }
          Index const o = xx + od[0] * (yy + od[1] * z);
          dst[o] = bv;
          arg[o] = std::int32_t(best);
        }
      }
    }
  });
  return y;
}

FeatureMap maxpool_backward(FeatureMap const &dy, PoolState const &state, Index channels)
{
  FeatureMap dx(state.in_dims, channels);
  Index const on = dy.voxels();
  parallel_for(channels, [&](Index c) {
    Real const *g = dy.channel(c);
    Real *d = dx.channel(c);
    std::int32_t const *arg = state.argmax.data() + c * on;
    for (Index o = 0; o < on; ++o) { d[arg[o]] += g[o]; }
  });
  return dx;
}

FeatureMap upsample_forward(FeatureMap const &x)
{
  Dims3 const id = x.dims();
  Dims3 const od = double_dims(id);
  FeatureMap y(od, x.channels());
  parallel_for(x.channels(), [&](Index c) {
    Real const *src = x.channel(c);
    Real *dst = y.channel(c);
    for (Index z = 0; z < od[2]; ++z) {
      for (Index yy = 0; yy < od[1]; ++yy) {
        Real const *s = src + id[0] * (yy / 2 + id[1] * (z / 2));
        Real *d = dst + od[0] * (yy + od[1] * z);
        for (Index xx = 0; xx < od[0]; ++xx) { d[xx] = s[xx / 2]; }
      }
    }
  });
  return y;
}

FeatureMap upsample_backward(FeatureMap const &dy)
{
  Dims3 const od = dy.dims();
  Dims3 const id = half_dims(od);
  FeatureMap dx(id, dy.channels());
  parallel_for(dy.channels(), [&](Index c) {
    Real const *g = dy.channel(c);
    Real *d = dx.channel(c);
    for (Index z = 0; z < od[2]; ++z) {
      for (Index yy = 0; yy < od[1]; ++yy) {
        Real const *s = g + od[0] * (yy + od[1] * z);
        Real *t = d + id[0] * (yy / 2 + id[1] * (z / 2));
        for (Index xx = 0; xx < od[0]; ++xx) { t[xx / 2] += s[xx]; }
      }
    }
  });
  return dx;
}

FeatureMap concat_channels(FeatureMap const &a, FeatureMap const &b)
{
  if (a.dims() != b.dims()) { throw ShapeError("concat: spatial dimensions differ"); }
  FeatureMap y(a.dims(), a.channels() + b.channels());
  std::copy(a.values().begin(), a.values().end(), y.data());
  std::copy(b.values().begin(), b.values().end(), y.data() + a.size());
  return y;
}

void split_channels(FeatureMap const &dy, Index ca, FeatureMap &da, FeatureMap &db)
{
  da = FeatureMap(dy.dims(), ca);
  db = FeatureMap(dy.dims(), dy.channels() - ca);
  std::copy(dy.data(), dy.data() + da.size(), da.data());
  std::copy(dy.data() + da.size(), dy.data() + dy.size(), db.data());
}

} // namespace modip::nn
