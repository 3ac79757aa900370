#pragma once

#include "grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace modip::nn {

// Multi-channel 3D activation, channel-major: element (c, v) at c * voxels + v.
class FeatureMap
{
public:
  FeatureMap() = default;
  FeatureMap(Dims3 dims, Index channels);

  Dims3 const &dims() const { return dims_; }
  Index channels() const { return channels_; }
  Index voxels() const { return dims_[0] * dims_[1] * dims_[2]; }
  Index size() const { return static_cast<Index>(data_.size()); }

  Real *data() { return data_.data(); }
  Real const *data() const { return data_.data(); }
  Real *channel(Index c) { return data_.data() + c * voxels(); }
  Real const *channel(Index c) const { return data_.data() + c * voxels(); }
  std::span<Real> values() { return data_; }
  std::span<Real const> values() const { return data_; }

  void set_zero();
  void release();

private:
  Dims3 dims_{0, 0, 0};
  Index channels_ = 0;
  std::vector<Real> data_;
};

Dims3 half_dims(Dims3 d);
Dims3 double_dims(Dims3 d);

/* Stride-1 convolution with cubic kernel of odd size k and zero padding k/2.
 * Weights are laid out [cout][cin][kz][ky][kx]; bias may be empty.
 */
struct Conv
{
  Index cin = 0;
  Index cout = 0;
  int k = 3;

  Index weight_count() const { return cout * cin * k * k * k; }
};

FeatureMap conv_forward(Conv const &c, FeatureMap const &x, std::span<Real const> w, std::span<Real const> b);

// Accumulates into dw and db (which must be sized); returns dx when want_dx.
FeatureMap conv_backward(Conv const &c, FeatureMap const &x, FeatureMap const &dy, std::span<Real const> w,
                         std::span<Real> dw, std::span<Real> db, bool want_dx);

// Per-channel spatial normalization with learnable affine, followed by optional ReLU.
struct NormState
{
  FeatureMap xhat;
  std::vector<Real> inv_std;
};

inline constexpr Real kNormEps = Real(1e-5);

// Normalizes x in place into y = gamma * xhat + beta; returns xhat and 1/sigma.
NormState instance_norm_forward(FeatureMap &x, std::span<Real const> gamma, std::span<Real const> beta);
// dy is replaced by dx; dgamma/dbeta accumulate.
void instance_norm_backward(NormState const &s, FeatureMap &dy, std::span<Real const> gamma, std::span<Real> dgamma,
                            std::span<Real> dbeta);

void relu_forward(FeatureMap &x);
// Zeroes dy where the forward output y was not positive.
void relu_backward(FeatureMap const &y, FeatureMap &dy);

struct PoolState
{
  Dims3 in_dims{0, 0, 0};
  std::vector<std::int32_t> argmax; // offset of the winning child within the input channel
};

// 2x2x2 max pooling, stride 2; ties go to the first child in (z, y, x) order.
FeatureMap maxpool_forward(FeatureMap const &x, PoolState &state);
FeatureMap maxpool_backward(FeatureMap const &dy, PoolState const &state, Index channels);

// Nearest-neighbour x2 upsampling and its adjoint (2x2x2 sum pooling).
FeatureMap upsample_forward(FeatureMap const &x);
FeatureMap upsample_backward(FeatureMap const &dy);

FeatureMap concat_channels(FeatureMap const &a, FeatureMap const &b);
// Splits dy of a concatenation into the parts belonging to a (first ca channels) and b.
void split_channels(FeatureMap const &dy, Index ca, FeatureMap &da, FeatureMap &db);

} // namespace modip::nn
