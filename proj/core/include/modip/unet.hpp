#pragma once

#include "layers.hpp"
#include "volume.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace modip {

/* Encoder-decoder with one skip connection per pooling level. Every level l < depth has
 * conv(C_{l-1} -> C_l), conv(C_l -> C_l), 2^3 max pooling, with C_l = base * 2^l; the
 * bottleneck doubles once more. Each decoder level upsamples (nearest, x2), convolves down
 * to C_l, concatenates the skip and applies two more convolutions. All 3^3 convolutions are
 * followed by instance normalization and ReLU; a linear 1^3 convolution maps to one channel.
 * With depth 1 and base 32 this is 8 convolutions and 1 concatenation.
 */
struct NetworkConfig
{
  int depth = 1;
  int base_channels = 32;
  std::uint64_t seed = 0;
  bool norm_enabled = true;
  // Start the linear 1^3 projection at zero so the first chi0 is 0 instead of an O(1) ppm
  // random field.
  bool zero_init_output = true;

  void validate() const;
  // Input grids must be divisible by this in every dimension.
  Index divisor() const { return Index(1) << depth; }
  void check_input(Dims3 const &dims) const;
};

struct ConvLayer
{
  std::string name;
  nn::Conv conv;
  bool norm_relu = true; // false only for the final 1^3 projection
};

// Convolutions in forward order.
std::vector<ConvLayer> conv_layers(NetworkConfig const &cfg);

// Closed-form parameter count.
Index count_params(NetworkConfig const &cfg);

struct ParamTensor
{
  std::string name;
  std::vector<Index> shape;
  std::vector<Real> values;

  Index size() const { return Index(values.size()); }
};

class ParameterSet
{
public:
  std::vector<ParamTensor> tensors;

  Index total_size() const;
  ParamTensor const &at(std::string const &name) const;
  ParamTensor &at(std::string const &name);
  bool same_layout(ParameterSet const &o) const;
  // Zero-filled tensors with the same names and shapes.
  ParameterSet zeros_like() const;
  bool all_finite() const;
};

using ParamGrads = ParameterSet;

// Zero-filled parameters in canonical order: per conv weight [cout, cin, k, k, k] and bias
// [cout]; per normalized conv a scale and shift [cout].
ParameterSet param_layout(NetworkConfig const &cfg);

// He-normal weights (std sqrt(2 / fan_in)), zero biases, unit scales, zero shifts, drawn from
// Rng(cfg.seed) in canonical tensor order. The output projection is zero when
// zero_init_output is set.
ParameterSet init_params(NetworkConfig const &cfg);

class ForwardCache
{
public:
  bool valid() const { return valid_; }

private:
  friend struct UNetAccess;
  bool valid_ = false;
  NetworkConfig cfg_;
  GridSpec grid_;
  Index param_total_ = 0;
  nn::FeatureMap input_;
  std::vector<nn::FeatureMap> out_;      // per conv layer, post-activation
  std::vector<nn::NormState> norm_;      // per conv layer
  std::vector<nn::FeatureMap> pooled_;   // per encoder level
  std::vector<nn::PoolState> pool_;      // per encoder level
};

struct ForwardResult
{
  Volume chi0;
  ForwardCache cache;
};

ForwardResult forward(Volume const &input, ParameterSet const &params, NetworkConfig const &cfg);

// Consumes the cache of the matching forward call.
ParamGrads backward(Volume const &grad_chi0, ForwardCache &&cache, ParameterSet const &params,
                    NetworkConfig const &cfg);

// Flat little-endian IEEE-754 payload plus a text manifest (<path>.manifest) with layer names,
// shapes and element offsets.
void save_params(std::string const &path, ParameterSet const &params);
ParameterSet load_params(std::string const &path);

} // namespace modip
