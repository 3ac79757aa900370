#include "modip/unet.hpp"
#include "modip/rng.hpp"

#include <cmath>

namespace modip {

using nn::FeatureMap;

void NetworkConfig::validate() const
{
  if (depth < 1 || depth > 8) { throw ConfigError("network depth must be in [1, 8]"); }
  if (base_channels < 1) { throw ConfigError("base_channels must be >= 1"); }
}

void NetworkConfig::check_input(Dims3 const &dims) const
{
  for (Index d : dims) {
    if (d % divisor() != 0) {
      throw ConfigError("grid dimension " + std::to_string(d) + " is not divisible by 2^depth = " +
                        std::to_string(divisor()));
    }
  }
}

std::vector<ConvLayer> conv_layers(NetworkConfig const &cfg)
{
  cfg.validate();
  std::vector<ConvLayer> layers;
  auto ch = [&](int l) { return Index(cfg.base_channels) << l; };
  for (int l = 0; l < cfg.depth; ++l) {
    std::string const p = "enc" + std::to_string(l);
    layers.push_back({p + ".conv1", {l == 0 ? 1 : ch(l - 1), ch(l), 3}});
    layers.push_back({p + ".conv2", {ch(l), ch(l), 3}});
  }
  layers.push_back({"mid.conv1", {ch(cfg.depth - 1), ch(cfg.depth), 3}});
  layers.push_back({"mid.conv2", {ch(cfg.depth), ch(cfg.depth), 3}});
  for (int l = cfg.depth - 1; l >= 0; --l) {
    std::string const p = "dec" + std::to_string(l);
    layers.push_back({p + ".up", {ch(l + 1), ch(l), 3}});
    layers.push_back({p + ".conv1", {2 * ch(l), ch(l), 3}});
    layers.push_back({p + ".conv2", {ch(l), ch(l), 3}});
  }
  layers.push_back({"out", {ch(0), 1, 1}, false});
  return layers;
}

Index count_params(NetworkConfig const &cfg)
{
  cfg.validate();
  Index const norm = cfg.norm_enabled ? 2 : 0;
  auto block = [&](Index cin, Index cout) { return 27 * cin * cout + cout + norm * cout; };
  auto ch = [&](int l) { return Index(cfg.base_channels) << l; };
  Index total = 0;
  for (int l = 0; l < cfg.depth; ++l) {
    total += block(l == 0 ? 1 : ch(l - 1), ch(l)) + block(ch(l), ch(l));
    total += block(ch(l + 1), ch(l)) + block(2 * ch(l), ch(l)) + block(ch(l), ch(l));
  }
  total += block(ch(cfg.depth - 1), ch(cfg.depth)) + block(ch(cfg.depth), ch(cfg.depth));
  total += ch(0) + 1;
  return total;
}

Index ParameterSet::total_size() const
{
  Index n = 0;
  for (auto const &t : tensors) { n += t.size(); }
  return n;
}

ParamTensor const &ParameterSet::at(std::string const &name) const
{
  for (auto const &t : tensors) {
    if (t.name == name) { return t; }
  }
  throw ConfigError("no parameter tensor named " + name);
}

ParamTensor &ParameterSet::at(std::string const &name)
{
  return const_cast<ParamTensor &>(std::as_const(*this).at(name));
}

bool ParameterSet::same_layout(ParameterSet const &o) const
{
  if (tensors.size() != o.tensors.size()) { return false; }
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != o.tensors[i].name || tensors[i].shape != o.tensors[i].shape ||
        tensors[i].values.size() != o.tensors[i].values.size()) {
      return false;
    }
  }
  return true;
}

ParameterSet ParameterSet::zeros_like() const
{
  ParameterSet z;
  z.tensors.reserve(tensors.size());
  for (auto const &t : tensors) { z.tensors.push_back({t.name, t.shape, std::vector<Real>(t.values.size(), 0)}); }
  return z;
}

bool ParameterSet::all_finite() const
{
  for (auto const &t : tensors) {
    for (Real v : t.values) {
      if (!std::isfinite(v)) { return false; }
    }
  }
  return true;
}

ParameterSet param_layout(NetworkConfig const &cfg)
{
  ParameterSet p;
  auto add = [&](std::string name, std::vector<Index> shape) {
    Index n = 1;
    for (Index s : shape) { n *= s; }
    p.tensors.push_back({std::move(name), std::move(shape), std::vector<Real>(size_t(n), 0)});
  };
  for (auto const &l : conv_layers(cfg)) {
    Index const k = l.conv.k;
    add(l.name + ".weight", {l.conv.cout, l.conv.cin, k, k, k});
    add(l.name + ".bias", {l.conv.cout});
    if (l.norm_relu && cfg.norm_enabled) {
      add(l.name + ".norm.scale", {l.conv.cout});
      add(l.name + ".norm.shift", {l.conv.cout});
    }
  }
  return p;
}

ParameterSet init_params(NetworkConfig const &cfg)
{
  ParameterSet p = param_layout(cfg);
  Rng rng(cfg.seed);
  for (auto &t : p.tensors) {
    if (t.shape.size() == 5) {
      double const fan_in = double(t.shape[1] * t.shape[2] * t.shape[3] * t.shape[4]);
      if (cfg.zero_init_output && t.name == "out.weight") { continue; }
      double const sd = std::sqrt(2.0 / fan_in);
      for (auto &v : t.values) { v = Real(sd * rng.normal()); }
    } else if (t.name.ends_with(".norm.scale")) {
      std::fill(t.values.begin(), t.values.end(), Real(1));
    }
  }
  return p;
}

// Index of each layer's tensors inside a ParameterSet built by param_layout.
struct LayerParams
{
  size_t weight, bias, scale = 0, shift = 0;
  bool norm = false;
};

struct UNetAccess
{
  NetworkConfig const &cfg;
  std::vector<ConvLayer> layers;
  std::vector<LayerParams> index;

  explicit UNetAccess(NetworkConfig const &c)
    : cfg{c}
    , layers{conv_layers(c)}
  {
    size_t t = 0;
    for (auto const &l : layers) {
      LayerParams lp{t, t + 1};
      t += 2;
      if (l.norm_relu && cfg.norm_enabled) {
        lp.norm = true;
        lp.scale = t++;
        lp.shift = t++;
      }
      index.push_back(lp);
    }
  }

  void check_params(ParameterSet const &p) const
  {
    size_t expected = 0;
    for (auto const &lp : index) { expected += lp.norm ? 4 : 2; }
    if (p.tensors.size() != expected) { throw ShapeError("parameter set does not match network configuration"); }
    for (size_t i = 0; i < layers.size(); ++i) {
      if (p.tensors[index[i].weight].size() != layers[i].conv.weight_count() ||
          p.tensors[index[i].bias].size() != layers[i].conv.cout) {
        throw ShapeError("parameter tensor " + layers[i].name + " has the wrong size");
      }
    }
  }

  std::span<Real const> w(ParameterSet const &p, size_t li) const { return p.tensors[index[li].weight].values; }
  std::span<Real const> b(ParameterSet const &p, size_t li) const { return p.tensors[index[li].bias].values; }

  // conv -> (norm) -> relu; output and normalization state go to the cache.
  FeatureMap const &block(ForwardCache &c, ParameterSet const &p, size_t li, FeatureMap const &in) const
  {
    FeatureMap y = nn::conv_forward(layers[li].conv, in, w(p, li), b(p, li));
    if (index[li].norm) {
      c.norm_[li] = nn::instance_norm_forward(y, p.tensors[index[li].scale].values, p.tensors[index[li].shift].values);
    }
    nn::relu_forward(y);
    c.out_[li] = std::move(y);
    return c.out_[li];
  }

  FeatureMap block_backward(ForwardCache &c, ParameterSet const &p, ParamGrads &g, size_t li, FeatureMap const &in,
                            FeatureMap dy, bool want_dx) const
  {
    nn::relu_backward(c.out_[li], dy);
    auto const &lp = index[li];
    if (lp.norm) {
      nn::instance_norm_backward(c.norm_[li], dy, p.tensors[lp.scale].values, g.tensors[lp.scale].values,
                                 g.tensors[lp.shift].values);
      c.norm_[li] = {};
    }
    FeatureMap dx = nn::conv_backward(layers[li].conv, in, dy, w(p, li), g.tensors[lp.weight].values,
                                      g.tensors[lp.bias].values, want_dx);
    return dx;
  }

  ForwardResult forward(Volume const &input, ParameterSet const &p) const
  {
    cfg.check_input(input.grid().matrix());
    check_params(p);
    input.require_finite("network input");
    ForwardResult r;
    ForwardCache &c = r.cache;
    c.cfg_ = cfg;
    c.grid_ = input.grid();
    c.param_total_ = p.total_size();
    c.input_ = FeatureMap(input.grid().matrix(), 1);
    std::copy(input.values().begin(), input.values().end(), c.input_.data());
    c.out_.resize(layers.size());
    c.norm_.resize(layers.size());
    c.pooled_.resize(size_t(cfg.depth));
    c.pool_.resize(size_t(cfg.depth));

    size_t li = 0;
    FeatureMap const *cur = &c.input_;
    for (int l = 0; l < cfg.depth; ++l) {
      FeatureMap const &a = block(c, p, li++, *cur);
      FeatureMap const &skip = block(c, p, li++, a);
      c.pooled_[size_t(l)] = nn::maxpool_forward(skip, c.pool_[size_t(l)]);
      cur = &c.pooled_[size_t(l)];
    }
    cur = &block(c, p, li++, *cur);
    cur = &block(c, p, li++, *cur);
    for (int l = cfg.depth - 1; l >= 0; --l) {
      size_t const skip_li = size_t(2 * l + 1);
      FeatureMap const &u = block(c, p, li++, nn::upsample_forward(*cur));
      FeatureMap const &c1 = block(c, p, li++, nn::concat_channels(u, c.out_[skip_li]));
      cur = &block(c, p, li++, c1);
    }
    FeatureMap const y = nn::conv_forward(layers[li].conv, *cur, w(p, li), b(p, li));
    r.chi0 = Volume(input.grid(), std::vector<Real>(y.values().begin(), y.values().end()));
    c.valid_ = true;
    return r;
  }

  ParamGrads backward(Volume const &grad, ForwardCache &c, ParameterSet const &p) const
  {
    if (!c.valid_) { throw ConfigError("backward: forward cache is stale or already consumed"); }
    if (c.cfg_.depth != cfg.depth || c.cfg_.base_channels != cfg.base_channels ||
        c.cfg_.norm_enabled != cfg.norm_enabled || c.param_total_ != p.total_size()) {
      throw ConfigError("backward: forward cache belongs to a different network");
    }
    require_same_geometry(grad.grid(), c.grid_, "backward");
    check_params(p);
    c.valid_ = false;

    ParamGrads g = p.zeros_like();
    size_t const n_layers = layers.size();
    auto const D = size_t(cfg.depth);
    // Layer indices, matching forward order.
    auto enc1 = [](size_t l) { return 2 * l; };
    auto enc2 = [](size_t l) { return 2 * l + 1; };
    size_t const mid1 = 2 * D, mid2 = 2 * D + 1;
    auto dec = [&](size_t l) { return mid2 + 1 + 3 * (D - 1 - l); }; // .up; +1 conv1, +2 conv2
    size_t const last = n_layers - 1;

    FeatureMap gy(grad.grid().matrix(), 1);
    std::copy(grad.values().begin(), grad.values().end(), gy.data());
    size_t const top = dec(0) + 2;
    auto const &lp = index[last];
    FeatureMap d = nn::conv_backward(layers[last].conv, c.out_[top], gy, w(p, last), g.tensors[lp.weight].values,
                                     g.tensors[lp.bias].values, true);

    std::vector<FeatureMap> dskip(D);
    for (size_t l = 0; l < D; ++l) {
      size_t const u = dec(l);
      d = block_backward(c, p, g, u + 2, c.out_[u + 1], std::move(d), true);
      c.out_[u + 2].release();
      FeatureMap const cat = nn::concat_channels(c.out_[u], c.out_[enc2(l)]);
      d = block_backward(c, p, g, u + 1, cat, std::move(d), true);
      c.out_[u + 1].release();
      FeatureMap du;
      nn::split_channels(d, layers[u].conv.cout, du, dskip[l]);
      FeatureMap const &below = l + 1 < D ? c.out_[dec(l + 1) + 2] : c.out_[mid2];
      d = block_backward(c, p, g, u, nn::upsample_forward(below), std::move(du), true);
      c.out_[u].release();
      d = nn::upsample_backward(d);
    }
    d = block_backward(c, p, g, mid2, c.out_[mid1], std::move(d), true);
    c.out_[mid2].release();
    d = block_backward(c, p, g, mid1, c.pooled_[D - 1], std::move(d), true);
    c.out_[mid1].release();
    for (size_t l = D; l-- > 0;) {
      FeatureMap ds = nn::maxpool_backward(d, c.pool_[l], layers[enc2(l)].conv.cout);
      c.pooled_[l].release();
      Real *a = ds.data();
      Real const *b = dskip[l].data();
      for (Index i = 0; i < ds.size(); ++i) { a[i] += b[i]; }
      dskip[l].release();
      d = block_backward(c, p, g, enc2(l), c.out_[enc1(l)], std::move(ds), true);
      c.out_[enc2(l)].release();
      FeatureMap const &in = l == 0 ? c.input_ : c.pooled_[l - 1];
      d = block_backward(c, p, g, enc1(l), in, std::move(d), l > 0);
      c.out_[enc1(l)].release();
    }
    c = ForwardCache{};
    return g;
  }
};

ForwardResult forward(Volume const &input, ParameterSet const &params, NetworkConfig const &cfg)
{
  return UNetAccess(cfg).forward(input, params);
}

ParamGrads backward(Volume const &grad_chi0, ForwardCache &&cache, ParameterSet const &params,
                    NetworkConfig const &cfg)
{
  return UNetAccess(cfg).backward(grad_chi0, cache, params);
}

} // namespace modip
