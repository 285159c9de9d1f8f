#include "oocs/block.hpp"

#include <cmath>
#include <utility>

#include "oocs/error.hpp"
#include "oocs/random.hpp"

namespace oocs {
namespace {

FeatureMapd relu(const FeatureMapd& pre) {
  return FeatureMapd(pre.channels(), pre.spatial(), pre.array().max(0.0));
}

// d relu: passes the gradient where the pre-activation was strictly positive.
FeatureMapd relu_backward(const FeatureMapd& grad, const FeatureMapd& pre) {
  return FeatureMapd(grad.channels(), grad.spatial(), (pre.array() > 0.0).select(grad.array(), 0.0));
}

FeatureMapd slice_channels(const FeatureMapd& f, Index first, Index count) {
  const Index plane = f.spatial().voxels();
  return FeatureMapd(count, f.spatial(), f.array().segment(first * plane, count * plane));
}

ConvWeightsd random_weights(RandomStream& rng, Index c_out, Index c_in, Index k, bool bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * k * k * k));
  ConvWeightsd w(c_out, c_in, k, bias);
  for (Index i = 0; i < w.size(); ++i) w.array()[i] = rng.uniform(-bound, bound);
  if (bias)
    for (Index o = 0; o < c_out; ++o) w.bias()[o] = rng.uniform(-bound, bound);
  return w;
}

void check_params(const OocsBlockParams& p, const OocsBlockConfig& cfg) {
  const Index half = cfg.path_channels();
  auto expect = [](const ConvWeightsd& w, Index c_out, Index c_in, Index k, const char* name) {
    if (w.c_out() != c_out || w.c_in() != c_in || w.k() != k)
      throw DimensionError(std::string("OOCS block parameter ") + name + " has the wrong shape");
  };
  expect(p.w1_on, half, cfg.c_in, cfg.k_learn, "w1_on");
  expect(p.w1_off, half, cfg.c_in, cfg.k_learn, "w1_off");
  expect(p.w2_on, half, half, cfg.k_learn, "w2_on");
  expect(p.w2_off, half, half, cfg.k_learn, "w2_off");
  expect(p.fixed_on, half, cfg.c_in, cfg.k_oocs, "fixed_on");
  expect(p.fixed_off, half, cfg.c_in, cfg.k_oocs, "fixed_off");
}

}  // namespace

void OocsBlockConfig::validate() const {
  if (c_in < 1) throw DimensionError("OOCS block needs c_in >= 1");
  if (c_out < 2 || c_out % 2 != 0) throw DimensionError("OOCS block needs an even c_out >= 2");
  if (k_learn < 1 || k_learn % 2 == 0) throw InvalidKernelError("learnable kernel size must be odd");
  kernel_spec().validate();
}

KernelSpec OocsBlockConfig::kernel_spec() const {
  KernelSpec spec;
  spec.k = k_oocs;
  spec.gamma = gamma;
  spec.c = c;
  spec.dims = KernelDims::three;
  return spec;
}

Index OocsBlockParams::learnable_count() const {
  return w1_on.parameter_count() + w1_off.parameter_count() + w2_on.parameter_count() + w2_off.parameter_count();
}

ConvWeightsd lift_kernel(const BalancedKernel& kernel, Index c_in, Index c_path) {
  if (kernel.spec.dims != KernelDims::three) throw DimensionError("lift_kernel needs a 3D kernel");
  if (c_in < 1 || c_path < 1) throw DimensionError("lift_kernel needs c_in >= 1 and c_path >= 1");
  const Index taps = kernel.weights.size();
  ConvWeightsd w(c_path, c_in, kernel.k());
  const Eigen::ArrayXd scaled = kernel.weights / static_cast<double>(c_in);
  for (Index pair = 0; pair < c_path * c_in; ++pair) w.array().segment(pair * taps, taps) = scaled;
  return w;
}

OocsBlockParams init_block_params(const OocsBlockConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  RandomStream rng(seed);
  const Index half = cfg.path_channels();
  OocsBlockParams p;
  p.w1_on = random_weights(rng, half, cfg.c_in, cfg.k_learn, cfg.bias);
  p.w1_off = random_weights(rng, half, cfg.c_in, cfg.k_learn, cfg.bias);
  p.w2_on = random_weights(rng, half, half, cfg.k_learn, cfg.bias);
  p.w2_off = random_weights(rng, half, half, cfg.k_learn, cfg.bias);
  p.fixed_on = lift_kernel(make_kernel(cfg.kernel_spec(), Polarity::on), cfg.c_in, half);
  p.fixed_off = lift_kernel(make_kernel(cfg.kernel_spec(), Polarity::off), cfg.c_in, half);
  return p;
}

Index plain_block_parameter_count(const OocsBlockConfig& cfg) {
  const Index taps = cfg.k_learn * cfg.k_learn * cfg.k_learn;
  const Index bias = cfg.bias ? cfg.c_out : 0;
  return (cfg.c_out * cfg.c_in * taps + bias) + (cfg.c_out * cfg.c_out * taps + bias);
}

BlockForward block_forward(const FeatureMapd& x, const OocsBlockParams& p, const OocsBlockConfig& cfg) {
  cfg.validate();
  if (x.channels() != cfg.c_in)
    throw DimensionError("OOCS block expects " + std::to_string(cfg.c_in) + " input channels, got " +
                         std::to_string(x.channels()));
  check_params(p, cfg);
  constexpr Padding same = Padding::same_zero;

  BlockCache cache;
  cache.x = x;
  cache.pre1_on = conv3d_forward(x, p.w1_on, same);
  cache.pre1_on.array() += conv3d_forward(x, p.fixed_on, same).array();
  cache.pre1_off = conv3d_forward(x, p.w1_off, same);
  cache.pre1_off.array() += conv3d_forward(x, p.fixed_off, same).array();
  cache.a1_on = relu(cache.pre1_on);
  cache.a1_off = relu(cache.pre1_off);
  cache.pre2_on = conv3d_forward(cache.a1_on, p.w2_on, same);
  cache.pre2_off = conv3d_forward(cache.a1_off, p.w2_off, same);

  FeatureMapd y = concat_channels(relu(cache.pre2_on), relu(cache.pre2_off));
  return {std::move(y), std::move(cache)};
}

BlockGradients block_backward(const FeatureMapd& grad_y, const BlockCache& cache, const OocsBlockParams& p,
                              const OocsBlockConfig& cfg) {
  cfg.validate();
  check_params(p, cfg);
  const Index half = cfg.path_channels();
  if (grad_y.channels() != cfg.c_out || !(grad_y.spatial() == cache.x.spatial()))
    throw DimensionError("block_backward: grad_y shape does not match the block output");
  constexpr Padding same = Padding::same_zero;

  struct PathGradients {
    FeatureMapd grad_x;
    ConvWeightsd w1, w2;
  };
  auto pathway = [&](const FeatureMapd& grad_a2, const FeatureMapd& pre2, const FeatureMapd& a1,
                     const FeatureMapd& pre1, const ConvWeightsd& w1, const ConvWeightsd& w2,
                     const ConvWeightsd& fixed) {
    const FeatureMapd g_pre2 = relu_backward(grad_a2, pre2);
    PathGradients out;
    out.w2 = conv3d_backward_weights(a1, w2, g_pre2, same);
    const FeatureMapd g_pre1 = relu_backward(conv3d_backward_input(a1, w2, g_pre2, same), pre1);
    out.w1 = conv3d_backward_weights(cache.x, w1, g_pre1, same);
    // The fixed kernel contributes to the input gradient only.
    out.grad_x = conv3d_backward_input(cache.x, w1, g_pre1, same);
    out.grad_x.array() += conv3d_backward_input(cache.x, fixed, g_pre1, same).array();
    return out;
  };

  PathGradients on = pathway(slice_channels(grad_y, 0, half), cache.pre2_on, cache.a1_on, cache.pre1_on, p.w1_on,
                             p.w2_on, p.fixed_on);
  PathGradients off = pathway(slice_channels(grad_y, half, half), cache.pre2_off, cache.a1_off, cache.pre1_off,
                              p.w1_off, p.w2_off, p.fixed_off);

  BlockGradients g;
  g.grad_x = std::move(on.grad_x);
  g.grad_x.array() += off.grad_x.array();
  g.w1_on = std::move(on.w1);
  g.w1_off = std::move(off.w1);
  g.w2_on = std::move(on.w2);
  g.w2_off = std::move(off.w2);
  return g;
}

}  // namespace oocs
