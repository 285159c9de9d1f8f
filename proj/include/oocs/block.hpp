#pragma once

// OOCS encoder block.
//
// The c_out filters of a plain two-conv encoder block are split into an On
// and an Off pathway of c_out/2 filters each. The fixed On (resp. Off) DoG
// response of the block input is added to the first convolution of its
// pathway before the nonlinearity; the two pathway outputs are concatenated:
//
//   a1_on  = relu(conv(x, w1_on)  + conv(x, fixed_on))     a2_on  = relu(conv(a1_on,  w2_on))
//   a1_off = relu(conv(x, w1_off) + conv(x, fixed_off))    a2_off = relu(conv(a1_off, w2_off))
//   y = concat(a2_on, a2_off)
//
// All convolutions use same_zero padding. A scalar DoG acts on c_in channels
// through lift_kernel, which averages the per-channel responses.

#include <cstdint>

#include "oocs/conv.hpp"
#include "oocs/kernel.hpp"
#include "oocs/tensor.hpp"

namespace oocs {

enum class Activation { relu };

struct OocsBlockConfig {
  Index c_in = 1;
  Index c_out = 8;
  Index k_learn = 3;
  int k_oocs = 3;
  double gamma = 2.0 / 3.0;
  double c = 3.0;
  Activation activation = Activation::relu;
  bool bias = true;

  void validate() const;
  Index path_channels() const { return c_out / 2; }
  KernelSpec kernel_spec() const;
};

struct OocsBlockParams {
  ConvWeightsd w1_on, w1_off;
  ConvWeightsd w2_on, w2_off;
  /// Not trainable; fixed_off is the exact negation of fixed_on.
  ConvWeightsd fixed_on, fixed_off;

  Index learnable_count() const;
};

/// weights[o, i] = kernel / c_in for every output o and input i.
ConvWeightsd lift_kernel(const BalancedKernel& kernel, Index c_in, Index c_path);

/// Learnable weights drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)]
/// (bias included) with a seeded Philox stream; fixed kernels built from the
/// configured DoG.
OocsBlockParams init_block_params(const OocsBlockConfig& cfg, std::uint64_t seed);

/// Learnable parameters of a plain block conv(c_in -> c_out), conv(c_out -> c_out)
/// with the same kernel size and bias setting.
Index plain_block_parameter_count(const OocsBlockConfig& cfg);

/// Intermediates kept by block_forward for block_backward.
struct BlockCache {
  FeatureMapd x;
  FeatureMapd pre1_on, pre1_off;  // before the first relu
  FeatureMapd a1_on, a1_off;
  FeatureMapd pre2_on, pre2_off;  // before the second relu
};

struct BlockForward {
  FeatureMapd y;
  BlockCache cache;
};

/// Gradients of the four learnable tensors and the input. The fixed kernels
/// have no entry.
struct BlockGradients {
  FeatureMapd grad_x;
  ConvWeightsd w1_on, w1_off;
  ConvWeightsd w2_on, w2_off;
};

BlockForward block_forward(const FeatureMapd& x, const OocsBlockParams& p, const OocsBlockConfig& cfg);

BlockGradients block_backward(const FeatureMapd& grad_y, const BlockCache& cache, const OocsBlockParams& p,
                              const OocsBlockConfig& cfg);

}  // namespace oocs
