#pragma once

// Direct 3D convolution, forward and backward.
//
// Convention: cross-correlation, weights applied as stored (no flip):
//   out[o, z, y, x] = bias[o] + sum_i sum_{a,b,c} in[i, z+a-p, y+b-p, x+c-p] * w[o, i, a, b, c]
// with p = (k-1)/2 for same_zero padding (out-of-range reads are 0) and
// p = 0 for valid padding (output shrinks by k-1 per axis).
//
// Reduction order per output voxel is fixed: bias, then input channel, then
// kernel depth, row, column. Work is split over (channel, depth-slice) pairs
// and each output element is produced by one thread, so results do not
// depend on the thread count.

#include <algorithm>
#include <utility>

#include "oocs/parallel.hpp"
#include "oocs/tensor.hpp"

namespace oocs {

enum class Padding { same_zero, valid };

inline Index conv_offset(Index k, Padding padding) { return padding == Padding::same_zero ? (k - 1) / 2 : 0; }

inline Shape3 conv_output_shape(Shape3 in, Index k, Padding padding) {
  if (padding == Padding::same_zero) return in;
  if (k > in.d || k > in.h || k > in.w)
    throw DimensionError("valid convolution needs k <= every spatial dim (k=" + std::to_string(k) +
                         ", input " + in.str() + ")");
  return {in.d - k + 1, in.h - k + 1, in.w - k + 1};
}

namespace detail {

// [lo, hi) of output positions o such that 0 <= o + tap - p < n_in.
inline std::pair<Index, Index> valid_range(Index n_out, Index n_in, Index tap, Index p) {
  const Index lo = std::max<Index>(0, p - tap);
  const Index hi = std::min<Index>(n_out, n_in - tap + p);
  return {lo, std::max(lo, hi)};
}

}  // namespace detail

template <typename Scalar>
FeatureMap<Scalar> conv3d_forward(const FeatureMap<Scalar>& input, const ConvWeights<Scalar>& w,
                                  Padding padding) {
  if (input.channels() != w.c_in())
    throw DimensionError("conv3d_forward: input has " + std::to_string(input.channels()) +
                         " channels, weights expect " + std::to_string(w.c_in()));
  const Index k = w.k();
  const Index p = conv_offset(k, padding);
  const Shape3 in = input.spatial();
  const Shape3 out_shape = conv_output_shape(in, k, padding);
  FeatureMap<Scalar> out(w.c_out(), out_shape);

  const Scalar* src = input.array().data();
  const Scalar* wts = w.array().data();
  Scalar* dst = out.array().data();
  const Index in_plane = in.h * in.w;
  const Index out_plane = out_shape.h * out_shape.w;

  parallel_for(w.c_out() * out_shape.d, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t job = begin; job < end; ++job) {
      const Index o = job / out_shape.d;
      const Index z = job % out_shape.d;
      Scalar* slab = dst + (o * out_shape.d + z) * out_plane;
      std::fill(slab, slab + out_plane, w.has_bias() ? w.bias()[o] : Scalar(0));
      for (Index i = 0; i < w.c_in(); ++i) {
        const Scalar* chan = src + i * in.d * in_plane;
        for (Index a = 0; a < k; ++a) {
          const Index zi = z + a - p;
          if (zi < 0 || zi >= in.d) continue;
          const Scalar* plane = chan + zi * in_plane;
          for (Index b = 0; b < k; ++b) {
            const auto [y0, y1] = detail::valid_range(out_shape.h, in.h, b, p);
            for (Index c = 0; c < k; ++c) {
              const Scalar weight = wts[w.index(o, i, a, b, c)];
              if (weight == Scalar(0)) continue;
              const auto [x0, x1] = detail::valid_range(out_shape.w, in.w, c, p);
              for (Index y = y0; y < y1; ++y) {
                const Scalar* in_row = plane + (y + b - p) * in.w;
                Scalar* out_row = slab + y * out_shape.w;
                for (Index x = x0; x < x1; ++x) out_row[x] += weight * in_row[x + c - p];
              }
            }
          }
        }
      }
    }
  });
  return out;
}

template <typename Scalar>
struct ConvGradients {
  FeatureMap<Scalar> grad_input;
  ConvWeights<Scalar> grad_weights;
};

namespace detail {

template <typename Scalar>
Shape3 check_backward_shapes(const FeatureMap<Scalar>& input, const ConvWeights<Scalar>& w,
                             const FeatureMap<Scalar>& grad_out, Padding padding) {
  if (input.channels() != w.c_in()) throw DimensionError("conv3d_backward: input/weight channel mismatch");
  const Shape3 out_shape = conv_output_shape(input.spatial(), w.k(), padding);
  if (grad_out.channels() != w.c_out() || !(grad_out.spatial() == out_shape))
    throw DimensionError("conv3d_backward: grad_out shape does not match forward output");
  return out_shape;
}

}  // namespace detail

/// Gradient of the forward map with respect to its input (the adjoint convolution).
template <typename Scalar>
FeatureMap<Scalar> conv3d_backward_input(const FeatureMap<Scalar>& input, const ConvWeights<Scalar>& w,
                                         const FeatureMap<Scalar>& grad_out, Padding padding) {
  const Shape3 out_shape = detail::check_backward_shapes(input, w, grad_out, padding);
  const Index k = w.k();
  const Index p = conv_offset(k, padding);
  const Shape3 in = input.spatial();
  const Index in_plane = in.h * in.w;
  const Index out_plane = out_shape.h * out_shape.w;
  const Scalar* go = grad_out.array().data();
  const Scalar* wts = w.array().data();

  // grad_input[i, zi, yi, xi] = sum_o sum_{a,b,c} go[o, zi-a+p, yi-b+p, xi-c+p] * w[o, i, a, b, c]
  FeatureMap<Scalar> grad_input(w.c_in(), in);
  Scalar* gi = grad_input.array().data();
  parallel_for(w.c_in() * in.d, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t job = begin; job < end; ++job) {
      const Index i = job / in.d;
      const Index zi = job % in.d;
      Scalar* slab = gi + (i * in.d + zi) * in_plane;
      for (Index o = 0; o < w.c_out(); ++o) {
        const Scalar* chan = go + o * out_shape.d * out_plane;
        for (Index a = 0; a < k; ++a) {
          const Index zo = zi - a + p;
          if (zo < 0 || zo >= out_shape.d) continue;
          const Scalar* plane = chan + zo * out_plane;
          for (Index b = 0; b < k; ++b) {
            // input rows yi with 0 <= yi - b + p < out_h
            const Index y0 = std::max<Index>(0, b - p);
            const Index y1 = std::min<Index>(in.h, out_shape.h + b - p);
            for (Index c = 0; c < k; ++c) {
              const Scalar weight = wts[w.index(o, i, a, b, c)];
              if (weight == Scalar(0)) continue;
              const Index x0 = std::max<Index>(0, c - p);
              const Index x1 = std::min<Index>(in.w, out_shape.w + c - p);
              for (Index y = y0; y < y1; ++y) {
                const Scalar* g_row = plane + (y - b + p) * out_shape.w;
                Scalar* gi_row = slab + y * in.w;
                for (Index x = x0; x < x1; ++x) gi_row[x] += weight * g_row[x - c + p];
              }
            }
          }
        }
      }
    }
  });

  return grad_input;
}

/// Gradient of the forward map with respect to weights and bias.
template <typename Scalar>
ConvWeights<Scalar> conv3d_backward_weights(const FeatureMap<Scalar>& input, const ConvWeights<Scalar>& w,
                                            const FeatureMap<Scalar>& grad_out, Padding padding) {
  const Shape3 out_shape = detail::check_backward_shapes(input, w, grad_out, padding);
  const Index k = w.k();
  const Index p = conv_offset(k, padding);
  const Shape3 in = input.spatial();
  const Index in_plane = in.h * in.w;
  const Index out_plane = out_shape.h * out_shape.w;
  const Scalar* src = input.array().data();
  const Scalar* go = grad_out.array().data();

  // grad_w[o, i, a, b, c] = sum over output voxels of go[o, z, y, x] * in[i, z+a-p, y+b-p, x+c-p]
  ConvWeights<Scalar> grad_w(w.c_out(), w.c_in(), k, w.has_bias());
  Scalar* gw = grad_w.array().data();
  using Row = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
  parallel_for(w.c_out() * w.c_in(), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t job = begin; job < end; ++job) {
      const Index o = job / w.c_in();
      const Index i = job % w.c_in();
      const Scalar* gchan = go + o * out_shape.d * out_plane;
      const Scalar* ichan = src + i * in.d * in_plane;
      for (Index a = 0; a < k; ++a) {
        const auto [z0, z1] = detail::valid_range(out_shape.d, in.d, a, p);
        for (Index b = 0; b < k; ++b) {
          const auto [y0, y1] = detail::valid_range(out_shape.h, in.h, b, p);
          for (Index c = 0; c < k; ++c) {
            const auto [x0, x1] = detail::valid_range(out_shape.w, in.w, c, p);
            Scalar acc(0);
            for (Index z = z0; z < z1; ++z)
              for (Index y = y0; y < y1; ++y) {
                const Scalar* g_row = gchan + (z * out_shape.h + y) * out_shape.w + x0;
                const Scalar* i_row = ichan + ((z + a - p) * in.h + (y + b - p)) * in.w + (x0 + c - p);
                acc += (Row(g_row, x1 - x0) * Row(i_row, x1 - x0)).sum();
              }
            gw[grad_w.index(o, i, a, b, c)] = acc;
          }
        }
      }
    }
  });
  if (w.has_bias())
    for (Index o = 0; o < w.c_out(); ++o) grad_w.bias()[o] = grad_out.channel(o).sum();

  return grad_w;
}

template <typename Scalar>
ConvGradients<Scalar> conv3d_backward(const FeatureMap<Scalar>& input, const ConvWeights<Scalar>& w,
                                      const FeatureMap<Scalar>& grad_out, Padding padding) {
  return {conv3d_backward_input(input, w, grad_out, padding), conv3d_backward_weights(input, w, grad_out, padding)};
}

}  // namespace oocs
