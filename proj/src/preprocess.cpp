#include "oocs/preprocess.hpp"

#include <cmath>
#include <numbers>

#include "oocs/error.hpp"
#include "oocs/random.hpp"

namespace oocs {
namespace {

Eigen::Affine3d resample_map(const Spacing& spacing, const Spacing& target) {
  Eigen::Affine3d map = Eigen::Affine3d::Identity();
  const Eigen::Vector3d ratio = target.cwiseQuotient(spacing);
  map.linear() = ratio.asDiagonal();
  map.translation() = 0.5 * ratio - Eigen::Vector3d::Constant(0.5);
  return map;
}

Eigen::Affine3d augment_physical(const AugmentOps& ops) {
  const double to_rad = std::numbers::pi / 180.0;
  const Eigen::Matrix3d rotation =
      (Eigen::AngleAxisd(ops.rotation_deg[0] * to_rad, Eigen::Vector3d::UnitX()) *
       Eigen::AngleAxisd(ops.rotation_deg[1] * to_rad, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(ops.rotation_deg[2] * to_rad, Eigen::Vector3d::UnitZ()))
          .toRotationMatrix();
  // Forward transform p -> s R p + t; warping samples its inverse.
  Eigen::Affine3d forward = Eigen::Affine3d::Identity();
  forward.linear() = ops.scale * rotation;
  forward.translation() = ops.translation_mm;
  return forward.inverse(Eigen::Affine);
}

template <typename Grid>
Shape3 crop_offsets(const Grid& g, Shape3 target, Shape3& src_start, Shape3& dst_start, Shape3& extent) {
  const Shape3 s = g.shape();
  auto axis = [](Index n, Index t, Index& src, Index& dst, Index& len) {
    if (n >= t) {
      src = (n - t) / 2;
      dst = 0;
      len = t;
    } else {
      src = 0;
      dst = (t - n) / 2;
      len = n;
    }
  };
  axis(s.d, target.d, src_start.d, dst_start.d, extent.d);
  axis(s.h, target.h, src_start.h, dst_start.h, extent.h);
  axis(s.w, target.w, src_start.w, dst_start.w, extent.w);
  return s;
}

template <typename Storage>
void copy_box(const Storage& src, Shape3 src_shape, Storage& dst, Shape3 dst_shape, Shape3 src_start,
              Shape3 dst_start, Shape3 extent) {
  for (Index z = 0; z < extent.d; ++z)
    for (Index y = 0; y < extent.h; ++y) {
      const Index from = ((src_start.d + z) * src_shape.h + (src_start.h + y)) * src_shape.w + src_start.w;
      const Index to = ((dst_start.d + z) * dst_shape.h + (dst_start.h + y)) * dst_shape.w + dst_start.w;
      dst.segment(to, extent.w) = src.segment(from, extent.w);
    }
}

Eigen::Affine3d flip_map(Shape3 s, int axis) {
  if (axis < 0 || axis > 2) throw DomainError("flip axis must be 0, 1 or 2");
  const Index n[3] = {s.d, s.h, s.w};
  Eigen::Affine3d map = Eigen::Affine3d::Identity();
  map.linear()(axis, axis) = -1.0;
  map.translation()[axis] = static_cast<double>(n[axis] - 1);
  return map;
}

}  // namespace

Shape3 resampled_shape(Shape3 shape, const Spacing& spacing, const Spacing& target) {
  validate_spacing(target);
  auto axis = [](Index n, double s, double t) {
    return static_cast<Index>(std::floor(static_cast<double>(n) * s / t + 0.5));
  };
  const Shape3 out{axis(shape.d, spacing[0], target[0]), axis(shape.h, spacing[1], target[1]),
                   axis(shape.w, spacing[2], target[2])};
  if (out.d <= 0 || out.h <= 0 || out.w <= 0)
    throw ResampleError("resampling " + shape.str() + " to the target spacing gives an empty grid");
  return out;
}

Volumed resample(const Volumed& v, const ResampleSpec& spec) {
  const Shape3 out = resampled_shape(v.shape(), v.spacing(), spec.target_spacing);
  return warp(v, resample_map(v.spacing(), spec.target_spacing), out, spec.target_spacing, spec.mode,
              Boundary::clamp);
}

BinaryMask resample(const BinaryMask& m, const Spacing& target_spacing) {
  const Shape3 out = resampled_shape(m.shape(), m.spacing(), target_spacing);
  return warp(m, resample_map(m.spacing(), target_spacing), out, target_spacing, Boundary::clamp);
}

Volumed zscore(const Volumed& v) {
  const double mean = v.array().mean();
  const Eigen::ArrayXd centered = v.array() - mean;
  const double stddev = std::sqrt(centered.square().mean());
  // A spread at rounding level (e.g. an interpolated constant) counts as zero.
  const double scale = v.array().abs().maxCoeff();
  if (!(stddev > 1e-13 * scale) || !std::isfinite(stddev))
    throw NormalizationError("z-score needs a volume with nonzero variance");
  Eigen::ArrayXd out = centered / stddev;
  // One refinement pass removes the rounding left in the first mean.
  out -= out.mean();
  return Volumed(v.shape(), v.spacing(), std::move(out));
}

Volumed crop_or_pad(const Volumed& v, Shape3 target) {
  validate_shape(target);
  Shape3 src_start, dst_start, extent;
  crop_offsets(v, target, src_start, dst_start, extent);
  Volumed out(target, v.spacing());
  copy_box(v.array(), v.shape(), out.array(), target, src_start, dst_start, extent);
  return out;
}

BinaryMask crop_or_pad(const BinaryMask& m, Shape3 target) {
  validate_shape(target);
  Shape3 src_start, dst_start, extent;
  crop_offsets(m, target, src_start, dst_start, extent);
  BinaryMask::Storage data = BinaryMask::Storage::Zero(target.voxels());
  copy_box(m.array(), m.shape(), data, target, src_start, dst_start, extent);
  return BinaryMask(target, m.spacing(), std::move(data));
}

bool AugmentOps::is_identity() const {
  return flip_axis < 0 && scale == 1.0 && rotation_deg.isZero(0.0) && translation_mm.isZero(0.0);
}

AugmentOps draw_augment(const AugmentRanges& ranges, std::uint64_t seed) {
  RandomStream rng(seed);
  AugmentOps ops;
  ops.flip_axis = rng.uniform() < ranges.flip_probability ? ranges.flip_axis : -1;
  ops.scale = rng.uniform(1.0 - ranges.max_scale_delta, 1.0 + ranges.max_scale_delta);
  for (int a = 0; a < 3; ++a) ops.rotation_deg[a] = rng.uniform(-ranges.max_rot_deg, ranges.max_rot_deg);
  for (int a = 0; a < 3; ++a) ops.translation_mm[a] = rng.uniform(-ranges.max_trans_mm, ranges.max_trans_mm);
  return ops;
}

Volumed flip(const Volumed& v, int axis) {
  return warp(v, flip_map(v.shape(), axis), v.shape(), v.spacing(), Interpolation::nearest, Boundary::zero);
}

BinaryMask flip(const BinaryMask& m, int axis) {
  return warp(m, flip_map(m.shape(), axis), m.shape(), m.spacing(), Boundary::zero);
}

std::pair<Volumed, BinaryMask> augment(const Volumed& v, const BinaryMask& m, const AugmentOps& ops) {
  if (!(v.shape() == m.shape()) || v.spacing() != m.spacing())
    throw DimensionError("augment: image and mask are not aligned");
  if (!(ops.scale > 0.0)) throw DomainError("augment scale must be > 0");
  Volumed image = ops.flip_axis >= 0 ? flip(v, ops.flip_axis) : v;
  BinaryMask mask = ops.flip_axis >= 0 ? flip(m, ops.flip_axis) : m;
  AugmentOps rest = ops;
  rest.flip_axis = -1;
  if (rest.is_identity()) return {std::move(image), std::move(mask)};
  const Eigen::Affine3d map = index_map_about_center(augment_physical(rest), v.shape(), v.spacing());
  Volumed warped_image = warp(image, map, v.shape(), v.spacing(), Interpolation::trilinear, Boundary::zero);
  BinaryMask warped_mask = warp(mask, map, v.shape(), v.spacing(), Boundary::zero);
  return {std::move(warped_image), std::move(warped_mask)};
}

std::pair<Volumed, BinaryMask> augment(const Volumed& v, const BinaryMask& m, const AugmentRanges& ranges,
                                       std::uint64_t seed) {
  return augment(v, m, draw_augment(ranges, seed));
}

}  // namespace oocs
