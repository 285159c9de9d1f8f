#pragma once

// Data preparation: isotropic resampling, z-score normalization, center
// crop/pad, and paired image/mask augmentation.

#include <cstdint>
#include <utility>

#include <Eigen/Geometry>

#include "oocs/interpolate.hpp"
#include "oocs/tensor.hpp"

namespace oocs {

struct ResampleSpec {
  Spacing target_spacing = Spacing::Constant(0.6);
  Interpolation mode = Interpolation::trilinear;
};

/// Output shape per axis is round-half-up(n * spacing / target). Output voxel
/// i samples input index (i + 0.5) * target / spacing - 0.5, clamped to the
/// grid.
Shape3 resampled_shape(Shape3 shape, const Spacing& spacing, const Spacing& target);
Volumed resample(const Volumed& v, const ResampleSpec& spec);
BinaryMask resample(const BinaryMask& m, const Spacing& target_spacing);

/// (v - mean) / std with the population standard deviation of this volume.
Volumed zscore(const Volumed& v);

/// Center crop where the volume is larger than `target`, symmetric zero pad
/// where smaller (the odd voxel goes after).
Volumed crop_or_pad(const Volumed& v, Shape3 target);
BinaryMask crop_or_pad(const BinaryMask& m, Shape3 target);

/// One concrete geometric augmentation. Rotation angles are in degrees about
/// the z, y and x axes (applied in that order), translation in mm (z, y, x),
/// all about the volume center. `flip_axis` mirrors that index axis first
/// (-1: no flip; 2, the in-plane x axis, is the usual axial flip).
struct AugmentOps {
  int flip_axis = -1;
  double scale = 1.0;
  Eigen::Vector3d rotation_deg = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation_mm = Eigen::Vector3d::Zero();

  bool is_identity() const;
};

/// Ranges for seeded random augmentation.
struct AugmentRanges {
  double flip_probability = 0.5;
  int flip_axis = 2;
  double max_scale_delta = 0.1;  ///< scale uniform in [1 - d, 1 + d]
  double max_rot_deg = 10.0;
  double max_trans_mm = 5.0;
};

AugmentOps draw_augment(const AugmentRanges& ranges, std::uint64_t seed);

/// Mirrors one index axis.
Volumed flip(const Volumed& v, int axis);
BinaryMask flip(const BinaryMask& m, int axis);

/// Applies the same transform to image (trilinear) and mask (nearest); both
/// use zero fill outside the grid.
std::pair<Volumed, BinaryMask> augment(const Volumed& v, const BinaryMask& m, const AugmentOps& ops);
std::pair<Volumed, BinaryMask> augment(const Volumed& v, const BinaryMask& m, const AugmentRanges& ranges,
                                       std::uint64_t seed);

}  // namespace oocs
