#pragma once

// Overlap and boundary metrics for binary segmentations.
//
// Distances are between voxel centers in millimeters. The squared distance
// between voxels offset by (dz, dy, dx) is evaluated as
//   ((sx^2 dx^2) + sy^2 dy^2) + sz^2 dz^2
// in that order, which is also the accumulation order of the distance
// transform below.

#include <Eigen/Core>

#include "oocs/tensor.hpp"

namespace oocs {

/// 2|A n B| / (|A| + |B|); 1.0 when both masks are empty.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Squared Euclidean distance (mm^2) from every voxel center to the nearest
/// foreground voxel of `mask`, exact (separable lower-envelope transform).
/// Infinite everywhere when the mask is empty.
Eigen::ArrayXd squared_distance_transform(const BinaryMask& mask);

/// max over a in A of min over b in B of |a - b|, in mm.
double directed_hausdorff_mm(const BinaryMask& a, const BinaryMask& b);

/// Symmetric Hausdorff distance in mm. Throws UndefinedDistanceError when
/// either mask is empty.
double hausdorff_mm(const BinaryMask& a, const BinaryMask& b);

}  // namespace oocs
