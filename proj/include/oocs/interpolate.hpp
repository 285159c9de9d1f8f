#pragma once

// Resampling of volumes under affine maps between continuous voxel indices.
// Index coordinates are ordered (z, y, x); integer coordinates are voxel
// centers.

#include <Eigen/Geometry>

#include "oocs/tensor.hpp"

namespace oocs {

enum class Interpolation { trilinear, nearest };
enum class Boundary {
  clamp,  ///< coordinates are clamped to the grid (edge extension)
  zero,   ///< samples outside the grid read as 0
};

double sample(const Volumed& v, const Eigen::Vector3d& index, Interpolation mode, Boundary boundary);

/// out(i) = v(map * i) for every output voxel index i.
Volumed warp(const Volumed& v, const Eigen::Affine3d& out_to_in, Shape3 out_shape, const Spacing& out_spacing,
             Interpolation mode, Boundary boundary);

/// Nearest-neighbour warp of a mask.
BinaryMask warp(const BinaryMask& m, const Eigen::Affine3d& out_to_in, Shape3 out_shape, const Spacing& out_spacing,
                Boundary boundary);

/// Index-space map of a physical transform about the volume center.
/// `physical` maps output physical offsets (mm, (z, y, x), relative to the
/// grid center) to input physical offsets.
Eigen::Affine3d index_map_about_center(const Eigen::Affine3d& physical, Shape3 shape, const Spacing& spacing);

}  // namespace oocs
