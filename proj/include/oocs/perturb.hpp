#pragma once

// Robustness perturbations: Gaussian blur, additive Gaussian noise, and a
// k-space motion artifact. Each is a pure function of (volume, parameters,
// seed); randomness comes from the Philox4x32-10 stream in random.hpp.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "oocs/tensor.hpp"

namespace oocs {

enum class PerturbKind { gaussian_blur, gaussian_noise, motion };

std::string to_string(PerturbKind kind);
PerturbKind parse_perturb_kind(const std::string& name);

struct PerturbSpec {
  PerturbKind kind = PerturbKind::gaussian_blur;
  double sigma = 1.0;          ///< blur std (voxels) or noise std (intensity units)
  int n_transforms = 5;        ///< motion only
  std::uint64_t seed = 0;
  double motion_max_rot = 10.0;    ///< degrees
  double motion_max_trans = 10.0;  ///< mm

  void validate() const;
};

/// Normalized 1D Gaussian taps over [-ceil(4 sigma), ceil(4 sigma)].
Eigen::ArrayXd gaussian_taps(double sigma);

/// Separable Gaussian filter; borders use half-sample symmetric reflection
/// (... c b a | a b c ... ), which keeps each 1D pass doubly stochastic.
Volumed gaussian_blur(const Volumed& v, double sigma);

/// v + N(0, sigma^2) per voxel; voxel i uses the i-th normal of Philox(seed).
Volumed gaussian_noise(const Volumed& v, double sigma, std::uint64_t seed);

/// Random rigid transforms about the volume center: rotations about each
/// axis uniform in [-max_rot, max_rot] degrees, translations uniform in
/// [-max_trans, max_trans] mm.
std::vector<Eigen::Affine3d> draw_rigid_transforms(int n, double max_rot_deg, double max_trans_mm,
                                                   std::uint64_t seed);

/// k-space composition from explicit transforms. Copy j (1-based) samples v
/// at transforms[j-1](p) with trilinear interpolation and zero fill. The
/// first k-space axis, in centered (fftshifted) order, is split into n+1
/// contiguous slabs of D/(n+1) lines, the last slab taking the remainder;
/// slab 0 comes from the original, slab j from copy j. Returns the real part
/// of the inverse transform.
Volumed motion_from_transforms(const Volumed& v, const std::vector<Eigen::Affine3d>& transforms);

Volumed motion_artifact(const Volumed& v, int n_transforms, double max_rot_deg, double max_trans_mm,
                        std::uint64_t seed);

Volumed apply(const PerturbSpec& spec, const Volumed& v);

}  // namespace oocs
