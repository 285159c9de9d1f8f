#pragma once

// On/Off center-surround difference-of-Gaussians kernels.
//
// The raw kernel samples
//   DoG(p) = gamma^-d * exp(-|p|^2 / (2 gamma^2 sigma^2)) - exp(-|p|^2 / (2 sigma^2))
// (d = 2 or 3) at integer offsets with a shared amplitude for center and
// surround, then rescales the positive and negative lobes independently so
// they sum to +c and -c. The Off kernel is the exact negation of the On one.

#include <Eigen/Core>

#include <string>

#include "oocs/tensor.hpp"

namespace oocs {

enum class KernelDims { two = 2, three = 3 };
enum class Polarity { on, off };

std::string to_string(Polarity p);
std::string to_string(KernelDims d);

struct KernelSpec {
  int k = 3;
  double gamma = 2.0 / 3.0;
  double c = 3.0;
  KernelDims dims = KernelDims::three;
  /// Sub-samples per voxel and axis; 1 samples voxel centers only.
  int oversample = 1;

  /// Throws InvalidKernelError / DomainError on violation.
  void validate() const;
  int rank() const { return static_cast<int>(dims); }
  Index entries() const;
};

/// Preset used by the k=3 and k=5 networks: gamma = 2/3, c = 3, 3D.
KernelSpec preset_spec(int k);

struct KernelDerivation {
  double r_surround = 0.0;  ///< k / 2 voxels
  double r_center = 0.0;    ///< gamma * r_surround voxels
  double sigma = 0.0;
  double scale_pos = 0.0;   ///< factor applied to positive raw entries
  double scale_neg = 0.0;   ///< factor applied to negative raw entries
};

/// Unbalanced DoG samples, row-major over (z, y, x) or (y, x).
struct KernelGrid {
  int k = 0;
  KernelDims dims = KernelDims::three;
  Eigen::ArrayXd weights;
};

struct BalanceResult {
  Eigen::ArrayXd weights;
  double scale_pos = 0.0;
  double scale_neg = 0.0;
};

struct BalancedKernel {
  KernelSpec spec;
  KernelDerivation derivation;
  Polarity polarity = Polarity::on;
  Eigen::ArrayXd weights;

  int k() const { return spec.k; }
  /// Signed offsets in [-(k-1)/2, (k-1)/2]; z is ignored for 2D kernels.
  double at(int z, int y, int x) const;
  double positive_sum() const { return (weights > 0.0).select(weights, 0.0).sum(); }
  double negative_sum() const { return (weights < 0.0).select(weights, 0.0).sum(); }
};

/// Gaussian scale for a center radius r and ratio gamma:
/// sigma = (r / gamma) * sqrt((1 - gamma^2) / (-6 ln gamma)).
double compute_sigma(double r_center, double gamma);

/// Radii and sigma for a spec; the scale factors are left at zero.
KernelDerivation derive_geometry(const KernelSpec& spec);

/// Evaluates the shared-amplitude DoG at squared radius rho2 (voxels^2).
double dog_value(double rho2, double sigma, double gamma, KernelDims dims);

KernelGrid sample_dog(const KernelSpec& spec);

/// Rescales positive entries to sum to +c and negative entries to -c.
/// Exact zeros are left alone. Throws DegenerateKernelError when either
/// sign is missing.
BalanceResult balance(const Eigen::Ref<const Eigen::ArrayXd>& raw, double c);

BalancedKernel make_kernel(const KernelSpec& spec, Polarity polarity);

/// Midpoint-rule integral of the unbalanced DoG over a ball centered at the
/// origin, on an n_grid^d lattice covering the ball's bounding cube. The ball
/// radius is 6 sigma at n_grid = 64 and grows by 2 sigma per doubling of
/// n_grid, so both the truncated tail and the lattice error shrink as the
/// grid is refined. Returns |integral|, which tends to zero.
double continuous_balance_check(const KernelSpec& spec, int n_grid);

/// Embeds a 3D kernel in a single-channel ConvWeights (c_out = c_in = 1).
ConvWeightsd to_conv_weights(const BalancedKernel& kernel);

}  // namespace oocs
