#pragma once

// Central finite-difference verification of the analytic gradients of the
// convolution engine, the OOCS block and the segmentation losses.
//
// Error per entry: |analytic - numeric| / max(|analytic|, |numeric|, floor).
// Block checks skip entries whose +-h perturbation flips a relu
// pre-activation across zero (the loss is not differentiable there); the
// skip count is reported.

#include <cstdint>
#include <string>
#include <vector>

#include "oocs/block.hpp"
#include "oocs/conv.hpp"

namespace oocs {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  double floor = 1e-3;
  /// Entries checked per tensor; 0 checks every entry.
  Index max_entries = 0;
  std::uint64_t seed = 0;
};

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0.0;
  Index checked = 0;
  Index skipped = 0;
  bool pass = false;
};

double relative_error(double analytic, double numeric, double floor);

/// Random input, weights and bias in [-1, 1]; loss sum(out * probe).
GradcheckResult check_conv(Index c_in, Index c_out, Index k, Shape3 spatial, Padding padding,
                           const GradcheckOptions& opts);

/// Random input in [-1, 1], seeded parameters; loss sum(y * probe).
GradcheckResult check_block(const OocsBlockConfig& cfg, Shape3 spatial, const GradcheckOptions& opts);

/// Losses on random logits in [-3, 3] and a random binary target of the
/// given shape. `which` is "bce", "dice" or "bce_dice".
GradcheckResult check_loss(const std::string& which, Shape3 spatial, const GradcheckOptions& opts);

/// Block grid k_oocs in {3, 5} x c_in in {1, 2} x c_out in {4, 8} on a 6^3
/// input, over `seeds` seeds.
std::vector<GradcheckResult> block_gradcheck_grid(int seeds, const GradcheckOptions& base);

}  // namespace oocs
