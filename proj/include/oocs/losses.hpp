#pragma once

// Voxelwise binary segmentation losses on logits, with analytic gradients.

#include "oocs/tensor.hpp"

namespace oocs {

struct PredictionPair {
  FeatureMapd logits;     ///< one channel
  Eigen::ArrayXd target;  ///< 0/1 per voxel, same length as logits
  double epsilon = 1.0;   ///< Dice smoothing

  PredictionPair(FeatureMapd logits, Eigen::ArrayXd target, double epsilon = 1.0);
  PredictionPair(FeatureMapd logits, const BinaryMask& target, double epsilon = 1.0);
};

struct LossValue {
  double value = 0.0;
  Eigen::ArrayXd grad;  ///< d value / d logits, flattened like logits
};

/// Mean binary cross-entropy of sigmoid(logits) against target.
LossValue bce_loss(const PredictionPair& p);

/// 1 - (2 sum(s t) + eps) / (sum s + sum t + eps), s = sigmoid(logits).
LossValue soft_dice_loss(const PredictionPair& p);

/// w_bce * BCE + w_dice * Dice. Defaults 1/1.
LossValue bce_dice_loss(const PredictionPair& p, double w_bce = 1.0, double w_dice = 1.0);

/// Logistic function evaluated without overflow for large |z|.
Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z);

}  // namespace oocs
