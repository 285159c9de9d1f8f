#include "oocs/losses.hpp"

#include <cmath>
#include <utility>

#include "oocs/error.hpp"

namespace oocs {

PredictionPair::PredictionPair(FeatureMapd logits_, Eigen::ArrayXd target_, double epsilon_)
    : logits(std::move(logits_)), target(std::move(target_)), epsilon(epsilon_) {
  if (logits.channels() != 1) throw DimensionError("losses expect single-channel logits");
  if (target.size() != logits.size()) throw DimensionError("logits and target sizes differ");
  if (((target != 0.0) && (target != 1.0)).any()) throw DomainError("target values must be 0 or 1");
  if (!(epsilon > 0.0)) throw DomainError("Dice epsilon must be > 0");
}

PredictionPair::PredictionPair(FeatureMapd logits_, const BinaryMask& target_, double epsilon_)
    : PredictionPair(std::move(logits_), target_.array().cast<double>(), epsilon_) {
  if (!(this->logits.spatial() == target_.shape())) throw DimensionError("logits and mask shapes differ");
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
  return z.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

LossValue bce_loss(const PredictionPair& p) {
  const Eigen::ArrayXd& z = p.logits.array();
  const auto n = static_cast<double>(z.size());
  // -[t log s + (1-t) log(1-s)] = max(z, 0) - z t + log(1 + exp(-|z|))
  const Eigen::ArrayXd per_voxel = z.max(0.0) - z * p.target + (-z.abs()).exp().log1p();
  LossValue out;
  out.value = per_voxel.sum() / n;
  out.grad = (sigmoid(z) - p.target) / n;
  return out;
}

LossValue soft_dice_loss(const PredictionPair& p) {
  const Eigen::ArrayXd s = sigmoid(p.logits.array());
  const double inter = (s * p.target).sum();
  const double numer = 2.0 * inter + p.epsilon;
  const double denom = s.sum() + p.target.sum() + p.epsilon;
  LossValue out;
  out.value = 1.0 - numer / denom;
  // d/ds_j = -(2 t_j denom - numer) / denom^2, ds/dz = s (1 - s)
  const Eigen::ArrayXd d_ds = -(2.0 * p.target * denom - numer) / (denom * denom);
  out.grad = d_ds * s * (1.0 - s);
  return out;
}

LossValue bce_dice_loss(const PredictionPair& p, double w_bce, double w_dice) {
  if (!(w_bce >= 0.0) || !(w_dice >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (w_bce == 0.0 && w_dice == 0.0) throw ConfigError("at least one loss weight must be nonzero");
  LossValue out;
  out.value = 0.0;
  out.grad = Eigen::ArrayXd::Zero(p.logits.size());
  if (w_bce != 0.0) {
    const LossValue bce = bce_loss(p);
    out.value += w_bce * bce.value;
    out.grad += w_bce * bce.grad;
  }
  if (w_dice != 0.0) {
    const LossValue dice = soft_dice_loss(p);
    out.value += w_dice * dice.value;
    out.grad += w_dice * dice.grad;
  }
  return out;
}

}  // namespace oocs
