#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oocs/gradcheck.hpp"
#include "oocs/losses.hpp"
#include "oracles.hpp"

using namespace oocs;

namespace {

PredictionPair random_pair(std::uint64_t seed, Shape3 s = {4, 4, 4}) {
  RandomStream rng(seed);
  FeatureMapd z = oracle::random_map(rng, 1, s, -4, 4);
  Eigen::ArrayXd t(z.size());
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
  return PredictionPair(std::move(z), std::move(t));
}

long double naive_bce(const PredictionPair& p) {
  long double total = 0.0L;
  for (Index i = 0; i < p.target.size(); ++i) {
    const long double s = 1.0L / (1.0L + std::exp(-static_cast<long double>(p.logits.array()[i])));
    const long double t = p.target[i];
    total -= t * std::log(s) + (1.0L - t) * std::log(1.0L - s);
  }
  return total / p.target.size();
}

long double naive_dice(const PredictionPair& p) {
  long double inter = 0.0L, ps = 0.0L, ts = 0.0L;
  for (Index i = 0; i < p.target.size(); ++i) {
    const long double s = 1.0L / (1.0L + std::exp(-static_cast<long double>(p.logits.array()[i])));
    inter += s * p.target[i];
    ps += s;
    ts += p.target[i];
  }
  return 1.0L - (2.0L * inter + p.epsilon) / (ps + ts + p.epsilon);
}

}  // namespace

TEST_CASE("input validation") {
  const FeatureMapd z(1, {2, 2, 2});
  CHECK_THROWS_AS(PredictionPair(z, Eigen::ArrayXd::Zero(7)), DimensionError);
  CHECK_THROWS_AS(PredictionPair(FeatureMapd(2, {2, 2, 2}), Eigen::ArrayXd::Zero(16)), DimensionError);
  CHECK_THROWS_AS(PredictionPair(z, Eigen::ArrayXd::Constant(8, 0.5)), DomainError);
  CHECK_THROWS_AS(PredictionPair(z, Eigen::ArrayXd::Zero(8), 0.0), DomainError);
  CHECK_THROWS_AS(PredictionPair(z, BinaryMask({2, 2, 3})), DimensionError);
  BinaryMask m({2, 2, 2});
  m.set(0, 1, 1, true);
  const PredictionPair from_mask(z, m);
  CHECK(from_mask.target[3] == 1.0);
  CHECK(from_mask.target.sum() == 1.0);
}

TEST_CASE("bce") {
  const FeatureMapd zero(1, {3, 3, 3});
  RandomStream rng(1);
  Eigen::ArrayXd t(27);
  for (Index i = 0; i < 27; ++i) t[i] = rng.uniform() < 0.5;
  CHECK(bce_loss(PredictionPair(zero, t)).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const FeatureMapd confident(1, {3, 3, 3}, Eigen::ArrayXd::Constant(27, 40.0));
  CHECK(bce_loss(PredictionPair(confident, Eigen::ArrayXd::Ones(27))).value < 1e-15);
  const FeatureMapd huge(1, {1, 1, 2}, Eigen::ArrayXd::Constant(2, 1e4));
  const LossValue h = bce_loss(PredictionPair(huge, Eigen::ArrayXd::Zero(2)));
  CHECK(h.value == doctest::Approx(1e4));
  CHECK(h.grad.allFinite());

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PredictionPair p = random_pair(seed);
    const LossValue v = bce_loss(p);
    CHECK(std::abs(v.value - static_cast<double>(naive_bce(p))) < 1e-12);
    CHECK(v.value >= 0.0);
  }
}

TEST_CASE("soft dice") {
  Eigen::ArrayXd t(8);
  t << 1, 0, 0, 1, 1, 0, 1, 0;
  FeatureMapd z(1, {2, 2, 2}, (t * 80.0 - 40.0));
  CHECK(soft_dice_loss(PredictionPair(z, t)).value < 1e-12);

  const FeatureMapd background(1, {2, 2, 2}, Eigen::ArrayXd::Constant(8, -40.0));
  CHECK(soft_dice_loss(PredictionPair(background, Eigen::ArrayXd::Zero(8))).value < 1e-12);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PredictionPair p = random_pair(seed);
    const LossValue v = soft_dice_loss(p);
    CHECK(std::abs(v.value - static_cast<double>(naive_dice(p))) < 1e-12);
    CHECK(v.value >= 0.0);
    CHECK(v.value <= 1.0);
  }
}

TEST_CASE("compound loss") {
  const PredictionPair p = random_pair(42);
  const LossValue b = bce_loss(p), d = soft_dice_loss(p);
  const LossValue only_bce = bce_dice_loss(p, 1.0, 0.0);
  const LossValue only_dice = bce_dice_loss(p, 0.0, 1.0);
  CHECK(only_bce.value == b.value);
  CHECK((only_bce.grad == b.grad).all());
  CHECK(only_dice.value == d.value);
  CHECK((only_dice.grad == d.grad).all());

  const LossValue both = bce_dice_loss(p);
  CHECK(std::abs(both.value - (b.value + d.value)) < 1e-12);
  CHECK((both.grad == b.grad + d.grad).all());
  const LossValue weighted = bce_dice_loss(p, 0.25, 2.0);
  CHECK((weighted.grad == 0.25 * b.grad + 2.0 * d.grad).all());
  CHECK(weighted.value >= 0.0);

  CHECK_THROWS_AS(bce_dice_loss(p, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(bce_dice_loss(p, -1.0, 1.0), ConfigError);
}

TEST_CASE("loss gradients agree with finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GradcheckOptions opts;
    opts.seed = seed;
    opts.tolerance = 1e-7;
    const GradcheckResult bce = check_loss("bce", {4, 4, 4}, opts);
    CAPTURE(bce.name);
    CHECK(bce.pass);
    opts.tolerance = 1e-6;
    for (const char* which : {"dice", "bce_dice"}) {
      const GradcheckResult r = check_loss(which, {4, 4, 4}, opts);
      CAPTURE(r.name);
      CHECK(r.pass);
    }
  }
  CHECK_THROWS_AS(check_loss("focal", {2, 2, 2}, GradcheckOptions{}), ConfigError);
}
