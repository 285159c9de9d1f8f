#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oocs/metrics.hpp"
#include "oocs/preprocess.hpp"
#include "oracles.hpp"

using namespace oocs;

namespace {

Volumed indexed(Shape3 s, Spacing sp = Spacing::Ones()) {
  Volumed v(s, sp);
  for (Index i = 0; i < v.size(); ++i) v.array()[i] = static_cast<double>(i);
  return v;
}

Volumed random_volume(std::uint64_t seed, Shape3 s, Spacing sp = Spacing::Ones()) {
  RandomStream rng(seed);
  Volumed v(s, sp);
  for (Index i = 0; i < v.size(); ++i) v.array()[i] = rng.uniform(-3, 7);
  return v;
}

// Smooth phantom: a wide Gaussian blob in physical coordinates.
Volumed blob(Shape3 s, Spacing sp) {
  Volumed v(s, sp);
  const Eigen::Vector3d c(s.d * sp[0] / 2, s.h * sp[1] / 2, s.w * sp[2] / 2);
  for (Index z = 0; z < s.d; ++z)
    for (Index y = 0; y < s.h; ++y)
      for (Index x = 0; x < s.w; ++x) {
        const Eigen::Vector3d p((z + 0.5) * sp[0], (y + 0.5) * sp[1], (x + 0.5) * sp[2]);
        v(z, y, x) = std::exp(-(p - c).squaredNorm() / (2 * 16.0));
      }
  return v;
}

// Ellipsoidal level set f > 0 placed off-center.
Volumed level_set(Shape3 s) {
  Volumed v(s);
  for (Index z = 0; z < s.d; ++z)
    for (Index y = 0; y < s.h; ++y)
      for (Index x = 0; x < s.w; ++x) {
        const double a = (z - 4.2) / 2.6, b = (y - 5.1) / 3.7, c = (x - 6.3) / 2.2;
        v(z, y, x) = 1.0 - (a * a + b * b + c * c);
      }
  return v;
}

double relative_l2(const Volumed& a, const Volumed& b) {
  return std::sqrt((a.array() - b.array()).square().sum() / b.array().square().sum());
}

}  // namespace

TEST_CASE("resampled shape") {
  CHECK(resampled_shape({5, 3, 4}, Spacing(1, 1, 1), Spacing(2, 0.6, 1)) == Shape3{3, 5, 4});
  CHECK(resampled_shape({160, 160, 64}, Spacing::Constant(0.6), Spacing::Constant(0.6)) == Shape3{160, 160, 64});
  CHECK_THROWS_AS(resampled_shape({1, 4, 4}, Spacing::Ones(), Spacing(3, 1, 1)), ResampleError);
  CHECK_THROWS_AS(resampled_shape({4, 4, 4}, Spacing::Ones(), Spacing(0, 1, 1)), DomainError);
}

TEST_CASE("resample identity and constants") {
  const Spacing sp(0.6, 0.6, 0.6);
  const Volumed v = random_volume(1, {6, 7, 8}, sp);
  const Volumed same = resample(v, ResampleSpec{sp, Interpolation::trilinear});
  REQUIRE(same.shape() == v.shape());
  CHECK((same.array() - v.array()).abs().maxCoeff() < 1e-12);
  CHECK((resample(v, ResampleSpec{sp, Interpolation::nearest}).array() == v.array()).all());

  const Volumed c = Volumed::constant({7, 5, 9}, -2.25, Spacing(1.0, 0.7, 2.0));
  const Volumed out = resample(c, ResampleSpec{});
  CHECK(out.spacing() == Spacing::Constant(0.6));
  CHECK((out.array() + 2.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("resample reproduces a linear ramp") {
  Volumed ramp({16, 16, 16});
  for (Index z = 0; z < 16; ++z)
    for (Index y = 0; y < 16; ++y)
      for (Index x = 0; x < 16; ++x) ramp(z, y, x) = 0.5 * z - 1.25 * y + 2.0 * x + 3.0;
  const Volumed out = resample(ramp, ResampleSpec{Spacing::Constant(2.0), Interpolation::trilinear});
  REQUIRE(out.shape() == Shape3{8, 8, 8});
  double worst = 0.0;
  for (Index z = 0; z < 8; ++z)
    for (Index y = 0; y < 8; ++y)
      for (Index x = 0; x < 8; ++x) {
        const double zz = 2 * z + 0.5, yy = 2 * y + 0.5, xx = 2 * x + 0.5;
        worst = std::max(worst, std::abs(out(z, y, x) - (0.5 * zz - 1.25 * yy + 2.0 * xx + 3.0)));
      }
  CHECK(worst < 1e-9);
}

TEST_CASE("resample round trip on a smooth phantom") {
  const Spacing native(1.5, 1.0, 1.2);
  const Volumed v = blob({20, 28, 24}, native);
  const Volumed there = resample(v, ResampleSpec{});
  const Volumed back = resample(there, ResampleSpec{native, Interpolation::trilinear});
  REQUIRE(back.shape() == v.shape());
  const double err = relative_l2(back, v);
  MESSAGE("round-trip relative L2 error ", err);
  CHECK(err < 0.02);
}

TEST_CASE("mask resampling stays binary and aligned") {
  BinaryMask m({6, 6, 6}, Spacing::Constant(1.2));
  for (Index z = 1; z < 4; ++z)
    for (Index y = 2; y < 5; ++y)
      for (Index x = 0; x < 3; ++x) m.set(z, y, x, true);
  CHECK(resample(m, Spacing::Constant(1.2)) == m);
  const BinaryMask fine = resample(m, Spacing::Constant(0.6));
  CHECK(fine.shape() == Shape3{12, 12, 12});
  CHECK(fine.count() == 8 * m.count());
  const BinaryMask coarse_again = resample(fine, Spacing::Constant(1.2));
  CHECK(coarse_again == m);
}

TEST_CASE("zscore") {
  const Volumed v = random_volume(3, {9, 8, 7});
  const Volumed z = zscore(v);
  CHECK(std::abs(oracle::mean(z.array())) < 1e-9);
  CHECK(std::abs(std::sqrt(oracle::population_variance(z.array())) - 1.0) < 1e-9);
  CHECK((zscore(z).array() - z.array()).abs().maxCoeff() < 1e-9);

  Volumed affine = v;
  affine.array() = 3.7 * v.array() - 120.0;
  CHECK((zscore(affine).array() - z.array()).abs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(zscore(Volumed::constant({3, 3, 3}, 4.0)), NormalizationError);
}

TEST_CASE("crop_or_pad") {
  const Volumed v = indexed({4, 4, 4});
  CHECK((crop_or_pad(v, {4, 4, 4}).array() == v.array()).all());

  const Volumed c = crop_or_pad(v, {2, 2, 2});
  for (Index z = 0; z < 2; ++z)
    for (Index y = 0; y < 2; ++y)
      for (Index x = 0; x < 2; ++x) CHECK(c(z, y, x) == v(z + 1, y + 1, x + 1));

  Volumed small = indexed({2, 2, 2});
  small.array() += 1.0;
  const Volumed p = crop_or_pad(small, {4, 4, 4});
  CHECK((p.array() == 0.0).count() == 56);
  CHECK(p(1, 1, 1) == small(0, 0, 0));
  CHECK(p(2, 2, 2) == small(1, 1, 1));

  const Volumed mixed = crop_or_pad(indexed({5, 2, 3}), {2, 4, 3});
  CHECK(mixed.shape() == Shape3{2, 4, 3});
  CHECK(mixed(0, 1, 0) == indexed({5, 2, 3})(1, 0, 0));
  CHECK(mixed(0, 0, 0) == 0.0);

  BinaryMask m({3, 3, 3});
  m.set(1, 1, 1, true);
  const BinaryMask mp = crop_or_pad(m, {5, 5, 6});
  CHECK(mp.count() == 1);
  CHECK(mp(2, 2, 2));
  CHECK_THROWS_AS(crop_or_pad(v, {0, 2, 2}), DimensionError);
}

TEST_CASE("flip") {
  const Volumed v = indexed({3, 4, 5});
  for (int axis = 0; axis < 3; ++axis) CHECK((flip(flip(v, axis), axis).array() == v.array()).all());
  const Volumed fx = flip(v, 2);
  CHECK(fx(1, 2, 0) == v(1, 2, 4));
  const Volumed fz = flip(v, 0);
  CHECK(fz(0, 3, 1) == v(2, 3, 1));
  CHECK_THROWS_AS(flip(v, 3), DomainError);
}

TEST_CASE("augment identity and determinism") {
  const Volumed v = random_volume(8, {6, 7, 8});
  const BinaryMask m = BinaryMask::threshold(v, 2.0);
  const auto [vi, mi] = augment(v, m, AugmentOps{});
  CHECK((vi.array() == v.array()).all());
  CHECK(mi == m);

  const auto a = augment(v, m, AugmentRanges{}, 31);
  const auto b = augment(v, m, AugmentRanges{}, 31);
  CHECK((a.first.array() == b.first.array()).all());
  CHECK(a.second == b.second);

  CHECK_THROWS_AS(augment(v, BinaryMask({6, 7, 9}), AugmentOps{}), DimensionError);
}

TEST_CASE("90 degree rotation of a box") {
  const Shape3 s{5, 12, 12};
  BinaryMask box(s);
  for (Index z = 1; z < 4; ++z)
    for (Index y = 3; y < 9; ++y)
      for (Index x = 4; x < 6; ++x) box.set(z, y, x, true);
  AugmentOps ops;
  ops.rotation_deg = Eigen::Vector3d(90, 0, 0);
  const auto [img, rotated] = augment(box.to_volume(), box, ops);

  // A +90 degree turn about axis 0 sends (dy, dx) to (-dx, dy) about the center.
  BinaryMask expected(s);
  const double c = 5.5;
  for (Index z = 0; z < s.d; ++z)
    for (Index y = 0; y < s.h; ++y)
      for (Index x = 0; x < s.w; ++x)
        if (box(z, y, x))
          expected.set(z, static_cast<Index>(c - (x - c)), static_cast<Index>(c + (y - c)), true);
  CHECK(expected.count() == box.count());
  CHECK(dice(rotated, expected) == 1.0);
  CHECK(dice(BinaryMask::threshold(img, 0.5), expected) == 1.0);
}

TEST_CASE("image and mask stay consistent under grid-aligned augmentation") {
  const Shape3 s{10, 12, 12};
  const Volumed v = level_set(s);
  const BinaryMask m = BinaryMask::threshold(v, 0.0);
  REQUIRE(m.count() > 20);
  std::vector<AugmentOps> cases;
  for (int axis = 0; axis < 3; ++axis) {
    AugmentOps f;
    f.flip_axis = axis;
    cases.push_back(f);
  }
  for (double deg : {90.0, 180.0, -90.0}) {
    AugmentOps r;
    r.rotation_deg = Eigen::Vector3d(deg, 0, 0);
    r.translation_mm = Eigen::Vector3d(1, -2, 1);
    r.flip_axis = 1;
    cases.push_back(r);
  }
  AugmentOps t;
  t.translation_mm = Eigen::Vector3d(-1, 2, 3);
  cases.push_back(t);
  AugmentOps tilt;
  tilt.rotation_deg = Eigen::Vector3d(0, 180, 0);
  cases.push_back(tilt);

  for (const AugmentOps& ops : cases) {
    const auto [img, mask] = augment(v, m, ops);
    CHECK(dice(mask, BinaryMask::threshold(img, 0.0)) == 1.0);
    CHECK(mask.count() > 0);
  }
}

TEST_CASE("zscore rejects rounding-level spread") {
  Volumed c = Volumed::constant({4, 4, 4}, 1.0);
  c.array()[5] = 1.0 + 2e-16;
  CHECK_THROWS_AS(zscore(c), NormalizationError);
  CHECK_THROWS_AS(zscore(resample(Volumed::constant({5, 5, 5}, 3.3), ResampleSpec{})), NormalizationError);
  Volumed tiny = Volumed::constant({4, 4, 4}, 0.0);
  tiny.array()[0] = 1e-100;
  CHECK_NOTHROW(zscore(tiny));
}
