#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oocs/block.hpp"
#include "oocs/gradcheck.hpp"
#include "oracles.hpp"

using namespace oocs;

namespace {

FeatureMapd relu(const FeatureMapd& f) { return FeatureMapd(f.channels(), f.spatial(), f.array().max(0.0)); }

FeatureMapd add(const FeatureMapd& a, const FeatureMapd& b) {
  return FeatureMapd(a.channels(), a.spatial(), a.array() + b.array());
}

// The block written out without caches, using the direct convolution.
FeatureMapd naive_block(const FeatureMapd& x, const OocsBlockParams& p) {
  constexpr Padding same = Padding::same_zero;
  const FeatureMapd on = relu(oracle::conv(
      relu(add(oracle::conv(x, p.w1_on, same), oracle::conv(x, p.fixed_on, same))), p.w2_on, same));
  const FeatureMapd off = relu(oracle::conv(
      relu(add(oracle::conv(x, p.w1_off, same), oracle::conv(x, p.fixed_off, same))), p.w2_off, same));
  return concat_channels(on, off);
}

double probe_loss(const FeatureMapd& x, const OocsBlockParams& p, const OocsBlockConfig& cfg, const FeatureMapd& g) {
  return (block_forward(x, p, cfg).y.array() * g.array()).sum();
}

}  // namespace

TEST_CASE("config validation") {
  OocsBlockConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.c_out = 5;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = OocsBlockConfig{};
  cfg.k_oocs = 4;
  CHECK_THROWS_AS(cfg.validate(), InvalidKernelError);
  cfg = OocsBlockConfig{};
  cfg.k_learn = 2;
  CHECK_THROWS_AS(cfg.validate(), InvalidKernelError);
}

TEST_CASE("lift_kernel") {
  const BalancedKernel on = make_kernel(preset_spec(3), Polarity::on);
  const ConvWeightsd one = lift_kernel(on, 1, 1);
  CHECK((one.array() == on.weights).all());

  const ConvWeightsd lifted = lift_kernel(on, 3, 2);
  CHECK(lifted.c_out() == 2);
  CHECK(lifted.c_in() == 3);
  CHECK(std::abs(lifted.array().sum()) < 1e-9);

  RandomStream rng(4);
  const FeatureMapd single = oracle::random_map(rng, 1, {5, 5, 5});
  FeatureMapd repeated(3, single.spatial());
  for (Index c = 0; c < 3; ++c) repeated.channel(c) = single.channel(0);
  const FeatureMapd ref = conv3d_forward(single, to_conv_weights(on), Padding::same_zero);
  const FeatureMapd got = conv3d_forward(repeated, lifted, Padding::same_zero);
  for (Index o = 0; o < 2; ++o) CHECK((got.channel(o) - ref.channel(0)).abs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(lift_kernel(on, 0, 1), DimensionError);
}

TEST_CASE("parameters") {
  OocsBlockConfig cfg;
  cfg.c_in = 2;
  cfg.c_out = 4;
  const OocsBlockParams p = init_block_params(cfg, 9);
  CHECK((p.fixed_off.array() == -p.fixed_on.array()).all());
  CHECK(p.w1_on.c_out() == 2);
  CHECK(p.w2_on.c_in() == 2);
  CHECK(p.fixed_on.k() == 3);
  const double bound = 1.0 / std::sqrt(2.0 * 27.0);
  CHECK(p.w1_on.array().abs().maxCoeff() <= bound);
  const OocsBlockParams q = init_block_params(cfg, 9);
  CHECK((q.w2_off.array() == p.w2_off.array()).all());
  CHECK((init_block_params(cfg, 10).w2_off.array() != p.w2_off.array()).any());
}

TEST_CASE("parameter counts") {
  for (bool bias : {false, true})
    for (Index c_in : {1, 2, 4})
      for (Index c_out : {4, 8, 16}) {
        OocsBlockConfig cfg;
        cfg.c_in = c_in;
        cfg.c_out = c_out;
        cfg.bias = bias;
        const Index t = 27;
        const Index b = bias ? c_out : 0;
        const Index learnable = init_block_params(cfg, 0).learnable_count();
        CHECK(learnable == c_out * c_in * t + c_out * c_out * t / 2 + 2 * b);
        CHECK(plain_block_parameter_count(cfg) == c_out * c_in * t + c_out * c_out * t + 2 * b);
        CHECK(learnable <= plain_block_parameter_count(cfg));
      }
}

TEST_CASE("forward shape and pathway order") {
  OocsBlockConfig cfg;
  cfg.c_in = 4;
  cfg.c_out = 8;
  const OocsBlockParams p = init_block_params(cfg, 1);
  RandomStream rng(2);
  const FeatureMapd x = oracle::random_map(rng, 4, {16, 16, 16});
  const BlockForward f = block_forward(x, p, cfg);
  CHECK(f.y.channels() == 8);
  CHECK(f.y.spatial() == Shape3{16, 16, 16});
  const FeatureMapd on = relu(f.cache.pre2_on);
  for (Index c = 0; c < 4; ++c) CHECK((f.y.channel(c) == on.channel(c)).all());

  CHECK_THROWS_AS(block_forward(oracle::random_map(rng, 3, {4, 4, 4}), p, cfg), DimensionError);
}

TEST_CASE("forward matches the straight-line oracle") {
  for (int k_oocs : {3, 5}) {
    OocsBlockConfig cfg;
    cfg.c_in = 2;
    cfg.c_out = 4;
    cfg.k_oocs = k_oocs;
    const OocsBlockParams p = init_block_params(cfg, 17);
    RandomStream rng(3);
    const FeatureMapd x = oracle::random_map(rng, 2, {5, 6, 7});
    const FeatureMapd y = block_forward(x, p, cfg).y;
    CHECK((y.array() - naive_block(x, p).array()).abs().maxCoeff() < 1e-12);
    CHECK((y.array() == block_forward(x, p, cfg).y.array()).all());
  }
}

TEST_CASE("zero learnable weights on a constant input") {
  OocsBlockConfig cfg;
  cfg.c_in = 1;
  cfg.c_out = 4;
  OocsBlockParams p = init_block_params(cfg, 0);
  for (ConvWeightsd* w : {&p.w1_on, &p.w1_off, &p.w2_on, &p.w2_off}) {
    w->array().setZero();
    w->bias().setZero();
  }
  const FeatureMapd x(1, {7, 7, 7}, Eigen::ArrayXd::Constant(343, 2.5));
  const BlockForward f = block_forward(x, p, cfg);
  const FeatureMapd fixed_on = conv3d_forward(x, p.fixed_on, Padding::same_zero);
  CHECK((f.cache.a1_on.array() == fixed_on.array().max(0.0)).all());
  for (Index c = 0; c < 2; ++c)
    for (Index z = 1; z < 6; ++z)
      for (Index y = 1; y < 6; ++y)
        for (Index xx = 1; xx < 6; ++xx) {
          CHECK(std::abs(f.cache.pre1_on(c, z, y, xx)) < 1e-9);
          CHECK(std::abs(f.cache.pre1_off(c, z, y, xx)) < 1e-9);
        }
  CHECK((f.y.array() == 0.0).all());
}

TEST_CASE("fixed contributions are antisymmetric across pathways") {
  OocsBlockConfig cfg;
  cfg.c_in = 2;
  cfg.c_out = 6;
  OocsBlockParams p = init_block_params(cfg, 5);
  p.w1_off = p.w1_on;
  RandomStream rng(6);
  const FeatureMapd x = oracle::random_map(rng, 2, {5, 5, 5});
  const FeatureMapd on = conv3d_forward(x, p.fixed_on, Padding::same_zero);
  const FeatureMapd off = conv3d_forward(x, p.fixed_off, Padding::same_zero);
  CHECK((on.array() == -off.array()).all());
  const BlockCache c = block_forward(x, p, cfg).cache;
  const Eigen::ArrayXd learn = conv3d_forward(x, p.w1_on, Padding::same_zero).array();
  CHECK(((c.pre1_on.array() - learn) + (c.pre1_off.array() - learn)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("backward") {
  OocsBlockConfig cfg;
  cfg.c_in = 2;
  cfg.c_out = 4;
  const OocsBlockParams p = init_block_params(cfg, 3);
  RandomStream rng(7);
  const FeatureMapd x = oracle::random_map(rng, 2, {6, 6, 6});
  const BlockForward f = block_forward(x, p, cfg);

  const BlockGradients zero = block_backward(FeatureMapd(4, {6, 6, 6}), f.cache, p, cfg);
  CHECK((zero.grad_x.array() == 0.0).all());
  for (const ConvWeightsd* g : {&zero.w1_on, &zero.w1_off, &zero.w2_on, &zero.w2_off}) {
    CHECK((g->array() == 0.0).all());
    CHECK((g->bias() == 0.0).all());
  }
  CHECK_THROWS_AS(block_backward(FeatureMapd(2, {6, 6, 6}), f.cache, p, cfg), DimensionError);

  GradcheckOptions opts;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    opts.seed = seed;
    const GradcheckResult r = check_block(cfg, {6, 6, 6}, opts);
    CAPTURE(r.name);
    CHECK(r.pass);
    CHECK(r.max_rel_error < 1e-5);
    CHECK(r.checked > r.skipped);
  }
}

TEST_CASE("fixed kernels influence the loss but receive no gradient") {
  OocsBlockConfig cfg;
  cfg.c_in = 1;
  cfg.c_out = 4;
  OocsBlockParams p = init_block_params(cfg, 12);
  RandomStream rng(13);
  const FeatureMapd x = oracle::random_map(rng, 1, {6, 6, 6});
  const FeatureMapd g = oracle::random_map(rng, 4, {6, 6, 6});
  const double before = probe_loss(x, p, cfg, g);
  const BlockGradients grads = block_backward(g, block_forward(x, p, cfg).cache, p, cfg);
  p.fixed_on.array() *= 1.5;
  CHECK(probe_loss(x, p, cfg, g) != before);
  // the gradient set covers the learnable tensors only
  const Index covered = grads.w1_on.parameter_count() + grads.w1_off.parameter_count() +
                        grads.w2_on.parameter_count() + grads.w2_off.parameter_count();
  CHECK(covered == p.learnable_count());
}

TEST_CASE("gradient grid") {
  GradcheckOptions opts;
  opts.max_entries = 24;
  for (const GradcheckResult& r : block_gradcheck_grid(2, opts)) {
    CAPTURE(r.name);
    CHECK(r.pass);
  }
}
