#include "oocs/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "oocs/losses.hpp"
#include "oocs/random.hpp"

namespace oocs {
namespace {

void fill_uniform(Eigen::ArrayXd& a, RandomStream& rng, double lo, double hi) {
  for (Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
}

// Indices to probe: all of them, or a seeded subset without repeats.
std::vector<Index> probe_indices(Index n, Index max_entries, RandomStream& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (max_entries <= 0 || max_entries >= n) return idx;
  for (Index i = 0; i < max_entries; ++i) {
    const auto j = i + static_cast<Index>(rng.uniform() * static_cast<double>(n - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(std::min(j, n - 1))]);
  }
  idx.resize(static_cast<std::size_t>(max_entries));
  return idx;
}

// Compares analytic[i] with a central difference of `loss` in `param[i]`.
// `valid` may veto an entry (returns false to skip it).
void probe(GradcheckResult& result, Eigen::ArrayXd& param, const Eigen::ArrayXd& analytic,
           const std::function<double()>& loss, const std::function<bool()>& valid, const GradcheckOptions& opts,
           RandomStream& rng) {
  for (Index i : probe_indices(param.size(), opts.max_entries, rng)) {
    const double saved = param[i];
    param[i] = saved + opts.step;
    const double up = loss();
    const bool ok_up = valid();
    param[i] = saved - opts.step;
    const double down = loss();
    const bool ok_down = valid();
    param[i] = saved;
    if (!ok_up || !ok_down) {
      ++result.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * opts.step);
    result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric, opts.floor));
    ++result.checked;
  }
}

Eigen::Array<bool, Eigen::Dynamic, 1> activation_pattern(const BlockCache& c) {
  Eigen::Array<bool, Eigen::Dynamic, 1> p(c.pre1_on.size() + c.pre1_off.size() + c.pre2_on.size() +
                                          c.pre2_off.size());
  p << (c.pre1_on.array() > 0.0), (c.pre1_off.array() > 0.0), (c.pre2_on.array() > 0.0),
      (c.pre2_off.array() > 0.0);
  return p;
}

std::string shape_tag(Shape3 s) { return s.str(); }

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradcheckResult check_conv(Index c_in, Index c_out, Index k, Shape3 spatial, Padding padding,
                           const GradcheckOptions& opts) {
  RandomStream rng(opts.seed, 1);
  FeatureMapd x(c_in, spatial);
  fill_uniform(x.array(), rng, -1.0, 1.0);
  ConvWeightsd w(c_out, c_in, k, true);
  fill_uniform(w.array(), rng, -1.0, 1.0);
  fill_uniform(w.bias(), rng, -1.0, 1.0);
  const FeatureMapd out = conv3d_forward(x, w, padding);
  FeatureMapd probe_map(out.channels(), out.spatial());
  fill_uniform(probe_map.array(), rng, -1.0, 1.0);

  const ConvGradients<double> g = conv3d_backward(x, w, probe_map, padding);
  auto loss = [&] { return (conv3d_forward(x, w, padding).array() * probe_map.array()).sum(); };
  auto always = [] { return true; };

  GradcheckResult r;
  r.name = "conv3d " + std::string(padding == Padding::same_zero ? "same" : "valid") + " cin=" +
           std::to_string(c_in) + " cout=" + std::to_string(c_out) + " k=" + std::to_string(k) + " " +
           shape_tag(spatial) + " seed=" + std::to_string(opts.seed);
  probe(r, x.array(), g.grad_input.array(), loss, always, opts, rng);
  probe(r, w.array(), g.grad_weights.array(), loss, always, opts, rng);
  probe(r, w.bias(), g.grad_weights.bias(), loss, always, opts, rng);
  r.pass = r.max_rel_error < opts.tolerance && r.checked > 0;
  return r;
}

GradcheckResult check_block(const OocsBlockConfig& cfg, Shape3 spatial, const GradcheckOptions& opts) {
  RandomStream rng(opts.seed, 2);
  OocsBlockParams p = init_block_params(cfg, opts.seed);
  FeatureMapd x(cfg.c_in, spatial);
  fill_uniform(x.array(), rng, -1.0, 1.0);
  const BlockForward base = block_forward(x, p, cfg);
  FeatureMapd probe_map(base.y.channels(), base.y.spatial());
  fill_uniform(probe_map.array(), rng, -1.0, 1.0);
  const BlockGradients g = block_backward(probe_map, base.cache, p, cfg);
  const auto pattern = activation_pattern(base.cache);

  bool same_pattern = true;
  auto loss = [&] {
    const BlockForward f = block_forward(x, p, cfg);
    same_pattern = (activation_pattern(f.cache) == pattern).all();
    return (f.y.array() * probe_map.array()).sum();
  };
  auto valid = [&] { return same_pattern; };

  GradcheckResult r;
  r.name = "oocs_block k_oocs=" + std::to_string(cfg.k_oocs) + " cin=" + std::to_string(cfg.c_in) +
           " cout=" + std::to_string(cfg.c_out) + " " + shape_tag(spatial) + " seed=" + std::to_string(opts.seed);
  probe(r, x.array(), g.grad_x.array(), loss, valid, opts, rng);
  const std::pair<ConvWeightsd*, const ConvWeightsd*> tensors[] = {
      {&p.w1_on, &g.w1_on}, {&p.w1_off, &g.w1_off}, {&p.w2_on, &g.w2_on}, {&p.w2_off, &g.w2_off}};
  for (const auto& [param, grad] : tensors) {
    probe(r, param->array(), grad->array(), loss, valid, opts, rng);
    if (param->has_bias()) probe(r, param->bias(), grad->bias(), loss, valid, opts, rng);
  }
  r.pass = r.max_rel_error < opts.tolerance && r.checked > 0;
  return r;
}

GradcheckResult check_loss(const std::string& which, Shape3 spatial, const GradcheckOptions& opts) {
  RandomStream rng(opts.seed, 3);
  FeatureMapd logits(1, spatial);
  fill_uniform(logits.array(), rng, -3.0, 3.0);
  Eigen::ArrayXd target(logits.size());
  for (Index i = 0; i < target.size(); ++i) target[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;

  auto evaluate = [&]() -> LossValue {
    const PredictionPair pair(logits, target, 1.0);
    if (which == "bce") return bce_loss(pair);
    if (which == "dice") return soft_dice_loss(pair);
    if (which == "bce_dice") return bce_dice_loss(pair, 1.0, 1.0);
    throw ConfigError("unknown loss '" + which + "'");
  };
  const LossValue base = evaluate();
  auto loss = [&] { return evaluate().value; };

  GradcheckResult r;
  r.name = "loss " + which + " " + shape_tag(spatial) + " seed=" + std::to_string(opts.seed);
  probe(r, logits.array(), base.grad, loss, [] { return true; }, opts, rng);
  r.pass = r.max_rel_error < opts.tolerance && r.checked > 0;
  return r;
}

std::vector<GradcheckResult> block_gradcheck_grid(int seeds, const GradcheckOptions& base) {
  std::vector<GradcheckResult> rows;
  for (int k_oocs : {3, 5})
    for (Index c_in : {1, 2})
      for (Index c_out : {4, 8}) {
        OocsBlockConfig cfg;
        cfg.c_in = c_in;
        cfg.c_out = c_out;
        cfg.k_oocs = k_oocs;
        GradcheckResult agg;
        agg.name = "oocs_block k_oocs=" + std::to_string(k_oocs) + " cin=" + std::to_string(c_in) +
                   " cout=" + std::to_string(c_out) + " seeds=" + std::to_string(seeds);
        agg.pass = true;
        for (int s = 0; s < seeds; ++s) {
          GradcheckOptions opts = base;
          opts.seed = base.seed + static_cast<std::uint64_t>(s);
          const GradcheckResult one = check_block(cfg, {6, 6, 6}, opts);
          agg.max_rel_error = std::max(agg.max_rel_error, one.max_rel_error);
          agg.checked += one.checked;
          agg.skipped += one.skipped;
          agg.pass = agg.pass && one.pass;
        }
        rows.push_back(agg);
      }
  return rows;
}

}  // namespace oocs
