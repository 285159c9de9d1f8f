#pragma once

// Straight-line reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oocs/conv.hpp"
#include "oocs/random.hpp"
#include "oocs/tensor.hpp"

namespace oracle {

using oocs::Index;

// Direct cross-correlation with explicit bounds checks.
inline oocs::FeatureMapd conv(const oocs::FeatureMapd& x, const oocs::ConvWeightsd& w, oocs::Padding padding) {
  const Index k = w.k();
  const Index p = padding == oocs::Padding::same_zero ? (k - 1) / 2 : 0;
  const oocs::Shape3 in = x.spatial();
  const oocs::Shape3 out = padding == oocs::Padding::same_zero
                               ? in
                               : oocs::Shape3{in.d - k + 1, in.h - k + 1, in.w - k + 1};
  oocs::FeatureMapd y(w.c_out(), out);
  for (Index o = 0; o < w.c_out(); ++o)
    for (Index z = 0; z < out.d; ++z)
      for (Index r = 0; r < out.h; ++r)
        for (Index c = 0; c < out.w; ++c) {
          double acc = w.has_bias() ? w.bias()[o] : 0.0;
          for (Index i = 0; i < w.c_in(); ++i)
            for (Index a = 0; a < k; ++a)
              for (Index b = 0; b < k; ++b)
                for (Index e = 0; e < k; ++e) {
                  const Index zz = z + a - p, yy = r + b - p, xx = c + e - p;
                  if (zz < 0 || yy < 0 || xx < 0 || zz >= in.d || yy >= in.h || xx >= in.w) continue;
                  acc += w(o, i, a, b, e) * x(i, zz, yy, xx);
                }
          y(o, z, r, c) = acc;
        }
  return y;
}

inline oocs::FeatureMapd random_map(oocs::RandomStream& rng, Index c, oocs::Shape3 s, double lo = -1, double hi = 1) {
  oocs::FeatureMapd f(c, s);
  for (Index i = 0; i < f.size(); ++i) f.array()[i] = rng.uniform(lo, hi);
  return f;
}

inline oocs::ConvWeightsd random_weights(oocs::RandomStream& rng, Index c_out, Index c_in, Index k, bool bias) {
  oocs::ConvWeightsd w(c_out, c_in, k, bias);
  for (Index i = 0; i < w.size(); ++i) w.array()[i] = rng.uniform(-1, 1);
  if (bias)
    for (Index o = 0; o < c_out; ++o) w.bias()[o] = rng.uniform(-1, 1);
  return w;
}

inline oocs::BinaryMask random_mask(oocs::RandomStream& rng, oocs::Shape3 s, oocs::Spacing sp, double fill) {
  oocs::BinaryMask m(s, sp);
  for (Index z = 0; z < s.d; ++z)
    for (Index y = 0; y < s.h; ++y)
      for (Index x = 0; x < s.w; ++x) m.set(z, y, x, rng.uniform() < fill);
  return m;
}

// Pairwise Hausdorff over voxel centers. Squared terms are summed x, y, z.
inline double squared_mm(const oocs::Spacing& sp, Index dz, Index dy, Index dx) {
  const double sz2 = sp[0] * sp[0], sy2 = sp[1] * sp[1], sx2 = sp[2] * sp[2];
  return sx2 * static_cast<double>(dx * dx) + sy2 * static_cast<double>(dy * dy) +
         sz2 * static_cast<double>(dz * dz);
}

inline double directed_hausdorff(const oocs::BinaryMask& a, const oocs::BinaryMask& b) {
  struct P {
    Index z, y, x;
  };
  auto points = [](const oocs::BinaryMask& m) {
    std::vector<P> out;
    const auto s = m.shape();
    for (Index z = 0; z < s.d; ++z)
      for (Index y = 0; y < s.h; ++y)
        for (Index x = 0; x < s.w; ++x)
          if (m(z, y, x)) out.push_back({z, y, x});
    return out;
  };
  const auto pa = points(a), pb = points(b);
  double worst = 0.0;
  for (const P& p : pa) {
    double best = std::numeric_limits<double>::infinity();
    for (const P& q : pb) best = std::min(best, squared_mm(a.spacing(), p.z - q.z, p.y - q.y, p.x - q.x));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

inline double hausdorff(const oocs::BinaryMask& a, const oocs::BinaryMask& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

inline double dice(const oocs::BinaryMask& a, const oocs::BinaryMask& b) {
  Index na = 0, nb = 0, both = 0;
  for (Index i = 0; i < a.size(); ++i) {
    na += a.array()[i];
    nb += b.array()[i];
    both += a.array()[i] & b.array()[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

// Normalized Gaussian taps exp(-x^2 / 2s^2) on [-ceil(4s), ceil(4s)].
inline std::vector<double> gaussian_profile(double sigma) {
  const int r = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> g(2 * r + 1);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) total += g[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : g) v /= total;
  return g;
}

inline double mean(const Eigen::ArrayXd& a) { return a.sum() / static_cast<double>(a.size()); }

inline double population_variance(const Eigen::ArrayXd& a) {
  const double m = mean(a);
  return (a - m).square().sum() / static_cast<double>(a.size());
}

}  // namespace oracle
