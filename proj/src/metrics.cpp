#include "oocs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "oocs/error.hpp"
#include "oocs/parallel.hpp"

namespace oocs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_compatible(const BinaryMask& a, const BinaryMask& b) {
  if (!(a.shape() == b.shape())) throw DimensionError("mask shapes differ: " + a.shape().str() + " vs " + b.shape().str());
  if (a.spacing() != b.spacing()) throw DimensionError("mask spacings differ");
}

// 1D squared-distance transform along a strided line:
//   out[q] = min_p f[p] + s2 * (q - p)^2, skipping p with f[p] = inf.
// Lower envelope of parabolas (Felzenszwalb & Huttenlocher).
class LineTransform {
 public:
  explicit LineTransform(Index n) : f_(n), v_(n), z_(n + 1) {}

  void run(double* data, Index n, Index stride, double s2) {
    for (Index i = 0; i < n; ++i) f_[i] = data[i * stride];
    Index k = -1;
    for (Index q = 0; q < n; ++q) {
      if (f_[q] == kInf) continue;
      const double fq = f_[q] + s2 * static_cast<double>(q * q);
      while (k >= 0) {
        const Index p = v_[k];
        const double fp = f_[p] + s2 * static_cast<double>(p * p);
        const double cross = (fq - fp) / (2.0 * s2 * static_cast<double>(q - p));
        if (cross <= z_[k]) {
          --k;
        } else {
          ++k;
          v_[k] = q;
          z_[k] = cross;
          break;
        }
      }
      if (k < 0) {
        k = 0;
        v_[0] = q;
        z_[0] = -kInf;
      }
    }
    if (k < 0) {
      for (Index i = 0; i < n; ++i) data[i * stride] = kInf;
      return;
    }
    z_[k + 1] = kInf;
    Index j = 0;
    for (Index q = 0; q < n; ++q) {
      while (z_[j + 1] < static_cast<double>(q)) ++j;
      const Index d = q - v_[j];
      data[q * stride] = f_[v_[j]] + s2 * static_cast<double>(d * d);
    }
  }

 private:
  std::vector<double> f_;
  std::vector<Index> v_;
  std::vector<double> z_;
};

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
  check_compatible(a, b);
  const Index size_a = a.count();
  const Index size_b = b.count();
  if (size_a + size_b == 0) return 1.0;
  const Index inter = (a.array() * b.array()).cast<Index>().sum();
  return 2.0 * static_cast<double>(inter) / static_cast<double>(size_a + size_b);
}

Eigen::ArrayXd squared_distance_transform(const BinaryMask& mask) {
  const Shape3 s = mask.shape();
  Eigen::ArrayXd dist = (mask.array() != 0).select(Eigen::ArrayXd::Zero(mask.size()), kInf);
  double* data = dist.data();
  const double sz2 = mask.spacing()[0] * mask.spacing()[0];
  const double sy2 = mask.spacing()[1] * mask.spacing()[1];
  const double sx2 = mask.spacing()[2] * mask.spacing()[2];

  // x lines
  parallel_for(s.d * s.h, [&](std::int64_t begin, std::int64_t end) {
    LineTransform line(s.w);
    for (std::int64_t r = begin; r < end; ++r) line.run(data + r * s.w, s.w, 1, sx2);
  });
  // y lines
  parallel_for(s.d * s.w, [&](std::int64_t begin, std::int64_t end) {
    LineTransform line(s.h);
    for (std::int64_t r = begin; r < end; ++r) {
      const Index z = r / s.w, x = r % s.w;
      line.run(data + z * s.h * s.w + x, s.h, s.w, sy2);
    }
  });
  // z lines
  parallel_for(s.h * s.w, [&](std::int64_t begin, std::int64_t end) {
    LineTransform line(s.d);
    for (std::int64_t r = begin; r < end; ++r) line.run(data + r, s.d, s.h * s.w, sz2);
  });
  return dist;
}

double directed_hausdorff_mm(const BinaryMask& a, const BinaryMask& b) {
  check_compatible(a, b);
  if (a.empty() || b.empty()) throw UndefinedDistanceError("Hausdorff distance is undefined for an empty mask");
  const Eigen::ArrayXd to_b = squared_distance_transform(b);
  const double worst = (a.array() != 0).select(to_b, 0.0).maxCoeff();
  return std::sqrt(worst);
}

double hausdorff_mm(const BinaryMask& a, const BinaryMask& b) {
  return std::max(directed_hausdorff_mm(a, b), directed_hausdorff_mm(b, a));
}

}  // namespace oocs
