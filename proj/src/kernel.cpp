#include "oocs/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "oocs/error.hpp"
#include "oocs/parallel.hpp"

namespace oocs {
namespace {

// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

// Raw samples this close to zero (relative to the center amplitude) are
// treated as lying on the zero crossing and set to exactly 0.
constexpr double kZeroSnap = 1e-12;

}  // namespace

std::string to_string(Polarity p) { return p == Polarity::on ? "on" : "off"; }
std::string to_string(KernelDims d) { return d == KernelDims::two ? "2d" : "3d"; }

void KernelSpec::validate() const {
  if (k < 3 || k % 2 == 0) throw InvalidKernelError("kernel size must be odd and >= 3, got " + std::to_string(k));
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
  if (!(c >= 1.0) || !std::isfinite(c)) throw DomainError("balance constant c must be >= 1");
  if (dims != KernelDims::two && dims != KernelDims::three) throw DomainError("kernel dims must be 2 or 3");
  if (oversample < 1) throw DomainError("oversample must be >= 1");
}

Index KernelSpec::entries() const {
  Index n = 1;
  for (int i = 0; i < rank(); ++i) n *= k;
  return n;
}

KernelSpec preset_spec(int k) {
  KernelSpec spec;
  spec.k = k;
  spec.gamma = 2.0 / 3.0;
  spec.c = 3.0;
  spec.dims = KernelDims::three;
  return spec;
}

double compute_sigma(double r_center, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("compute_sigma: gamma must lie in (0, 1)");
  if (!(r_center > 0.0)) throw DomainError("compute_sigma: radius must be > 0");
  return (r_center / gamma) * std::sqrt((1.0 - gamma * gamma) / (-6.0 * std::log(gamma)));
}

KernelDerivation derive_geometry(const KernelSpec& spec) {
  spec.validate();
  KernelDerivation d;
  d.r_surround = spec.k / 2.0;
  d.r_center = spec.gamma * d.r_surround;
  d.sigma = compute_sigma(d.r_center, spec.gamma);
  return d;
}

double dog_value(double rho2, double sigma, double gamma, KernelDims dims) {
  const double s2 = sigma * sigma;
  const double g2 = gamma * gamma;
  const double norm = dims == KernelDims::three ? 1.0 / (g2 * gamma) : 1.0 / g2;
  return norm * std::exp(-rho2 / (2.0 * g2 * s2)) - std::exp(-rho2 / (2.0 * s2));
}

KernelGrid sample_dog(const KernelSpec& spec) {
  const KernelDerivation geo = derive_geometry(spec);
  const int half = (spec.k - 1) / 2;
  const int rank = spec.rank();
  const double center_amp = dog_value(0.0, geo.sigma, spec.gamma, spec.dims) + 1.0;

  std::vector<double> sub(static_cast<std::size_t>(spec.oversample));
  for (int j = 0; j < spec.oversample; ++j) sub[j] = (j + 0.5) / spec.oversample - 0.5;

  // The value is computed from the sorted absolute offsets, so every
  // permutation and reflection of a grid point yields the identical double.
  auto sample = [&](std::array<int, 3> p) {
    for (int& v : p) v = std::abs(v);
    std::sort(p.begin(), p.begin() + rank);
    double acc = 0.0;
    const int n = spec.oversample;
    const int count = rank == 3 ? n * n * n : n * n;
    for (int s = 0; s < count; ++s) {
      double rho2 = 0.0;
      int code = s;
      for (int axis = 0; axis < rank; ++axis) {
        const double q = p[axis] + sub[code % n];
        code /= n;
        rho2 += q * q;
      }
      acc += dog_value(rho2, geo.sigma, spec.gamma, spec.dims);
    }
    const double v = acc / count;
    return std::abs(v) <= kZeroSnap * center_amp ? 0.0 : v;
  };

  KernelGrid grid;
  grid.k = spec.k;
  grid.dims = spec.dims;
  grid.weights.resize(spec.entries());
  Index idx = 0;
  if (rank == 3) {
    for (int z = -half; z <= half; ++z)
      for (int y = -half; y <= half; ++y)
        for (int x = -half; x <= half; ++x) grid.weights[idx++] = sample({z, y, x});
  } else {
    for (int y = -half; y <= half; ++y)
      for (int x = -half; x <= half; ++x) grid.weights[idx++] = sample({y, x, 0});
  }
  return grid;
}

BalanceResult balance(const Eigen::Ref<const Eigen::ArrayXd>& raw, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("balance constant must be positive");
  const double pos = (raw > 0.0).select(raw, 0.0).sum();
  const double neg = -(raw < 0.0).select(raw, 0.0).sum();
  if (!(pos > 0.0) || !(neg > 0.0))
    throw DegenerateKernelError("cannot balance a kernel without both positive and negative entries");
  BalanceResult out;
  out.scale_pos = c / pos;
  out.scale_neg = c / neg;
  out.weights = (raw > 0.0).select(raw * out.scale_pos, raw * out.scale_neg);
  return out;
}

double BalancedKernel::at(int z, int y, int x) const {
  const int half = (spec.k - 1) / 2;
  if (spec.dims == KernelDims::two) return weights[(y + half) * spec.k + (x + half)];
  return weights[((z + half) * spec.k + (y + half)) * spec.k + (x + half)];
}

BalancedKernel make_kernel(const KernelSpec& spec, Polarity polarity) {
  const KernelGrid raw = sample_dog(spec);
  BalanceResult balanced = balance(raw.weights, spec.c);
  BalancedKernel kernel;
  kernel.spec = spec;
  kernel.derivation = derive_geometry(spec);
  kernel.derivation.scale_pos = balanced.scale_pos;
  kernel.derivation.scale_neg = balanced.scale_neg;
  kernel.polarity = polarity;
  kernel.weights = polarity == Polarity::on ? std::move(balanced.weights) : Eigen::ArrayXd(-balanced.weights);
  return kernel;
}

double continuous_balance_check(const KernelSpec& spec, int n_grid) {
  if (n_grid < 64) throw DomainError("continuous_balance_check needs n_grid >= 64");
  const KernelDerivation geo = derive_geometry(spec);
  const double radius = geo.sigma * (6.0 + 2.0 * std::log2(n_grid / 64.0));
  const double h = 2.0 * radius / n_grid;
  const double r2 = radius * radius;
  const int rank = spec.rank();

  auto coord = [&](int i) { return -radius + h * (i + 0.5); };

  // One partial sum per outer index, combined in index order afterwards.
  std::vector<CompensatedSum> partial(static_cast<std::size_t>(n_grid));
  parallel_for(n_grid, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t a = begin; a < end; ++a) {
      const double qa = coord(static_cast<int>(a));
      CompensatedSum acc;
      if (rank == 3) {
        for (int b = 0; b < n_grid; ++b) {
          const double qb = coord(b);
          for (int c = 0; c < n_grid; ++c) {
            const double qc = coord(c);
            const double rho2 = qa * qa + qb * qb + qc * qc;
            if (rho2 <= r2) acc.add(dog_value(rho2, geo.sigma, spec.gamma, spec.dims));
          }
        }
      } else {
        for (int b = 0; b < n_grid; ++b) {
          const double qb = coord(b);
          const double rho2 = qa * qa + qb * qb;
          if (rho2 <= r2) acc.add(dog_value(rho2, geo.sigma, spec.gamma, spec.dims));
        }
      }
      partial[static_cast<std::size_t>(a)] = acc;
    }
  });
  CompensatedSum total;
  for (const auto& p : partial) {
    total.add(p.sum);
    total.add(p.carry);
  }
  return std::abs(total.value() * std::pow(h, rank));
}

ConvWeightsd to_conv_weights(const BalancedKernel& kernel) {
  if (kernel.spec.dims != KernelDims::three) throw DimensionError("only 3D kernels can drive a 3D convolution");
  return ConvWeightsd(1, 1, kernel.k(), kernel.weights);
}

}  // namespace oocs
