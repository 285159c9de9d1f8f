#include "oocs/perturb.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "oocs/error.hpp"
#include "oocs/interpolate.hpp"
#include "oocs/parallel.hpp"
#include "oocs/random.hpp"

namespace oocs {
namespace {

Index reflect(Index j, Index n) {
  const Index period = 2 * n;
  Index m = j % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Filters every line along one axis. `stride` is the distance between
// consecutive samples of a line, `lines` enumerates line starts.
void filter_axis(Eigen::ArrayXd& data, Index n, Index stride, const std::vector<Index>& starts,
                 const Eigen::ArrayXd& taps) {
  const Index radius = (taps.size() - 1) / 2;
  parallel_for(static_cast<std::int64_t>(starts.size()), [&](std::int64_t begin, std::int64_t end) {
    Eigen::ArrayXd line(n);
    for (std::int64_t l = begin; l < end; ++l) {
      const Index base = starts[static_cast<std::size_t>(l)];
      for (Index i = 0; i < n; ++i) line[i] = data[base + i * stride];
      for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index t = -radius; t <= radius; ++t) acc += taps[t + radius] * line[reflect(i + t, n)];
        data[base + i * stride] = acc;
      }
    }
  });
}

using Spectrum = Eigen::Array<std::complex<double>, Eigen::Dynamic, 1>;

void fft3(Spectrum& data, Shape3 s, bool inverse) {
  const Index dims[3] = {s.d, s.h, s.w};
  const Index strides[3] = {s.h * s.w, s.w, 1};
  for (int axis = 0; axis < 3; ++axis) {
    const Index n = dims[axis];
    const Index stride = strides[axis];
    std::vector<Index> starts;
    starts.reserve(static_cast<std::size_t>(s.voxels() / n));
    for (Index z = 0; z < (axis == 0 ? 1 : s.d); ++z)
      for (Index y = 0; y < (axis == 1 ? 1 : s.h); ++y)
        for (Index x = 0; x < (axis == 2 ? 1 : s.w); ++x) starts.push_back((z * s.h + y) * s.w + x);
    parallel_for(static_cast<std::int64_t>(starts.size()), [&](std::int64_t begin, std::int64_t end) {
      Eigen::FFT<double> fft;
      std::vector<std::complex<double>> in(static_cast<std::size_t>(n)), out;
      for (std::int64_t l = begin; l < end; ++l) {
        const Index base = starts[static_cast<std::size_t>(l)];
        for (Index i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = data[base + i * stride];
        if (inverse)
          fft.inv(out, in);
        else
          fft.fwd(out, in);
        for (Index i = 0; i < n; ++i) data[base + i * stride] = out[static_cast<std::size_t>(i)];
      }
    });
  }
}

Spectrum spectrum_of(const Volumed& v) {
  Spectrum s = v.array().cast<std::complex<double>>();
  fft3(s, v.shape(), false);
  return s;
}

}  // namespace

std::string to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::gaussian_blur: return "gaussian_blur";
    case PerturbKind::gaussian_noise: return "gaussian_noise";
    case PerturbKind::motion: return "motion";
  }
  return "unknown";
}

PerturbKind parse_perturb_kind(const std::string& name) {
  if (name == "gaussian_blur" || name == "blur") return PerturbKind::gaussian_blur;
  if (name == "gaussian_noise" || name == "noise") return PerturbKind::gaussian_noise;
  if (name == "motion") return PerturbKind::motion;
  throw ConfigError("unknown perturbation kind '" + name + "'");
}

void PerturbSpec::validate() const {
  switch (kind) {
    case PerturbKind::gaussian_blur:
    case PerturbKind::gaussian_noise:
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("perturbation sigma must be > 0");
      break;
    case PerturbKind::motion:
      if (n_transforms < 1) throw ConfigError("motion needs at least one transform");
      if (!(motion_max_rot >= 0.0) || !(motion_max_trans >= 0.0))
        throw ConfigError("motion ranges must be >= 0");
      break;
    default:
      throw ConfigError("unknown perturbation kind");
  }
}

Eigen::ArrayXd gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("blur sigma must be > 0");
  const auto radius = static_cast<Index>(std::ceil(4.0 * sigma));
  Eigen::ArrayXd taps(2 * radius + 1);
  for (Index i = -radius; i <= radius; ++i)
    taps[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
  return taps / taps.sum();
}

Volumed gaussian_blur(const Volumed& v, double sigma) {
  const Eigen::ArrayXd taps = gaussian_taps(sigma);
  const Shape3 s = v.shape();
  Eigen::ArrayXd data = v.array();
  std::vector<Index> starts;

  for (Index r = 0; r < s.d * s.h; ++r) starts.push_back(r * s.w);
  filter_axis(data, s.w, 1, starts, taps);

  starts.clear();
  for (Index z = 0; z < s.d; ++z)
    for (Index x = 0; x < s.w; ++x) starts.push_back(z * s.h * s.w + x);
  filter_axis(data, s.h, s.w, starts, taps);

  starts.clear();
  for (Index r = 0; r < s.h * s.w; ++r) starts.push_back(r);
  filter_axis(data, s.d, s.h * s.w, starts, taps);

  return Volumed(s, v.spacing(), std::move(data));
}

Volumed gaussian_noise(const Volumed& v, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw DomainError("noise sigma must be > 0");
  const Philox4x32 gen(seed);
  Eigen::ArrayXd data(v.size());
  const Eigen::ArrayXd& src = v.array();
  parallel_for(v.size(), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i)
      data[i] = src[i] + sigma * gen.normal_at(static_cast<std::uint64_t>(i));
  });
  return Volumed(v.shape(), v.spacing(), std::move(data));
}

std::vector<Eigen::Affine3d> draw_rigid_transforms(int n, double max_rot_deg, double max_trans_mm,
                                                   std::uint64_t seed) {
  RandomStream rng(seed);
  const double to_rad = std::numbers::pi / 180.0;
  std::vector<Eigen::Affine3d> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double az = rng.uniform(-max_rot_deg, max_rot_deg) * to_rad;
    const double ay = rng.uniform(-max_rot_deg, max_rot_deg) * to_rad;
    const double ax = rng.uniform(-max_rot_deg, max_rot_deg) * to_rad;
    Eigen::Vector3d t;
    for (int a = 0; a < 3; ++a) t[a] = rng.uniform(-max_trans_mm, max_trans_mm);
    Eigen::Affine3d T = Eigen::Affine3d::Identity();
    // Coordinates are (z, y, x): unit axis 0 is z.
    T.linear() = (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitZ()))
                     .toRotationMatrix();
    T.translation() = t;
    out.push_back(T);
  }
  return out;
}

Volumed motion_from_transforms(const Volumed& v, const std::vector<Eigen::Affine3d>& transforms) {
  if (transforms.empty()) throw ConfigError("motion needs at least one transform");
  const Shape3 s = v.shape();
  const Index n_slabs = static_cast<Index>(transforms.size()) + 1;
  const Index slab = s.d / n_slabs;
  const Index plane = s.h * s.w;

  auto slab_of = [&](Index kz) {
    const Index pos = (kz + s.d / 2) % s.d;  // centered order
    return slab == 0 ? n_slabs - 1 : std::min(pos / slab, n_slabs - 1);
  };

  Spectrum composite = spectrum_of(v);
  for (Index j = 1; j < n_slabs; ++j) {
    bool used = false;
    for (Index kz = 0; kz < s.d && !used; ++kz) used = slab_of(kz) == j;
    if (!used) continue;
    const Eigen::Affine3d map = index_map_about_center(transforms[static_cast<std::size_t>(j - 1)], s, v.spacing());
    const Spectrum moved = spectrum_of(warp(v, map, s, v.spacing(), Interpolation::trilinear, Boundary::zero));
    for (Index kz = 0; kz < s.d; ++kz)
      if (slab_of(kz) == j) composite.segment(kz * plane, plane) = moved.segment(kz * plane, plane);
  }
  fft3(composite, s, true);
  return Volumed(s, v.spacing(), composite.real());
}

Volumed motion_artifact(const Volumed& v, int n_transforms, double max_rot_deg, double max_trans_mm,
                        std::uint64_t seed) {
  if (n_transforms < 1) throw ConfigError("motion needs at least one transform");
  return motion_from_transforms(v, draw_rigid_transforms(n_transforms, max_rot_deg, max_trans_mm, seed));
}

Volumed apply(const PerturbSpec& spec, const Volumed& v) {
  spec.validate();
  switch (spec.kind) {
    case PerturbKind::gaussian_blur: return gaussian_blur(v, spec.sigma);
    case PerturbKind::gaussian_noise: return gaussian_noise(v, spec.sigma, spec.seed);
    case PerturbKind::motion:
      return motion_artifact(v, spec.n_transforms, spec.motion_max_rot, spec.motion_max_trans, spec.seed);
  }
  throw ConfigError("unknown perturbation kind");
}

}  // namespace oocs
