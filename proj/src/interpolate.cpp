#include "oocs/interpolate.hpp"

#include <algorithm>
#include <cmath>

#include "oocs/parallel.hpp"

namespace oocs {
namespace {

double read(const Volumed& v, Index z, Index y, Index x, Boundary boundary) {
  const Shape3& s = v.shape();
  if (boundary == Boundary::clamp) {
    z = std::clamp<Index>(z, 0, s.d - 1);
    y = std::clamp<Index>(y, 0, s.h - 1);
    x = std::clamp<Index>(x, 0, s.w - 1);
  } else if (z < 0 || y < 0 || x < 0 || z >= s.d || y >= s.h || x >= s.w) {
    return 0.0;
  }
  return v(z, y, x);
}

Eigen::Vector3d clamp_to_grid(Eigen::Vector3d p, Shape3 s) {
  p[0] = std::clamp(p[0], 0.0, static_cast<double>(s.d - 1));
  p[1] = std::clamp(p[1], 0.0, static_cast<double>(s.h - 1));
  p[2] = std::clamp(p[2], 0.0, static_cast<double>(s.w - 1));
  return p;
}

Index round_half_up(double v) { return static_cast<Index>(std::floor(v + 0.5)); }

}  // namespace

double sample(const Volumed& v, const Eigen::Vector3d& index, Interpolation mode, Boundary boundary) {
  const Eigen::Vector3d p = boundary == Boundary::clamp ? clamp_to_grid(index, v.shape()) : index;
  if (mode == Interpolation::nearest)
    return read(v, round_half_up(p[0]), round_half_up(p[1]), round_half_up(p[2]), boundary);

  const Eigen::Vector3d base = p.array().floor();
  const Eigen::Vector3d t = p - base;
  const auto z0 = static_cast<Index>(base[0]);
  const auto y0 = static_cast<Index>(base[1]);
  const auto x0 = static_cast<Index>(base[2]);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? t[0] : 1.0 - t[0];
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? t[1] : 1.0 - t[1];
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? t[2] : 1.0 - t[2];
        if (wx == 0.0) continue;
        acc += wz * wy * wx * read(v, z0 + dz, y0 + dy, x0 + dx, boundary);
      }
    }
  }
  return acc;
}

Volumed warp(const Volumed& v, const Eigen::Affine3d& out_to_in, Shape3 out_shape, const Spacing& out_spacing,
             Interpolation mode, Boundary boundary) {
  Volumed out(out_shape, out_spacing);
  parallel_for(out_shape.d, [&](std::int64_t begin, std::int64_t end) {
    for (Index z = begin; z < end; ++z)
      for (Index y = 0; y < out_shape.h; ++y)
        for (Index x = 0; x < out_shape.w; ++x) {
          const Eigen::Vector3d src = out_to_in * Eigen::Vector3d(z, y, x);
          out(z, y, x) = sample(v, src, mode, boundary);
        }
  });
  return out;
}

BinaryMask warp(const BinaryMask& m, const Eigen::Affine3d& out_to_in, Shape3 out_shape, const Spacing& out_spacing,
                Boundary boundary) {
  const Volumed values = warp(m.to_volume(), out_to_in, out_shape, out_spacing, Interpolation::nearest, boundary);
  return BinaryMask::threshold(values, 0.5);
}

Eigen::Affine3d index_map_about_center(const Eigen::Affine3d& physical, Shape3 shape, const Spacing& spacing) {
  const Eigen::Vector3d center((shape.d - 1) / 2.0, (shape.h - 1) / 2.0, (shape.w - 1) / 2.0);
  // i' = M (i - c) + t / s + c with M = diag(1/s) L diag(s); an identity
  // physical map yields an exact identity index map.
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) m(r, col) = physical.linear()(r, col) * spacing[col] / spacing[r];
  Eigen::Affine3d out = Eigen::Affine3d::Identity();
  out.linear() = m;
  out.translation() = (center - m * center) + physical.translation().cwiseQuotient(spacing);
  return out;
}

}  // namespace oocs
