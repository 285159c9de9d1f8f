#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "oocs/error.hpp"

namespace oocs {

using Index = Eigen::Index;

/// Spatial extent in voxels, ordered (depth, height, width). Width is the
/// fastest-varying axis in every buffer.
struct Shape3 {
  Index d = 0;
  Index h = 0;
  Index w = 0;

  Index voxels() const { return d * h * w; }
  bool operator==(const Shape3&) const = default;

  std::string str() const {
    return std::to_string(d) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

/// Physical voxel size in millimeters, ordered (z, y, x) like Shape3.
using Spacing = Eigen::Vector3d;

inline void validate_spacing(const Spacing& s) {
  if (!s.allFinite() || (s.array() <= 0.0).any())
    throw DomainError("voxel spacing must be finite and > 0");
}

inline void validate_shape(const Shape3& s) {
  if (s.d <= 0 || s.h <= 0 || s.w <= 0)
    throw DimensionError("shape must be positive, got " + s.str());
}

/// A 3D scalar grid with physical spacing.
template <typename Scalar>
class Volume {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Volume() = default;

  explicit Volume(Shape3 shape, Spacing spacing = Spacing::Ones())
      : shape_(shape), spacing_(std::move(spacing)) {
    validate_shape(shape_);
    validate_spacing(spacing_);
    data_ = Storage::Zero(shape_.voxels());
  }

  Volume(Shape3 shape, Spacing spacing, Storage data)
      : shape_(shape), spacing_(std::move(spacing)), data_(std::move(data)) {
    validate_shape(shape_);
    validate_spacing(spacing_);
    if (data_.size() != shape_.voxels())
      throw DimensionError("volume data length does not match shape " + shape_.str());
  }

  static Volume constant(Shape3 shape, Scalar value, Spacing spacing = Spacing::Ones()) {
    Volume v(shape, std::move(spacing));
    v.data_.setConstant(value);
    return v;
  }

  const Shape3& shape() const { return shape_; }
  const Spacing& spacing() const { return spacing_; }
  Index size() const { return data_.size(); }

  Index index(Index z, Index y, Index x) const { return (z * shape_.h + y) * shape_.w + x; }
  Scalar& operator()(Index z, Index y, Index x) { return data_[index(z, y, x)]; }
  Scalar operator()(Index z, Index y, Index x) const { return data_[index(z, y, x)]; }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  Volume<Other> cast() const {
    return Volume<Other>(shape_, spacing_, data_.template cast<Other>());
  }

 private:
  Shape3 shape_{};
  Spacing spacing_ = Spacing::Ones();
  Storage data_;
};

using Volumed = Volume<double>;

/// A 3D binary segmentation grid with spacing. Values are strictly 0 or 1.
class BinaryMask {
 public:
  using Storage = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

  BinaryMask() = default;

  explicit BinaryMask(Shape3 shape, Spacing spacing = Spacing::Ones())
      : shape_(shape), spacing_(std::move(spacing)) {
    validate_shape(shape_);
    validate_spacing(spacing_);
    data_ = Storage::Zero(shape_.voxels());
  }

  BinaryMask(Shape3 shape, Spacing spacing, Storage data)
      : shape_(shape), spacing_(std::move(spacing)), data_(std::move(data)) {
    validate_shape(shape_);
    validate_spacing(spacing_);
    if (data_.size() != shape_.voxels())
      throw DimensionError("mask data length does not match shape " + shape_.str());
    if ((data_ > 1).any()) throw DomainError("mask values must be 0 or 1");
  }

  const Shape3& shape() const { return shape_; }
  const Spacing& spacing() const { return spacing_; }
  Index size() const { return data_.size(); }
  Index count() const { return data_.template cast<Index>().sum(); }
  bool empty() const { return count() == 0; }

  Index index(Index z, Index y, Index x) const { return (z * shape_.h + y) * shape_.w + x; }
  bool operator()(Index z, Index y, Index x) const { return data_[index(z, y, x)] != 0; }
  void set(Index z, Index y, Index x, bool on) { data_[index(z, y, x)] = on ? 1 : 0; }

  const Storage& array() const { return data_; }

  /// Voxels strictly above `threshold` become foreground.
  template <typename Scalar>
  static BinaryMask threshold(const Volume<Scalar>& v, Scalar threshold) {
    return BinaryMask(v.shape(), v.spacing(), (v.array() > threshold).template cast<std::uint8_t>());
  }

  Volumed to_volume() const {
    return Volumed(shape_, spacing_, data_.template cast<double>());
  }

  bool operator==(const BinaryMask& o) const {
    return shape_ == o.shape_ && spacing_ == o.spacing_ && (data_ == o.data_).all();
  }

 private:
  Shape3 shape_{};
  Spacing spacing_ = Spacing::Ones();
  Storage data_;
};

/// A (channels, depth, height, width) activation tensor.
template <typename Scalar>
class FeatureMap {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using ChannelMap = Eigen::Map<Storage>;
  using ConstChannelMap = Eigen::Map<const Storage>;

  FeatureMap() = default;

  FeatureMap(Index channels, Shape3 spatial) : channels_(channels), spatial_(spatial) {
    if (channels_ < 1) throw DimensionError("feature map needs at least one channel");
    validate_shape(spatial_);
    data_ = Storage::Zero(channels_ * spatial_.voxels());
  }

  FeatureMap(Index channels, Shape3 spatial, Storage data)
      : channels_(channels), spatial_(spatial), data_(std::move(data)) {
    if (channels_ < 1) throw DimensionError("feature map needs at least one channel");
    validate_shape(spatial_);
    if (data_.size() != channels_ * spatial_.voxels())
      throw DimensionError("feature map data length does not match shape");
  }

  /// Single-channel view of a volume (spacing dropped).
  static FeatureMap from_volume(const Volume<Scalar>& v) { return FeatureMap(1, v.shape(), v.array()); }

  Index channels() const { return channels_; }
  const Shape3& spatial() const { return spatial_; }
  Index size() const { return data_.size(); }

  Index index(Index c, Index z, Index y, Index x) const {
    return ((c * spatial_.d + z) * spatial_.h + y) * spatial_.w + x;
  }
  Scalar& operator()(Index c, Index z, Index y, Index x) { return data_[index(c, z, y, x)]; }
  Scalar operator()(Index c, Index z, Index y, Index x) const { return data_[index(c, z, y, x)]; }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  ChannelMap channel(Index c) { return ChannelMap(data_.data() + c * spatial_.voxels(), spatial_.voxels()); }
  ConstChannelMap channel(Index c) const {
    return ConstChannelMap(data_.data() + c * spatial_.voxels(), spatial_.voxels());
  }

  Volume<Scalar> to_volume(Index c, Spacing spacing = Spacing::Ones()) const {
    return Volume<Scalar>(spatial_, std::move(spacing), Storage(channel(c)));
  }

  bool same_shape(const FeatureMap& o) const { return channels_ == o.channels_ && spatial_ == o.spatial_; }

 private:
  Index channels_ = 0;
  Shape3 spatial_{};
  Storage data_;
};

using FeatureMapd = FeatureMap<double>;

/// Weights of a 3D convolution, laid out (c_out, c_in, k, k, k) with an
/// optional per-output-channel bias.
template <typename Scalar>
class ConvWeights {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ConvWeights() = default;

  ConvWeights(Index c_out, Index c_in, Index k, bool with_bias = false)
      : c_out_(c_out), c_in_(c_in), k_(k) {
    validate();
    data_ = Storage::Zero(c_out_ * c_in_ * k_ * k_ * k_);
    if (with_bias) bias_ = Storage::Zero(c_out_);
  }

  ConvWeights(Index c_out, Index c_in, Index k, Storage data, std::optional<Storage> bias = std::nullopt)
      : c_out_(c_out), c_in_(c_in), k_(k), data_(std::move(data)), bias_(std::move(bias)) {
    validate();
    if (data_.size() != c_out_ * c_in_ * k_ * k_ * k_)
      throw DimensionError("conv weight data length does not match shape");
    if (bias_ && bias_->size() != c_out_) throw DimensionError("bias length must equal c_out");
  }

  Index c_out() const { return c_out_; }
  Index c_in() const { return c_in_; }
  Index k() const { return k_; }
  Index taps() const { return k_ * k_ * k_; }
  Index size() const { return data_.size(); }

  Index index(Index o, Index i, Index dz, Index dy, Index dx) const {
    return (((o * c_in_ + i) * k_ + dz) * k_ + dy) * k_ + dx;
  }
  Scalar& operator()(Index o, Index i, Index dz, Index dy, Index dx) { return data_[index(o, i, dz, dy, dx)]; }
  Scalar operator()(Index o, Index i, Index dz, Index dy, Index dx) const {
    return data_[index(o, i, dz, dy, dx)];
  }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  bool has_bias() const { return bias_.has_value(); }
  Storage& bias() { return *bias_; }
  const Storage& bias() const { return *bias_; }
  const std::optional<Storage>& bias_opt() const { return bias_; }

  /// Learnable scalars held by this tensor (weights plus bias).
  Index parameter_count() const { return data_.size() + (bias_ ? bias_->size() : 0); }

  bool same_shape(const ConvWeights& o) const {
    return c_out_ == o.c_out_ && c_in_ == o.c_in_ && k_ == o.k_ && has_bias() == o.has_bias();
  }

 private:
  void validate() const {
    if (c_out_ < 1 || c_in_ < 1) throw DimensionError("conv weights need c_out >= 1 and c_in >= 1");
    if (k_ < 1 || k_ % 2 == 0) throw InvalidKernelError("convolution kernel size must be odd, got " + std::to_string(k_));
  }

  Index c_out_ = 0;
  Index c_in_ = 0;
  Index k_ = 0;
  Storage data_;
  std::optional<Storage> bias_;
};

using ConvWeightsd = ConvWeights<double>;

namespace detail {

template <typename Scalar>
void copy_padded(const Scalar* src, Scalar* dst, Shape3 in, Shape3 out, Shape3 margin) {
  for (Index z = 0; z < in.d; ++z)
    for (Index y = 0; y < in.h; ++y) {
      const Scalar* row = src + (z * in.h + y) * in.w;
      Scalar* target = dst + ((z + margin.d) * out.h + (y + margin.h)) * out.w + margin.w;
      std::copy(row, row + in.w, target);
    }
}

inline Shape3 grow(Shape3 s, Shape3 margin) {
  if (margin.d < 0 || margin.h < 0 || margin.w < 0) throw DomainError("padding margins must be >= 0");
  return {s.d + 2 * margin.d, s.h + 2 * margin.h, s.w + 2 * margin.w};
}

}  // namespace detail

/// Zero padding by `margin` voxels on both sides of each axis.
template <typename Scalar>
Volume<Scalar> pad_zero(const Volume<Scalar>& v, Shape3 margin) {
  Volume<Scalar> out(detail::grow(v.shape(), margin), v.spacing());
  detail::copy_padded(v.array().data(), out.array().data(), v.shape(), out.shape(), margin);
  return out;
}

template <typename Scalar>
FeatureMap<Scalar> pad_zero(const FeatureMap<Scalar>& f, Shape3 margin) {
  const Shape3 grown = detail::grow(f.spatial(), margin);
  FeatureMap<Scalar> out(f.channels(), grown);
  for (Index c = 0; c < f.channels(); ++c)
    detail::copy_padded(f.channel(c).data(), out.channel(c).data(), f.spatial(), grown, margin);
  return out;
}

/// Channel-wise concatenation of two maps with equal spatial extent.
template <typename Scalar>
FeatureMap<Scalar> concat_channels(const FeatureMap<Scalar>& a, const FeatureMap<Scalar>& b) {
  if (!(a.spatial() == b.spatial())) throw DimensionError("concat_channels: spatial shapes differ");
  typename FeatureMap<Scalar>::Storage data(a.size() + b.size());
  data << a.array(), b.array();
  return FeatureMap<Scalar>(a.channels() + b.channels(), a.spatial(), std::move(data));
}

}  // namespace oocs
