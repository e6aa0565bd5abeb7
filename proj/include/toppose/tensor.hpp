#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "toppose/common.hpp"

namespace toppose {

/// One channel of a crop-sized grid; (row, col) == (y, x).
template <typename T>
using Plane = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// K planes of identical size.
template <typename T>
class ChannelStack {
 public:
  ChannelStack() = default;
  ChannelStack(int channels, int height, int width, T fill = T(0))
      : height_(height), width_(width), planes_(channels, Plane<T>::Constant(height, width, fill)) {
    if (channels < 0 || height <= 0 || width <= 0)
      throw InvalidInput("ChannelStack: invalid shape");
  }

  int channels() const { return static_cast<int>(planes_.size()); }
  int height() const { return height_; }
  int width() const { return width_; }

  Plane<T>& operator[](int k) { return planes_[k]; }
  const Plane<T>& operator[](int k) const { return planes_[k]; }

  auto begin() { return planes_.begin(); }
  auto end() { return planes_.end(); }
  auto begin() const { return planes_.begin(); }
  auto end() const { return planes_.end(); }

  bool same_shape(int channels, int height, int width) const {
    return this->channels() == channels && height_ == height && width_ == width;
  }
  template <typename U>
  bool same_shape(const ChannelStack<U>& other) const {
    return same_shape(other.channels(), other.height(), other.width());
  }

  /// Reshapes and fills in place, reusing storage when the shape is unchanged.
  void reset(int channels, int height, int width, T fill = T(0)) {
    if (same_shape(channels, height, width)) {
      for (auto& p : planes_) p.setConstant(fill);
    } else {
      *this = ChannelStack(channels, height, width, fill);
    }
  }

  template <typename U>
  ChannelStack<U> cast() const {
    ChannelStack<U> out(channels(), height_, width_);
    for (int k = 0; k < channels(); ++k) out[k] = planes_[k].template cast<U>();
    return out;
  }

  bool operator==(const ChannelStack& other) const {
    if (!same_shape(other)) return false;
    for (int k = 0; k < channels(); ++k)
      if (!(planes_[k] == other.planes_[k]).all()) return false;
    return true;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Plane<T>> planes_;
};

/// Per-keypoint probability that a pixel lies within the keypoint's disk.
template <typename Scalar>
using HeatmapStack = ChannelStack<Scalar>;

/// Per-keypoint 2-D offsets (crop px) from each pixel to the keypoint.
template <typename Scalar>
struct OffsetStack {
  ChannelStack<Scalar> dx;
  ChannelStack<Scalar> dy;

  OffsetStack() = default;
  OffsetStack(int channels, int height, int width)
      : dx(channels, height, width), dy(channels, height, width) {}

  void reset(int channels, int height, int width) {
    dx.reset(channels, height, width);
    dy.reset(channels, height, width);
  }

  int channels() const { return dx.channels(); }
  int height() const { return dx.height(); }
  int width() const { return dx.width(); }

  template <typename U>
  OffsetStack<U> cast() const {
    OffsetStack<U> out;
    out.dx = dx.template cast<U>();
    out.dy = dy.template cast<U>();
    return out;
  }

  bool operator==(const OffsetStack& other) const { return dx == other.dx && dy == other.dy; }
};

/// true where a (channel, pixel) contributes to the heatmap loss.
using LossMask = ChannelStack<bool>;

/// Hough-voting output, one channel per keypoint.
using ActivationMaps = ChannelStack<double>;

template <typename A, typename B>
void require_same_shape(const ChannelStack<A>& a, const ChannelStack<B>& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": tensor shapes do not match");
}

}  // namespace toppose
