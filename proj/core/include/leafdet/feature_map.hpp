#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace leafdet {

/// Dense channels x height x width grid of finite reals, stored
/// channel-major then row-major.
class FeatureMap {
 public:
  /// Zero-filled map. All dimensions must be >= 1.
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width);

  /// Takes ownership of `values` (size channels*height*width, all finite).
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
             std::vector<double> values);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * height_ + i) * width_ + j];
  }
  double& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return data_[(c * height_ + i) * width_ + j];
  }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  /// Row-major view of one channel.
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * height_ * width_, height_ * width_);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

}  // namespace leafdet
