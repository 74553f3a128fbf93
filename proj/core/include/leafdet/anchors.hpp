#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "leafdet/geometry.hpp"

namespace leafdet {

/// Shape of the reference boxes placed at every feature-map position.
///
/// Defaults give the usual k = 9 set: three scales times three aspect
/// ratios (ratio = height / width) on a stride-16 feature map.
struct AnchorConfig {
  double base_size = 16.0;
  std::vector<double> scales = {8.0, 16.0, 32.0};
  std::vector<double> ratios = {0.5, 1.0, 2.0};
  double stride = 16.0;

  /// Anchors per position, scales.size() * ratios.size().
  std::size_t anchors_per_position() const { return scales.size() * ratios.size(); }

  /// Throws ValidationError on empty lists or non-positive values.
  void validate() const;
};

/// The k base anchors, all centered at (stride/2, stride/2).
///
/// Ordering is ratio-major: index = ratio_index * scales.size() + scale_index.
/// Each anchor has area (base_size * scale)^2 and height / width = ratio.
std::vector<BBox> base_anchors(const AnchorConfig& cfg);

/// Anchors tiled over an Hf x Wf feature grid, position-major and
/// anchor-minor: index = (row * Wf + col) * k + a.
class AnchorSet {
 public:
  AnchorSet(std::size_t rows, std::size_t cols, std::size_t per_position,
            double stride, std::vector<BBox> anchors);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t per_position() const { return per_position_; }
  double stride() const { return stride_; }
  std::size_t size() const { return anchors_.size(); }

  const BBox& at(std::size_t row, std::size_t col, std::size_t a) const;
  std::span<const BBox> boxes() const { return anchors_; }

  std::size_t index(std::size_t row, std::size_t col, std::size_t a) const {
    return (row * cols_ + col) * per_position_ + a;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t per_position_;
  double stride_;
  std::vector<BBox> anchors_;
};

/// Tiles the base anchors: anchor (i, j, a) is base anchor a shifted by
/// (j * stride, i * stride). Anchors may extend past the image.
AnchorSet tile_anchors(const AnchorConfig& cfg, std::size_t rows, std::size_t cols);

}  // namespace leafdet
