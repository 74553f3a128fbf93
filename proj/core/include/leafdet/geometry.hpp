#pragma once

#include <array>
#include <optional>
#include <ostream>

namespace leafdet {

/// Image dimensions in pixels. Both sides are at least 1.
class ImageSize {
 public:
  ImageSize(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  friend bool operator==(const ImageSize&, const ImageSize&) = default;

 private:
  int width_;
  int height_;
};

/// Axis-aligned box in continuous pixel coordinates (x right, y down).
///
/// A box always has strictly positive area: the constructor rejects
/// x2 <= x1, y2 <= y1 and non-finite coordinates with ValidationError.
/// Sides are plain differences, there is no "+1" pixel correction, so the
/// integer box (0,0,10,10) covers exactly 100 unit pixels.
class BBox {
 public:
  BBox(double x1, double y1, double x2, double y2);

  /// Box with the given center and side lengths.
  static BBox from_center(double cx, double cy, double w, double h);

  /// Returns nullopt instead of throwing when the coordinates are degenerate.
  static std::optional<BBox> try_make(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }

  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return (x2_ - x1_) * (y2_ - y1_); }
  double center_x() const { return x1_ + 0.5 * (x2_ - x1_); }
  double center_y() const { return y1_ + 0.5 * (y2_ - y1_); }

  BBox translated(double dx, double dy) const;
  BBox scaled(double sx, double sy) const;

  std::array<double, 4> coords() const { return {x1_, y1_, x2_, y2_}; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  struct Unchecked {};
  BBox(Unchecked, double x1, double y1, double x2, double y2)
      : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {}

  double x1_;
  double y1_;
  double x2_;
  double y2_;
};

std::ostream& operator<<(std::ostream& os, const BBox& b);

/// Area of a ∩ b; 0 when the boxes are disjoint or only touch.
double intersection_area(const BBox& a, const BBox& b);

/// Intersection over union, in [0, 1]. Symmetric; iou(a, a) == 1 exactly.
double iou(const BBox& a, const BBox& b);

/// Intersection of the box with [0, width] x [0, height], or nullopt when
/// that intersection has zero area.
std::optional<BBox> clip(const BBox& b, const ImageSize& size);

/// Clip against an arbitrary rectangle [0, width] x [0, height] given in
/// real units (used for feature-map coordinates).
std::optional<BBox> clip(const BBox& b, double width, double height);

}  // namespace leafdet
