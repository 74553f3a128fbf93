#include "leafdet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

bool valid_coords(double x1, double y1, double x2, double y2) {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x2 > x1 && y2 > y1;
}

}  // namespace

ImageSize::ImageSize(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    std::ostringstream msg;
    msg << "image size must be at least 1x1, got " << width << "x" << height;
    throw ValidationError(msg.str());
  }
}

BBox::BBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!valid_coords(x1, y1, x2, y2)) {
    std::ostringstream msg;
    msg << "degenerate box (" << x1 << ", " << y1 << ", " << x2 << ", " << y2
        << "): ";
    if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
          std::isfinite(y2))) {
      msg << "non-finite coordinate";
    } else if (!(x2 > x1)) {
      msg << "x2 <= x1";
    } else {
      msg << "y2 <= y1";
    }
    throw ValidationError(msg.str());
  }
}

BBox BBox::from_center(double cx, double cy, double w, double h) {
  return BBox(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
}

std::optional<BBox> BBox::try_make(double x1, double y1, double x2, double y2) {
  if (!valid_coords(x1, y1, x2, y2)) {
    return std::nullopt;
  }
  return BBox(Unchecked{}, x1, y1, x2, y2);
}

BBox BBox::translated(double dx, double dy) const {
  return BBox(x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy);
}

BBox BBox::scaled(double sx, double sy) const {
  return BBox(x1_ * sx, y1_ * sy, x2_ * sx, y2_ * sy);
}

std::ostream& operator<<(std::ostream& os, const BBox& b) {
  return os << "(" << b.x1() << ", " << b.y1() << ", " << b.x2() << ", "
            << b.y2() << ")";
}

double intersection_area(const BBox& a, const BBox& b) {
  const double ix1 = std::max(a.x1(), b.x1());
  const double iy1 = std::max(a.y1(), b.y1());
  const double ix2 = std::min(a.x2(), b.x2());
  const double iy2 = std::min(a.y2(), b.y2());
  if (ix2 <= ix1 || iy2 <= iy1) {
    return 0.0;
  }
  return (ix2 - ix1) * (iy2 - iy1);
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  const double uni = a.area() + b.area() - inter;
  return std::min(1.0, inter / uni);
}

std::optional<BBox> clip(const BBox& b, double width, double height) {
  return BBox::try_make(std::clamp(b.x1(), 0.0, width),
                        std::clamp(b.y1(), 0.0, height),
                        std::clamp(b.x2(), 0.0, width),
                        std::clamp(b.y2(), 0.0, height));
}

std::optional<BBox> clip(const BBox& b, const ImageSize& size) {
  return clip(b, static_cast<double>(size.width()),
              static_cast<double>(size.height()));
}

}  // namespace leafdet
