#include "leafdet/anchors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void AnchorConfig::validate() const {
  if (!positive_finite(base_size)) {
    throw ValidationError("anchor base_size must be positive");
  }
  if (!positive_finite(stride)) {
    throw ValidationError("anchor stride must be positive");
  }
  if (scales.empty() || ratios.empty()) {
    throw ValidationError("anchor config needs at least one scale and one ratio");
  }
  for (double s : scales) {
    if (!positive_finite(s)) {
      std::ostringstream msg;
      msg << "anchor scale must be positive, got " << s;
      throw ValidationError(msg.str());
    }
  }
  for (double r : ratios) {
    if (!positive_finite(r)) {
      std::ostringstream msg;
      msg << "anchor ratio must be positive, got " << r;
      throw ValidationError(msg.str());
    }
  }
}

std::vector<BBox> base_anchors(const AnchorConfig& cfg) {
  cfg.validate();
  const double c = 0.5 * cfg.stride;
  std::vector<BBox> out;
  out.reserve(cfg.anchors_per_position());
  for (double ratio : cfg.ratios) {
    const double root = std::sqrt(ratio);
    for (double scale : cfg.scales) {
      const double side = cfg.base_size * scale;
      out.push_back(BBox::from_center(c, c, side / root, side * root));
    }
  }
  return out;
}

AnchorSet::AnchorSet(std::size_t rows, std::size_t cols, std::size_t per_position,
                     double stride, std::vector<BBox> anchors)
    : rows_(rows),
      cols_(cols),
      per_position_(per_position),
      stride_(stride),
      anchors_(std::move(anchors)) {
  if (anchors_.size() != rows_ * cols_ * per_position_) {
    throw ValidationError("anchor set size does not match rows * cols * k");
  }
}

const BBox& AnchorSet::at(std::size_t row, std::size_t col, std::size_t a) const {
  if (row >= rows_ || col >= cols_ || a >= per_position_) {
    throw std::out_of_range("anchor index out of range");
  }
  return anchors_[index(row, col, a)];
}

AnchorSet tile_anchors(const AnchorConfig& cfg, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ValidationError("feature grid must be at least 1x1");
  }
  const std::vector<BBox> base = base_anchors(cfg);
  const std::size_t k = base.size();

  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  const std::size_t limit =
      std::min<std::size_t>(kMax, std::vector<BBox>().max_size());
  if (rows > limit / cols || rows * cols > limit / k) {
    std::ostringstream msg;
    msg << "anchor count " << k << " x " << rows << " x " << cols
        << " exceeds the addressable range";
    throw ValidationError(msg.str());
  }

  std::vector<BBox> anchors;
  anchors.reserve(rows * cols * k);
  for (std::size_t i = 0; i < rows; ++i) {
    const double dy = static_cast<double>(i) * cfg.stride;
    for (std::size_t j = 0; j < cols; ++j) {
      const double dx = static_cast<double>(j) * cfg.stride;
      for (const BBox& b : base) {
        anchors.push_back(b.translated(dx, dy));
      }
    }
  }
  return AnchorSet(rows, cols, k, cfg.stride, std::move(anchors));
}

}  // namespace leafdet
