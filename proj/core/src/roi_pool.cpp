#include "leafdet/roi_pool.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
};

// Feature indices pooled by output cell `g` of `cells` along one axis.
Span cell_span(double lo, double extent, std::size_t g, std::size_t cells, std::size_t limit) {
  const double start = lo + static_cast<double>(g) * extent / static_cast<double>(cells);
  const double stop = lo + static_cast<double>(g + 1) * extent / static_cast<double>(cells);
  auto b = static_cast<std::ptrdiff_t>(std::floor(start));
  auto e = static_cast<std::ptrdiff_t>(std::ceil(stop));
  const auto n = static_cast<std::ptrdiff_t>(limit);
  b = std::clamp<std::ptrdiff_t>(b, 0, n - 1);
  e = std::clamp<std::ptrdiff_t>(e, b + 1, n);
  return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
}

}  // namespace

std::vector<double> roi_pool(const FeatureMap& features, const BBox& roi,
                             const RoiPoolConfig& cfg) {
  if (cfg.width == 0 || cfg.height == 0) {
    throw ValidationError("RoI pooling grid must be at least 1x1");
  }
  const auto clipped = clip(roi, static_cast<double>(features.width()),
                            static_cast<double>(features.height()));
  if (!clipped) {
    std::ostringstream msg;
    msg << "roi " << roi << " is empty after clipping to the " << features.width() << "x"
        << features.height() << " feature map";
    throw ValidationError(msg.str());
  }

  std::vector<Span> cols(cfg.width);
  std::vector<Span> rows(cfg.height);
  for (std::size_t gx = 0; gx < cfg.width; ++gx) {
    cols[gx] = cell_span(clipped->x1(), clipped->width(), gx, cfg.width, features.width());
  }
  for (std::size_t gy = 0; gy < cfg.height; ++gy) {
    rows[gy] = cell_span(clipped->y1(), clipped->height(), gy, cfg.height, features.height());
  }

  std::vector<double> out;
  out.reserve(features.channels() * cfg.height * cfg.width);
  for (std::size_t c = 0; c < features.channels(); ++c) {
    for (const Span& r : rows) {
      for (const Span& s : cols) {
        double best = features(c, r.begin, s.begin);
        for (std::size_t i = r.begin; i < r.end; ++i) {
          for (std::size_t j = s.begin; j < s.end; ++j) {
            best = std::max(best, features(c, i, j));
          }
        }
        out.push_back(best);
      }
    }
  }
  return out;
}

BBox image_to_feature_roi(const BBox& image_roi, double stride) {
  if (!(std::isfinite(stride) && stride > 0.0)) {
    throw ValidationError("feature stride must be positive");
  }
  return BBox(std::floor(image_roi.x1() / stride), std::floor(image_roi.y1() / stride),
              std::ceil(image_roi.x2() / stride), std::ceil(image_roi.y2() / stride));
}

}  // namespace leafdet
