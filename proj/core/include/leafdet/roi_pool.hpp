#pragma once

#include <cstddef>
#include <vector>

#include "leafdet/feature_map.hpp"
#include "leafdet/geometry.hpp"

namespace leafdet {

struct RoiPoolConfig {
  std::size_t width = 7;
  std::size_t height = 7;
};

/// Quantized max pooling of a region into a fixed width x height grid.
///
/// The roi is given in feature-map units, where feature cell (i, j) covers
/// [j, j+1) x [i, i+1). It is first clipped to the map. For a clipped roi
/// of width w, output column gx pools feature columns
///   [floor(x1 + gx*w/W), ceil(x1 + (gx+1)*w/W))
/// and rows likewise, so neighbouring cells may overlap and no cell is ever
/// empty. Output is laid out (channel, gy, gx) with length W*H*C.
///
/// Throws ValidationError when the roi does not intersect the map or the
/// grid has a zero dimension.
std::vector<double> roi_pool(const FeatureMap& features, const BBox& roi,
                             const RoiPoolConfig& cfg = {});

/// Maps an image-space box to feature-map units: x1, y1 are divided by the
/// stride and floored, x2, y2 divided and ceiled, so the feature roi always
/// covers the image roi.
BBox image_to_feature_roi(const BBox& image_roi, double stride);

}  // namespace leafdet
