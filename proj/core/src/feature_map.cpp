#include "leafdet/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

void check_dims(std::size_t c, std::size_t h, std::size_t w) {
  if (c == 0 || h == 0 || w == 0) {
    std::ostringstream msg;
    msg << "feature map dimensions must be >= 1, got " << c << "x" << h << "x" << w;
    throw ValidationError(msg.str());
  }
}

}  // namespace

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width)
    : channels_(channels), height_(height), width_(width) {
  check_dims(channels, height, width);
  data_.assign(channels * height * width, 0.0);
}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                       std::vector<double> values)
    : channels_(channels), height_(height), width_(width), data_(std::move(values)) {
  check_dims(channels, height, width);
  if (data_.size() != channels * height * width) {
    std::ostringstream msg;
    msg << "feature map expects " << channels * height * width << " values, got "
        << data_.size();
    throw ValidationError(msg.str());
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw ValidationError("feature map contains non-finite values");
  }
}

}  // namespace leafdet
