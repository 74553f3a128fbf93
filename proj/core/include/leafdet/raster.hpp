#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leafdet {

/// 8-bit image, 1 (gray) or 3 (RGB) interleaved channels, row-major.
class Raster {
 public:
  /// Zero-filled raster.
  Raster(int width, int height, int channels);
  Raster(int width, int height, int channels, std::vector<std::uint8_t> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  std::uint8_t operator()(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& operator()(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<const std::uint8_t> samples() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_;
  int height_;
  int channels_;
  std::vector<std::uint8_t> data_;
};

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels), maxval 255.
/// Header comments are accepted on input.
Raster decode_pnm(std::string_view bytes);
std::string encode_pnm(const Raster& image);

Raster read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Raster& image);

}  // namespace leafdet
