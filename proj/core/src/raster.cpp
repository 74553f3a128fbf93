#include "leafdet/raster.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Next whitespace-delimited token, skipping '#' comments.
  std::string_view token() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    return bytes_.substr(start, pos_ - start);
  }

  int number(const char* what) {
    const std::string_view t = token();
    if (t.empty() || t.size() > 9) {
      throw ValidationError(std::string("PNM header: bad ") + what);
    }
    int v = 0;
    for (char ch : t) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        throw ValidationError(std::string("PNM header: bad ") + what);
      }
      v = v * 10 + (ch - '0');
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the samples.
  std::size_t data_offset() const { return pos_ + 1; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Raster::Raster(int width, int height, int channels)
    : Raster(width, height, channels,
             std::vector<std::uint8_t>(static_cast<std::size_t>(width > 0 ? width : 0) *
                                       static_cast<std::size_t>(height > 0 ? height : 0) *
                                       static_cast<std::size_t>(channels > 0 ? channels : 0))) {}

Raster::Raster(int width, int height, int channels, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), channels_(channels), data_(std::move(samples)) {
  if (width < 1 || height < 1) {
    throw ValidationError("raster must be at least 1x1");
  }
  if (channels != 1 && channels != 3) {
    throw ValidationError("raster must have 1 or 3 channels, got " + std::to_string(channels));
  }
  const std::size_t expected = static_cast<std::size_t>(width) * height * channels;
  if (data_.size() != expected) {
    std::ostringstream msg;
    msg << "raster " << width << "x" << height << "x" << channels << " needs " << expected
        << " samples, got " << data_.size();
    throw ValidationError(msg.str());
  }
}

Raster decode_pnm(std::string_view bytes) {
  HeaderReader header(bytes);
  const std::string_view magic = header.token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ValidationError("not a binary PGM/PPM file (expected P5 or P6)");
  }
  const int width = header.number("width");
  const int height = header.number("height");
  const int maxval = header.number("maxval");
  if (maxval != 255) {
    throw ValidationError("only 8-bit PNM (maxval 255) is supported");
  }
  if (width < 1 || height < 1) {
    throw ValidationError("PNM image must be at least 1x1");
  }
  const std::size_t offset = header.data_offset();
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (offset > bytes.size() || bytes.size() - offset < n) {
    throw ValidationError("PNM sample data is truncated");
  }
  std::vector<std::uint8_t> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = static_cast<std::uint8_t>(bytes[offset + i]);
  }
  return Raster(width, height, channels, std::move(samples));
}

std::string encode_pnm(const Raster& image) {
  std::string out = (image.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(image.width()) +
                    " " + std::to_string(image.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.samples().data()), image.samples().size());
  return out;
}

Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open image " + path.string());
  }
  const std::string bytes(std::istreambuf_iterator<char>(in), {});
  try {
    return decode_pnm(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_pnm(const std::filesystem::path& path, const Raster& image) {
  const std::string bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("cannot write image " + path.string());
  }
}

}  // namespace leafdet
