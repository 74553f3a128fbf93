#include "leafdet/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

int scaled_side(int side, double factor) {
  const double v = std::round(static_cast<double>(side) * factor);
  if (!(v < 1e8)) {
    throw ValidationError("resampled image would be too large");
  }
  return std::max(1, static_cast<int>(v));
}

// Bilinear sample at pixel-index coordinates, edge clamped.
double sample(const Raster& img, double fx, double fy, int c) {
  fx = std::clamp(fx, 0.0, static_cast<double>(img.width() - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double wx = fx - x0;
  const double wy = fy - y0;
  const double top = img(x0, y0, c) * (1.0 - wx) + img(x1, y0, c) * wx;
  const double bottom = img(x0, y1, c) * (1.0 - wx) + img(x1, y1, c) * wx;
  return top * (1.0 - wy) + bottom * wy;
}

std::uint8_t to_sample(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

// Resamples onto a new canvas under the map p -> (sx * px, sy * py).
Raster resample(const Raster& img, int new_width, int new_height, double sx, double sy) {
  Raster out(new_width, new_height, img.channels());
  for (int v = 0; v < new_height; ++v) {
    const double fy = (v + 0.5) / sy - 0.5;
    for (int u = 0; u < new_width; ++u) {
      const double fx = (u + 0.5) / sx - 0.5;
      for (int c = 0; c < img.channels(); ++c) {
        out(u, v, c) = to_sample(sample(img, fx, fy, c));
      }
    }
  }
  return out;
}

std::vector<LabeledBox> scale_boxes(std::span<const LabeledBox> boxes, double sx, double sy,
                                    const ImageSize& canvas) {
  std::vector<LabeledBox> out;
  for (const LabeledBox& b : boxes) {
    if (auto clipped = clip(b.box.scaled(sx, sy), canvas)) {
      out.push_back({*clipped, b.label});
    }
  }
  return out;
}

Augmented scale(const Raster& img, std::span<const LabeledBox> boxes, double sx, double sy) {
  const int w = scaled_side(img.width(), sx);
  const int h = scaled_side(img.height(), sy);
  return {resample(img, w, h, sx, sy), scale_boxes(boxes, sx, sy, ImageSize(w, h))};
}

Augmented rotate(const Raster& img, std::span<const LabeledBox> boxes, Turn dir) {
  const int W = img.width();
  const int H = img.height();
  Raster out(H, W, img.channels());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int nx = dir == Turn::kRight ? H - 1 - y : y;
      const int ny = dir == Turn::kRight ? x : W - 1 - x;
      for (int c = 0; c < img.channels(); ++c) {
        out(nx, ny, c) = img(x, y, c);
      }
    }
  }
  std::vector<LabeledBox> mapped;
  for (const LabeledBox& lb : boxes) {
    const BBox& b = lb.box;
    const BBox r = dir == Turn::kRight ? BBox(H - b.y2(), b.x1(), H - b.y1(), b.x2())
                                       : BBox(b.y1(), W - b.x2(), b.y2(), W - b.x1());
    if (auto clipped = clip(r, ImageSize(H, W))) {
      mapped.push_back({*clipped, lb.label});
    }
  }
  return {std::move(out), std::move(mapped)};
}

Augmented crop(const Raster& img, std::span<const LabeledBox> boxes, const Crop& region) {
  Raster out(region.width, region.height, img.channels());
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out(x, y, c) = img(region.x + x, region.y + y, c);
      }
    }
  }
  const ImageSize canvas(region.width, region.height);
  std::vector<LabeledBox> kept;
  for (const LabeledBox& lb : boxes) {
    const auto clipped = clip(lb.box.translated(-region.x, -region.y), canvas);
    if (clipped && clipped->area() >= region.min_visibility * lb.box.area()) {
      kept.push_back({*clipped, lb.label});
    }
  }
  return {std::move(out), std::move(kept)};
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable blur of a W x H field, edge clamped.
std::vector<double> blur(const std::vector<double>& field, int W, int H, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(field.size());
  std::vector<double> out(field.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[i + r] * field[static_cast<std::size_t>(y) * W + std::clamp(x + i, 0, W - 1)];
      }
      tmp[static_cast<std::size_t>(y) * W + x] = acc;
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[i + r] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, H - 1)) * W + x];
      }
      out[static_cast<std::size_t>(y) * W + x] = acc;
    }
  }
  return out;
}

double sample_field(const std::vector<double>& f, int W, int H, double fx, double fy) {
  fx = std::clamp(fx, 0.0, static_cast<double>(W - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(H - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, W - 1);
  const int y1 = std::min(y0 + 1, H - 1);
  const double wx = fx - x0;
  const double wy = fy - y0;
  auto at = [&](int x, int y) { return f[static_cast<std::size_t>(y) * W + x]; };
  return (at(x0, y0) * (1.0 - wx) + at(x1, y0) * wx) * (1.0 - wy) +
         (at(x0, y1) * (1.0 - wx) + at(x1, y1) * wx) * wy;
}

Augmented elastic(const Raster& img, std::span<const LabeledBox> boxes, const Elastic& op) {
  const int W = img.width();
  const int H = img.height();
  const std::size_t n = static_cast<std::size_t>(W) * H;

  std::mt19937_64 rng(*op.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> dx(n);
  std::vector<double> dy(n);
  for (double& v : dx) v = unit(rng);
  for (double& v : dy) v = unit(rng);
  dx = blur(dx, W, H, op.sigma);
  dy = blur(dy, W, H, op.sigma);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] *= op.alpha;
    dy[i] *= op.alpha;
  }

  Raster out(W, H, img.channels());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      for (int c = 0; c < img.channels(); ++c) {
        out(x, y, c) = to_sample(sample(img, x + dx[i], y + dy[i], c));
      }
    }
  }

  // Output pixel q shows input q + d(q), so input point p lands near p - d(p).
  constexpr int kPointsPerEdge = 8;
  const ImageSize canvas(W, H);
  std::vector<LabeledBox> mapped;
  for (const LabeledBox& lb : boxes) {
    const BBox& b = lb.box;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double lo_x = kInf, lo_y = kInf, hi_x = -kInf, hi_y = -kInf;
    auto extend = [&](double px, double py) {
      const double mx = px - sample_field(dx, W, H, px - 0.5, py - 0.5);
      const double my = py - sample_field(dy, W, H, px - 0.5, py - 0.5);
      lo_x = std::min(lo_x, mx);
      hi_x = std::max(hi_x, mx);
      lo_y = std::min(lo_y, my);
      hi_y = std::max(hi_y, my);
    };
    for (int s = 0; s < kPointsPerEdge; ++s) {
      const double t = static_cast<double>(s) / (kPointsPerEdge - 1);
      const double x = b.x1() + t * b.width();
      const double y = b.y1() + t * b.height();
      extend(x, b.y1());
      extend(x, b.y2());
      extend(b.x1(), y);
      extend(b.x2(), y);
    }
    if (auto hull = BBox::try_make(lo_x, lo_y, hi_x, hi_y)) {
      if (auto clipped = clip(*hull, canvas)) {
        mapped.push_back({*clipped, lb.label});
      }
    }
  }
  return {std::move(out), std::move(mapped)};
}

double parse_number(std::string_view text, std::string_view token) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("bad number \"" + std::string(text) + "\" in augmentation op \"" +
                          std::string(token) + "\"");
  }
  return v;
}

template <class Int>
Int parse_integer(std::string_view text, std::string_view token) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("bad integer \"" + std::string(text) + "\" in augmentation op \"" +
                          std::string(token) + "\"");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void validate(const AugmentOp& op) {
  std::visit(Overloaded{
                 [](const Rotate90&) {},
                 [](const Crop& c) {
                   if (c.width < 1 || c.height < 1 || c.x < 0 || c.y < 0) {
                     throw ValidationError("crop region must have positive size and offset >= 0");
                   }
                   if (!(c.min_visibility >= 0.0 && c.min_visibility <= 1.0)) {
                     throw ValidationError("crop min_visibility must be in [0, 1]");
                   }
                 },
                 [](const RandomCrop& c) {
                   if (!(c.fraction > 0.0 && c.fraction <= 1.0)) {
                     throw ValidationError("random crop fraction must be in (0, 1]");
                   }
                   if (!(c.min_visibility >= 0.0 && c.min_visibility <= 1.0)) {
                     throw ValidationError("crop min_visibility must be in [0, 1]");
                   }
                 },
                 [](const Zoom& z) {
                   if (!positive(z.factor)) throw ValidationError("zoom factor must be > 0");
                 },
                 [](const Stretch& s) {
                   if (!positive(s.sx) || !positive(s.sy)) {
                     throw ValidationError("stretch factors must be > 0");
                   }
                 },
                 [](const Elastic& e) {
                   if (!(std::isfinite(e.alpha) && e.alpha >= 0.0)) {
                     throw ValidationError("elastic alpha must be >= 0");
                   }
                   if (!positive(e.sigma)) throw ValidationError("elastic sigma must be > 0");
                 },
             },
             op);
}

Augmented apply(const Raster& image, std::span<const LabeledBox> boxes, const AugmentOp& op) {
  validate(op);
  return std::visit(
      Overloaded{
          [&](const Rotate90& r) { return rotate(image, boxes, r.direction); },
          [&](const Crop& c) {
            if (c.x + c.width > image.width() || c.y + c.height > image.height()) {
              std::ostringstream msg;
              msg << "crop region " << c.width << "x" << c.height << "+" << c.x << "+" << c.y
                  << " lies outside the " << image.width() << "x" << image.height() << " image";
              throw ValidationError(msg.str());
            }
            return crop(image, boxes, c);
          },
          [&](const RandomCrop&) -> Augmented {
            throw ValidationError("random crop must be resolved before it is applied");
          },
          [&](const Zoom& z) { return scale(image, boxes, z.factor, z.factor); },
          [&](const Stretch& s) { return scale(image, boxes, s.sx, s.sy); },
          [&](const Elastic& e) {
            if (!e.seed) {
              throw ValidationError("elastic deformation needs a seed before it is applied");
            }
            return elastic(image, boxes, e);
          },
      },
      op);
}

AugmentOp resolve(const AugmentOp& op, const ImageSize& size, std::mt19937_64& rng) {
  if (const auto* rc = std::get_if<RandomCrop>(&op)) {
    validate(op);
    const int w = std::max(1, static_cast<int>(std::lround(size.width() * rc->fraction)));
    const int h = std::max(1, static_cast<int>(std::lround(size.height() * rc->fraction)));
    std::uniform_int_distribution<int> px(0, size.width() - w);
    std::uniform_int_distribution<int> py(0, size.height() - h);
    const int x = px(rng);
    const int y = py(rng);
    return Crop{x, y, w, h, rc->min_visibility};
  }
  if (const auto* el = std::get_if<Elastic>(&op); el && !el->seed) {
    return Elastic{el->alpha, el->sigma, rng()};
  }
  return op;
}

Augmented pipeline(const Raster& image, std::span<const LabeledBox> boxes,
                   std::span<const AugmentOp> ops, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Augmented cur{image, std::vector<LabeledBox>(boxes.begin(), boxes.end())};
  for (const AugmentOp& op : ops) {
    const AugmentOp concrete = resolve(op, ImageSize(cur.image.width(), cur.image.height()), rng);
    cur = apply(cur.image, cur.boxes, concrete);
  }
  return cur;
}

Augmented resize_to_limit(const Raster& image, std::span<const LabeledBox> boxes, int max_width,
                          int max_height, ResizeMode mode) {
  if (max_width < 1 || max_height < 1) {
    throw ValidationError("resize limit must be at least 1x1");
  }
  const int W = image.width();
  const int H = image.height();
  if (mode == ResizeMode::kExact) {
    if (W == max_width && H == max_height) {
      return {image, {boxes.begin(), boxes.end()}};
    }
    const double sx = static_cast<double>(max_width) / W;
    const double sy = static_cast<double>(max_height) / H;
    return {resample(image, max_width, max_height, sx, sy),
            scale_boxes(boxes, sx, sy, ImageSize(max_width, max_height))};
  }
  if (W <= max_width && H <= max_height) {
    return {image, {boxes.begin(), boxes.end()}};
  }
  const double s = std::min(static_cast<double>(max_width) / W, static_cast<double>(max_height) / H);
  const int w = std::min(max_width, scaled_side(W, s));
  const int h = std::min(max_height, scaled_side(H, s));
  return {resample(image, w, h, s, s), scale_boxes(boxes, s, s, ImageSize(w, h))};
}

std::vector<AugmentOp> parse_ops(std::string_view spec) {
  std::vector<AugmentOp> ops;
  if (trim(spec).empty()) return ops;
  for (std::string_view raw : split(spec, ',')) {
    const std::string_view token = trim(raw);
    const std::vector<std::string_view> parts = split(token, ':');
    const std::string_view name = parts.front();
    const std::size_t args = parts.size() - 1;
    auto num = [&](std::size_t i) { return parse_number(parts[i], token); };
    auto bad_arity = [&]() {
      return ValidationError("wrong number of arguments in augmentation op \"" +
                             std::string(token) + "\"");
    };

    AugmentOp op = Rotate90{Turn::kRight};
    if (name == "rot90r" || name == "rot90l") {
      if (args != 0) throw bad_arity();
      op = Rotate90{name == "rot90r" ? Turn::kRight : Turn::kLeft};
    } else if (name == "crop") {
      if (args == 1) {
        op = RandomCrop{num(1)};
      } else if (args == 4) {
        auto integer = [&](std::size_t i) { return parse_integer<int>(parts[i], token); };
        op = Crop{integer(1), integer(2), integer(3), integer(4)};
      } else {
        throw bad_arity();
      }
    } else if (name == "zoom") {
      if (args != 1) throw bad_arity();
      op = Zoom{num(1)};
    } else if (name == "stretch") {
      if (args != 2) throw bad_arity();
      op = Stretch{num(1), num(2)};
    } else if (name == "elastic") {
      if (args == 2) {
        op = Elastic{num(1), num(2), std::nullopt};
      } else if (args == 3) {
        op = Elastic{num(1), num(2), parse_integer<std::uint64_t>(parts[3], token)};
      } else {
        throw bad_arity();
      }
    } else {
      throw ValidationError("unknown augmentation op \"" + std::string(token) + "\"");
    }
    validate(op);
    ops.push_back(op);
  }
  return ops;
}

}  // namespace leafdet
