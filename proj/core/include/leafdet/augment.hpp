#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "leafdet/geometry.hpp"
#include "leafdet/raster.hpp"

namespace leafdet {

struct LabeledBox {
  BBox box;
  std::string label;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

enum class Turn { kLeft, kRight };

/// Lossless quarter turn; a W x H image becomes H x W.
struct Rotate90 {
  Turn direction;
};

/// Cut the pixel rectangle [x, x+width) x [y, y+height). Boxes are shifted
/// and clipped; a box survives only if at least `min_visibility` of its
/// area remains.
struct Crop {
  int x;
  int y;
  int width;
  int height;
  double min_visibility = 0.25;
};

/// Crop keeping `fraction` of each side at a position drawn by pipeline().
struct RandomCrop {
  double fraction;
  double min_visibility = 0.25;
};

/// Resize the canvas by `factor` (round(W*f) x round(H*f)), bilinear.
struct Zoom {
  double factor;
};

/// Resize the canvas by independent horizontal / vertical factors.
struct Stretch {
  double sx;
  double sy;
};

/// Displacement field alpha * blur(uniform[-1, 1], sigma), backward-warped.
/// Without a seed the op must go through pipeline(), which draws one.
struct Elastic {
  double alpha;
  double sigma;
  std::optional<std::uint64_t> seed;
};

using AugmentOp = std::variant<Rotate90, Crop, RandomCrop, Zoom, Stretch, Elastic>;

struct Augmented {
  Raster image;
  std::vector<LabeledBox> boxes;
};

/// Throws ValidationError for out-of-range parameters.
void validate(const AugmentOp& op);

/// Applies one fully specified op to a raster and its boxes. Output boxes
/// always lie inside the output image. RandomCrop and unseeded Elastic are
/// rejected; resolve them first.
Augmented apply(const Raster& image, std::span<const LabeledBox> boxes, const AugmentOp& op);

/// Replaces random parameters (crop position, elastic seed) with values
/// drawn from `rng` for an image of the given size.
AugmentOp resolve(const AugmentOp& op, const ImageSize& size, std::mt19937_64& rng);

/// Resolves and applies `ops` left to right with a generator seeded by
/// `seed`. The same inputs and seed always give the same output.
Augmented pipeline(const Raster& image, std::span<const LabeledBox> boxes,
                   std::span<const AugmentOp> ops, std::uint64_t seed);

enum class ResizeMode {
  /// Scale down uniformly until both sides fit; smaller images pass through.
  kFitWithin,
  /// Resize to exactly max_width x max_height (distorts the aspect ratio).
  kExact,
};

Augmented resize_to_limit(const Raster& image, std::span<const LabeledBox> boxes,
                          int max_width = 1200, int max_height = 1100,
                          ResizeMode mode = ResizeMode::kFitWithin);

/// Parses a comma-separated op list such as
/// "rot90r,crop:0.8,zoom:1.2,stretch:2:0.5,elastic:34:4". Accepted tokens:
/// rot90r, rot90l, crop:FRACTION, crop:X:Y:W:H, zoom:F, stretch:SX:SY,
/// elastic:ALPHA:SIGMA[:SEED]. An empty string is an empty list.
std::vector<AugmentOp> parse_ops(std::string_view spec);

/// Seed for image number `index` of a batch run with base seed `seed`.
inline std::uint64_t image_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

}  // namespace leafdet
