#pragma once

#include "leafdet/geometry.hpp"

namespace leafdet {

/// Regression offsets of a box relative to an anchor: center shift in
/// units of the anchor's size, and log size ratios.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  friend bool operator==(const BoxDelta&, const BoxDelta&) = default;
};

/// Log-size offsets are clamped to +/- this before decoding (ln 1000).
inline constexpr double kMaxLogScale = 6.907755278982137;

BoxDelta encode(const BBox& target, const BBox& anchor);

/// Inverse of encode. tw/th are clamped to +/- kMaxLogScale so that an
/// untrained regression head cannot produce unbounded boxes. Throws
/// ValidationError for non-finite deltas, or when the decoded box is not
/// representable (e.g. a center offset so large that the sides collapse).
BBox decode(const BoxDelta& delta, const BBox& anchor);

}  // namespace leafdet
