#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leafdet/anchors.hpp"
#include "leafdet/geometry.hpp"
#include "leafdet/rpn.hpp"

namespace leafdet {

/// A box with a confidence in [0, 1] and an optional class label.
struct ScoredBox {
  BBox box;
  double score;
  std::optional<std::string> label;

  ScoredBox(BBox b, double s, std::optional<std::string> l = std::nullopt);

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct ProposalParams {
  std::size_t pre_nms_top_n = 6000;
  std::size_t post_nms_top_n = 300;
  double nms_iou_threshold = 0.7;
  double min_box_size = 2.0;

  void validate() const;
};

/// Greedy non-maximum suppression.
///
/// Repeatedly keeps the highest-scoring remaining box and drops every
/// remaining box whose IoU with it is strictly greater than the threshold.
/// The result is score-descending; equal scores keep their input order.
/// Threshold must lie in (0, 1).
std::vector<ScoredBox> nms(std::span<const ScoredBox> boxes, double iou_threshold);

/// Indices into `boxes` of the survivors, in output order.
std::vector<std::size_t> nms_indices(std::span<const ScoredBox> boxes, double iou_threshold);

/// Decodes every anchor with its regression output, clips to the image,
/// drops boxes with a side below min_box_size, keeps the top
/// pre_nms_top_n by objectness (stable on anchor index), applies NMS, and
/// truncates to post_nms_top_n.
std::vector<ScoredBox> generate_proposals(const RpnOutput& rpn, const AnchorSet& anchors,
                                          const ImageSize& image, const ProposalParams& params);

}  // namespace leafdet
