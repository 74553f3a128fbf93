#include "leafdet/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "leafdet/box_coding.hpp"
#include "leafdet/error.hpp"

namespace leafdet {

namespace {

void check_threshold(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    std::ostringstream msg;
    msg << "NMS IoU threshold must be in (0, 1), got " << t;
    throw ValidationError(msg.str());
  }
}

std::vector<std::size_t> order_by_score(std::span<const ScoredBox> boxes) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score > boxes[b].score;
  });
  return order;
}

}  // namespace

ScoredBox::ScoredBox(BBox b, double s, std::optional<std::string> l)
    : box(b), score(s), label(std::move(l)) {
  if (!(s >= 0.0 && s <= 1.0)) {
    std::ostringstream msg;
    msg << "score must be in [0, 1], got " << s;
    throw ValidationError(msg.str());
  }
}

void ProposalParams::validate() const {
  check_threshold(nms_iou_threshold);
  if (pre_nms_top_n == 0 || post_nms_top_n == 0) {
    throw ValidationError("proposal counts must be positive");
  }
  if (post_nms_top_n > pre_nms_top_n) {
    throw ValidationError("post_nms_top_n must not exceed pre_nms_top_n");
  }
  if (!(std::isfinite(min_box_size) && min_box_size >= 0.0)) {
    throw ValidationError("min_box_size must be a non-negative number");
  }
}

std::vector<std::size_t> nms_indices(std::span<const ScoredBox> boxes, double iou_threshold) {
  check_threshold(iou_threshold);
  const std::vector<std::size_t> order = order_by_score(boxes);
  std::vector<bool> suppressed(boxes.size(), false);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    if (suppressed[i]) continue;
    keep.push_back(i);
    for (std::size_t q = r + 1; q < order.size(); ++q) {
      const std::size_t j = order[q];
      if (!suppressed[j] && iou(boxes[i].box, boxes[j].box) > iou_threshold) {
        suppressed[j] = true;
      }
    }
  }
  return keep;
}

std::vector<ScoredBox> nms(std::span<const ScoredBox> boxes, double iou_threshold) {
  std::vector<ScoredBox> out;
  for (std::size_t i : nms_indices(boxes, iou_threshold)) {
    out.push_back(boxes[i]);
  }
  return out;
}

std::vector<ScoredBox> generate_proposals(const RpnOutput& rpn, const AnchorSet& anchors,
                                          const ImageSize& image, const ProposalParams& params) {
  params.validate();
  if (rpn.height() != anchors.rows() || rpn.width() != anchors.cols() ||
      rpn.anchors_per_position() != anchors.per_position()) {
    std::ostringstream msg;
    msg << "RPN output is " << rpn.height() << "x" << rpn.width() << " with k = "
        << rpn.anchors_per_position() << " but the anchor set is " << anchors.rows() << "x"
        << anchors.cols() << " with k = " << anchors.per_position();
    throw ValidationError(msg.str());
  }

  std::vector<ScoredBox> candidates;
  candidates.reserve(anchors.size());
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    for (std::size_t j = 0; j < anchors.cols(); ++j) {
      for (std::size_t a = 0; a < anchors.per_position(); ++a) {
        const BBox decoded = decode(rpn.delta(i, j, a), anchors.at(i, j, a));
        const auto clipped = clip(decoded, image);
        if (!clipped || clipped->width() < params.min_box_size ||
            clipped->height() < params.min_box_size) {
          continue;
        }
        candidates.emplace_back(*clipped, rpn.object_probability(i, j, a));
      }
    }
  }

  std::vector<std::size_t> order = order_by_score(candidates);
  if (order.size() > params.pre_nms_top_n) {
    order.resize(params.pre_nms_top_n);
  }
  std::vector<ScoredBox> top;
  top.reserve(order.size());
  for (std::size_t idx : order) {
    top.push_back(candidates[idx]);
  }

  std::vector<ScoredBox> kept = nms(top, params.nms_iou_threshold);
  if (kept.size() > params.post_nms_top_n) {
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(params.post_nms_top_n), kept.end());
  }
  return kept;
}

}  // namespace leafdet
