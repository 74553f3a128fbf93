#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "leafdet/geometry.hpp"
#include "leafdet/proposals.hpp"

namespace leafdet {

struct GroundTruthObject {
  BBox box;
  std::string label;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

/// Ground truth and detections keyed by image identifier. Every image that
/// was annotated appears in the ground-truth map, even with no objects.
using GroundTruthByImage = std::map<std::string, std::vector<GroundTruthObject>>;
using DetectionsByImage = std::map<std::string, std::vector<ScoredBox>>;

enum class Outcome : std::uint8_t { kTruePositive, kFalsePositive };

enum class ApMethod {
  /// Area under the monotone precision envelope over all recall levels.
  kAllPoints,
  /// Mean of the envelope sampled at recall 0, 0.1, ..., 1.
  kElevenPoint,
};

const char* to_string(ApMethod m);

struct RankedDetection {
  std::string image;
  std::size_t index;  // position in that image's detection list
  double score;
  double best_iou;    // IoU with the GT it was compared against, 0 if none
  Outcome outcome;
};

struct MatchResult {
  std::string label;
  std::vector<RankedDetection> ranked;  // descending score
  std::size_t total_gt = 0;

  std::vector<Outcome> outcomes() const;
};

/// Greedy matching for one class.
///
/// Detections of `label` from all images are ranked by descending score
/// (ties keep image-key then list order). Each takes the unmatched
/// same-image GT of that class with the highest IoU; it is a true positive
/// when that IoU is strictly greater than `iou_threshold`, which consumes
/// the GT. Everything else, including duplicates of a consumed GT, is a
/// false positive.
///
/// Throws ValidationError naming the key when a detection refers to an image
/// without ground truth, or when the threshold is outside (0, 1).
MatchResult match_detections(const GroundTruthByImage& gts, const DetectionsByImage& dets,
                             double iou_threshold, const std::string& label);

struct PrPoint {
  double recall;
  double precision;
};

struct PRCurve {
  std::string label;
  std::vector<PrPoint> points;
  double ap = 0.0;
  /// Set when total_gt was 0: recall is undefined, AP is reported as 0.
  bool no_ground_truth = false;
};

/// Cumulative precision/recall after each ranked outcome, plus AP.
PRCurve pr_curve(std::span<const Outcome> outcomes, std::size_t total_gt,
                 ApMethod method = ApMethod::kAllPoints);

/// AP of a curve that reaches recall levels in non-decreasing order.
double average_precision(std::span<const PrPoint> points, ApMethod method);

struct ClassReport {
  std::string label;
  double ap = 0.0;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  /// No ground truth for this class: left out of the mAP mean.
  bool excluded = false;
  PRCurve curve;
};

struct EvalOptions {
  double iou_threshold = 0.5;
  ApMethod method = ApMethod::kAllPoints;
};

struct EvalReport {
  std::vector<ClassReport> classes;  // in the order of the class list
  double mean_ap = 0.0;
  double iou_threshold = 0.5;
  ApMethod method = ApMethod::kAllPoints;
  std::vector<std::string> warnings;
};

/// Per-class matching, PR curves and AP; mAP is the unweighted mean over
/// classes that have at least one GT object.
///
/// Throws ValidationError for an empty class list, a label outside the
/// class list, an unlabeled detection, or a detection on an unknown image.
EvalReport evaluate(const GroundTruthByImage& gts, const DetectionsByImage& dets,
                    std::span<const std::string> classes, const EvalOptions& options = {});

/// Report as pretty-printed JSON (without per-point curves).
std::string report_to_json(const EvalReport& report);

/// `recall,precision` header then one point per line, 6 decimal places.
std::string pr_curve_csv(const PRCurve& curve);

}  // namespace leafdet
