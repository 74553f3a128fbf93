#include "leafdet/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

const char* to_string(ApMethod m) {
  switch (m) {
    case ApMethod::kAllPoints:
      return "all-points";
    case ApMethod::kElevenPoint:
      return "11-point";
  }
  return "unknown";
}

std::vector<Outcome> MatchResult::outcomes() const {
  std::vector<Outcome> out;
  out.reserve(ranked.size());
  for (const RankedDetection& d : ranked) out.push_back(d.outcome);
  return out;
}

MatchResult match_detections(const GroundTruthByImage& gts, const DetectionsByImage& dets,
                             double iou_threshold, const std::string& label) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    std::ostringstream msg;
    msg << "IoU threshold must be in (0, 1), got " << iou_threshold;
    throw ValidationError(msg.str());
  }

  MatchResult result;
  result.label = label;

  // Consumed flags per image, one per GT object of this class.
  std::map<std::string, std::vector<bool>> consumed;
  for (const auto& [image, objects] : gts) {
    const auto n = static_cast<std::size_t>(std::count_if(
        objects.begin(), objects.end(), [&](const GroundTruthObject& g) { return g.label == label; }));
    result.total_gt += n;
    consumed[image].assign(objects.size(), false);
  }

  for (const auto& [image, list] : dets) {
    if (gts.find(image) == gts.end()) {
      throw ValidationError("detections reference image \"" + image +
                            "\" which has no ground-truth entry");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].label && *list[i].label == label) {
        result.ranked.push_back({image, i, list[i].score, 0.0, Outcome::kFalsePositive});
      }
    }
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const RankedDetection& a, const RankedDetection& b) { return a.score > b.score; });

  for (RankedDetection& det : result.ranked) {
    const auto& objects = gts.at(det.image);
    std::vector<bool>& used = consumed.at(det.image);
    const BBox& box = dets.at(det.image)[det.index].box;
    double best = -1.0;
    std::size_t best_idx = objects.size();
    for (std::size_t g = 0; g < objects.size(); ++g) {
      if (used[g] || objects[g].label != label) continue;
      const double o = iou(box, objects[g].box);
      if (o > best) {
        best = o;
        best_idx = g;
      }
    }
    if (best_idx == objects.size()) continue;
    det.best_iou = best;
    if (best > iou_threshold) {
      det.outcome = Outcome::kTruePositive;
      used[best_idx] = true;
    }
  }
  return result;
}

double average_precision(std::span<const PrPoint> points, ApMethod method) {
  if (points.empty()) return 0.0;

  if (method == ApMethod::kElevenPoint) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double level = t / 10.0;
      double best = 0.0;
      for (const PrPoint& p : points) {
        if (p.recall >= level) best = std::max(best, p.precision);
      }
      sum += best;
    }
    return sum / 11.0;
  }

  // Sentinels at both ends, then the precision envelope from the right.
  std::vector<double> rec{0.0};
  std::vector<double> prec{0.0};
  for (const PrPoint& p : points) {
    rec.push_back(p.recall);
    prec.push_back(p.precision);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i > 0; --i) {
    prec[i - 1] = std::max(prec[i - 1], prec[i]);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
    if (rec[i + 1] != rec[i]) {
      ap += (rec[i + 1] - rec[i]) * prec[i + 1];
    }
  }
  return ap;
}

PRCurve pr_curve(std::span<const Outcome> outcomes, std::size_t total_gt, ApMethod method) {
  PRCurve curve;
  curve.no_ground_truth = total_gt == 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (Outcome o : outcomes) {
    (o == Outcome::kTruePositive ? tp : fp) += 1;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall =
        total_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_gt);
    curve.points.push_back({recall, precision});
  }
  curve.ap = curve.no_ground_truth ? 0.0 : average_precision(curve.points, method);
  return curve;
}

EvalReport evaluate(const GroundTruthByImage& gts, const DetectionsByImage& dets,
                    std::span<const std::string> classes, const EvalOptions& options) {
  if (classes.empty()) {
    throw ValidationError("evaluation needs at least one class");
  }
  const std::set<std::string> known(classes.begin(), classes.end());
  for (const auto& [image, objects] : gts) {
    for (const GroundTruthObject& g : objects) {
      if (!known.count(g.label)) {
        throw ValidationError("ground truth for image \"" + image + "\" uses unknown label \"" +
                              g.label + "\"");
      }
    }
  }
  for (const auto& [image, list] : dets) {
    for (const ScoredBox& d : list) {
      if (!d.label) {
        throw ValidationError("detection in image \"" + image + "\" has no label");
      }
      if (!known.count(*d.label)) {
        throw ValidationError("detection in image \"" + image + "\" uses unknown label \"" +
                              *d.label + "\"");
      }
    }
  }

  EvalReport report;
  report.iou_threshold = options.iou_threshold;
  report.method = options.method;
  double sum = 0.0;
  std::size_t counted = 0;
  for (const std::string& label : classes) {
    const MatchResult match = match_detections(gts, dets, options.iou_threshold, label);
    ClassReport cls;
    cls.label = label;
    cls.gt_count = match.total_gt;
    cls.detection_count = match.ranked.size();
    const std::vector<Outcome> outcomes = match.outcomes();
    cls.true_positives = static_cast<std::size_t>(
        std::count(outcomes.begin(), outcomes.end(), Outcome::kTruePositive));
    cls.false_positives = cls.detection_count - cls.true_positives;
    cls.curve = pr_curve(outcomes, match.total_gt, options.method);
    cls.curve.label = label;
    cls.ap = cls.curve.ap;
    cls.excluded = match.total_gt == 0;
    if (cls.excluded) {
      report.warnings.push_back("class \"" + label + "\" has no ground truth; excluded from mAP");
    } else {
      sum += cls.ap;
      ++counted;
    }
    report.classes.push_back(std::move(cls));
  }
  if (counted == 0) {
    report.warnings.push_back("no class has ground truth; mAP reported as 0");
  }
  report.mean_ap = counted == 0 ? 0.0 : sum / static_cast<double>(counted);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["mAP"] = report.mean_ap;
  doc["iou_threshold"] = report.iou_threshold;
  doc["ap_method"] = to_string(report.method);
  doc["match_rule"] = "greedy by score, IoU strictly greater than threshold, one detection per GT";
  auto classes = nlohmann::ordered_json::array();
  for (const ClassReport& c : report.classes) {
    nlohmann::ordered_json entry;
    entry["label"] = c.label;
    entry["ap"] = c.ap;
    entry["gt"] = c.gt_count;
    entry["detections"] = c.detection_count;
    entry["tp"] = c.true_positives;
    entry["fp"] = c.false_positives;
    entry["excluded"] = c.excluded;
    classes.push_back(std::move(entry));
  }
  doc["classes"] = std::move(classes);
  doc["warnings"] = report.warnings;
  return doc.dump(2) + "\n";
}

std::string pr_curve_csv(const PRCurve& curve) {
  std::string out = "recall,precision\n";
  char line[64];
  for (const PrPoint& p : curve.points) {
    std::snprintf(line, sizeof line, "%.6f,%.6f\n", p.recall, p.precision);
    out += line;
  }
  return out;
}

}  // namespace leafdet
