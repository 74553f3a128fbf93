#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leafdet/evaluation.hpp"
#include "leafdet/geometry.hpp"
#include "leafdet/proposals.hpp"

namespace leafdet {

/// One line of an annotation file:
///   {"image": str, "width": int, "height": int,
///    "objects": [{"label": str, "box": [x1, y1, x2, y2]}]}
struct AnnotatedImage {
  std::string image;
  ImageSize size;
  std::vector<GroundTruthObject> objects;

  friend bool operator==(const AnnotatedImage&, const AnnotatedImage&) = default;
};

/// One line of a detection file:
///   {"image": str, "detections": [{"label": str, "score": float, "box": [...]}]}
struct DetectionRecord {
  std::string image;
  std::vector<ScoredBox> detections;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// JSON-lines parsers. Blank lines are skipped. Any malformed line, wrong
/// field type, unknown field, invalid box, box outside the image, or score
/// outside [0, 1] raises ValidationError with "at line N". When `classes`
/// is non-empty every label must belong to it.
std::vector<AnnotatedImage> parse_annotations(std::istream& in,
                                              std::span<const std::string> classes = {});
std::vector<DetectionRecord> parse_detections(std::istream& in,
                                              std::span<const std::string> classes = {});

/// File variants; unreadable files raise IoError.
std::vector<AnnotatedImage> read_annotations(const std::filesystem::path& path,
                                             std::span<const std::string> classes = {});
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path,
                                             std::span<const std::string> classes = {});

/// Canonical serialization: fixed key order, numbers via format_decimal,
/// one LF-terminated line per record.
std::string format_annotations(std::span<const AnnotatedImage> images);
std::string format_detections(std::span<const DetectionRecord> records);

void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedImage> images);
void write_detections(const std::filesystem::path& path, std::span<const DetectionRecord> records);

/// `classes.json`: a JSON array of distinct label strings, in report order.
std::vector<std::string> parse_class_list(std::string_view text);
std::vector<std::string> read_class_list(const std::filesystem::path& path);

/// Keyed views for evaluate(). Duplicate image ids in annotations are an
/// error; duplicate detection records for one image are concatenated.
GroundTruthByImage to_ground_truth(std::span<const AnnotatedImage> images);
DetectionsByImage to_detections(std::span<const DetectionRecord> records);

}  // namespace leafdet
