#include "leafdet/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "leafdet/error.hpp"
#include "leafdet/json_format.hpp"

namespace leafdet {

namespace {

using json = nlohmann::json;

class LineError : public std::exception {
 public:
  explicit LineError(std::string msg) : msg_(std::move(msg)) {}
  const char* what() const noexcept override { return msg_.c_str(); }

 private:
  std::string msg_;
};

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* what) {
  if (!obj.is_object()) {
    throw LineError(std::string(what) + " must be a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw LineError(std::string("unknown field \"") + key + "\" in " + what);
    }
  }
  for (const char* key : allowed) {
    if (!obj.contains(key)) {
      throw LineError(std::string("missing field \"") + key + "\" in " + what);
    }
  }
}

std::string get_string(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw LineError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

int get_dimension(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw LineError(std::string("field \"") + key + "\" must be an integer");
  }
  const auto n = v.get<std::int64_t>();
  if (n < 1 || n > 1'000'000) {
    throw LineError(std::string("field \"") + key + "\" must be a positive pixel count");
  }
  return static_cast<int>(n);
}

double get_number(const json& v, const char* what) {
  if (!v.is_number()) throw LineError(std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw LineError(std::string(what) + " must be finite");
  return d;
}

BBox get_box(const json& obj) {
  const json& v = obj.at("box");
  if (!v.is_array() || v.size() != 4) {
    throw LineError("field \"box\" must be an array [x1, y1, x2, y2]");
  }
  const double x1 = get_number(v[0], "box coordinate");
  const double y1 = get_number(v[1], "box coordinate");
  const double x2 = get_number(v[2], "box coordinate");
  const double y2 = get_number(v[3], "box coordinate");
  if (!(x2 > x1)) throw LineError("invalid box " + v.dump() + ": x2 <= x1");
  if (!(y2 > y1)) throw LineError("invalid box " + v.dump() + ": y2 <= y1");
  return BBox(x1, y1, x2, y2);
}

void check_label(const std::string& label, std::span<const std::string> classes) {
  if (!classes.empty() && std::find(classes.begin(), classes.end(), label) == classes.end()) {
    throw LineError("label \"" + label + "\" is not in the class list");
  }
}

AnnotatedImage annotation_from(const json& line, std::span<const std::string> classes) {
  check_keys(line, {"image", "width", "height", "objects"}, "annotation record");
  AnnotatedImage rec{get_string(line, "image"),
                     ImageSize(get_dimension(line, "width"), get_dimension(line, "height")),
                     {}};
  const json& objects = line.at("objects");
  if (!objects.is_array()) throw LineError("field \"objects\" must be an array");
  for (const json& o : objects) {
    check_keys(o, {"label", "box"}, "object");
    std::string label = get_string(o, "label");
    check_label(label, classes);
    const BBox box = get_box(o);
    if (box.x1() < 0 || box.y1() < 0 || box.x2() > rec.size.width() ||
        box.y2() > rec.size.height()) {
      std::ostringstream msg;
      msg << "box " << o.at("box").dump() << " lies outside the " << rec.size.width() << "x"
          << rec.size.height() << " image";
      throw LineError(msg.str());
    }
    rec.objects.push_back({box, std::move(label)});
  }
  return rec;
}

DetectionRecord detection_from(const json& line, std::span<const std::string> classes) {
  check_keys(line, {"image", "detections"}, "detection record");
  DetectionRecord rec{get_string(line, "image"), {}};
  const json& dets = line.at("detections");
  if (!dets.is_array()) throw LineError("field \"detections\" must be an array");
  for (const json& d : dets) {
    check_keys(d, {"label", "score", "box"}, "detection");
    std::string label = get_string(d, "label");
    check_label(label, classes);
    const double score = get_number(d.at("score"), "score");
    if (score < 0.0 || score > 1.0) {
      throw LineError("score " + format_decimal(score) + " is outside [0, 1]");
    }
    rec.detections.emplace_back(get_box(d), score, std::move(label));
  }
  return rec;
}

template <class Record, class Convert>
std::vector<Record> parse_lines(std::istream& in, Convert convert) {
  std::vector<Record> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    try {
      out.push_back(convert(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ValidationError("malformed JSON at line " + std::to_string(number) + ": " + e.what());
    } catch (const LineError& e) {
      throw ValidationError(std::string(e.what()) + " at line " + std::to_string(number));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " at line " + std::to_string(number));
    }
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

template <class Fn>
auto with_path(const std::filesystem::path& path, Fn fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<AnnotatedImage> parse_annotations(std::istream& in,
                                              std::span<const std::string> classes) {
  return parse_lines<AnnotatedImage>(in, [&](const json& j) { return annotation_from(j, classes); });
}

std::vector<DetectionRecord> parse_detections(std::istream& in,
                                              std::span<const std::string> classes) {
  return parse_lines<DetectionRecord>(in, [&](const json& j) { return detection_from(j, classes); });
}

std::vector<AnnotatedImage> read_annotations(const std::filesystem::path& path,
                                             std::span<const std::string> classes) {
  std::ifstream in = open_input(path);
  return with_path(path, [&] { return parse_annotations(in, classes); });
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path,
                                             std::span<const std::string> classes) {
  std::ifstream in = open_input(path);
  return with_path(path, [&] { return parse_detections(in, classes); });
}

std::string format_annotations(std::span<const AnnotatedImage> images) {
  std::string out;
  for (const AnnotatedImage& rec : images) {
    out += "{\"image\":" + quote_json(rec.image) + ",\"width\":" +
           std::to_string(rec.size.width()) + ",\"height\":" + std::to_string(rec.size.height()) +
           ",\"objects\":[";
    for (std::size_t i = 0; i < rec.objects.size(); ++i) {
      const auto c = rec.objects[i].box.coords();
      out += (i ? "," : "");
      out += "{\"label\":" + quote_json(rec.objects[i].label) + ",\"box\":" + format_box(c) + "}";
    }
    out += "]}\n";
  }
  return out;
}

std::string format_detections(std::span<const DetectionRecord> records) {
  std::string out;
  for (const DetectionRecord& rec : records) {
    out += "{\"image\":" + quote_json(rec.image) + ",\"detections\":[";
    for (std::size_t i = 0; i < rec.detections.size(); ++i) {
      const ScoredBox& d = rec.detections[i];
      const auto c = d.box.coords();
      out += (i ? "," : "");
      out += "{\"label\":" + quote_json(d.label.value_or("object")) +
             ",\"score\":" + format_decimal(d.score) + ",\"box\":" + format_box(c) + "}";
    }
    out += "]}\n";
  }
  return out;
}

void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedImage> images) {
  write_file_atomic(path, format_annotations(images));
}

void write_detections(const std::filesystem::path& path,
                      std::span<const DetectionRecord> records) {
  write_file_atomic(path, format_detections(records));
}

std::vector<std::string> parse_class_list(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed class list: ") + e.what());
  }
  if (!doc.is_array() || doc.empty()) {
    throw ValidationError("class list must be a non-empty JSON array of strings");
  }
  std::vector<std::string> classes;
  std::set<std::string> seen;
  for (const json& v : doc) {
    if (!v.is_string()) throw ValidationError("class list entries must be strings");
    auto label = v.get<std::string>();
    if (!seen.insert(label).second) {
      throw ValidationError("class \"" + label + "\" is listed twice");
    }
    classes.push_back(std::move(label));
  }
  return classes;
}

std::vector<std::string> read_class_list(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return with_path(path, [&] { return parse_class_list(ss.str()); });
}

GroundTruthByImage to_ground_truth(std::span<const AnnotatedImage> images) {
  GroundTruthByImage out;
  for (const AnnotatedImage& rec : images) {
    if (!out.emplace(rec.image, rec.objects).second) {
      throw ValidationError("image \"" + rec.image + "\" is annotated more than once");
    }
  }
  return out;
}

DetectionsByImage to_detections(std::span<const DetectionRecord> records) {
  DetectionsByImage out;
  for (const DetectionRecord& rec : records) {
    auto& list = out[rec.image];
    list.insert(list.end(), rec.detections.begin(), rec.detections.end());
  }
  return out;
}

}  // namespace leafdet
