#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "leafdet/anchors.hpp"
#include "leafdet/augment.hpp"
#include "leafdet/dataset_io.hpp"
#include "leafdet/error.hpp"
#include "leafdet/evaluation.hpp"
#include "leafdet/json_format.hpp"
#include "leafdet/proposals.hpp"
#include "leafdet/raster.hpp"
#include "leafdet/rpn.hpp"
#include "leafdet/tensor_io.hpp"

namespace leafdet::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "leafdet 0.3.0";
constexpr const char* kThreadsEnv = "LEAFDET_THREADS";

struct Size2 {
  int width;
  int height;
};

Size2 parse_size(const std::string& text, const char* flag) {
  const auto x = text.find('x');
  int w = 0;
  int h = 0;
  char tail = 0;
  if (x == std::string::npos ||
      std::sscanf(text.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 1 || h < 1) {
    throw ValidationError(std::string(flag) + " expects WIDTHxHEIGHT, got \"" + text + "\"");
  }
  return {w, h};
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ValidationError(std::string(flag) + ": bad number \"" + item + "\"");
    }
  }
  if (out.empty()) throw ValidationError(std::string(flag) + " needs at least one value");
  return out;
}

std::size_t default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
    }
  }
  return 1;
}

std::string file_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string gt;
  std::string det;
  std::string classes;
  double iou = 0.5;
  std::string report;
  std::string pr_dir;
  std::string ap_method = "all-points";
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.iou > 0.0 && a.iou < 1.0)) {
    throw ValidationError("--iou must be in (0, 1)");
  }
  EvalOptions options;
  options.iou_threshold = a.iou;
  if (a.ap_method == "all-points") {
    options.method = ApMethod::kAllPoints;
  } else if (a.ap_method == "11-point") {
    options.method = ApMethod::kElevenPoint;
  } else {
    throw ValidationError("--ap-method must be all-points or 11-point");
  }

  std::vector<std::string> classes;
  if (!a.classes.empty()) classes = read_class_list(a.classes);
  const auto annotations = read_annotations(a.gt, classes);
  const auto detections = read_detections(a.det, classes);
  if (classes.empty()) {
    // No manifest: classes in order of first appearance in the ground truth.
    for (const AnnotatedImage& img : annotations) {
      for (const GroundTruthObject& o : img.objects) {
        if (std::find(classes.begin(), classes.end(), o.label) == classes.end()) {
          classes.push_back(o.label);
        }
      }
    }
    if (classes.empty()) throw ValidationError("ground truth has no objects and no --classes");
  }

  const EvalReport report =
      evaluate(to_ground_truth(annotations), to_detections(detections), classes, options);

  if (!a.report.empty()) write_file_atomic(a.report, report_to_json(report));
  if (!a.pr_dir.empty()) {
    fs::create_directories(a.pr_dir);
    for (const ClassReport& c : report.classes) {
      write_file_atomic(fs::path(a.pr_dir) / ("pr_" + file_label(c.label) + ".csv"),
                        pr_curve_csv(c.curve));
    }
  }
  for (const std::string& w : report.warnings) err << "warning: " << w << "\n";

  char line[128];
  for (const ClassReport& c : report.classes) {
    std::snprintf(line, sizeof line, "AP %s: %.4f%s\n", c.label.c_str(), c.ap,
                  c.excluded ? " (no ground truth)" : "");
    out << line;
  }
  std::snprintf(line, sizeof line, "mAP: %.4f\n", report.mean_ap);
  out << line;
  return kExitOk;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string in;
  std::string img_dir;
  std::string out_dir;
  std::string ops;
  std::uint64_t seed = 0;
  std::string resize_limit = "1200x1100";
  bool exact_resize = false;
  std::size_t threads = 0;
};

int cmd_augment(const AugmentArgs& a, std::ostream& out, std::ostream&) {
  const std::vector<AugmentOp> ops = parse_ops(a.ops);
  std::optional<Size2> limit;
  if (a.resize_limit != "none") limit = parse_size(a.resize_limit, "--resize-limit");

  const std::vector<AnnotatedImage> images = read_annotations(a.in);
  fs::create_directories(a.out_dir);
  std::vector<std::optional<AnnotatedImage>> results(images.size());

  auto process = [&](std::size_t i) {
    const AnnotatedImage& rec = images[i];
    const Raster raster = read_pnm(fs::path(a.img_dir) / rec.image);
    if (raster.width() != rec.size.width() || raster.height() != rec.size.height()) {
      std::ostringstream msg;
      msg << rec.image << ": annotation says " << rec.size.width() << "x" << rec.size.height()
          << " but the image is " << raster.width() << "x" << raster.height();
      throw ValidationError(msg.str());
    }
    std::vector<LabeledBox> boxes;
    for (const GroundTruthObject& o : rec.objects) boxes.push_back({o.box, o.label});

    Augmented cur{raster, boxes};
    if (limit) {
      cur = resize_to_limit(cur.image, cur.boxes, limit->width, limit->height,
                            a.exact_resize ? ResizeMode::kExact : ResizeMode::kFitWithin);
    }
    cur = pipeline(cur.image, cur.boxes, ops, image_seed(a.seed, i));

    const fs::path target = fs::path(a.out_dir) / rec.image;
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_file_atomic(target, encode_pnm(cur.image));

    AnnotatedImage result{rec.image, ImageSize(cur.image.width(), cur.image.height()), {}};
    for (const LabeledBox& b : cur.boxes) result.objects.push_back({b.box, b.label});
    results[i] = std::move(result);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(a.threads == 0 ? default_threads() : a.threads,
                                        std::max<std::size_t>(images.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < images.size(); i = next++) {
      try {
        process(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<AnnotatedImage> written;
  for (auto& r : results) written.push_back(std::move(*r));
  write_annotations(fs::path(a.out_dir) / "annotations.jsonl", written);
  out << "augmented " << written.size() << " images into " << a.out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- anchors / propose

struct AnchorArgs {
  double base_size = 16.0;
  std::string scales = "8,16,32";
  std::string ratios = "0.5,1,2";
  double stride = 16.0;

  AnchorConfig config() const {
    AnchorConfig cfg;
    cfg.base_size = base_size;
    cfg.scales = parse_list(scales, "--scales");
    cfg.ratios = parse_list(ratios, "--ratios");
    cfg.stride = stride;
    cfg.validate();
    return cfg;
  }
};

void add_anchor_flags(CLI::App* cmd, AnchorArgs& a) {
  cmd->add_option("--base-size", a.base_size, "Anchor base size in pixels")->capture_default_str();
  cmd->add_option("--scales", a.scales, "Comma-separated anchor scales")->capture_default_str();
  cmd->add_option("--ratios", a.ratios, "Comma-separated height/width ratios")->capture_default_str();
  cmd->add_option("--stride", a.stride, "Feature stride in pixels")->capture_default_str();
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

struct AnchorsCmdArgs {
  AnchorArgs anchor;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::string out;
};

int cmd_anchors(const AnchorsCmdArgs& a, std::ostream& out) {
  const AnchorSet set = tile_anchors(a.anchor.config(), a.rows, a.cols);
  std::string text;
  for (std::size_t i = 0; i < set.rows(); ++i) {
    for (std::size_t j = 0; j < set.cols(); ++j) {
      for (std::size_t k = 0; k < set.per_position(); ++k) {
        const auto c = set.at(i, j, k).coords();
        text += "{\"row\":" + std::to_string(i) + ",\"col\":" + std::to_string(j) +
                ",\"anchor\":" + std::to_string(k) + ",\"box\":" + format_box(c) + "}\n";
      }
    }
  }
  emit(a.out, text, out);
  return kExitOk;
}

struct ProposeArgs {
  AnchorArgs anchor;
  std::string features;
  std::string weights;
  std::optional<std::uint64_t> seed;
  std::string image_size;
  std::string image_id = "image";
  std::size_t shared_channels = 0;
  ProposalParams params;
  std::string out;
};

int cmd_propose(const ProposeArgs& a, std::ostream& out) {
  const AnchorConfig cfg = a.anchor.config();
  const FeatureMap features = to_feature_map(read_tensor_bundle(a.features).get("features"));
  const std::size_t k = cfg.anchors_per_position();

  RpnHead head = a.weights.empty()
                     ? RpnHead::random(features.channels(), k, *a.seed, a.shared_channels)
                     : rpn_head_from_bundle(read_tensor_bundle(a.weights), k);
  if (head.shared.in_channels() != features.channels()) {
    std::ostringstream msg;
    msg << "weights expect " << head.shared.in_channels() << " feature channels, features have "
        << features.channels();
    throw ValidationError(msg.str());
  }

  const Size2 size = a.image_size.empty()
                         ? Size2{static_cast<int>(features.width() * cfg.stride),
                                 static_cast<int>(features.height() * cfg.stride)}
                         : parse_size(a.image_size, "--image-size");
  const RpnOutput rpn = rpn_forward(features, head);
  const AnchorSet anchors = tile_anchors(cfg, features.height(), features.width());
  std::vector<ScoredBox> proposals =
      generate_proposals(rpn, anchors, ImageSize(size.width, size.height), a.params);
  for (ScoredBox& p : proposals) p.label = "object";

  const DetectionRecord rec{a.image_id, std::move(proposals)};
  emit(a.out, format_detections(std::span(&rec, 1)), out);
  return kExitOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  std::string image;
  std::string boxes;
  std::string id;
  std::string href;
  std::string out;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const Raster raster = read_pnm(a.image);

  struct Item {
    BBox box;
    std::string label;
    std::optional<double> score;
  };
  std::vector<Item> items;
  if (!a.boxes.empty()) {
    std::ifstream probe(a.boxes);
    if (!probe) throw IoError("cannot open " + a.boxes);
    std::string first;
    while (std::getline(probe, first) && first.find_first_not_of(" \t\r") == std::string::npos) {
    }
    const bool is_annotation = first.find("\"objects\"") != std::string::npos;

    const std::string want_name = fs::path(a.image).filename().string();
    auto pick = [&](const std::vector<std::string>& ids) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!a.id.empty() ? ids[i] == a.id
                          : (ids[i] == a.image || fs::path(ids[i]).filename() == want_name)) {
          return i;
        }
      }
      if (!a.id.empty()) throw ValidationError("no record for image \"" + a.id + "\" in " + a.boxes);
      if (ids.size() == 1) return 0;
      if (ids.empty()) return std::nullopt;
      throw ValidationError(a.boxes + " holds several images; choose one with --id");
    };

    if (is_annotation) {
      const auto recs = read_annotations(a.boxes);
      std::vector<std::string> ids;
      for (const auto& r : recs) ids.push_back(r.image);
      if (auto i = pick(ids)) {
        for (const auto& o : recs[*i].objects) items.push_back({o.box, o.label, std::nullopt});
      }
    } else {
      const auto recs = read_detections(a.boxes);
      std::vector<std::string> ids;
      for (const auto& r : recs) ids.push_back(r.image);
      if (auto i = pick(ids)) {
        for (const auto& d : recs[*i].detections) {
          items.push_back({d.box, d.label.value_or("object"), d.score});
        }
      }
    }
  }

  static constexpr const char* kPalette[] = {"#2ca02c", "#d62728", "#1f77b4", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  std::vector<std::string> seen;
  const std::string w = std::to_string(raster.width());
  const std::string h = std::to_string(raster.height());
  const std::string href = a.href.empty() ? a.image : a.href;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" "
         "width=\"" + w + "\" height=\"" + h + "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
  svg += "  <image xlink:href=\"" + xml_escape(href) + "\" x=\"0\" y=\"0\" width=\"" + w +
         "\" height=\"" + h + "\"/>\n";
  for (const Item& it : items) {
    auto pos = std::find(seen.begin(), seen.end(), it.label);
    if (pos == seen.end()) pos = seen.insert(seen.end(), it.label);
    const char* color = kPalette[static_cast<std::size_t>(pos - seen.begin()) % std::size(kPalette)];
    std::string caption = it.label;
    if (it.score) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.2f", *it.score);
      caption += buf;
    }
    svg += "  <rect x=\"" + format_decimal(it.box.x1()) + "\" y=\"" + format_decimal(it.box.y1()) +
           "\" width=\"" + format_decimal(it.box.width()) + "\" height=\"" +
           format_decimal(it.box.height()) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "  <text x=\"" + format_decimal(it.box.x1() + 2) + "\" y=\"" +
           format_decimal(it.box.y1() + 12) + "\" fill=\"" + color +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(caption) + "</text>\n";
  }
  svg += "</svg>\n";
  emit(a.out, svg, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-proposal detection toolkit: anchors, proposals, evaluation, augmentation"};
  app.name("leafdet");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute per-class AP and mAP");
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth annotations (JSON-lines)")->required();
  eval_cmd->add_option("--det", eval.det, "Detections (JSON-lines)")->required();
  eval_cmd->add_option("--classes", eval.classes, "classes.json with the ordered label list");
  eval_cmd->add_option("--iou", eval.iou, "IoU a match must strictly exceed")->capture_default_str();
  eval_cmd->add_option("--report", eval.report, "Write the report as JSON");
  eval_cmd->add_option("--pr-dir", eval.pr_dir, "Write one PR-curve CSV per class");
  eval_cmd->add_option("--ap-method", eval.ap_method, "all-points or 11-point")
      ->capture_default_str();

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Augment images and their boxes");
  aug_cmd->add_option("--in", aug.in, "Annotation file (JSON-lines)")->required();
  aug_cmd->add_option("--img-dir", aug.img_dir, "Directory holding the PPM/PGM images")->required();
  aug_cmd->add_option("--out-dir", aug.out_dir, "Output directory")->required();
  aug_cmd->add_option("--ops", aug.ops, "Op list, e.g. rot90r,crop:0.8,zoom:1.2,elastic:34:4");
  aug_cmd->add_option("--seed", aug.seed, "Random seed")->capture_default_str();
  aug_cmd->add_option("--resize-limit", aug.resize_limit, "WIDTHxHEIGHT limit, or none")
      ->capture_default_str();
  aug_cmd->add_flag("--exact-resize", aug.exact_resize, "Resize to exactly the limit");
  aug_cmd->add_option("--threads", aug.threads,
                      std::string("Worker threads (default from ") + kThreadsEnv + ", else 1)");

  AnchorsCmdArgs anchors;
  auto* anchors_cmd = app.add_subcommand("anchors", "Dump a tiled anchor set as JSON-lines");
  add_anchor_flags(anchors_cmd, anchors.anchor);
  anchors_cmd->add_option("--rows", anchors.rows, "Feature-map rows")->capture_default_str();
  anchors_cmd->add_option("--cols", anchors.cols, "Feature-map columns")->capture_default_str();
  anchors_cmd->add_option("--out", anchors.out, "Output file (default stdout)");

  ProposeArgs prop;
  auto* prop_cmd = app.add_subcommand("propose", "Run the RPN head and emit proposals");
  add_anchor_flags(prop_cmd, prop.anchor);
  prop_cmd->add_option("--features", prop.features, "Tensor manifest with a [C,H,W] 'features'")
      ->required();
  auto* weights_opt = prop_cmd->add_option("--weights", prop.weights, "RPN weight manifest");
  auto* seed_opt = prop_cmd->add_option("--seed", prop.seed, "Use seeded random weights");
  weights_opt->excludes(seed_opt);
  prop_cmd->add_option("--image-size", prop.image_size, "WIDTHxHEIGHT (default grid * stride)");
  prop_cmd->add_option("--image", prop.image_id, "Image id for the output record")
      ->capture_default_str();
  prop_cmd->add_option("--shared-channels", prop.shared_channels,
                       "Output channels of the shared 3x3 conv for random weights");
  prop_cmd->add_option("--pre-nms", prop.params.pre_nms_top_n)->capture_default_str();
  prop_cmd->add_option("--post-nms", prop.params.post_nms_top_n)->capture_default_str();
  prop_cmd->add_option("--nms-iou", prop.params.nms_iou_threshold)->capture_default_str();
  prop_cmd->add_option("--min-size", prop.params.min_box_size)->capture_default_str();
  prop_cmd->add_option("--out", prop.out, "Output file (default stdout)");

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Write an SVG overlay of boxes on an image");
  render_cmd->add_option("--image", render.image, "PPM/PGM image")->required();
  render_cmd->add_option("--boxes", render.boxes, "Detection or annotation JSON-lines");
  render_cmd->add_option("--id", render.id, "Record to draw when the file holds several");
  render_cmd->add_option("--href", render.href, "Image reference to embed (default --image)");
  render_cmd->add_option("--out", render.out, "Output SVG (default stdout)");

  std::vector<const char*> argv{"leafdet"};
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*eval_cmd) return cmd_eval(eval, out, err);
    if (*aug_cmd) return cmd_augment(aug, out, err);
    if (*anchors_cmd) return cmd_anchors(anchors, out);
    if (*prop_cmd) {
      if (prop.weights.empty() && !prop.seed) {
        throw ValidationError("propose needs --weights or --seed");
      }
      return cmd_propose(prop, out);
    }
    if (*render_cmd) return cmd_render(render, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace leafdet::cli
